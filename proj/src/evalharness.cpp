// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "rotpose/evalharness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "rotpose/error.hpp"
#include "rotpose/wire.hpp"

namespace fs = std::filesystem;

namespace rotpose {

std::string to_string(MotionKind k)
{
    switch (k) {
    case MotionKind::cartwheel: return "cartwheel";
    case MotionKind::handstand_hold: return "handstand_hold";
    case MotionKind::upright_walk: return "upright_walk";
    case MotionKind::custom_keyframes: return "custom_keyframes";
    }
    return "unknown";
}

MotionKind motion_kind_from_string(const std::string& s)
{
    if (s == "cartwheel")
        return MotionKind::cartwheel;
    if (s == "handstand_hold" || s == "handstand")
        return MotionKind::handstand_hold;
    if (s == "upright_walk" || s == "walk")
        return MotionKind::upright_walk;
    if (s == "custom_keyframes" || s == "custom")
        return MotionKind::custom_keyframes;
    throw UsageError(fmt::format("unknown motion script '{}'", s));
}

namespace {

double smoothstep(double q)
{
    q = std::clamp(q, 0.0, 1.0);
    return q * q * (3.0 - 2.0 * q);
}

// Linear interpolation over keyframes, clamped at both ends.
template <typename Fn>
auto interpolate_keyframes(const std::vector<MotionKeyframe>& keys, double t, Fn field)
{
    if (keys.empty())
        throw UsageError("custom_keyframes script has no keyframes");
    if (t <= keys.front().frame)
        return field(keys.front());
    if (t >= keys.back().frame)
        return field(keys.back());
    for (std::size_t i = 1; i < keys.size(); ++i) {
        if (t <= keys[i].frame) {
            const double span = keys[i].frame - keys[i - 1].frame;
            const double u = span > 0.0 ? (t - keys[i - 1].frame) / span : 1.0;
            return field(keys[i - 1]) * (1.0 - u) + field(keys[i]) * u;
        }
    }
    return field(keys.back());
}

struct InterpolatablePoint {
    Point2 p;
    InterpolatablePoint operator*(double s) const { return {s * p}; }
    InterpolatablePoint operator+(InterpolatablePoint o) const { return {p + o.p}; }
};

} // namespace

double MotionScript::body_angle(std::size_t t) const
{
    const double progress = frames > 1 ? static_cast<double>(t - 1) / static_cast<double>(frames - 1) : 0.0;
    switch (kind) {
    case MotionKind::cartwheel: return 360.0 * progress;
    case MotionKind::handstand_hold: return 180.0 * smoothstep(progress / 0.25);
    case MotionKind::upright_walk: return 0.0;
    case MotionKind::custom_keyframes:
        return interpolate_keyframes(keyframes, static_cast<double>(t), [](const MotionKeyframe& k) { return k.body_angle; });
    }
    return 0.0;
}

Point2 MotionScript::root(std::size_t t, ImageSize canvas) const
{
    const double progress = frames > 1 ? static_cast<double>(t - 1) / static_cast<double>(frames - 1) : 0.0;
    const double w = canvas.width;
    const double h = canvas.height;
    switch (kind) {
    case MotionKind::cartwheel: return {w * (0.25 + 0.5 * progress), h * 0.5};
    case MotionKind::handstand_hold: return {w * 0.5, h * 0.5};
    case MotionKind::upright_walk: return {w * (0.2 + 0.6 * progress), h * 0.5};
    case MotionKind::custom_keyframes:
        return interpolate_keyframes(keyframes, static_cast<double>(t),
                                     [](const MotionKeyframe& k) { return InterpolatablePoint{k.root}; })
            .p;
    }
    return {w * 0.5, h * 0.5};
}

nlohmann::json MotionScript::to_json() const
{
    nlohmann::json j = {{"kind", to_string(kind)}, {"frames", frames}, {"limb_amplitude", limb_amplitude}, {"scale", scale}};
    if (!keyframes.empty()) {
        auto arr = nlohmann::json::array();
        for (const auto& k : keyframes)
            arr.push_back({{"frame", k.frame}, {"body_angle", k.body_angle}, {"x", k.root.x}, {"y", k.root.y}});
        j["keyframes"] = std::move(arr);
    }
    return j;
}

MotionScript MotionScript::from_json(const nlohmann::json& j)
{
    MotionScript s;
    try {
        if (j.contains("kind"))
            s.kind = motion_kind_from_string(j.at("kind").get<std::string>());
        s.frames = j.value("frames", s.frames);
        s.limb_amplitude = j.value("limb_amplitude", s.limb_amplitude);
        s.scale = j.value("scale", s.scale);
        if (j.contains("keyframes")) {
            for (const auto& k : j.at("keyframes"))
                s.keyframes.push_back({k.at("frame").get<double>(), k.value("body_angle", 0.0),
                                       {k.at("x").get<double>(), k.at("y").get<double>()}});
            std::sort(s.keyframes.begin(), s.keyframes.end(),
                      [](const MotionKeyframe& a, const MotionKeyframe& b) { return a.frame < b.frame; });
        }
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(fmt::format("invalid motion script: {}", e.what()));
    }
    return s;
}

// ---------------------------------------------------------------------------

namespace {

enum Body25 : std::size_t {
    Nose, Neck, RShoulder, RElbow, RWrist, LShoulder, LElbow, LWrist, MidHip, RHip, RKnee, RAnkle, LHip, LKnee,
    LAnkle, REye, LEye, REar, LEar, LBigToe, LSmallToe, LHeel, RBigToe, RSmallToe, RHeel
};

Point2 rotate(Point2 v, double deg)
{
    const double c = cos_deg(deg);
    const double s = sin_deg(deg);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Unit vector pointing down the image, swung by `deg`.
Point2 limb_dir(double deg)
{
    return rotate({0.0, 1.0}, deg);
}

struct LimbAngles {
    double r_arm = 0, r_elbow = 0, l_arm = 0, l_elbow = 0;
    double r_leg = 0, r_knee = 0, l_leg = 0, l_knee = 0;
};

LimbAngles limb_angles(MotionKind kind, double phase, double amp)
{
    const double s = std::sin(phase);
    LimbAngles a;
    switch (kind) {
    case MotionKind::cartwheel:
        a.r_arm = 150.0 + 10.0 * amp * s;
        a.l_arm = -150.0 + 10.0 * amp * s;
        a.r_leg = 30.0 + 5.0 * amp * s;
        a.l_leg = -30.0 + 5.0 * amp * s;
        break;
    case MotionKind::handstand_hold:
        a.r_arm = 170.0;
        a.l_arm = -170.0;
        a.r_leg = 25.0 * amp * s;
        a.l_leg = -25.0 * amp * s;
        a.r_knee = -10.0 * amp * std::max(0.0, s);
        a.l_knee = 10.0 * amp * std::max(0.0, -s);
        break;
    case MotionKind::upright_walk:
    case MotionKind::custom_keyframes:
        a.r_arm = 12.0 + 20.0 * amp * s;
        a.l_arm = -12.0 + 20.0 * amp * s;
        a.r_elbow = -15.0 * amp * std::max(0.0, s);
        a.l_elbow = 15.0 * amp * std::max(0.0, -s);
        a.r_leg = -25.0 * amp * s;
        a.l_leg = 25.0 * amp * s;
        a.r_knee = 20.0 * amp * std::max(0.0, s);
        a.l_knee = -20.0 * amp * std::max(0.0, -s);
        break;
    }
    return a;
}

// Joint positions relative to MidHip, upright, image axes.
std::array<Point2, 25> local_skeleton(const LimbAngles& a, double scale)
{
    std::array<Point2, 25> p{};
    auto at = [scale](Point2 parent, Point2 offset) { return parent + scale * offset; };
    auto along = [scale](Point2 parent, double length, double deg) { return parent + (scale * length) * limb_dir(deg); };

    p[MidHip] = {0.0, 0.0};
    p[Neck] = at(p[MidHip], {0.0, -60.0});
    p[Nose] = at(p[Neck], {0.0, -22.0});
    p[REye] = at(p[Nose], {-5.0, -4.0});
    p[LEye] = at(p[Nose], {5.0, -4.0});
    p[REar] = at(p[REye], {-6.0, 3.0});
    p[LEar] = at(p[LEye], {6.0, 3.0});

    p[RShoulder] = at(p[Neck], {-18.0, 0.0});
    p[LShoulder] = at(p[Neck], {18.0, 0.0});
    p[RElbow] = along(p[RShoulder], 28.0, a.r_arm);
    p[RWrist] = along(p[RElbow], 25.0, a.r_arm + a.r_elbow);
    p[LElbow] = along(p[LShoulder], 28.0, a.l_arm);
    p[LWrist] = along(p[LElbow], 25.0, a.l_arm + a.l_elbow);

    p[RHip] = at(p[MidHip], {-10.0, 0.0});
    p[LHip] = at(p[MidHip], {10.0, 0.0});
    p[RKnee] = along(p[RHip], 40.0, a.r_leg);
    p[RAnkle] = along(p[RKnee], 38.0, a.r_leg + a.r_knee);
    p[LKnee] = along(p[LHip], 40.0, a.l_leg);
    p[LAnkle] = along(p[LKnee], 38.0, a.l_leg + a.l_knee);

    auto foot = [&](Point2 ankle, double shin_deg, Point2 offset) { return ankle + scale * rotate(offset, shin_deg); };
    const double r_shin = a.r_leg + a.r_knee;
    const double l_shin = a.l_leg + a.l_knee;
    p[RHeel] = foot(p[RAnkle], r_shin, {-2.0, 4.0});
    p[RBigToe] = foot(p[RAnkle], r_shin, {9.0, 5.0});
    p[RSmallToe] = foot(p[RAnkle], r_shin, {7.0, 7.0});
    p[LHeel] = foot(p[LAnkle], l_shin, {-2.0, 4.0});
    p[LBigToe] = foot(p[LAnkle], l_shin, {9.0, 5.0});
    p[LSmallToe] = foot(p[LAnkle], l_shin, {7.0, 7.0});
    return p;
}

} // namespace

std::vector<GroundTruthFrame> generate_sequence(const MotionScript& script, ImageSize canvas, std::uint64_t seed)
{
    if (script.frames == 0)
        throw UsageError("motion script needs at least one frame");
    if (canvas.width <= 0 || canvas.height <= 0)
        throw UsageError(fmt::format("invalid canvas {}x{}", canvas.width, canvas.height));

    std::mt19937_64 rng(seed);
    const double phase0 = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
    constexpr double period = 30.0;

    const SchemaPtr schema = body25_schema();
    std::vector<GroundTruthFrame> out;
    out.reserve(script.frames);
    for (std::size_t t = 1; t <= script.frames; ++t) {
        const double phase = phase0 + 2.0 * std::numbers::pi * static_cast<double>(t - 1) / period;
        const auto local = local_skeleton(limb_angles(script.kind, phase, script.limb_amplitude), script.scale);
        const double angle = script.body_angle(t);
        const Point2 root = script.root(t, canvas);

        std::vector<Keypoint> kps(local.size());
        for (std::size_t k = 0; k < local.size(); ++k) {
            const Point2 q = root + rotate(local[k], angle);
            if (q.x < 0.0 || q.y < 0.0 || q.x > canvas.width - 1.0 || q.y > canvas.height - 1.0)
                throw GenerationError(fmt::format("frame {}: joint {} at ({:.1f}, {:.1f}) leaves the {}x{} canvas", t,
                                                  schema->joint_names()[k], q.x, q.y, canvas.width, canvas.height));
            kps[k] = {q.x, q.y, 1.0};
        }
        out.push_back({t, angle, root, Pose(schema, std::move(kps))});
    }
    return out;
}

const std::vector<std::pair<std::size_t, std::size_t>>& body25_bones()
{
    static const std::vector<std::pair<std::size_t, std::size_t>> bones = {
        {Neck, MidHip},     {Neck, RShoulder},  {Neck, LShoulder},   {RShoulder, RElbow}, {RElbow, RWrist},
        {LShoulder, LElbow}, {LElbow, LWrist},  {MidHip, RHip},      {RHip, RKnee},       {RKnee, RAnkle},
        {MidHip, LHip},     {LHip, LKnee},      {LKnee, LAnkle},     {Neck, Nose},        {Nose, REye},
        {REye, REar},       {Nose, LEye},       {LEye, LEar},        {LAnkle, LBigToe},   {LBigToe, LSmallToe},
        {LAnkle, LHeel},    {RAnkle, RBigToe},  {RBigToe, RSmallToe}, {RAnkle, RHeel},
    };
    return bones;
}

Raster render_pose(const Pose& pose, ImageSize canvas, int thickness)
{
    Raster img(canvas.width, canvas.height, 3, 0);
    const double radius = std::max(0.5, thickness / 2.0);
    auto draw_segment = [&](Point2 a, Point2 b) {
        const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - radius)));
        const int x1 = std::min(canvas.width - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + radius)));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - radius)));
        const int y1 = std::min(canvas.height - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + radius)));
        const Point2 ab = b - a;
        const double len2 = ab.x * ab.x + ab.y * ab.y;
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const Point2 ap = Point2{static_cast<double>(x), static_cast<double>(y)} - a;
                const double u = len2 > 0.0 ? std::clamp((ap.x * ab.x + ap.y * ab.y) / len2, 0.0, 1.0) : 0.0;
                if (distance(a + u * ab, {static_cast<double>(x), static_cast<double>(y)}) <= radius) {
                    for (int c = 0; c < 3; ++c)
                        img.at(x, y, c) = 255;
                }
            }
        }
    };
    if (pose.schema()->joint_count() == 25) {
        for (const auto& [i, j] : body25_bones()) {
            if (pose[i].detected() && pose[j].detected())
                draw_segment(pose[i].position(), pose[j].position());
        }
    } else {
        for (const auto& kp : pose.keypoints()) {
            if (kp.detected())
                draw_segment(kp.position(), kp.position());
        }
    }
    return img;
}

void write_ground_truth(const fs::path& path, const std::vector<GroundTruthFrame>& frames)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError(fmt::format("cannot write '{}'", path.string()));
    for (const auto& f : frames) {
        nlohmann::json j = {{"frame", f.frame},
                            {"body_angle", f.body_angle},
                            {"root", {f.root.x, f.root.y}},
                            {"pose", pose_to_wire(f.pose)}};
        out << j.dump() << '\n';
    }
    out.close();
    if (!out)
        throw IoError(fmt::format("failed writing '{}'", path.string()));
}

std::vector<GroundTruthFrame> read_ground_truth(const fs::path& path, const SchemaPtr& schema)
{
    std::ifstream in(path);
    if (!in)
        throw IoError(fmt::format("cannot open ground truth '{}'", path.string()));
    std::vector<GroundTruthFrame> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        try {
            const auto j = nlohmann::json::parse(line);
            GroundTruthFrame f{j.at("frame").get<std::size_t>(), j.value("body_angle", 0.0), {},
                               pose_from_wire(j.at("pose"), schema)};
            if (j.contains("root"))
                f.root = {j["root"][0].get<double>(), j["root"][1].get<double>()};
            out.push_back(std::move(f));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

void require_equal_lengths(std::size_t a, std::size_t b, const char* what)
{
    if (a != b)
        throw UsageError(fmt::format("{}: {} predicted frames vs {} ground-truth frames", what, a, b));
}

std::optional<double> frame_error(const Pose& predicted, const Pose& gt)
{
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < predicted.size(); ++k) {
        if (!predicted[k].detected())
            continue;
        sum += distance(predicted[k].position(), gt[k].position());
        ++n;
    }
    if (n == 0)
        return std::nullopt;
    return sum / static_cast<double>(n);
}

} // namespace

double mpjpe(const std::vector<Pose>& predicted, const std::vector<Pose>& ground_truth)
{
    require_equal_lengths(predicted.size(), ground_truth.size(), "mpjpe");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 0; t < predicted.size(); ++t) {
        require_schema(predicted[t], *ground_truth[t].schema());
        for (std::size_t k = 0; k < predicted[t].size(); ++k) {
            if (!predicted[t][k].detected())
                continue;
            sum += distance(predicted[t][k].position(), ground_truth[t][k].position());
            ++n;
        }
    }
    return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

double torso_size(const Pose& gt)
{
    const auto& schema = *gt.schema();
    const auto root = schema.index_of("MidHip");
    const auto neck = schema.index_of("Neck");
    if (root && neck && gt[*root].detected() && gt[*neck].detected())
        return distance(gt[*root].position(), gt[*neck].position());
    double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
    for (const auto& kp : gt.keypoints()) {
        if (!kp.detected())
            continue;
        x0 = std::min(x0, kp.x);
        y0 = std::min(y0, kp.y);
        x1 = std::max(x1, kp.x);
        y1 = std::max(y1, kp.y);
    }
    return x1 >= x0 ? std::hypot(x1 - x0, y1 - y0) : 0.0;
}

double pck(const std::vector<Pose>& predicted, const std::vector<Pose>& ground_truth, double alpha)
{
    require_equal_lengths(predicted.size(), ground_truth.size(), "pck");
    std::size_t hits = 0;
    std::size_t total = 0;
    for (std::size_t t = 0; t < predicted.size(); ++t) {
        const double radius = alpha * torso_size(ground_truth[t]);
        for (std::size_t k = 0; k < ground_truth[t].size(); ++k) {
            if (!ground_truth[t][k].detected())
                continue;
            ++total;
            if (predicted[t][k].detected() &&
                distance(predicted[t][k].position(), ground_truth[t][k].position()) <= radius)
                ++hits;
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

EvalReport evaluate(const std::vector<FrameResult>& results, const std::vector<Pose>& ground_truth,
                    const std::vector<FrameResult>& baseline)
{
    require_equal_lengths(results.size(), ground_truth.size(), "evaluate (run)");
    require_equal_lengths(baseline.size(), ground_truth.size(), "evaluate (baseline)");

    std::vector<Pose> aug, raw;
    aug.reserve(results.size());
    raw.reserve(baseline.size());
    for (const auto& r : results)
        aug.push_back(r.reconstructed_pose);
    for (const auto& r : baseline)
        raw.push_back(r.selected_pose);

    EvalReport rep;
    rep.frames = results.size();
    rep.mpjpe_augmented = mpjpe(aug, ground_truth);
    rep.mpjpe_raw = mpjpe(raw, ground_truth);
    rep.pck_augmented_010 = pck(aug, ground_truth, 0.1);
    rep.pck_augmented_020 = pck(aug, ground_truth, 0.2);
    rep.pck_raw_010 = pck(raw, ground_truth, 0.1);
    rep.pck_raw_020 = pck(raw, ground_truth, 0.2);

    double conf_aug = 0.0, conf_raw = 0.0;
    for (std::size_t t = 0; t < results.size(); ++t) {
        rep.error_augmented.push_back(frame_error(aug[t], ground_truth[t]));
        rep.error_raw.push_back(frame_error(raw[t], ground_truth[t]));
        rep.conf_augmented.push_back(results[t].mean_conf_selected);
        rep.conf_raw.push_back(baseline[t].mean_conf_selected);
        rep.theta.push_back(results[t].selected_theta);
        conf_aug += results[t].mean_conf_selected;
        conf_raw += baseline[t].mean_conf_selected;
        rep.estimator_calls_augmented += results[t].estimator_calls;
        rep.estimator_calls_raw += baseline[t].estimator_calls;
    }
    if (!results.empty()) {
        rep.mean_conf_augmented = conf_aug / static_cast<double>(results.size());
        rep.mean_conf_raw = conf_raw / static_cast<double>(results.size());
    }
    return rep;
}

namespace {

nlohmann::json number_or_null(double v)
{
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

nlohmann::json series(const std::vector<std::optional<double>>& v)
{
    auto arr = nlohmann::json::array();
    for (const auto& x : v)
        arr.push_back(x ? nlohmann::json(*x) : nlohmann::json(nullptr));
    return arr;
}

std::string cell(const std::optional<double>& v)
{
    return v ? fmt::format("{}", *v) : std::string();
}

} // namespace

nlohmann::json EvalReport::to_json() const
{
    return {{"frames", frames},
            {"mpjpe_augmented", number_or_null(mpjpe_augmented)},
            {"mpjpe_raw", number_or_null(mpjpe_raw)},
            {"pck_augmented", {{"0.1", pck_augmented_010}, {"0.2", pck_augmented_020}}},
            {"pck_raw", {{"0.1", pck_raw_010}, {"0.2", pck_raw_020}}},
            {"mean_conf_augmented", mean_conf_augmented},
            {"mean_conf_raw", mean_conf_raw},
            {"estimator_calls_augmented", estimator_calls_augmented},
            {"estimator_calls_raw", estimator_calls_raw},
            {"error_augmented", series(error_augmented)},
            {"error_raw", series(error_raw)},
            {"conf_augmented", conf_augmented},
            {"conf_raw", conf_raw},
            {"theta", series(theta)}};
}

std::string EvalReport::to_csv() const
{
    std::ostringstream out;
    out << "frame,error_augmented,error_raw,conf_augmented,conf_raw,theta_deg\n";
    for (std::size_t t = 0; t < frames; ++t) {
        out << (t + 1) << ',' << cell(error_augmented[t]) << ',' << cell(error_raw[t]) << ','
            << fmt::format("{}", conf_augmented[t]) << ',' << fmt::format("{}", conf_raw[t]) << ',' << cell(theta[t])
            << '\n';
    }
    return out.str();
}

double circular_correlation(const std::vector<double>& a_deg, const std::vector<double>& b_deg)
{
    if (a_deg.size() != b_deg.size())
        throw UsageError("circular_correlation: series lengths differ");
    constexpr double rad = std::numbers::pi / 180.0;
    double num = 0.0, sa = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < a_deg.size(); ++i) {
        for (std::size_t j = i + 1; j < a_deg.size(); ++j) {
            const double da = std::sin((a_deg[i] - a_deg[j]) * rad);
            const double db = std::sin((b_deg[i] - b_deg[j]) * rad);
            num += da * db;
            sa += da * da;
            sb += db * db;
        }
    }
    if (sa == 0.0 || sb == 0.0)
        return 0.0;
    return num / std::sqrt(sa * sb);
}

} // namespace rotpose

// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "rotpose/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "rotpose/error.hpp"
#include "rotpose/image_io.hpp"
#include "rotpose/subprocess.hpp"
#include "rotpose/wire.hpp"

namespace fs = std::filesystem;

namespace rotpose {

std::optional<Pose> reduce_to_single_person(const std::vector<Pose>& people, double floor, bool exclude_head,
                                            const SkeletonSchema& schema)
{
    std::optional<Pose> best;
    double best_conf = -1.0;
    for (const auto& person : people) {
        const double conf = mean_confidence(person, floor, exclude_head, schema);
        if (conf > best_conf) {
            best_conf = conf;
            best = person;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------

std::string expand_adapter_command(const std::string& command_template, const fs::path& input, const fs::path& output)
{
    auto replace_all = [](std::string s, const std::string& key, const std::string& value) {
        std::size_t pos = 0;
        while ((pos = s.find(key, pos)) != std::string::npos) {
            s.replace(pos, key.size(), value);
            pos += value.size();
        }
        return s;
    };
    std::string cmd = replace_all(command_template, "{input}", shell_quote(input.string()));
    return replace_all(std::move(cmd), "{output}", shell_quote(output.string()));
}

std::vector<Pose> external_estimate(const fs::path& frame_image_path, const std::string& adapter_cmd,
                                    const fs::path& output_path, const SchemaPtr& schema,
                                    std::chrono::milliseconds timeout, CoordinateFrame frame)
{
    std::error_code ec;
    fs::remove(output_path, ec);

    const std::string cmd = expand_adapter_command(adapter_cmd, frame_image_path, output_path);
    const CommandResult result = run_shell_command(cmd, timeout);
    if (result.exit_code != 0) {
        throw BackendError(fmt::format("adapter exited with status {} on '{}': {}", result.exit_code,
                                       frame_image_path.string(), result.stderr_text));
    }

    std::ifstream in(output_path, std::ios::binary);
    if (!in)
        throw ProtocolError(fmt::format("adapter wrote no output file '{}'", output_path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_wire_poses(buf.str(), schema, frame);
    } catch (const ParseError& e) {
        throw ProtocolError(fmt::format("adapter output '{}' is invalid: {}", output_path.string(), e.what()));
    } catch (const SchemaError& e) {
        throw ProtocolError(fmt::format("adapter output '{}' is invalid: {}", output_path.string(), e.what()));
    }
}

namespace {

int resolve_parallel(int requested)
{
    if (requested > 0)
        return requested;
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

} // namespace

ExternalBackend::ExternalBackend(ExternalAdapterConfig config, SchemaPtr schema)
    : config_(std::move(config)), schema_(std::move(schema))
{
    if (config_.command_template.empty())
        throw UsageError("external backend requires an adapter command");
    if (config_.work_dir.empty())
        config_.work_dir = fs::temp_directory_path() / "rotpose";
    config_.max_parallel = resolve_parallel(config_.max_parallel);
    fs::create_directories(config_.work_dir);
    slots_ = std::make_unique<std::counting_semaphore<>>(config_.max_parallel);
}

std::vector<Pose> ExternalBackend::estimate(const FrameInput& frame, const RotationSpec& spec) const
{
    if (!frame.raster)
        throw StructuralError(fmt::format("frame {} has no raster loaded", frame.index));

    const std::string stem = fmt::format("f{:06}_t{:06}", frame.index, std::llround(spec.theta * 1000.0));
    const fs::path image_path = config_.work_dir / (stem + config_.image_extension);
    const fs::path output_path = config_.work_dir / (stem + ".json");

    write_image(image_path, rotate_raster(*frame.raster, spec));

    struct Cleanup {
        const ExternalBackend* self;
        fs::path image, output;
        ~Cleanup()
        {
            if (self->config_.keep_intermediates)
                return;
            std::error_code ec;
            fs::remove(image, ec);
            fs::remove(output, ec);
        }
    } cleanup{this, image_path, output_path};

    slots_->acquire();
    struct Release {
        std::counting_semaphore<>* s;
        ~Release() { s->release(); }
    } release{slots_.get()};

    return external_estimate(image_path, config_.command_template, output_path, schema_, config_.timeout,
                             CoordinateFrame::rotated(spec.theta));
}

nlohmann::json ExternalBackend::describe() const
{
    return {{"kind", "external"},
            {"adapter_cmd", config_.command_template},
            {"timeout_ms", config_.timeout.count()},
            {"max_parallel", config_.max_parallel},
            {"keep_intermediates", config_.keep_intermediates},
            {"image_extension", config_.image_extension}};
}

// ---------------------------------------------------------------------------

void SyntheticEstimatorModel::validate() const
{
    if (!(0.0 <= c_min && c_min <= c_max && c_max <= 1.0))
        throw UsageError(fmt::format("synthetic model needs 0 <= c_min <= c_max <= 1 (got {}, {})", c_min, c_max));
    if (sigma0 < 0.0 || sigma1 < 0.0)
        throw UsageError("synthetic model noise coefficients must be non-negative");
    if (dropout_slope < 0.0 || dropout_slope > 1.0)
        throw UsageError("synthetic model dropout_slope must lie in [0, 1]");
    if (confidence_jitter < 0.0)
        throw UsageError("synthetic model confidence_jitter must be non-negative");
}

nlohmann::json SyntheticEstimatorModel::to_json() const
{
    return {{"c_max", c_max},     {"c_min", c_min},
            {"sigma0", sigma0},   {"sigma1", sigma1},
            {"dropout_slope", dropout_slope}, {"confidence_jitter", confidence_jitter},
            {"rng_seed", rng_seed}};
}

SyntheticEstimatorModel SyntheticEstimatorModel::from_json(const nlohmann::json& j)
{
    SyntheticEstimatorModel m;
    m.c_max = j.value("c_max", m.c_max);
    m.c_min = j.value("c_min", m.c_min);
    m.sigma0 = j.value("sigma0", m.sigma0);
    m.sigma1 = j.value("sigma1", m.sigma1);
    m.dropout_slope = j.value("dropout_slope", m.dropout_slope);
    m.confidence_jitter = j.value("confidence_jitter", m.confidence_jitter);
    m.rng_seed = j.value("rng_seed", m.rng_seed);
    return m;
}

std::optional<double> body_deviation(const Pose& pose, std::size_t root, std::size_t top)
{
    const Keypoint& r = pose[root];
    const Keypoint& t = pose[top];
    if (!r.detected() || !t.detected())
        return std::nullopt;
    const Point2 v = t.position() - r.position();
    if (v.x == 0.0 && v.y == 0.0)
        return std::nullopt;
    // image up is (0, -1); angle measured with the same orientation as forward_map
    const double angle = std::atan2(v.x, -v.y) * 180.0 / std::numbers::pi;
    return wrap_signed_degrees(angle);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::size_t frame_index, double theta)
{
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(frame_index));
    h = splitmix64(h ^ static_cast<std::uint64_t>(std::llround(wrap_degrees(theta) * 1e6)));
    return h;
}

} // namespace

std::vector<Pose> synthetic_estimate(const Pose& gt_in_view, double body_deviation_deg,
                                     const SyntheticEstimatorModel& model, std::size_t frame_index, double theta)
{
    const double severity = std::min(std::abs(wrap_signed_degrees(body_deviation_deg)), 180.0) / 180.0;
    const double p_drop = model.dropout_slope * severity;
    const double sigma = model.sigma0 + model.sigma1 * severity;
    const double conf_mean = model.c_max - (model.c_max - model.c_min) * severity;

    std::mt19937_64 rng(stream_seed(model.rng_seed, frame_index, theta));
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    Pose out = gt_in_view;
    for (auto& kp : out.keypoints()) {
        // four draws per joint, always, so streams stay aligned across joints
        const double u = uniform(rng);
        const double nx = normal(rng);
        const double ny = normal(rng);
        const double nc = normal(rng);
        if (!kp.detected())
            continue;
        if (u < p_drop) {
            kp = Keypoint{};
            continue;
        }
        kp.x += sigma * nx;
        kp.y += sigma * ny;
        kp.confidence = std::clamp(conf_mean + model.confidence_jitter * nc, 0.0, 1.0);
    }
    return {std::move(out)};
}

SyntheticBackend::SyntheticBackend(SyntheticEstimatorModel model, SchemaPtr schema)
    : model_(model), schema_(std::move(schema))
{
    model_.validate();
    const auto root = schema_->index_of("MidHip");
    const auto top = schema_->index_of("Neck");
    if (!root || !top)
        throw SchemaError(fmt::format("schema '{}' lacks MidHip/Neck needed by the synthetic backend", schema_->name()));
    root_ = *root;
    top_ = *top;
}

SyntheticBackend::SyntheticBackend(SyntheticEstimatorModel model, SchemaPtr schema, std::size_t root_joint,
                                   std::size_t top_joint)
    : model_(model), schema_(std::move(schema)), root_(root_joint), top_(top_joint)
{
    model_.validate();
    if (root_ >= schema_->joint_count() || top_ >= schema_->joint_count() || root_ == top_)
        throw SchemaError("invalid body axis joints for the synthetic backend");
}

std::vector<Pose> SyntheticBackend::estimate(const FrameInput& frame, const RotationSpec& spec) const
{
    if (!frame.ground_truth)
        throw StructuralError(fmt::format("synthetic backend: frame {} carries no ground truth", frame.index));
    const Pose view = rotate_pose(*frame.ground_truth, spec);
    const double delta = body_deviation(view, root_, top_).value_or(180.0);
    return synthetic_estimate(view, delta, model_, frame.index, spec.theta);
}

nlohmann::json SyntheticBackend::describe() const
{
    nlohmann::json j = model_.to_json();
    j["kind"] = "synthetic";
    return j;
}

} // namespace rotpose

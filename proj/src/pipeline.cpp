// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "rotpose/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "rotpose/error.hpp"
#include "rotpose/image_io.hpp"
#include "rotpose/wire.hpp"

namespace fs = std::filesystem;

namespace rotpose {

std::string version_string()
{
    return "rotpose 1.0.0";
}

void PipelineConfig::validate() const
{
    AngleGrid grid(step_deg); // throws on a bad step
    selector.validate();
    if (!(w > 0.0 && w <= 1.0))
        throw UsageError(fmt::format("blend weight must lie in (0, 1] (got {})", w));
    if (angle_window && !(*angle_window >= step_deg && *angle_window <= 180.0))
        throw UsageError(fmt::format("angle window {} must satisfy step ({}) <= window <= 180", *angle_window, step_deg));
    if (parallelism < 0)
        throw UsageError("parallelism must be >= 0");
}

nlohmann::json PipelineConfig::to_json() const
{
    return {{"step_deg", step_deg},
            {"selector", selector.to_json()},
            {"w", w},
            {"coasting", coasting},
            {"angle_window", angle_window ? nlohmann::json(*angle_window) : nlohmann::json(nullptr)},
            {"parallelism", parallelism},
            {"keep_going", keep_going}};
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j)
{
    PipelineConfig cfg;
    cfg.step_deg = j.value("step_deg", cfg.step_deg);
    if (j.contains("selector"))
        cfg.selector = SelectorConfig::from_json(j.at("selector"));
    cfg.w = j.value("w", cfg.w);
    cfg.coasting = j.value("coasting", cfg.coasting);
    if (j.contains("angle_window") && !j.at("angle_window").is_null())
        cfg.angle_window = j.at("angle_window").get<double>();
    cfg.parallelism = j.value("parallelism", cfg.parallelism);
    cfg.keep_going = j.value("keep_going", cfg.keep_going);
    return cfg;
}

std::vector<double> angle_set_for_frame(std::size_t t, std::optional<double> prev_theta, const PipelineConfig& cfg)
{
    const AngleGrid grid(cfg.step_deg);
    if (!cfg.angle_window || t <= 1 || !prev_theta)
        return grid.angles();

    std::vector<std::pair<double, double>> picked; // (signed offset, angle)
    for (double a : grid.angles()) {
        if (circular_distance(a, *prev_theta) <= *cfg.angle_window + 1e-9)
            picked.emplace_back(wrap_signed_degrees(a - *prev_theta), a);
    }
    std::sort(picked.begin(), picked.end());
    std::vector<double> out;
    out.reserve(picked.size());
    for (const auto& [offset, a] : picked)
        out.push_back(a);
    return out;
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::json optional_number(std::optional<double> v)
{
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> read_optional_number(const nlohmann::json& j, const char* key)
{
    if (!j.contains(key) || j.at(key).is_null())
        return std::nullopt;
    return j.at(key).get<double>();
}

SelectionRule rule_from_string(const std::string& s)
{
    if (s == "first_frame")
        return SelectionRule::first_frame;
    if (s == "consistency")
        return SelectionRule::consistency;
    if (s == "fallback")
        return SelectionRule::fallback;
    throw ParseError(fmt::format("unknown selection rule '{}'", s));
}

} // namespace

nlohmann::json frame_result_to_json(const FrameResult& r)
{
    nlohmann::json j;
    j["frame"] = r.frame_index;
    j["theta"] = optional_number(r.selected_theta);
    j["fallback"] = r.fallback_fired();
    j["rule"] = r.rule ? nlohmann::json(to_string(*r.rule)) : nlohmann::json(nullptr);
    j["mean_conf"] = r.mean_conf_selected;
    j["mean_conf_raw"] = optional_number(r.mean_conf_theta0);
    j["estimator_calls"] = r.estimator_calls;
    j["estimator_failures"] = r.estimator_failures;
    j["selected"] = pose_to_wire(r.selected_pose);
    j["reconstructed"] = pose_to_wire(r.reconstructed_pose);
    auto cands = nlohmann::json::array();
    for (const auto& c : r.candidates)
        cands.push_back({{"theta", c.theta}, {"distance", optional_number(c.distance)}, {"mean_conf", c.mean_conf}});
    j["candidates"] = std::move(cands);
    return j;
}

FrameResult frame_result_from_json(const nlohmann::json& j, const SchemaPtr& schema)
{
    try {
        FrameResult r(j.at("frame").get<std::size_t>(), schema);
        r.selected_pose = pose_from_wire(j.at("selected"), schema);
        r.reconstructed_pose = pose_from_wire(j.at("reconstructed"), schema);
        r.selected_theta = read_optional_number(j, "theta");
        r.mean_conf_selected = j.value("mean_conf", 0.0);
        r.mean_conf_theta0 = read_optional_number(j, "mean_conf_raw");
        if (j.contains("rule") && !j.at("rule").is_null())
            r.rule = rule_from_string(j.at("rule").get<std::string>());
        else if (j.value("fallback", false))
            r.rule = SelectionRule::fallback;
        r.estimator_calls = j.value("estimator_calls", std::size_t{0});
        r.estimator_failures = j.value("estimator_failures", std::size_t{0});
        if (j.contains("candidates")) {
            for (const auto& c : j.at("candidates"))
                r.candidates.push_back({c.at("theta").get<double>(), read_optional_number(c, "distance"),
                                        c.at("mean_conf").get<double>()});
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(fmt::format("invalid frame record: {}", e.what()));
    }
}

// ---------------------------------------------------------------------------

ImageListSource::ImageListSource(std::vector<fs::path> paths) : paths_(std::move(paths)) {}

ImageListSource ImageListSource::from_path(const fs::path& dir_or_list)
{
    std::vector<fs::path> paths;
    if (fs::is_directory(dir_or_list)) {
        static const std::vector<std::string> exts = {".png", ".jpg", ".jpeg", ".bmp", ".ppm", ".pgm", ".tif", ".tiff"};
        for (const auto& entry : fs::directory_iterator(dir_or_list)) {
            if (!entry.is_regular_file())
                continue;
            std::string ext = entry.path().extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
            if (std::find(exts.begin(), exts.end(), ext) != exts.end())
                paths.push_back(entry.path());
        }
        std::sort(paths.begin(), paths.end());
    } else {
        std::ifstream in(dir_or_list);
        if (!in)
            throw IoError(fmt::format("cannot open frame list '{}'", dir_or_list.string()));
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            if (line.empty() || line.front() == '#')
                continue;
            fs::path p(line);
            if (p.is_relative())
                p = dir_or_list.parent_path() / p;
            paths.push_back(p);
        }
    }
    return ImageListSource(std::move(paths));
}

FrameInput ImageListSource::frame(std::size_t i, bool with_raster) const
{
    FrameInput in;
    in.index = i + 1;
    in.image_path = paths_.at(i);
    auto raster = std::make_shared<Raster>(read_image(paths_.at(i)));
    in.size = raster->size();
    if (with_raster)
        in.raster = std::move(raster);
    return in;
}

nlohmann::json ImageListSource::describe() const
{
    return {{"kind", "images"}, {"count", paths_.size()},
            {"first", paths_.empty() ? std::string() : paths_.front().string()}};
}

PoseListSource::PoseListSource(std::vector<Pose> ground_truth, ImageSize canvas)
    : poses_(std::move(ground_truth)), canvas_(canvas)
{
}

FrameInput PoseListSource::frame(std::size_t i, bool /*with_raster*/) const
{
    FrameInput in;
    in.index = i + 1;
    in.size = canvas_;
    in.ground_truth = poses_.at(i);
    return in;
}

nlohmann::json PoseListSource::describe() const
{
    return {{"kind", "poses"}, {"count", poses_.size()}, {"width", canvas_.width}, {"height", canvas_.height}};
}

// ---------------------------------------------------------------------------

Pipeline::Pipeline(PipelineConfig cfg, const EstimatorBackend& backend, SchemaPtr schema)
    : cfg_(std::move(cfg)), backend_(backend), schema_(std::move(schema)), reconstructor_(cfg_.w, cfg_.coasting)
{
    cfg_.validate();
    workers_ = cfg_.parallelism > 0 ? cfg_.parallelism
                                    : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

FrameResult Pipeline::process_frame(const FrameInput& frame)
{
    const std::vector<double> angles = angle_set_for_frame(frame.index, prev_theta_, cfg_);

    struct Outcome {
        std::optional<RotationCandidate> candidate;
        std::optional<std::string> error;
    };
    std::vector<Outcome> outcomes(angles.size());

    auto evaluate = [&](std::size_t i) {
        const RotationSpec spec = RotationSpec::make(angles[i], frame.size);
        try {
            const auto people = backend_.estimate(frame, spec);
            const auto person =
                reduce_to_single_person(people, cfg_.selector.confidence_floor, cfg_.selector.exclude_head, *schema_);
            if (person)
                outcomes[i].candidate = make_candidate(spec.theta, unrotate_pose(*person, spec), cfg_.selector, *schema_);
        } catch (const std::exception& e) {
            outcomes[i].error = e.what();
        }
    };

    const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(workers_), angles.size());
    if (n_workers <= 1) {
        for (std::size_t i = 0; i < angles.size(); ++i)
            evaluate(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        pool.reserve(n_workers);
        for (std::size_t w = 0; w < n_workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < angles.size(); i = next++)
                    evaluate(i);
            });
        }
    }

    FrameResult result(frame.index, schema_);
    result.estimator_calls = angles.size();

    std::vector<RotationCandidate> candidates;
    for (std::size_t i = 0; i < angles.size(); ++i) {
        if (outcomes[i].error) {
            ++result.estimator_failures;
            spdlog::warn("frame {}: rotation {} skipped: {}", frame.index, angles[i], *outcomes[i].error);
        }
        if (angles[i] == 0.0)
            result.mean_conf_theta0 = outcomes[i].candidate ? outcomes[i].candidate->mean_conf : 0.0;
        if (outcomes[i].candidate)
            candidates.push_back(std::move(*outcomes[i].candidate));
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const RotationCandidate& a, const RotationCandidate& b) { return a.theta < b.theta; });

    if (!angles.empty() && result.estimator_failures == angles.size()) {
        if (!cfg_.keep_going)
            throw FrameError(fmt::format("frame {}: estimator failed at all {} rotations (last error: {})", frame.index,
                                         angles.size(), *outcomes.back().error));
        spdlog::warn("frame {}: estimator failed at every rotation; continuing", frame.index);
    }

    if (candidates.empty()) {
        if (reconstructor_.previous())
            result.reconstructed_pose = *reconstructor_.previous();
        return result;
    }

    const std::optional<Pose>& previous = reconstructor_.previous();
    if (!previous) {
        const RotationCandidate& chosen = select_first_frame(candidates);
        result.rule = SelectionRule::first_frame;
        for (const auto& c : candidates)
            result.candidates.push_back({c.theta, std::nullopt, c.mean_conf});
        result.selected_theta = chosen.theta;
        result.selected_pose = chosen.pose;
        result.mean_conf_selected = chosen.mean_conf;
    } else {
        Selection sel = select_frame(candidates, *previous, cfg_.selector, *schema_);
        result.rule = sel.diagnostics.rule;
        result.candidates = std::move(sel.diagnostics.candidates);
        result.selected_theta = sel.chosen.theta;
        result.selected_pose = std::move(sel.chosen.pose);
        result.mean_conf_selected = sel.chosen.mean_conf;
    }
    result.reconstructed_pose = reconstructor_.reconstruct(result.selected_pose);
    prev_theta_ = result.selected_theta;
    return result;
}

// ---------------------------------------------------------------------------

namespace {

std::string csv_number(std::optional<double> v)
{
    return v ? fmt::format("{}", *v) : std::string();
}

std::ofstream open_output(const fs::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError(fmt::format("cannot write '{}'", path.string()));
    return out;
}

void close_output(std::ofstream& out, const fs::path& path)
{
    out.close();
    if (!out)
        throw IoError(fmt::format("failed writing '{}'", path.string()));
}

} // namespace

RunSummary run_sequence(const FrameSource& frames, const PipelineConfig& cfg, const EstimatorBackend& backend,
                        const SchemaPtr& schema, const fs::path& output_dir, const nlohmann::json& manifest_extra)
{
    if (frames.count() == 0)
        throw UsageError("frame source is empty");
    cfg.validate();

    const bool write = !output_dir.empty();
    fs::path poses_path, conf_path, theta_path;
    std::ofstream poses_out, conf_out, theta_out;
    if (write) {
        std::error_code ec;
        fs::create_directories(output_dir, ec);
        if (ec)
            throw IoError(fmt::format("cannot create output directory '{}': {}", output_dir.string(), ec.message()));
        poses_path = output_dir / "poses.jsonl";
        conf_path = output_dir / "confidence.csv";
        theta_path = output_dir / "theta.csv";
        poses_out = open_output(poses_path);
        conf_out = open_output(conf_path);
        theta_out = open_output(theta_path);
        conf_out << "frame,mean_conf_augmented,mean_conf_raw\n";
        theta_out << "frame,theta_deg\n";
    }

    const auto t0 = std::chrono::steady_clock::now();
    Pipeline pipeline(cfg, backend, schema);
    RunSummary summary;
    summary.frames.reserve(frames.count());
    for (std::size_t i = 0; i < frames.count(); ++i) {
        FrameResult r = pipeline.process_frame(frames.frame(i, backend.needs_raster()));
        summary.total_estimator_calls += r.estimator_calls;
        if (write) {
            poses_out << frame_result_to_json(r).dump() << '\n';
            conf_out << r.frame_index << ',' << fmt::format("{}", r.mean_conf_selected) << ','
                     << csv_number(r.mean_conf_theta0) << '\n';
            theta_out << r.frame_index << ',' << csv_number(r.selected_theta) << '\n';
        }
        summary.frames.push_back(std::move(r));
    }
    summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (write) {
        close_output(poses_out, poses_path);
        close_output(conf_out, conf_path);
        close_output(theta_out, theta_path);

        std::size_t fallbacks = 0;
        std::size_t failures = 0;
        for (const auto& r : summary.frames) {
            fallbacks += r.fallback_fired() ? 1 : 0;
            failures += r.estimator_failures;
        }
        nlohmann::json manifest = {
            {"version", version_string()},
            {"pipeline", cfg.to_json()},
            {"backend", backend.describe()},
            {"schema", schema->to_json()},
            {"frames", frames.describe()},
            {"stats",
             {{"frames", summary.frames.size()},
              {"estimator_calls", summary.total_estimator_calls},
              {"estimator_failures", failures},
              {"cache_hits", 0},
              {"fallback_frames", fallbacks}}},
            {"timing", {{"wall_seconds", summary.wall_seconds}}},
        };
        manifest.update(manifest_extra);
        const fs::path manifest_path = output_dir / "run_manifest.json";
        auto out = open_output(manifest_path);
        out << manifest.dump(2) << '\n';
        close_output(out, manifest_path);
    }
    return summary;
}

std::vector<FrameResult> load_frame_results(const fs::path& run_dir_or_file, const SchemaPtr& schema)
{
    const fs::path path = fs::is_directory(run_dir_or_file) ? run_dir_or_file / "poses.jsonl" : run_dir_or_file;
    std::ifstream in(path);
    if (!in)
        throw IoError(fmt::format("cannot open '{}'", path.string()));
    std::vector<FrameResult> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
        }
        if (j.contains("pose") && !j.contains("reconstructed")) {
            Pose p = pose_from_wire(j.at("pose"), schema);
            FrameResult r(j.at("frame").get<std::size_t>(), schema);
            r.selected_pose = p;
            r.reconstructed_pose = p;
            r.selected_theta = 0.0;
            r.mean_conf_selected = mean_confidence(p, 0.0, false, *schema);
            out.push_back(std::move(r));
        } else {
            out.push_back(frame_result_from_json(j, schema));
        }
    }
    return out;
}

} // namespace rotpose

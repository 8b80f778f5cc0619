// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "rotpose/run_config.hpp"

#include <chrono>
#include <fstream>

#include <fmt/format.h>

#include "rotpose/error.hpp"

namespace fs = std::filesystem;

namespace rotpose {

namespace {

nlohmann::json optional_path(const std::optional<fs::path>& p)
{
    return p ? nlohmann::json(p->string()) : nlohmann::json(nullptr);
}

std::optional<fs::path> read_optional_path(const nlohmann::json& j, const char* key)
{
    if (!j.contains(key) || j.at(key).is_null())
        return std::nullopt;
    return fs::path(j.at(key).get<std::string>());
}

} // namespace

void RunConfig::validate() const
{
    pipeline.validate();
    if (backend == "synthetic") {
        synthetic.validate();
        if (!frames && !script && !ground_truth)
            throw UsageError("synthetic backend needs --script, --ground-truth, or --frames pointing at a simulate output");
    } else if (backend == "external") {
        if (adapter_cmd.empty())
            throw UsageError("external backend needs --adapter-cmd");
        if (!frames)
            throw UsageError("external backend needs --frames");
        if (!(timeout_s > 0.0))
            throw UsageError("timeout must be positive");
    } else {
        throw UsageError(fmt::format("unknown backend '{}'", backend));
    }
    if (script) {
        motion_kind_from_string(*script);
        if (frames_count == 0)
            throw UsageError("--frames-count must be >= 1");
    }
    if (canvas.width <= 0 || canvas.height <= 0)
        throw UsageError("canvas size must be positive");
}

nlohmann::json RunConfig::to_json() const
{
    return {{"pipeline", pipeline.to_json()},
            {"backend", backend},
            {"synthetic", synthetic.to_json()},
            {"adapter_cmd", adapter_cmd},
            {"timeout_s", timeout_s},
            {"keep_intermediates", keep_intermediates},
            {"frames", optional_path(frames)},
            {"script", script ? nlohmann::json(*script) : nlohmann::json(nullptr)},
            {"frames_count", frames_count},
            {"ground_truth", optional_path(ground_truth)},
            {"keyframes", optional_path(keyframes)},
            {"limb_amplitude", limb_amplitude},
            {"width", canvas.width},
            {"height", canvas.height},
            {"seed", seed},
            {"schema", optional_path(schema)},
            {"out", out.string()}};
}

RunConfig RunConfig::from_json(const nlohmann::json& doc)
{
    const nlohmann::json& j = doc.contains("config") && doc.at("config").is_object() ? doc.at("config") : doc;
    RunConfig c;
    try {
        if (j.contains("pipeline"))
            c.pipeline = PipelineConfig::from_json(j.at("pipeline"));
        c.backend = j.value("backend", c.backend);
        if (j.contains("synthetic"))
            c.synthetic = SyntheticEstimatorModel::from_json(j.at("synthetic"));
        c.adapter_cmd = j.value("adapter_cmd", c.adapter_cmd);
        c.timeout_s = j.value("timeout_s", c.timeout_s);
        c.keep_intermediates = j.value("keep_intermediates", c.keep_intermediates);
        c.frames = read_optional_path(j, "frames");
        if (j.contains("script") && !j.at("script").is_null())
            c.script = j.at("script").get<std::string>();
        c.frames_count = j.value("frames_count", c.frames_count);
        c.ground_truth = read_optional_path(j, "ground_truth");
        c.keyframes = read_optional_path(j, "keyframes");
        c.limb_amplitude = j.value("limb_amplitude", c.limb_amplitude);
        c.canvas.width = j.value("width", c.canvas.width);
        c.canvas.height = j.value("height", c.canvas.height);
        c.seed = j.value("seed", c.seed);
        c.schema = read_optional_path(j, "schema");
        if (j.contains("out"))
            c.out = j.at("out").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(fmt::format("invalid config: {}", e.what()));
    }
    return c;
}

RunConfig RunConfig::load(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError(fmt::format("cannot open config '{}'", path.string()));
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw UsageError(fmt::format("config '{}' is not valid JSON: {}", path.string(), e.what()));
    }
    return from_json(j);
}

SchemaPtr resolve_schema(const RunConfig& cfg)
{
    return cfg.schema ? load_schema(cfg.schema->string()) : body25_schema();
}

std::unique_ptr<EstimatorBackend> make_backend(const RunConfig& cfg, const SchemaPtr& schema)
{
    if (cfg.backend == "synthetic") {
        SyntheticEstimatorModel model = cfg.synthetic;
        model.rng_seed = cfg.seed;
        return std::make_unique<SyntheticBackend>(model, schema);
    }
    if (cfg.backend == "external") {
        ExternalAdapterConfig ext;
        ext.command_template = cfg.adapter_cmd;
        ext.timeout = std::chrono::milliseconds(static_cast<long long>(cfg.timeout_s * 1000.0));
        ext.max_parallel = cfg.pipeline.parallelism;
        ext.work_dir = cfg.out / "intermediates";
        ext.keep_intermediates = cfg.keep_intermediates;
        return std::make_unique<ExternalBackend>(ext, schema);
    }
    throw UsageError(fmt::format("unknown backend '{}'", cfg.backend));
}

std::unique_ptr<FrameSource> make_frame_source(const RunConfig& cfg, const SchemaPtr& schema)
{
    if (cfg.backend == "external")
        return std::make_unique<ImageListSource>(ImageListSource::from_path(*cfg.frames));

    std::vector<Pose> poses;
    ImageSize canvas = cfg.canvas;
    std::optional<fs::path> gt_path = cfg.ground_truth;
    if (!gt_path && !cfg.script && cfg.frames) {
        const fs::path dir = fs::is_directory(*cfg.frames) ? *cfg.frames : cfg.frames->parent_path();
        gt_path = dir / "ground_truth.jsonl";
        if (!fs::exists(*gt_path))
            throw UsageError(fmt::format("synthetic backend: no ground_truth.jsonl next to '{}'", cfg.frames->string()));
    }
    if (gt_path) {
        for (auto& f : read_ground_truth(*gt_path, schema))
            poses.push_back(std::move(f.pose));
    } else {
        MotionScript script;
        if (cfg.keyframes) {
            std::ifstream in(*cfg.keyframes);
            if (!in)
                throw IoError(fmt::format("cannot open keyframes '{}'", cfg.keyframes->string()));
            script = MotionScript::from_json(nlohmann::json::parse(in));
        }
        script.kind = motion_kind_from_string(*cfg.script);
        script.frames = cfg.frames_count;
        script.limb_amplitude = cfg.limb_amplitude;
        for (auto& f : generate_sequence(script, canvas, cfg.seed))
            poses.push_back(std::move(f.pose));
    }
    return std::make_unique<PoseListSource>(std::move(poses), canvas);
}

RunSummary execute_run(const RunConfig& cfg)
{
    cfg.validate();
    const SchemaPtr schema = resolve_schema(cfg);
    const auto backend = make_backend(cfg, schema);
    const auto source = make_frame_source(cfg, schema);
    return run_sequence(*source, cfg.pipeline, *backend, schema, cfg.out, {{"config", cfg.to_json()}});
}

} // namespace rotpose

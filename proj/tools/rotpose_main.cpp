// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

// rotpose: rotation-augmented pose estimation over frame sequences.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "rotpose/error.hpp"
#include "rotpose/evalharness.hpp"
#include "rotpose/image_io.hpp"
#include "rotpose/run_config.hpp"

namespace fs = std::filesystem;
using namespace rotpose;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct RunFlags {
    std::optional<std::string> config;
    std::optional<std::string> frames;
    std::optional<std::string> backend;
    std::optional<std::string> adapter_cmd;
    std::optional<int> step;
    std::optional<double> window;
    std::optional<double> weight;
    std::optional<double> threshold;
    std::optional<int> top_k;
    std::optional<double> floor;
    std::optional<std::string> distance_norm;
    bool include_head = false;
    bool no_coasting = false;
    std::optional<std::string> out;
    std::optional<int> parallelism;
    bool keep_going = false;
    bool keep_intermediates = false;
    std::optional<std::uint64_t> seed;
    std::optional<double> timeout;
    std::optional<std::string> script;
    std::optional<std::size_t> frames_count;
    std::optional<std::string> ground_truth;
    std::optional<std::string> keyframes;
    std::optional<double> limb_amplitude;
    std::optional<int> width;
    std::optional<int> height;
    std::optional<std::string> schema;
    std::optional<double> c_max, c_min, sigma0, sigma1, dropout_slope, conf_jitter;
};

void add_run_flags(CLI::App* cmd, RunFlags& f)
{
    const RunConfig defaults;
    const auto& p = defaults.pipeline;
    cmd->add_option("--config", f.config, "JSON config or run_manifest.json; flags override it");
    cmd->add_option("--frames", f.frames, "Frame image directory or list file");
    cmd->add_option("--backend", f.backend, "Estimator backend (default: synthetic)")
        ->check(CLI::IsMember({"synthetic", "external"}));
    cmd->add_option("--adapter-cmd", f.adapter_cmd, "External estimator command with {input} and {output}");
    cmd->add_option("--step", f.step, fmt::format("Angle grid step in degrees (default: {})", p.step_deg));
    cmd->add_option("--window", f.window, "Angle window half-width in degrees (default: off)");
    cmd->add_option("--weight", f.weight, fmt::format("Blend weight w of the current frame (default: {})", p.w));
    cmd->add_option("--threshold", f.threshold,
                    fmt::format("Consistency distance threshold in px (default: {})", p.selector.distance_threshold));
    cmd->add_option("--top-k", f.top_k, fmt::format("Closest candidates kept (default: {})", p.selector.top_k));
    cmd->add_option("--floor", f.floor,
                    fmt::format("Confidence floor for considered joints (default: {})", p.selector.confidence_floor));
    cmd->add_option("--distance-norm", f.distance_norm, "raw_sum | scaled_to_full (default: scaled_to_full)")
        ->check(CLI::IsMember({"raw_sum", "scaled_to_full"}));
    cmd->add_flag("--include-head", f.include_head, "Use head joints in both objectives");
    cmd->add_flag("--no-coasting", f.no_coasting, "Joints missing from the selected pose stay undetected");
    cmd->add_option("--out", f.out, fmt::format("Output directory (default: {})", defaults.out.string()));
    cmd->add_option("--parallelism", f.parallelism, "Max concurrent estimator calls (default: CPU count)");
    cmd->add_flag("--keep-going", f.keep_going, "Continue past frames where every rotation failed");
    cmd->add_flag("--keep-intermediates", f.keep_intermediates, "Keep rotated frames and adapter output");
    cmd->add_option("--seed", f.seed, fmt::format("Seed for synthetic motion and noise (default: {})", defaults.seed));
    cmd->add_option("--timeout", f.timeout, "Adapter timeout in seconds (default: 120)");
    cmd->add_option("--script", f.script, "Synthetic motion: cartwheel | handstand_hold | upright_walk | custom_keyframes");
    cmd->add_option("--frames-count", f.frames_count,
                    fmt::format("Frames in the synthetic motion (default: {})", defaults.frames_count));
    cmd->add_option("--ground-truth", f.ground_truth, "ground_truth.jsonl driving the synthetic backend");
    cmd->add_option("--keyframes", f.keyframes, "Motion script JSON for custom_keyframes");
    cmd->add_option("--limb-amplitude", f.limb_amplitude, "Limb swing multiplier (default: 1)");
    cmd->add_option("--width", f.width, "Synthetic canvas width (default: 640)");
    cmd->add_option("--height", f.height, "Synthetic canvas height (default: 480)");
    cmd->add_option("--schema", f.schema, "Skeleton schema JSON (default: body25)");
    cmd->add_option("--c-max", f.c_max, "Synthetic model: upright confidence (default: 0.9)");
    cmd->add_option("--c-min", f.c_min, "Synthetic model: inverted confidence (default: 0.2)");
    cmd->add_option("--sigma0", f.sigma0, "Synthetic model: upright noise px (default: 2)");
    cmd->add_option("--sigma1", f.sigma1, "Synthetic model: extra inverted noise px (default: 12)");
    cmd->add_option("--dropout-slope", f.dropout_slope, "Synthetic model: dropout at 180 deg (default: 0.5)");
    cmd->add_option("--conf-jitter", f.conf_jitter, "Synthetic model: confidence noise std (default: 0.02)");
}

template <typename T, typename U>
void override(T& target, const std::optional<U>& value)
{
    if (value)
        target = static_cast<T>(*value);
}

RunConfig resolve_run_config(const RunFlags& f)
{
    RunConfig c = f.config ? RunConfig::load(*f.config) : RunConfig{};
    auto& p = c.pipeline;
    override(c.backend, f.backend);
    override(c.adapter_cmd, f.adapter_cmd);
    override(p.step_deg, f.step);
    if (f.window)
        p.angle_window = *f.window;
    override(p.w, f.weight);
    override(p.selector.distance_threshold, f.threshold);
    override(p.selector.top_k, f.top_k);
    override(p.selector.confidence_floor, f.floor);
    if (f.distance_norm)
        p.selector.distance_normalization = distance_normalization_from_string(*f.distance_norm);
    if (f.include_head)
        p.selector.exclude_head = false;
    if (f.no_coasting)
        p.coasting = false;
    if (f.out)
        c.out = *f.out;
    override(p.parallelism, f.parallelism);
    if (f.keep_going)
        p.keep_going = true;
    if (f.keep_intermediates)
        c.keep_intermediates = true;
    override(c.seed, f.seed);
    override(c.timeout_s, f.timeout);
    if (f.frames)
        c.frames = fs::path(*f.frames);
    if (f.script)
        c.script = *f.script;
    override(c.frames_count, f.frames_count);
    if (f.ground_truth)
        c.ground_truth = fs::path(*f.ground_truth);
    if (f.keyframes)
        c.keyframes = fs::path(*f.keyframes);
    override(c.limb_amplitude, f.limb_amplitude);
    override(c.canvas.width, f.width);
    override(c.canvas.height, f.height);
    if (f.schema)
        c.schema = fs::path(*f.schema);
    override(c.synthetic.c_max, f.c_max);
    override(c.synthetic.c_min, f.c_min);
    override(c.synthetic.sigma0, f.sigma0);
    override(c.synthetic.sigma1, f.sigma1);
    override(c.synthetic.dropout_slope, f.dropout_slope);
    override(c.synthetic.confidence_jitter, f.conf_jitter);
    return c;
}

int cmd_run(const RunFlags& flags, const CLI::App& cmd)
{
    RunConfig cfg;
    try {
        cfg = resolve_run_config(flags);
        cfg.validate();
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << cmd.help();
        return kExitUsage;
    }
    const RunSummary summary = execute_run(cfg);
    std::size_t fallbacks = 0;
    for (const auto& r : summary.frames)
        fallbacks += r.fallback_fired() ? 1 : 0;
    std::cout << fmt::format("processed {} frames, {} estimator calls, {} fallback frames -> {}\n",
                             summary.frames.size(), summary.total_estimator_calls, fallbacks, cfg.out.string());
    return kExitOk;
}

struct SimulateFlags {
    std::string script = "cartwheel";
    std::size_t frames_count = 90;
    std::uint64_t seed = 1;
    int width = 640;
    int height = 480;
    double limb_amplitude = 1.0;
    std::optional<std::string> keyframes;
    std::string out = "rotpose_sim";
    bool render = false;
};

int cmd_simulate(const SimulateFlags& f)
{
    MotionScript script;
    if (f.keyframes) {
        std::ifstream in(*f.keyframes);
        if (!in)
            throw IoError(fmt::format("cannot open keyframes '{}'", *f.keyframes));
        script = MotionScript::from_json(nlohmann::json::parse(in));
    }
    script.kind = motion_kind_from_string(f.script);
    script.frames = f.frames_count;
    script.limb_amplitude = f.limb_amplitude;
    const ImageSize canvas{f.width, f.height};
    const auto frames = generate_sequence(script, canvas, f.seed);

    const fs::path out(f.out);
    fs::create_directories(out);
    write_ground_truth(out / "ground_truth.jsonl", frames);
    {
        std::ofstream meta(out / "simulation.json");
        meta << nlohmann::json{{"script", script.to_json()}, {"width", f.width}, {"height", f.height}, {"seed", f.seed}}
                    .dump(2)
             << '\n';
    }
    if (f.render) {
        fs::create_directories(out / "frames");
        std::ofstream list(out / "frames.txt");
        for (const auto& frame : frames) {
            const std::string name = fmt::format("frame_{:06}.png", frame.frame);
            write_image(out / "frames" / name, render_pose(frame.pose, canvas));
            list << "frames/" << name << '\n';
        }
    }
    std::cout << fmt::format("wrote {} frames of {} to {}\n", frames.size(), to_string(script.kind), out.string());
    return kExitOk;
}

struct EvaluateFlags {
    std::string run;
    std::string baseline;
    std::string ground_truth;
    std::string out = "rotpose_eval";
    std::optional<std::string> schema;
};

int cmd_evaluate(const EvaluateFlags& f)
{
    const SchemaPtr schema = f.schema ? load_schema(*f.schema) : body25_schema();
    const auto run = load_frame_results(f.run, schema);
    const auto baseline = load_frame_results(f.baseline, schema);
    std::vector<Pose> gt;
    for (auto& frame : read_ground_truth(f.ground_truth, schema))
        gt.push_back(std::move(frame.pose));
    if (run.size() != gt.size() || baseline.size() != gt.size()) {
        std::cerr << fmt::format("error: frame counts differ: run has {}, baseline has {}, ground truth has {}\n",
                                 run.size(), baseline.size(), gt.size());
        return kExitFailure;
    }
    const EvalReport report = evaluate(run, gt, baseline);
    const fs::path out(f.out);
    fs::create_directories(out);
    {
        std::ofstream js(out / "report.json");
        js << report.to_json().dump(2) << '\n';
        std::ofstream csv(out / "report.csv");
        csv << report.to_csv();
        if (!js || !csv)
            throw IoError(fmt::format("failed writing report to '{}'", out.string()));
    }
    std::cout << fmt::format("mpjpe augmented {:.3f} px, raw {:.3f} px; mean conf augmented {:.3f}, raw {:.3f}\n",
                             report.mpjpe_augmented, report.mpjpe_raw, report.mean_conf_augmented,
                             report.mean_conf_raw);
    return kExitOk;
}

struct ReportFlags {
    std::string run;
    std::string kind;
    std::string out;
};

int cmd_report(const ReportFlags& f)
{
    const fs::path run(f.run);
    if (!fs::is_directory(run)) {
        std::cerr << fmt::format("error: run directory '{}' does not exist\n", f.run);
        return kExitFailure;
    }
    const fs::path src = run / (f.kind == "theta" ? "theta.csv" : "confidence.csv");
    std::ifstream in(src, std::ios::binary);
    if (!in) {
        std::cerr << fmt::format("error: cannot read '{}'\n", src.string());
        return kExitFailure;
    }
    std::ofstream out(f.out, std::ios::binary | std::ios::trunc);
    if (!out) {
        std::cerr << fmt::format("error: cannot write '{}'\n", f.out);
        return kExitFailure;
    }
    out << in.rdbuf();
    return out ? kExitOk : kExitFailure;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"rotpose: rotation-augmented 2D pose estimation for video frame sequences"};
    app.require_subcommand(1);

    RunFlags run_flags;
    auto* run = app.add_subcommand("run", "Run the augmented pipeline over a frame sequence");
    add_run_flags(run, run_flags);

    SimulateFlags sim;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic motion with ground truth");
    simulate->add_option("--script", sim.script, "cartwheel | handstand_hold | upright_walk | custom_keyframes")
        ->capture_default_str();
    simulate->add_option("--frames-count", sim.frames_count, "Number of frames")->capture_default_str();
    simulate->add_option("--seed", sim.seed, "Seed for limb phase")->capture_default_str();
    simulate->add_option("--width", sim.width, "Canvas width")->capture_default_str();
    simulate->add_option("--height", sim.height, "Canvas height")->capture_default_str();
    simulate->add_option("--limb-amplitude", sim.limb_amplitude, "Limb swing multiplier")->capture_default_str();
    simulate->add_option("--keyframes", sim.keyframes, "Motion script JSON (custom_keyframes)");
    simulate->add_option("--out", sim.out, "Output directory")->capture_default_str();
    simulate->add_flag("--render", sim.render, "Also draw frames/*.png for external backends");

    EvaluateFlags ev;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a run and a baseline against ground truth");
    evaluate_cmd->add_option("--run", ev.run, "Augmented run directory")->required();
    evaluate_cmd->add_option("--baseline", ev.baseline, "Baseline (step 360) run directory")->required();
    evaluate_cmd->add_option("--ground-truth", ev.ground_truth, "ground_truth.jsonl")->required();
    evaluate_cmd->add_option("--out", ev.out, "Report directory")->capture_default_str();
    evaluate_cmd->add_option("--schema", ev.schema, "Skeleton schema JSON (default: body25)");

    ReportFlags rep;
    auto* report = app.add_subcommand("report", "Export a plotting CSV from a run");
    report->add_option("--run", rep.run, "Run directory")->required();
    report->add_option("--kind", rep.kind, "confidence | theta")->required()->check(CLI::IsMember({"confidence", "theta"}));
    report->add_option("--out", rep.out, "Output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (run->parsed())
            return cmd_run(run_flags, *run);
        if (simulate->parsed())
            return cmd_simulate(sim);
        if (evaluate_cmd->parsed())
            return cmd_evaluate(ev);
        if (report->parsed())
            return cmd_report(rep);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

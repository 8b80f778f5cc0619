// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "../support/selection_oracle.hpp"
#include "rotpose/evalharness.hpp"
#include "rotpose/geometry.hpp"
#include "rotpose/pipeline.hpp"
#include "rotpose/reconstructor.hpp"
#include "rotpose/subprocess.hpp"

namespace fs = std::filesystem;
using namespace rotpose;

namespace {

const ImageSize kCanvas{640, 480};
constexpr int kSeeds = 20;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o)
{
    fmt::print("[{}] criterion {}: {}: {}\n", o.pass ? "PASS" : "FAIL", id, name, o.detail);
    std::fflush(stdout);
    if (!o.pass)
        ++failures;
}

void guarded(int id, const std::string& name, const std::function<Outcome()>& fn)
{
    try {
        report(id, name, fn());
    } catch (const std::exception& e) {
        report(id, name, {false, fmt::format("exception: {}", e.what())});
    }
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("rotpose_accept_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// ---------------------------------------------------------------------------
// Benchmark plumbing shared by criteria 5-7.

struct Benchmark {
    std::vector<GroundTruthFrame> truth;
    std::vector<Pose> poses;
};

Benchmark make_benchmark(MotionKind kind, std::uint64_t seed)
{
    MotionScript script;
    script.kind = kind;
    script.frames = 90;
    Benchmark b;
    b.truth = generate_sequence(script, kCanvas, seed);
    for (const auto& f : b.truth)
        b.poses.push_back(f.pose);
    return b;
}

RunSummary run_benchmark(const Benchmark& b, std::uint64_t seed, const PipelineConfig& cfg)
{
    const auto schema = body25_schema();
    SyntheticEstimatorModel model;
    model.rng_seed = seed;
    const SyntheticBackend backend(model, schema);
    const PoseListSource source(b.poses, kCanvas);
    return run_sequence(source, cfg, backend, schema, {});
}

PipelineConfig raw_config()
{
    PipelineConfig cfg;
    cfg.step_deg = 360;
    return cfg;
}

PipelineConfig window_config()
{
    PipelineConfig cfg;
    cfg.angle_window = 30.0;
    return cfg;
}

struct SeedResult {
    RunSummary full;
    RunSummary raw;
    RunSummary window;
    EvalReport full_report;
    EvalReport window_report;
};

// ---------------------------------------------------------------------------

Outcome geometry_round_trip()
{
    std::mt19937_64 rng(424242);
    std::uniform_real_distribution<double> angle(0.0, 360.0);
    std::uniform_int_distribution<int> side(8, 4096);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto start = Clock::now();
    double worst_round = 0.0;
    double worst_dist = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double theta = angle(rng);
        const ImageSize size{side(rng), side(rng)};
        const auto spec = RotationSpec::make(theta, size);
        const Point2 a{unit(rng) * size.width, unit(rng) * size.height};
        const Point2 b{unit(rng) * size.width, unit(rng) * size.height};
        const Point2 fa = forward_map(a, spec);
        const Point2 fb = forward_map(b, spec);
        worst_round = std::max(worst_round, distance(inverse_map(fa, spec), a));
        worst_dist = std::max(worst_dist, std::abs(distance(fa, fb) - distance(a, b)));
    }
    const double elapsed = seconds_since(start);
    const bool pass = worst_round < 1e-9 && worst_dist < 1e-9 && elapsed < 1.0;
    return {pass, fmt::format("10000 tuples, max round-trip error {:.3e} px, max distance change {:.3e} px "
                              "(limits 1e-9), {:.3f} s (limit 1 s)",
                              worst_round, worst_dist, elapsed)};
}

Outcome selection_oracle()
{
    std::mt19937_64 rng(777);
    const auto start = Clock::now();
    int matches = 0;
    int fallbacks = 0;
    const int trials = 200;
    for (int trial = 0; trial < trials; ++trial) {
        auto t = testing::make_selection_trial(rng, 25, 36);
        const auto schema = testing::oracle_schema(25);
        const auto cands = testing::to_library_candidates(t, schema);
        const auto [want, want_fallback] = testing::oracle_select(t.candidates, t.previous, t.settings);
        const auto got = select_frame(cands, testing::to_pose(t.previous, schema),
                                      testing::to_selector_config(t.settings), *schema);
        if (got.chosen.theta == t.candidates[want].theta && got.diagnostics.fallback() == want_fallback)
            ++matches;
        fallbacks += want_fallback ? 1 : 0;
    }
    const double elapsed = seconds_since(start);
    const bool pass = matches == trials && fallbacks > 0 && elapsed < 5.0;
    return {pass, fmt::format("{}/{} trials match the brute-force oracle ({} fallback trials), {:.3f} s (limit 5 s)",
                              matches, trials, fallbacks, elapsed)};
}

Outcome reconstruction_recurrence()
{
    // The target sits at the origin so the per-frame error is the coordinate itself
    // and the ratio check is not swamped by rounding of a large offset.
    const auto schema = body25_schema();
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> coord(-400.0, 400.0);
    std::vector<Keypoint> start_kps, target_kps;
    for (std::size_t k = 0; k < schema->joint_count(); ++k) {
        start_kps.push_back({coord(rng), coord(rng), 0.9});
        target_kps.push_back({0.0, 0.0, 0.9});
    }
    const Pose target(schema, target_kps);
    Reconstructor r(0.8);
    r.reconstruct(Pose(schema, start_kps));
    double worst = 0.0;
    std::vector<double> prev_err(schema->joint_count());
    for (std::size_t k = 0; k < schema->joint_count(); ++k)
        prev_err[k] = std::hypot(start_kps[k].x, start_kps[k].y);
    for (int n = 1; n <= 20; ++n) {
        const auto& out = r.reconstruct(target);
        for (std::size_t k = 0; k < schema->joint_count(); ++k) {
            const double err = std::hypot(out[k].x, out[k].y);
            worst = std::max(worst, std::abs(err / prev_err[k] - 0.2) / 0.2);
            prev_err[k] = err;
        }
    }
    return {worst < 1e-12, fmt::format("w=0.8, 20 frames x 25 joints, max relative deviation of the per-frame "
                                       "error ratio from 0.2: {:.3e} (limit 1e-12)",
                                       worst)};
}

int run_cli(const std::string& args)
{
    const std::string cmd = shell_quote(ROTPOSE_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome default_configuration()
{
    const auto check = [](const nlohmann::json& p, std::string& why) {
        bool ok = true;
        auto expect = [&](const std::string& what, double got, double want) {
            if (got != want) {
                ok = false;
                why += fmt::format(" {}={} (want {})", what, got, want);
            }
        };
        expect("d", p.at("step_deg").get<double>(), 10);
        expect("w", p.at("w").get<double>(), 0.8);
        expect("top_k", p.at("selector").at("top_k").get<double>(), 5);
        expect("threshold", p.at("selector").at("distance_threshold").get<double>(), 500);
        return ok;
    };
    std::string why;
    const bool defaults_ok = check(PipelineConfig{}.to_json(), why);

    const auto dir = scratch("bare");
    const int code = run_cli("run --script cartwheel --frames-count 3 --out " + shell_quote((dir / "run").string()));
    bool manifest_ok = false;
    if (code == 0) {
        const auto manifest = nlohmann::json::parse(slurp(dir / "run/run_manifest.json"));
        manifest_ok = check(manifest.at("pipeline"), why) && check(manifest.at("config").at("pipeline"), why);
    } else {
        why += fmt::format(" bare run exited {}", code);
    }
    fs::remove_all(dir);
    return {defaults_ok && manifest_ok,
            fmt::format("default config d=10 w=0.8 top_k=5 threshold=500: {}; bare-invocation manifest: {}{}",
                        defaults_ok ? "yes" : "no", manifest_ok ? "matches" : "differs", why)};
}

Outcome cartwheel_benchmark(const std::vector<SeedResult>& results, double elapsed)
{
    int conf_wins = 0;
    int mpjpe_wins = 0;
    double worst_ratio = 0.0;
    for (const auto& s : results) {
        const auto& rep = s.full_report;
        conf_wins += rep.mean_conf_augmented > rep.mean_conf_raw ? 1 : 0;
        mpjpe_wins += rep.mpjpe_augmented < 0.5 * rep.mpjpe_raw ? 1 : 0;
        worst_ratio = std::max(worst_ratio, rep.mpjpe_augmented / rep.mpjpe_raw);
    }
    const bool pass = conf_wins >= 18 && mpjpe_wins >= 16 && elapsed < 30.0;
    return {pass, fmt::format("seeds 1-{}: mean confidence higher in {}/{} (need 18), mpjpe below half of raw in "
                              "{}/{} (need 16, worst ratio {:.3f}), {:.2f} s (limit 30 s)",
                              kSeeds, conf_wins, kSeeds, mpjpe_wins, kSeeds, worst_ratio, elapsed)};
}

Outcome theta_trajectory(const std::vector<SeedResult>& results)
{
    double worst_corr = 1.0;
    for (int seed = 1; seed <= kSeeds; ++seed) {
        const auto bench = make_benchmark(MotionKind::cartwheel, seed);
        const auto& frames = results[seed - 1].full.frames;
        std::vector<double> selected, compensating;
        for (std::size_t i = 0; i < frames.size(); ++i) {
            if (!frames[i].selected_theta)
                continue;
            selected.push_back(*frames[i].selected_theta);
            compensating.push_back(wrap_degrees(360.0 - bench.truth[i].body_angle));
        }
        worst_corr = std::min(worst_corr, circular_correlation(selected, compensating));
    }

    double worst_upright = 1.0;
    for (int seed = 1; seed <= kSeeds; ++seed) {
        const auto walk = make_benchmark(MotionKind::upright_walk, seed);
        const auto summary = run_benchmark(walk, seed, PipelineConfig{});
        std::size_t near_zero = 0;
        for (const auto& f : summary.frames)
            near_zero += (f.selected_theta && circular_distance(*f.selected_theta, 0.0) <= 30.0) ? 1 : 0;
        worst_upright = std::min(worst_upright, static_cast<double>(near_zero) / summary.frames.size());
    }
    const bool pass = worst_corr > 0.8 && worst_upright >= 0.8;
    return {pass, fmt::format("cartwheel circular correlation of theta vs compensating angle, min over seeds 1-{}: "
                              "{:.4f} (need > 0.8); upright_walk frames within 30 deg of 0, min over seeds: "
                              "{:.1f}% (need >= 80%)",
                              kSeeds, worst_corr, 100.0 * worst_upright)};
}

Outcome angle_window(const std::vector<SeedResult>& results)
{
    double worst_reduction = 1.0;
    double worst_degradation = -1.0;
    int ok = 0;
    for (const auto& s : results) {
        const double reduction =
            1.0 - static_cast<double>(s.window.total_estimator_calls) / static_cast<double>(s.full.total_estimator_calls);
        const double degradation = s.window_report.mpjpe_augmented / s.full_report.mpjpe_augmented - 1.0;
        worst_reduction = std::min(worst_reduction, reduction);
        worst_degradation = std::max(worst_degradation, degradation);
        ok += (reduction >= 0.75 && degradation <= 0.20) ? 1 : 0;
    }
    return {ok == kSeeds, fmt::format("window 30, d=10, seeds 1-{}: {}/{} seeds pass; min call reduction {:.1f}% "
                                      "(need >= 75%), worst relative mpjpe change {:+.1f}% (limit +20%)",
                                      kSeeds, ok, kSeeds, 100.0 * worst_reduction, 100.0 * worst_degradation)};
}

Outcome determinism()
{
    const auto schema = body25_schema();
    const auto bench = make_benchmark(MotionKind::cartwheel, 9);
    SyntheticEstimatorModel model;
    model.rng_seed = 9;
    const SyntheticBackend backend(model, schema);
    const PoseListSource source(bench.poses, kCanvas);
    const auto dir = scratch("determinism");

    std::string reference;
    int runs = 0;
    int identical = 0;
    for (int par : {1, 1, 2, 4, 16}) {
        PipelineConfig cfg;
        cfg.parallelism = par;
        const auto out = dir / fmt::format("run{}", runs);
        run_sequence(source, cfg, backend, schema, out);
        std::string bytes;
        for (const char* f : {"poses.jsonl", "theta.csv", "confidence.csv"})
            bytes += slurp(out / f) + '\x1f';
        if (runs == 0)
            reference = bytes;
        identical += bytes == reference ? 1 : 0;
        ++runs;
    }
    fs::remove_all(dir);
    return {identical == runs && !reference.empty(),
            fmt::format("{}/{} runs (parallelism 1, 1, 2, 4, 16) byte-identical in poses.jsonl, theta.csv, "
                        "confidence.csv",
                        identical, runs)};
}

} // namespace

int main()
{
    guarded(1, "geometry round-trip", geometry_round_trip);
    guarded(2, "selection oracle equivalence", selection_oracle);
    guarded(3, "reconstruction recurrence", reconstruction_recurrence);
    guarded(4, "default configuration", default_configuration);

    std::vector<SeedResult> results;
    double benchmark_seconds = 0.0;
    std::string benchmark_error;
    try {
        for (int seed = 1; seed <= kSeeds; ++seed) {
            const auto bench = make_benchmark(MotionKind::cartwheel, seed);
            SeedResult s;
            const auto start = Clock::now();
            s.full = run_benchmark(bench, seed, PipelineConfig{});
            s.raw = run_benchmark(bench, seed, raw_config());
            s.full_report = evaluate(s.full.frames, bench.poses, s.raw.frames);
            benchmark_seconds += seconds_since(start);
            s.window = run_benchmark(bench, seed, window_config());
            s.window_report = evaluate(s.window.frames, bench.poses, s.raw.frames);
            results.push_back(std::move(s));
        }
    } catch (const std::exception& e) {
        benchmark_error = e.what();
    }

    auto needs_benchmark = [&](const std::function<Outcome()>& fn) {
        return [&, fn]() -> Outcome {
            if (!benchmark_error.empty())
                return {false, "benchmark failed: " + benchmark_error};
            return fn();
        };
    };
    guarded(5, "cartwheel benchmark",
            needs_benchmark([&] { return cartwheel_benchmark(results, benchmark_seconds); }));
    guarded(6, "theta trajectory shape", needs_benchmark([&] { return theta_trajectory(results); }));
    guarded(7, "angle window", needs_benchmark([&] { return angle_window(results); }));
    guarded(8, "determinism", determinism);

    fmt::print("{} of 8 criteria passed\n", 8 - failures);
    return failures == 0 ? 0 : 1;
}

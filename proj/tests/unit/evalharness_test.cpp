// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "rotpose/error.hpp"
#include "rotpose/evalharness.hpp"
#include "rotpose/pipeline.hpp"

namespace fs = std::filesystem;

namespace rotpose {
namespace {

const ImageSize kCanvas{640, 480};

MotionScript make_script(MotionKind kind, std::size_t frames, double amplitude = 1.0)
{
    MotionScript s;
    s.kind = kind;
    s.frames = frames;
    s.limb_amplitude = amplitude;
    return s;
}

std::vector<Pose> poses_of(const std::vector<GroundTruthFrame>& frames)
{
    std::vector<Pose> out;
    for (const auto& f : frames)
        out.push_back(f.pose);
    return out;
}

TEST(MotionScript, KindNames)
{
    for (auto k : {MotionKind::cartwheel, MotionKind::handstand_hold, MotionKind::upright_walk,
                   MotionKind::custom_keyframes})
        EXPECT_EQ(motion_kind_from_string(to_string(k)), k);
    EXPECT_THROW(motion_kind_from_string("backflip"), UsageError);
}

TEST(GenerateSequence, FrozenWalkKeepsHeightsConstant)
{
    const auto frames = generate_sequence(make_script(MotionKind::upright_walk, 10, 0.0), kCanvas, 1);
    ASSERT_EQ(frames.size(), 10u);
    for (std::size_t t = 1; t < frames.size(); ++t)
        for (std::size_t k = 0; k < frames[t].pose.size(); ++k)
            EXPECT_NEAR(frames[t].pose[k].y, frames[0].pose[k].y, 1e-9);
    EXPECT_GT(frames.back().pose[8].x, frames.front().pose[8].x);
}

TEST(GenerateSequence, CartwheelAngleSweepsMonotonically)
{
    const auto script = make_script(MotionKind::cartwheel, 90);
    EXPECT_EQ(script.body_angle(1), 0.0);
    EXPECT_NEAR(script.body_angle(90), 360.0, 1e-9);
    for (std::size_t t = 2; t <= 90; ++t)
        EXPECT_GT(script.body_angle(t), script.body_angle(t - 1));
    const auto frames = generate_sequence(script, kCanvas, 1);
    for (const auto& f : frames)
        for (const auto& kp : f.pose.keypoints())
            EXPECT_EQ(kp.confidence, 1.0);
}

TEST(GenerateSequence, HandstandHoldsInverted)
{
    const auto script = make_script(MotionKind::handstand_hold, 40);
    EXPECT_EQ(script.body_angle(1), 0.0);
    EXPECT_NEAR(script.body_angle(40), 180.0, 1e-9);
}

TEST(GenerateSequenceProperty, BoneLengthsAreConstant)
{
    for (auto kind : {MotionKind::cartwheel, MotionKind::handstand_hold, MotionKind::upright_walk}) {
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            const auto frames = generate_sequence(make_script(kind, 60), kCanvas, seed);
            for (const auto& [a, b] : body25_bones()) {
                const double ref = distance(frames[0].pose[a].position(), frames[0].pose[b].position());
                for (const auto& f : frames)
                    ASSERT_NEAR(distance(f.pose[a].position(), f.pose[b].position()), ref, 1e-9)
                        << to_string(kind) << " bone " << a << "-" << b;
            }
        }
    }
}

TEST(GenerateSequence, Errors)
{
    EXPECT_THROW(generate_sequence(make_script(MotionKind::cartwheel, 0), kCanvas, 1), UsageError);
    auto big = make_script(MotionKind::cartwheel, 20);
    big.scale = 5.0;
    EXPECT_THROW(generate_sequence(big, kCanvas, 1), GenerationError);
    EXPECT_THROW(generate_sequence(make_script(MotionKind::cartwheel, 20), ImageSize{60, 60}, 1), GenerationError);
}

TEST(GenerateSequence, CustomKeyframesInterpolate)
{
    MotionScript s = make_script(MotionKind::custom_keyframes, 11);
    s.keyframes = {{1, 0, {320, 240}}, {11, 100, {340, 240}}};
    EXPECT_NEAR(s.body_angle(6), 50.0, 1e-9);
    EXPECT_NEAR(s.root(6, kCanvas).x, 330.0, 1e-9);
    const auto back = MotionScript::from_json(s.to_json());
    EXPECT_EQ(back.keyframes.size(), 2u);
    EXPECT_NEAR(back.body_angle(6), 50.0, 1e-9);
}

TEST(GroundTruthIo, RoundTrip)
{
    const auto frames = generate_sequence(make_script(MotionKind::cartwheel, 12), kCanvas, 4);
    const fs::path path = fs::temp_directory_path() / ("rotpose_gt_" + std::to_string(::getpid()) + ".jsonl");
    write_ground_truth(path, frames);
    const auto back = read_ground_truth(path, body25_schema());
    ASSERT_EQ(back.size(), frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        EXPECT_EQ(back[i].frame, frames[i].frame);
        EXPECT_EQ(back[i].body_angle, frames[i].body_angle);
        EXPECT_EQ(back[i].pose, frames[i].pose);
    }
    fs::remove(path);
}

TEST(RenderPose, DrawsOnCanvas)
{
    const auto frames = generate_sequence(make_script(MotionKind::upright_walk, 1), kCanvas, 1);
    const auto img = render_pose(frames[0].pose, kCanvas);
    EXPECT_EQ(img.size(), kCanvas);
    EXPECT_EQ(img.channels, 3);
    const auto& mid = frames[0].pose[8];
    EXPECT_GT(img.at(static_cast<int>(std::lround(mid.x)), static_cast<int>(std::lround(mid.y))), 0);
    EXPECT_EQ(img.at(0, 0), 0);
}

TEST(Metrics, PerfectPrediction)
{
    const auto gt = poses_of(generate_sequence(make_script(MotionKind::cartwheel, 5), kCanvas, 1));
    EXPECT_EQ(mpjpe(gt, gt), 0.0);
    EXPECT_EQ(pck(gt, gt, 0.1), 1.0);
}

TEST(Metrics, SingleJointOffset)
{
    const auto gt = poses_of(generate_sequence(make_script(MotionKind::upright_walk, 1), kCanvas, 1));
    auto pred = gt;
    pred[0][4].x += 3.0;
    pred[0][4].y += 4.0;
    EXPECT_DOUBLE_EQ(mpjpe(pred, gt), 0.2);
    // 5 px is far below 0.1 torso lengths for the default figure.
    EXPECT_GT(torso_size(gt[0]), 50.0);
    EXPECT_EQ(pck(pred, gt, 0.1), 1.0);
    pred[0][4].x += 500.0;
    EXPECT_DOUBLE_EQ(pck(pred, gt, 0.1), 24.0 / 25.0);
    EXPECT_THROW(mpjpe(pred, {}), UsageError);
}

TEST(Metrics, CircularCorrelation)
{
    const std::vector<double> a = {0, 30, 60, 90, 200, 300};
    const std::vector<double> b = {10, 20, 80, 100, 190, 280};
    // Reference value from a 30-digit evaluation of the pairwise sine form.
    EXPECT_NEAR(circular_correlation(a, b), 0.939776460921638077, 1e-12);
    EXPECT_NEAR(circular_correlation(a, a), 1.0, 1e-12);
    std::vector<double> shifted, negated;
    for (double x : a) {
        shifted.push_back(x + 123.0);
        negated.push_back(-x);
    }
    EXPECT_NEAR(circular_correlation(a, shifted), 1.0, 1e-12);
    EXPECT_NEAR(circular_correlation(a, negated), -1.0, 1e-12);
}

TEST(Evaluate, CartwheelAugmentedBeatsRaw)
{
    const auto schema = body25_schema();
    const auto gt = poses_of(generate_sequence(make_script(MotionKind::cartwheel, 90), kCanvas, 1));
    SyntheticBackend backend(SyntheticEstimatorModel{}, schema);
    PoseListSource source(gt, kCanvas);
    const auto aug = run_sequence(source, PipelineConfig{}, backend, schema, {});
    PipelineConfig raw_cfg;
    raw_cfg.step_deg = 360;
    const auto raw = run_sequence(source, raw_cfg, backend, schema, {});
    const auto report = evaluate(aug.frames, gt, raw.frames);
    EXPECT_EQ(report.frames, 90u);
    EXPECT_LT(report.mpjpe_augmented, report.mpjpe_raw);
    EXPECT_GT(report.mean_conf_augmented, report.mean_conf_raw);
    EXPECT_EQ(report.estimator_calls_augmented, 3240u);
    EXPECT_EQ(report.estimator_calls_raw, 90u);
    for (double v : {report.pck_augmented_010, report.pck_augmented_020, report.pck_raw_010, report.pck_raw_020}) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
    EXPECT_LE(report.pck_augmented_010, report.pck_augmented_020);
    const auto csv = report.to_csv();
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "frame,error_augmented,error_raw,conf_augmented,conf_raw,theta_deg");
    EXPECT_EQ(report.to_json().at("frames"), 90);

    const auto again = evaluate(aug.frames, gt, raw.frames);
    EXPECT_EQ(again.to_json(), report.to_json());
    EXPECT_THROW(evaluate(aug.frames, std::vector<Pose>(gt.begin(), gt.end() - 1), raw.frames), UsageError);
}

} // namespace
} // namespace rotpose

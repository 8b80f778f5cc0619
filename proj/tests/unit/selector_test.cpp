// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "../support/selection_oracle.hpp"
#include "rotpose/error.hpp"
#include "rotpose/geometry.hpp"
#include "rotpose/selector.hpp"

namespace rotpose {
namespace {

SchemaPtr two_joint_schema()
{
    return std::make_shared<const SkeletonSchema>("two", std::vector<std::string>{"a", "b"}, std::set<std::size_t>{});
}

RotationCandidate candidate(const SchemaPtr& s, double theta, double conf, std::vector<Keypoint> kps = {})
{
    if (kps.empty())
        kps.assign(s->joint_count(), Keypoint{0, 0, 1.0});
    return RotationCandidate{theta, Pose(s, std::move(kps)), conf, std::nullopt};
}

TEST(SelectorConfig, DefaultsAndValidation)
{
    SelectorConfig cfg;
    EXPECT_EQ(cfg.top_k, 5);
    EXPECT_EQ(cfg.distance_threshold, 500.0);
    EXPECT_TRUE(cfg.exclude_head);
    EXPECT_EQ(cfg.distance_normalization, DistanceNormalization::scaled_to_full);
    EXPECT_NO_THROW(cfg.validate());

    auto bad = cfg;
    bad.top_k = 0;
    EXPECT_THROW(bad.validate(), UsageError);
    bad = cfg;
    bad.distance_threshold = 0;
    EXPECT_THROW(bad.validate(), UsageError);

    cfg.top_k = 3;
    cfg.distance_normalization = DistanceNormalization::raw_sum;
    const auto back = SelectorConfig::from_json(cfg.to_json());
    EXPECT_EQ(back.top_k, 3);
    EXPECT_EQ(back.distance_normalization, DistanceNormalization::raw_sum);
}

TEST(PoseDistance, IdenticalPosesAreZero)
{
    const auto s = body25_schema();
    std::vector<Keypoint> kps;
    for (std::size_t k = 0; k < s->joint_count(); ++k)
        kps.push_back({double(k), 2.0 * k, 0.8});
    const Pose p(s, kps);
    EXPECT_EQ(*pose_distance(p, p, SelectorConfig{}, *s), 0.0);
}

TEST(PoseDistance, RawSumOfTriangles)
{
    const auto s = two_joint_schema();
    const Pose prev(s, {{0, 0, 1}, {0, 0, 1}});
    const Pose cur(s, {{3, 4, 1}, {6, 8, 1}});
    SelectorConfig cfg;
    cfg.distance_normalization = DistanceNormalization::raw_sum;
    EXPECT_DOUBLE_EQ(*pose_distance(cur, prev, cfg, *s), 15.0);
}

TEST(PoseDistance, ScaledToFullCompensatesMissingJoints)
{
    // 20 considered joints, 10 shared, each 10 px apart: raw 100, scaled 200.
    std::vector<std::string> names;
    for (int k = 0; k < 22; ++k)
        names.push_back("j" + std::to_string(k));
    const auto s = std::make_shared<const SkeletonSchema>("s", names, std::set<std::size_t>{0, 1});
    std::vector<Keypoint> a(22, Keypoint{0, 0, 0.9});
    std::vector<Keypoint> b(22, Keypoint{10, 0, 0.9});
    for (int k = 12; k < 22; ++k)
        b[k].confidence = 0.0;
    a[0] = {500, 500, 0.9}; // head joints never count
    SelectorConfig cfg;
    EXPECT_DOUBLE_EQ(*pose_distance(Pose(s, b), Pose(s, a), cfg, *s), 200.0);
    cfg.distance_normalization = DistanceNormalization::raw_sum;
    EXPECT_DOUBLE_EQ(*pose_distance(Pose(s, b), Pose(s, a), cfg, *s), 100.0);
}

TEST(PoseDistance, UndefinedWithoutSharedJointsAndSchemaChecked)
{
    const auto s = two_joint_schema();
    const Pose a(s, {{0, 0, 1}, {0, 0, 0}});
    const Pose b(s, {{0, 0, 0}, {0, 0, 1}});
    EXPECT_FALSE(pose_distance(a, b, SelectorConfig{}, *s).has_value());
    EXPECT_THROW(pose_distance(Pose(body25_schema()), a, SelectorConfig{}, *s), StructuralError);
}

TEST(SelectFirstFrame, Examples)
{
    const auto s = two_joint_schema();
    const std::vector<RotationCandidate> c = {candidate(s, 0, 0.3), candidate(s, 90, 0.7), candidate(s, 180, 0.5)};
    EXPECT_EQ(select_first_frame(c).theta, 90.0);
    EXPECT_EQ(select_first_frame({candidate(s, 40, 0.1)}).theta, 40.0);
    EXPECT_EQ(select_first_frame({candidate(s, 350, 0.6), candidate(s, 10, 0.6)}).theta, 10.0);
    EXPECT_EQ(select_first_frame({candidate(s, 20, 0.6), candidate(s, 350, 0.6)}).theta, 350.0);
    EXPECT_THROW(select_first_frame({}), NoCandidateError);
}

TEST(SelectFrame, ThresholdThenTopKThenConfidence)
{
    const auto s = two_joint_schema();
    const Pose prev(s, {{0, 0, 1}, {0, 0, 1}});
    SelectorConfig cfg;
    cfg.distance_normalization = DistanceNormalization::raw_sum;
    // Distances 10, 20, 600: joint b carries the whole offset.
    const std::vector<RotationCandidate> c = {
        candidate(s, 0, 0.4, {{0, 0, 1}, {10, 0, 1}}),
        candidate(s, 10, 0.9, {{0, 0, 1}, {20, 0, 1}}),
        candidate(s, 20, 0.99, {{0, 0, 1}, {600, 0, 1}}),
    };
    const auto sel = select_frame(c, prev, cfg, *s);
    EXPECT_EQ(sel.chosen.theta, 10.0);
    EXPECT_DOUBLE_EQ(*sel.chosen.distance_to_prev, 20.0);
    EXPECT_EQ(sel.diagnostics.rule, SelectionRule::consistency);
    ASSERT_EQ(sel.diagnostics.candidates.size(), 3u);
    EXPECT_DOUBLE_EQ(*sel.diagnostics.candidates[2].distance, 600.0);

    cfg.top_k = 1;
    EXPECT_EQ(select_frame(c, prev, cfg, *s).chosen.theta, 0.0);
}

TEST(SelectFrame, FallbackMatchesFirstFrameRule)
{
    const auto s = two_joint_schema();
    const Pose prev(s, {{0, 0, 1}, {0, 0, 1}});
    const std::vector<RotationCandidate> c = {
        candidate(s, 0, 0.4, {{900, 0, 1}, {0, 900, 1}}),
        candidate(s, 90, 0.8, {{700, 0, 1}, {0, 700, 1}}),
        candidate(s, 180, 0.6, {{0, 0, 0}, {0, 0, 0}}),
    };
    const auto sel = select_frame(c, prev, SelectorConfig{}, *s);
    EXPECT_TRUE(sel.diagnostics.fallback());
    EXPECT_EQ(sel.chosen.theta, select_first_frame(c).theta);
    EXPECT_FALSE(sel.diagnostics.candidates[2].distance.has_value());
    EXPECT_THROW(select_frame({}, prev, SelectorConfig{}, *s), NoCandidateError);
}

TEST(SelectFrame, MatchesBruteForceOracle)
{
    std::mt19937_64 rng(20240611);
    int fallbacks = 0;
    for (int trial = 0; trial < 200; ++trial) {
        auto t = testing::make_selection_trial(rng, 12, 36);
        const auto schema = testing::oracle_schema(12);
        const auto cands = testing::to_library_candidates(t, schema);
        const auto [want, want_fallback] = testing::oracle_select(t.candidates, t.previous, t.settings);
        const auto got = select_frame(cands, testing::to_pose(t.previous, schema),
                                      testing::to_selector_config(t.settings), *schema);
        ASSERT_EQ(got.chosen.theta, t.candidates[want].theta) << "trial " << trial;
        ASSERT_EQ(got.diagnostics.fallback(), want_fallback) << "trial " << trial;
        fallbacks += want_fallback ? 1 : 0;
    }
    EXPECT_GT(fallbacks, 0);
    EXPECT_LT(fallbacks, 200);
}

TEST(SelectFrameProperty, DeterministicAndThresholdMonotone)
{
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        auto t = testing::make_selection_trial(rng, 10, 36);
        const auto schema = testing::oracle_schema(10);
        const auto cands = testing::to_library_candidates(t, schema);
        const auto prev = testing::to_pose(t.previous, schema);
        auto cfg = testing::to_selector_config(t.settings);
        const auto a = select_frame(cands, prev, cfg, *schema);
        const auto b = select_frame(cands, prev, cfg, *schema);
        EXPECT_EQ(a.chosen.theta, b.chosen.theta);

        bool any_within = false;
        for (const auto& d : a.diagnostics.candidates)
            any_within = any_within || (d.distance && *d.distance <= cfg.distance_threshold);
        if (any_within) {
            ASSERT_TRUE(a.chosen.distance_to_prev.has_value());
            EXPECT_LE(*a.chosen.distance_to_prev, cfg.distance_threshold);
        }

        const bool was_fallback = a.diagnostics.fallback();
        for (double scale : {1.5, 3.0, 100.0}) {
            cfg.distance_threshold = t.settings.threshold * scale;
            const auto raised = select_frame(cands, prev, cfg, *schema);
            if (!was_fallback)
                EXPECT_FALSE(raised.diagnostics.fallback());
        }
    }
}

TEST(PoseDistanceProperty, InvariantUnderGlobalRotation)
{
    const auto s = body25_schema();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> coord(50, 400);
    std::uniform_real_distribution<double> conf(0.0, 1.0);
    const auto spec = RotationSpec::make(37.0, ImageSize{480, 480});
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Keypoint> a, b;
        for (std::size_t k = 0; k < s->joint_count(); ++k) {
            a.push_back({coord(rng), coord(rng), conf(rng)});
            b.push_back({coord(rng), coord(rng), conf(rng)});
        }
        const Pose pa(s, a), pb(s, b);
        const auto ra = rotate_pose(pa, spec);
        const auto rb = rotate_pose(pb, spec);
        Pose ra0(s, ra.keypoints()), rb0(s, rb.keypoints());
        const auto before = pose_distance(pa, pb, SelectorConfig{}, *s);
        const auto after = pose_distance(ra0, rb0, SelectorConfig{}, *s);
        ASSERT_EQ(before.has_value(), after.has_value());
        if (before)
            EXPECT_NEAR(*before, *after, 1e-6);
    }
}

} // namespace
} // namespace rotpose

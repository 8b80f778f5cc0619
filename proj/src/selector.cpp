// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "rotpose/selector.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "rotpose/error.hpp"
#include "rotpose/geometry.hpp"

namespace rotpose {

std::string to_string(DistanceNormalization n)
{
    return n == DistanceNormalization::raw_sum ? "raw_sum" : "scaled_to_full";
}

DistanceNormalization distance_normalization_from_string(const std::string& s)
{
    if (s == "raw_sum")
        return DistanceNormalization::raw_sum;
    if (s == "scaled_to_full")
        return DistanceNormalization::scaled_to_full;
    throw UsageError(fmt::format("unknown distance normalization '{}'", s));
}

std::string to_string(SelectionRule rule)
{
    switch (rule) {
    case SelectionRule::first_frame: return "first_frame";
    case SelectionRule::consistency: return "consistency";
    case SelectionRule::fallback: return "fallback";
    }
    return "unknown";
}

void SelectorConfig::validate() const
{
    if (top_k < 1)
        throw UsageError(fmt::format("top_k must be >= 1 (got {})", top_k));
    if (!(distance_threshold > 0.0))
        throw UsageError(fmt::format("distance threshold must be > 0 (got {})", distance_threshold));
    if (!(confidence_floor >= 0.0 && confidence_floor < 1.0))
        throw UsageError(fmt::format("confidence floor must lie in [0, 1) (got {})", confidence_floor));
}

nlohmann::json SelectorConfig::to_json() const
{
    return {{"top_k", top_k},
            {"distance_threshold", distance_threshold},
            {"exclude_head", exclude_head},
            {"confidence_floor", confidence_floor},
            {"distance_normalization", to_string(distance_normalization)}};
}

SelectorConfig SelectorConfig::from_json(const nlohmann::json& j)
{
    SelectorConfig cfg;
    cfg.top_k = j.value("top_k", cfg.top_k);
    cfg.distance_threshold = j.value("distance_threshold", cfg.distance_threshold);
    cfg.exclude_head = j.value("exclude_head", cfg.exclude_head);
    cfg.confidence_floor = j.value("confidence_floor", cfg.confidence_floor);
    if (j.contains("distance_normalization"))
        cfg.distance_normalization = distance_normalization_from_string(j.at("distance_normalization"));
    return cfg;
}

RotationCandidate make_candidate(double theta, Pose pose, const SelectorConfig& cfg, const SkeletonSchema& schema)
{
    if (!pose.frame().is_original())
        throw StructuralError("rotation candidates must be in the original frame");
    const double conf = mean_confidence(pose, cfg.confidence_floor, cfg.exclude_head, schema);
    return RotationCandidate{wrap_degrees(theta), std::move(pose), conf, std::nullopt};
}

std::optional<double> pose_distance(const Pose& current, const Pose& previous, const SelectorConfig& cfg,
                                    const SkeletonSchema& schema)
{
    require_schema(current, schema);
    require_schema(previous, schema);

    double raw = 0.0;
    std::size_t shared = 0;
    for (std::size_t k = 0; k < schema.joint_count(); ++k) {
        if (cfg.exclude_head && schema.is_head(k))
            continue;
        if (current[k].confidence > cfg.confidence_floor && previous[k].confidence > cfg.confidence_floor) {
            raw += distance(current[k].position(), previous[k].position());
            ++shared;
        }
    }
    if (shared == 0)
        return std::nullopt;
    if (cfg.distance_normalization == DistanceNormalization::raw_sum)
        return raw;
    const std::size_t total = cfg.exclude_head ? schema.joint_count() - schema.head_joints().size()
                                               : schema.joint_count();
    return raw * (static_cast<double>(total) / static_cast<double>(shared));
}

bool confidence_precedes(double conf_a, double theta_a, double conf_b, double theta_b)
{
    if (conf_a != conf_b)
        return conf_a > conf_b;
    const double da = circular_distance(theta_a, 0.0);
    const double db = circular_distance(theta_b, 0.0);
    if (da != db)
        return da < db;
    return theta_a < theta_b;
}

const RotationCandidate& select_first_frame(const std::vector<RotationCandidate>& candidates)
{
    if (candidates.empty())
        throw NoCandidateError("no rotation candidates to select from");
    const RotationCandidate* best = &candidates.front();
    for (const auto& c : candidates) {
        if (confidence_precedes(c.mean_conf, c.theta, best->mean_conf, best->theta))
            best = &c;
    }
    return *best;
}

Selection select_frame(const std::vector<RotationCandidate>& candidates, const Pose& previous,
                       const SelectorConfig& cfg, const SkeletonSchema& schema)
{
    if (candidates.empty())
        throw NoCandidateError("no rotation candidates to select from");

    std::vector<RotationCandidate> scored = candidates;
    SelectionDiagnostics diag;
    diag.candidates.reserve(scored.size());
    std::vector<std::size_t> within;
    for (std::size_t i = 0; i < scored.size(); ++i) {
        auto& c = scored[i];
        c.distance_to_prev = pose_distance(c.pose, previous, cfg, schema);
        diag.candidates.push_back({c.theta, c.distance_to_prev, c.mean_conf});
        if (c.distance_to_prev && *c.distance_to_prev <= cfg.distance_threshold)
            within.push_back(i);
    }

    if (within.empty()) {
        diag.rule = SelectionRule::fallback;
        return {select_first_frame(scored), std::move(diag)};
    }

    std::sort(within.begin(), within.end(), [&](std::size_t a, std::size_t b) {
        const auto& ca = scored[a];
        const auto& cb = scored[b];
        if (*ca.distance_to_prev != *cb.distance_to_prev)
            return *ca.distance_to_prev < *cb.distance_to_prev;
        return confidence_precedes(ca.mean_conf, ca.theta, cb.mean_conf, cb.theta);
    });
    within.resize(std::min(within.size(), static_cast<std::size_t>(cfg.top_k)));

    std::size_t best = within.front();
    for (auto i : within) {
        if (confidence_precedes(scored[i].mean_conf, scored[i].theta, scored[best].mean_conf, scored[best].theta))
            best = i;
    }
    diag.rule = SelectionRule::consistency;
    return {std::move(scored[best]), std::move(diag)};
}

} // namespace rotpose

// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

/// \file selector.hpp
/// \brief Picks one rotation candidate per frame.
///
/// First frame: highest mean confidence. Later frames: keep candidates whose
/// distance to the previous reconstructed pose is within the threshold, take the
/// top_k closest, and return the most confident of those. If no candidate is
/// within the threshold, fall back to the first-frame rule.
///
/// All orderings share one tie-break chain: higher mean confidence, then theta
/// closest to 0 degrees, then smaller theta.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rotpose/skeleton.hpp"

namespace rotpose {

enum class DistanceNormalization {
    raw_sum,        ///< plain sum over shared joints
    scaled_to_full, ///< sum rescaled as if every considered joint were shared
};

std::string to_string(DistanceNormalization n);
DistanceNormalization distance_normalization_from_string(const std::string& s);

struct SelectorConfig {
    int top_k = 5;
    double distance_threshold = 500.0; ///< px
    bool exclude_head = true;
    double confidence_floor = kDefaultConfidenceFloor;
    DistanceNormalization distance_normalization = DistanceNormalization::scaled_to_full;

    /// Throws UsageError on top_k < 1, threshold <= 0, floor outside [0, 1).
    void validate() const;
    nlohmann::json to_json() const;
    static SelectorConfig from_json(const nlohmann::json& j);
};

/// A pose predicted at rotation theta, already mapped back to original coordinates.
struct RotationCandidate {
    double theta = 0.0;
    Pose pose;
    double mean_conf = 0.0;
    std::optional<double> distance_to_prev;
};

/// Builds a candidate with mean_conf computed under cfg.
RotationCandidate make_candidate(double theta, Pose pose, const SelectorConfig& cfg, const SkeletonSchema& schema);

enum class SelectionRule { first_frame, consistency, fallback };

std::string to_string(SelectionRule rule);

struct CandidateScore {
    double theta = 0.0;
    std::optional<double> distance;
    double mean_conf = 0.0;
};

struct SelectionDiagnostics {
    SelectionRule rule = SelectionRule::first_frame;
    std::vector<CandidateScore> candidates;

    bool fallback() const { return rule == SelectionRule::fallback; }
};

/// Sum of joint distances over considered joints detected in both poses, or
/// nullopt when there are none. Throws StructuralError on schema mismatch.
std::optional<double> pose_distance(const Pose& current, const Pose& previous, const SelectorConfig& cfg,
                                    const SkeletonSchema& schema);

/// True when a should be preferred over b on (mean_conf, theta closeness to 0, theta).
bool confidence_precedes(double conf_a, double theta_a, double conf_b, double theta_b);

/// Throws NoCandidateError on an empty list.
const RotationCandidate& select_first_frame(const std::vector<RotationCandidate>& candidates);

struct Selection {
    RotationCandidate chosen;
    SelectionDiagnostics diagnostics;
};

/// Fills distance_to_prev on a copy of each candidate and applies the selection rule.
/// Throws NoCandidateError on an empty list.
Selection select_frame(const std::vector<RotationCandidate>& candidates, const Pose& previous,
                       const SelectorConfig& cfg, const SkeletonSchema& schema);

} // namespace rotpose

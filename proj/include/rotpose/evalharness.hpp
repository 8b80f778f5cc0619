// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

/// \file evalharness.hpp
/// \brief Synthetic motion sequences with ground truth, and accuracy metrics.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rotpose/geometry.hpp"
#include "rotpose/pipeline.hpp"

namespace rotpose {

enum class MotionKind { cartwheel, handstand_hold, upright_walk, custom_keyframes };

std::string to_string(MotionKind k);
MotionKind motion_kind_from_string(const std::string& s);

struct MotionKeyframe {
    double frame = 1.0; ///< 1-based
    double body_angle = 0.0;
    Point2 root;
};

/// Describes a synthetic motion. Body angle uses the forward_map convention, so a
/// frame rotated by (360 - body_angle) mod 360 shows the body upright.
struct MotionScript {
    MotionKind kind = MotionKind::cartwheel;
    std::size_t frames = 90;
    double limb_amplitude = 1.0; ///< scales all limb swing; 0 freezes the limbs
    double scale = 1.0;          ///< figure size multiplier
    std::vector<MotionKeyframe> keyframes; ///< custom_keyframes only, sorted by frame

    /// Body rotation at 1-based frame t for a canvas of the given size.
    double body_angle(std::size_t t) const;
    Point2 root(std::size_t t, ImageSize canvas) const;

    nlohmann::json to_json() const;
    static MotionScript from_json(const nlohmann::json& j);
};

struct GroundTruthFrame {
    std::size_t frame = 1;
    double body_angle = 0.0;
    Point2 root;
    Pose pose;
};

/// Poses a body25 stick figure per the script. Throws UsageError on frames == 0 and
/// GenerationError if any joint leaves the canvas.
std::vector<GroundTruthFrame> generate_sequence(const MotionScript& script, ImageSize canvas, std::uint64_t seed);

/// Pairs of joint indices drawn as bones.
const std::vector<std::pair<std::size_t, std::size_t>>& body25_bones();

/// White stick figure on a black 3-channel canvas.
Raster render_pose(const Pose& pose, ImageSize canvas, int thickness = 3);

/// ground_truth.jsonl: {"frame", "body_angle", "root": [x, y], "pose": wire-person}
void write_ground_truth(const std::filesystem::path& path, const std::vector<GroundTruthFrame>& frames);
std::vector<GroundTruthFrame> read_ground_truth(const std::filesystem::path& path, const SchemaPtr& schema);

struct EvalReport {
    std::size_t frames = 0;
    double mpjpe_augmented = 0.0; ///< px; NaN if nothing was detected
    double mpjpe_raw = 0.0;
    double pck_augmented_010 = 0.0;
    double pck_augmented_020 = 0.0;
    double pck_raw_010 = 0.0;
    double pck_raw_020 = 0.0;
    double mean_conf_augmented = 0.0;
    double mean_conf_raw = 0.0;
    std::size_t estimator_calls_augmented = 0;
    std::size_t estimator_calls_raw = 0;
    std::vector<std::optional<double>> error_augmented; ///< per-frame mean joint error
    std::vector<std::optional<double>> error_raw;
    std::vector<double> conf_augmented;
    std::vector<double> conf_raw;
    std::vector<std::optional<double>> theta;

    nlohmann::json to_json() const;
    /// frame,error_augmented,error_raw,conf_augmented,conf_raw,theta_deg
    std::string to_csv() const;
};

/// Mean per-joint error over all (frame, joint) pairs where the prediction is detected.
double mpjpe(const std::vector<Pose>& predicted, const std::vector<Pose>& ground_truth);

/// Fraction of ground-truth joints predicted within alpha * torso size.
double pck(const std::vector<Pose>& predicted, const std::vector<Pose>& ground_truth, double alpha);

/// MidHip-to-Neck distance, or the bounding-box diagonal of all joints for other schemas.
double torso_size(const Pose& ground_truth);

/// Augmented results are scored on their reconstructed poses, the baseline on its
/// selected poses. Throws UsageError when the three lengths differ.
EvalReport evaluate(const std::vector<FrameResult>& results, const std::vector<Pose>& ground_truth,
                    const std::vector<FrameResult>& baseline);

/// Fisher-Lee circular correlation in [-1, 1] between two angle series (degrees).
double circular_correlation(const std::vector<double>& a_deg, const std::vector<double>& b_deg);

} // namespace rotpose

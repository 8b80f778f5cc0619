// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

/// \file estimator.hpp
/// \brief Pose estimator backends.

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rotpose/geometry.hpp"
#include "rotpose/skeleton.hpp"

namespace rotpose {

/// One input frame as handed to a backend.
struct FrameInput {
    std::size_t index = 1; ///< 1-based position in the sequence
    ImageSize size;
    std::shared_ptr<const Raster> raster;     ///< set when the backend consumes pixels
    std::optional<Pose> ground_truth;         ///< set for synthetic frames
    std::optional<std::filesystem::path> image_path;
};

/// Runs a 2D pose estimator on `frame` as seen after rotating it by `spec`.
/// Returned poses are tagged rotated(spec.theta), one per detected person.
/// Implementations must tolerate concurrent calls for different rotations.
class EstimatorBackend {
public:
    virtual ~EstimatorBackend() = default;

    virtual std::vector<Pose> estimate(const FrameInput& frame, const RotationSpec& spec) const = 0;
    /// True when FrameInput::raster must be populated.
    virtual bool needs_raster() const = 0;
    /// Settings recorded in the run manifest.
    virtual nlohmann::json describe() const = 0;
};

/// Keeps the person with the highest mean confidence (first one on ties).
std::optional<Pose> reduce_to_single_person(const std::vector<Pose>& people, double floor, bool exclude_head,
                                            const SkeletonSchema& schema);

// ---------------------------------------------------------------------------
// External command adapter

/// Fills {input} and {output} in the template with shell-quoted paths.
std::string expand_adapter_command(const std::string& command_template, const std::filesystem::path& input,
                                   const std::filesystem::path& output);

/// Runs the adapter on one image and parses the wire JSON it writes to `output_path`.
/// Throws BackendError (with stderr) on nonzero exit, TimeoutError, or ProtocolError
/// for a missing or unparsable output file.
std::vector<Pose> external_estimate(const std::filesystem::path& frame_image_path, const std::string& adapter_cmd,
                                    const std::filesystem::path& output_path, const SchemaPtr& schema,
                                    std::chrono::milliseconds timeout = std::chrono::seconds(120),
                                    CoordinateFrame frame = CoordinateFrame::original());

struct ExternalAdapterConfig {
    std::string command_template;
    std::chrono::milliseconds timeout = std::chrono::seconds(120);
    int max_parallel = 0; ///< 0 = logical CPU count
    std::filesystem::path work_dir;
    bool keep_intermediates = false;
    std::string image_extension = ".png";
};

/// Materializes each rotated frame as an image file and hands it to an external command.
class ExternalBackend final : public EstimatorBackend {
public:
    ExternalBackend(ExternalAdapterConfig config, SchemaPtr schema);

    std::vector<Pose> estimate(const FrameInput& frame, const RotationSpec& spec) const override;
    bool needs_raster() const override { return true; }
    nlohmann::json describe() const override;

private:
    ExternalAdapterConfig config_;
    SchemaPtr schema_;
    std::unique_ptr<std::counting_semaphore<>> slots_;
};

// ---------------------------------------------------------------------------
// Synthetic orientation-sensitive estimator

/// Accuracy degrades linearly with |delta|, the angle between the body's
/// apparent up direction and image up.
struct SyntheticEstimatorModel {
    double c_max = 0.9;
    double c_min = 0.2;
    double sigma0 = 2.0;            ///< px noise when upright
    double sigma1 = 12.0;           ///< extra px noise when inverted
    double dropout_slope = 0.5;     ///< dropout probability at |delta| = 180
    double confidence_jitter = 0.02; ///< std of the additive confidence noise
    std::uint64_t rng_seed = 1;

    /// Throws UsageError on violated bounds.
    void validate() const;
    nlohmann::json to_json() const;
    static SyntheticEstimatorModel from_json(const nlohmann::json& j);
};

/// Signed angle (-180, 180] from image up to the vector from `root` to `top` joint.
/// Returns nullopt if either joint is undetected or they coincide.
std::optional<double> body_deviation(const Pose& pose, std::size_t root, std::size_t top);

/// Simulates the estimator on a ground-truth pose already placed in the presented
/// (rotated) frame. Always returns exactly one person. Deterministic in
/// (model.rng_seed, frame_index, theta).
std::vector<Pose> synthetic_estimate(const Pose& gt_in_view, double body_deviation_deg,
                                     const SyntheticEstimatorModel& model, std::size_t frame_index, double theta);

/// Backend over synthetic frames: rotates FrameInput::ground_truth and runs synthetic_estimate.
class SyntheticBackend final : public EstimatorBackend {
public:
    /// Body "up" runs from MidHip to Neck; throws SchemaError if the schema lacks them.
    SyntheticBackend(SyntheticEstimatorModel model, SchemaPtr schema);
    SyntheticBackend(SyntheticEstimatorModel model, SchemaPtr schema, std::size_t root_joint, std::size_t top_joint);

    std::vector<Pose> estimate(const FrameInput& frame, const RotationSpec& spec) const override;
    bool needs_raster() const override { return false; }
    nlohmann::json describe() const override;

    const SyntheticEstimatorModel& model() const { return model_; }

private:
    SyntheticEstimatorModel model_;
    SchemaPtr schema_;
    std::size_t root_;
    std::size_t top_;
};

} // namespace rotpose

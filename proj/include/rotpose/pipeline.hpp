// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

/// \file pipeline.hpp
/// \brief Per-frame rotation fan-out, selection and reconstruction over a sequence.

#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rotpose/error.hpp"
#include "rotpose/estimator.hpp"
#include "rotpose/geometry.hpp"
#include "rotpose/reconstructor.hpp"
#include "rotpose/selector.hpp"

namespace rotpose {

inline constexpr int kDefaultAngleStep = 10;

struct PipelineConfig {
    int step_deg = kDefaultAngleStep;
    SelectorConfig selector;
    double w = kDefaultBlendWeight;
    bool coasting = true;
    std::optional<double> angle_window; ///< half-width in degrees; nullopt = full grid every frame
    int parallelism = 0;                ///< max concurrent estimator calls; 0 = logical CPU count
    bool keep_going = false;            ///< treat frames where every rotation failed as empty

    /// Throws UsageError on any violated invariant.
    void validate() const;
    nlohmann::json to_json() const;
    static PipelineConfig from_json(const nlohmann::json& j);
};

/// Rotations evaluated for frame t (1-based): the full grid, or the grid angles within
/// angle_window of prev_theta, ordered by signed offset from prev_theta.
std::vector<double> angle_set_for_frame(std::size_t t, std::optional<double> prev_theta, const PipelineConfig& cfg);

struct FrameResult {
    /// Empty result: no selection, all joints undetected.
    FrameResult(std::size_t index, const SchemaPtr& schema)
        : frame_index(index), selected_pose(schema), reconstructed_pose(schema)
    {
    }

    std::size_t frame_index = 0;
    std::optional<double> selected_theta; ///< empty when no rotation produced a person
    Pose selected_pose;
    Pose reconstructed_pose;
    double mean_conf_selected = 0.0;
    std::optional<double> mean_conf_theta0; ///< empty when theta = 0 was not evaluated
    std::optional<SelectionRule> rule;
    std::size_t estimator_calls = 0;
    std::size_t estimator_failures = 0;
    std::vector<CandidateScore> candidates;

    bool fallback_fired() const { return rule == SelectionRule::fallback; }
};

/// One poses.jsonl record.
nlohmann::json frame_result_to_json(const FrameResult& r);
FrameResult frame_result_from_json(const nlohmann::json& j, const SchemaPtr& schema);

/// Sequence of frames, loaded on demand.
class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual std::size_t count() const = 0;
    /// Frame at 0-based position i; FrameInput::index is i + 1.
    virtual FrameInput frame(std::size_t i, bool with_raster) const = 0;
    virtual nlohmann::json describe() const = 0;
};

/// Ordered image files.
class ImageListSource final : public FrameSource {
public:
    explicit ImageListSource(std::vector<std::filesystem::path> paths);
    /// A directory (image files sorted by name) or a text file with one path per line.
    static ImageListSource from_path(const std::filesystem::path& dir_or_list);

    std::size_t count() const override { return paths_.size(); }
    FrameInput frame(std::size_t i, bool with_raster) const override;
    nlohmann::json describe() const override;

private:
    std::vector<std::filesystem::path> paths_;
};

/// Frames that exist only as ground-truth poses (for the synthetic backend).
class PoseListSource final : public FrameSource {
public:
    PoseListSource(std::vector<Pose> ground_truth, ImageSize canvas);

    std::size_t count() const override { return poses_.size(); }
    FrameInput frame(std::size_t i, bool with_raster) const override;
    nlohmann::json describe() const override;

private:
    std::vector<Pose> poses_;
    ImageSize canvas_;
};

/// Error raised when every rotation of a frame failed in the backend.
class FrameError : public BackendError {
public:
    using BackendError::BackendError;
};

/// Stateful per-sequence processor.
class Pipeline {
public:
    Pipeline(PipelineConfig cfg, const EstimatorBackend& backend, SchemaPtr schema);

    /// Frames must be fed in order.
    FrameResult process_frame(const FrameInput& frame);

    const PipelineConfig& config() const { return cfg_; }
    std::optional<double> previous_theta() const { return prev_theta_; }

private:
    PipelineConfig cfg_;
    const EstimatorBackend& backend_;
    SchemaPtr schema_;
    Reconstructor reconstructor_;
    std::optional<double> prev_theta_;
    int workers_;
};

struct RunSummary {
    std::vector<FrameResult> frames;
    std::size_t total_estimator_calls = 0;
    double wall_seconds = 0.0;
};

/// Processes every frame and, if output_dir is non-empty, writes poses.jsonl,
/// confidence.csv, theta.csv and run_manifest.json there. `manifest_extra` is
/// merged into the manifest (e.g. the fully resolved CLI configuration).
RunSummary run_sequence(const FrameSource& frames, const PipelineConfig& cfg, const EstimatorBackend& backend,
                        const SchemaPtr& schema, const std::filesystem::path& output_dir,
                        const nlohmann::json& manifest_extra = nlohmann::json::object());

/// Loads frame results from a run directory (poses.jsonl) or a .jsonl file. Lines with a
/// "pose" key (ground_truth.jsonl) are read as results whose selected and reconstructed
/// poses both equal that pose.
std::vector<FrameResult> load_frame_results(const std::filesystem::path& run_dir_or_file, const SchemaPtr& schema);

std::string version_string();

} // namespace rotpose

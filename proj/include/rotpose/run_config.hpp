// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

/// \file run_config.hpp
/// \brief Fully resolved settings for one `rotpose run` invocation.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "rotpose/estimator.hpp"
#include "rotpose/evalharness.hpp"
#include "rotpose/pipeline.hpp"

namespace rotpose {

struct RunConfig {
    PipelineConfig pipeline;

    std::string backend = "synthetic"; ///< "synthetic" | "external"
    SyntheticEstimatorModel synthetic;
    std::string adapter_cmd;
    double timeout_s = 120.0;
    bool keep_intermediates = false;

    std::optional<std::filesystem::path> frames;       ///< image dir or list file
    std::optional<std::string> script;                 ///< synthetic motion kind
    std::size_t frames_count = 90;
    std::optional<std::filesystem::path> ground_truth; ///< ground_truth.jsonl for the synthetic backend
    std::optional<std::filesystem::path> keyframes;    ///< custom_keyframes script file
    double limb_amplitude = 1.0;
    ImageSize canvas{640, 480};
    std::uint64_t seed = 1;
    std::optional<std::filesystem::path> schema;
    std::filesystem::path out = "rotpose_out";

    /// Throws UsageError on inconsistent or invalid settings.
    void validate() const;
    nlohmann::json to_json() const;
    /// Accepts a bare config object or a run_manifest.json (reads its "config" key).
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::filesystem::path& path);
};

SchemaPtr resolve_schema(const RunConfig& cfg);

std::unique_ptr<EstimatorBackend> make_backend(const RunConfig& cfg, const SchemaPtr& schema);

std::unique_ptr<FrameSource> make_frame_source(const RunConfig& cfg, const SchemaPtr& schema);

/// Builds the backend and frames, runs the pipeline and writes artifacts to cfg.out.
RunSummary execute_run(const RunConfig& cfg);

} // namespace rotpose

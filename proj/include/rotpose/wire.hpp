// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

/// \file wire.hpp
/// \brief The estimator wire format.
///
///     { "people": [ { "pose_keypoints_2d": [x0, y0, c0, x1, y1, c1, ...] }, ... ] }
///
/// Each person is a flat array of 3K numbers in joint-index order. Extra keys
/// (OpenPose writes "version", "face_keypoints_2d", ...) are ignored on input.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rotpose/skeleton.hpp"

namespace rotpose {

/// Flat [x, y, c]*K array for one pose.
nlohmann::json pose_to_wire(const Pose& pose);

/// Inverse of pose_to_wire; the resulting pose is tagged with `frame`.
/// Throws SchemaError on a length mismatch or an out-of-range confidence.
Pose pose_from_wire(const nlohmann::json& flat, const SchemaPtr& schema, CoordinateFrame frame = CoordinateFrame::original());

/// Throws ParseError on malformed JSON, SchemaError (naming the person index) on layout errors.
std::vector<Pose> parse_wire_poses(std::string_view document, const SchemaPtr& schema,
                                   CoordinateFrame frame = CoordinateFrame::original());

std::string serialize_wire_poses(const std::vector<Pose>& people);

} // namespace rotpose

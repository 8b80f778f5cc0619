// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "rotpose/wire.hpp"

#include <cmath>

#include <fmt/format.h>

#include "rotpose/error.hpp"

namespace rotpose {

nlohmann::json pose_to_wire(const Pose& pose)
{
    auto flat = nlohmann::json::array();
    for (const auto& kp : pose.keypoints()) {
        flat.push_back(kp.x);
        flat.push_back(kp.y);
        flat.push_back(kp.confidence);
    }
    return flat;
}

Pose pose_from_wire(const nlohmann::json& flat, const SchemaPtr& schema, CoordinateFrame frame)
{
    const std::size_t k_count = schema->joint_count();
    if (!flat.is_array())
        throw SchemaError("pose_keypoints_2d is not an array");
    if (flat.size() != 3 * k_count)
        throw SchemaError(fmt::format("pose_keypoints_2d has {} values, expected {} (3 x {} joints)", flat.size(),
                                      3 * k_count, k_count));
    std::vector<Keypoint> keypoints(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
        const auto& x = flat[3 * k];
        const auto& y = flat[3 * k + 1];
        const auto& c = flat[3 * k + 2];
        if (!x.is_number() || !y.is_number() || !c.is_number())
            throw SchemaError(fmt::format("joint {} has a non-numeric value", k));
        keypoints[k] = {x.get<double>(), y.get<double>(), c.get<double>()};
        const double conf = keypoints[k].confidence;
        if (!(conf >= 0.0 && conf <= 1.0))
            throw SchemaError(fmt::format("joint {} confidence {} outside [0, 1]", k, conf));
    }
    return Pose(schema, std::move(keypoints), frame);
}

std::vector<Pose> parse_wire_poses(std::string_view document, const SchemaPtr& schema, CoordinateFrame frame)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(document.begin(), document.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(fmt::format("malformed pose document: {}", e.what()));
    }
    if (!doc.is_object() || !doc.contains("people") || !doc["people"].is_array())
        throw SchemaError("pose document has no \"people\" array");

    std::vector<Pose> people;
    const auto& arr = doc["people"];
    for (std::size_t i = 0; i < arr.size(); ++i) {
        try {
            if (!arr[i].is_object() || !arr[i].contains("pose_keypoints_2d"))
                throw SchemaError("missing pose_keypoints_2d");
            people.push_back(pose_from_wire(arr[i]["pose_keypoints_2d"], schema, frame));
        } catch (const SchemaError& e) {
            throw SchemaError(fmt::format("person {}: {}", i, e.what()));
        }
    }
    return people;
}

std::string serialize_wire_poses(const std::vector<Pose>& people)
{
    nlohmann::json doc;
    doc["people"] = nlohmann::json::array();
    for (const auto& pose : people)
        doc["people"].push_back({{"pose_keypoints_2d", pose_to_wire(pose)}});
    return doc.dump();
}

} // namespace rotpose

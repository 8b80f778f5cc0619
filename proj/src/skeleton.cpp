// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "rotpose/skeleton.hpp"

#include <cmath>
#include <fstream>
#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "rotpose/error.hpp"

namespace rotpose {

SkeletonSchema::SkeletonSchema(std::string name, std::vector<std::string> joint_names, std::set<std::size_t> head_joints)
    : name_(std::move(name)), joint_names_(std::move(joint_names)), head_joints_(std::move(head_joints))
{
    if (joint_names_.empty())
        throw SchemaError(fmt::format("schema '{}' has no joints", name_));
    std::unordered_set<std::string> seen;
    for (const auto& joint : joint_names_) {
        if (!seen.insert(joint).second)
            throw SchemaError(fmt::format("schema '{}': duplicate joint name '{}'", name_, joint));
    }
    for (auto k : head_joints_) {
        if (k >= joint_names_.size())
            throw SchemaError(fmt::format("schema '{}': head joint index {} out of range", name_, k));
    }
    if (head_joints_.size() >= joint_names_.size())
        throw SchemaError(fmt::format("schema '{}': head joints leave no body joint", name_));
}

std::optional<std::size_t> SkeletonSchema::index_of(std::string_view joint_name) const
{
    for (std::size_t k = 0; k < joint_names_.size(); ++k) {
        if (joint_names_[k] == joint_name)
            return k;
    }
    return std::nullopt;
}

SkeletonSchema SkeletonSchema::from_json(const nlohmann::json& doc)
{
    try {
        auto name = doc.at("name").get<std::string>();
        auto joints = doc.at("joints").get<std::vector<std::string>>();
        std::set<std::size_t> head;
        if (doc.contains("head_joints")) {
            for (const auto& v : doc.at("head_joints")) {
                auto idx = v.get<long long>();
                if (idx < 0)
                    throw SchemaError(fmt::format("schema '{}': negative head joint index {}", name, idx));
                head.insert(static_cast<std::size_t>(idx));
            }
        }
        return SkeletonSchema(std::move(name), std::move(joints), std::move(head));
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(fmt::format("invalid schema document: {}", e.what()));
    }
}

nlohmann::json SkeletonSchema::to_json() const
{
    return {{"name", name_}, {"joints", joint_names_}, {"head_joints", head_joints_}};
}

SchemaPtr body25_schema()
{
    static const SchemaPtr schema = std::make_shared<const SkeletonSchema>(
        "body25",
        std::vector<std::string>{"Nose",     "Neck",      "RShoulder", "RElbow",    "RWrist", "LShoulder", "LElbow",
                                 "LWrist",   "MidHip",    "RHip",      "RKnee",     "RAnkle", "LHip",      "LKnee",
                                 "LAnkle",   "REye",      "LEye",      "REar",      "LEar",   "LBigToe",   "LSmallToe",
                                 "LHeel",    "RBigToe",   "RSmallToe", "RHeel"},
        std::set<std::size_t>{0, 15, 16, 17, 18});
    return schema;
}

SchemaPtr load_schema(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError(fmt::format("cannot open schema file '{}'", path));
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(fmt::format("'{}': {}", path, e.what()));
    }
    return std::make_shared<const SkeletonSchema>(SkeletonSchema::from_json(doc));
}

double distance(Point2 a, Point2 b)
{
    return std::hypot(a.x - b.x, a.y - b.y);
}

Pose::Pose(SchemaPtr schema) : schema_(std::move(schema))
{
    if (!schema_)
        throw StructuralError("pose requires a schema");
    keypoints_.resize(schema_->joint_count());
}

Pose::Pose(SchemaPtr schema, std::vector<Keypoint> keypoints, CoordinateFrame frame)
    : schema_(std::move(schema)), keypoints_(std::move(keypoints)), frame_(frame)
{
    if (!schema_)
        throw StructuralError("pose requires a schema");
    if (keypoints_.size() != schema_->joint_count())
        throw StructuralError(fmt::format("pose has {} keypoints, schema '{}' expects {}", keypoints_.size(),
                                          schema_->name(), schema_->joint_count()));
}

bool Pose::matches(const SkeletonSchema& schema) const
{
    return schema_.get() == &schema || *schema_ == schema;
}

bool operator==(const Pose& a, const Pose& b)
{
    return a.matches(*b.schema_) && a.frame_ == b.frame_ && a.keypoints_ == b.keypoints_;
}

void require_schema(const Pose& pose, const SkeletonSchema& schema)
{
    if (!pose.matches(schema))
        throw StructuralError(fmt::format("pose uses schema '{}' but '{}' was expected", pose.schema()->name(),
                                          schema.name()));
}

std::set<std::size_t> valid_joint_mask(const Pose& pose, double floor)
{
    std::set<std::size_t> mask;
    for (std::size_t k = 0; k < pose.size(); ++k) {
        if (pose[k].confidence > floor)
            mask.insert(k);
    }
    return mask;
}

double mean_confidence(const Pose& pose, double floor, bool exclude_head, const SkeletonSchema& schema)
{
    require_schema(pose, schema);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < pose.size(); ++k) {
        if (exclude_head && schema.is_head(k))
            continue;
        if (pose[k].confidence > floor) {
            sum += pose[k].confidence;
            ++n;
        }
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

} // namespace rotpose

// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

/// \file skeleton.hpp
/// \brief Joint schema, keypoints, poses and confidence statistics.

#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace rotpose {

/// Confidence at or below which a joint does not take part in selection.
inline constexpr double kDefaultConfidenceFloor = 0.05;

/// Ordered joint names plus the subset treated as "head" joints.
class SkeletonSchema {
public:
    /// Throws SchemaError when names repeat, a head index is out of range,
    /// or the head set would leave no body joint.
    SkeletonSchema(std::string name, std::vector<std::string> joint_names, std::set<std::size_t> head_joints);

    const std::string& name() const { return name_; }
    const std::vector<std::string>& joint_names() const { return joint_names_; }
    const std::set<std::size_t>& head_joints() const { return head_joints_; }
    std::size_t joint_count() const { return joint_names_.size(); }
    bool is_head(std::size_t joint) const { return head_joints_.count(joint) != 0; }

    /// Index of a joint by name, if present.
    std::optional<std::size_t> index_of(std::string_view joint_name) const;

    /// { "name": str, "joints": [str...], "head_joints": [int...] }
    static SkeletonSchema from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;

    friend bool operator==(const SkeletonSchema&, const SkeletonSchema&) = default;

private:
    std::string name_;
    std::vector<std::string> joint_names_;
    std::set<std::size_t> head_joints_;
};

using SchemaPtr = std::shared_ptr<const SkeletonSchema>;

/// The 25-joint body layout; head = nose, eyes, ears.
SchemaPtr body25_schema();

/// Loads a schema document from disk.
SchemaPtr load_schema(const std::string& path);

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
    friend bool operator==(Point2, Point2) = default;
};

double distance(Point2 a, Point2 b);

/// One joint. confidence == 0 means "not detected"; x/y are then meaningless.
struct Keypoint {
    double x = 0.0;
    double y = 0.0;
    double confidence = 0.0;

    Point2 position() const { return {x, y}; }
    bool detected() const { return confidence > 0.0; }
    friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

/// Coordinate frame a pose lives in: the original image or a canvas rotated by theta degrees.
class CoordinateFrame {
public:
    static CoordinateFrame original() { return CoordinateFrame{}; }
    static CoordinateFrame rotated(double theta_deg) { return CoordinateFrame{theta_deg}; }

    bool is_original() const { return !theta_.has_value(); }
    /// Rotation angle; only meaningful for rotated frames.
    double theta() const { return theta_.value_or(0.0); }

    friend bool operator==(const CoordinateFrame&, const CoordinateFrame&) = default;

private:
    CoordinateFrame() = default;
    explicit CoordinateFrame(double theta) : theta_(theta) {}
    std::optional<double> theta_;
};

/// Single-person pose: exactly one keypoint per schema joint.
class Pose {
public:
    /// All joints undetected, original frame.
    explicit Pose(SchemaPtr schema);
    /// Throws StructuralError if keypoints.size() != schema joint count.
    Pose(SchemaPtr schema, std::vector<Keypoint> keypoints, CoordinateFrame frame = CoordinateFrame::original());

    const SchemaPtr& schema() const { return schema_; }
    const std::vector<Keypoint>& keypoints() const { return keypoints_; }
    std::vector<Keypoint>& keypoints() { return keypoints_; }
    const Keypoint& operator[](std::size_t k) const { return keypoints_[k]; }
    Keypoint& operator[](std::size_t k) { return keypoints_[k]; }
    std::size_t size() const { return keypoints_.size(); }

    const CoordinateFrame& frame() const { return frame_; }
    void set_frame(CoordinateFrame frame) { frame_ = frame; }

    bool matches(const SkeletonSchema& schema) const;

    friend bool operator==(const Pose& a, const Pose& b);

private:
    SchemaPtr schema_;
    std::vector<Keypoint> keypoints_;
    CoordinateFrame frame_ = CoordinateFrame::original();
};

/// Throws StructuralError unless pose is laid out for schema.
void require_schema(const Pose& pose, const SkeletonSchema& schema);

/// { k : confidence_k > floor }
std::set<std::size_t> valid_joint_mask(const Pose& pose, double floor);

/// Mean confidence over joints with confidence > floor (head joints skipped when
/// exclude_head is set). Returns 0 when no joint qualifies.
double mean_confidence(const Pose& pose, double floor, bool exclude_head, const SkeletonSchema& schema);

} // namespace rotpose

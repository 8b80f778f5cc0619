// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "rotpose/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "rotpose/error.hpp"

namespace rotpose {

double wrap_degrees(double deg)
{
    double r = std::fmod(deg, 360.0);
    if (r < 0.0)
        r += 360.0;
    // fmod of a tiny negative value can round up to exactly 360
    return r >= 360.0 ? 0.0 : r;
}

double wrap_signed_degrees(double deg)
{
    double r = wrap_degrees(deg);
    return r > 180.0 ? r - 360.0 : r;
}

double circular_distance(double a_deg, double b_deg)
{
    return std::abs(wrap_signed_degrees(a_deg - b_deg));
}

namespace {

// Returns the quarter-turn index when deg is a multiple of 90, else -1.
int quarter_turn(double deg)
{
    double w = wrap_degrees(deg);
    double q = w / 90.0;
    double r = std::round(q);
    if (q == r)
        return static_cast<int>(r) % 4;
    return -1;
}

} // namespace

double cos_deg(double deg)
{
    switch (quarter_turn(deg)) {
    case 0: return 1.0;
    case 1: return 0.0;
    case 2: return -1.0;
    case 3: return 0.0;
    default: return std::cos(wrap_degrees(deg) * std::numbers::pi / 180.0);
    }
}

double sin_deg(double deg)
{
    switch (quarter_turn(deg)) {
    case 0: return 0.0;
    case 1: return 1.0;
    case 2: return 0.0;
    case 3: return -1.0;
    default: return std::sin(wrap_degrees(deg) * std::numbers::pi / 180.0);
    }
}

RotationSpec RotationSpec::make(double theta_deg, ImageSize source)
{
    if (source.width <= 0 || source.height <= 0)
        throw StructuralError(fmt::format("invalid source size {}x{}", source.width, source.height));
    RotationSpec spec;
    spec.theta = wrap_degrees(theta_deg);
    spec.source = source;
    const double c = std::abs(cos_deg(spec.theta));
    const double s = std::abs(sin_deg(spec.theta));
    const double w = source.width;
    const double h = source.height;
    // The epsilon keeps w*c + h*s from rounding a hair above an integer.
    spec.canvas.width = static_cast<int>(std::ceil(w * c + h * s - 1e-9));
    spec.canvas.height = static_cast<int>(std::ceil(w * s + h * c - 1e-9));
    spec.center_src = {(w - 1.0) / 2.0, (h - 1.0) / 2.0};
    spec.center_dst = {(spec.canvas.width - 1.0) / 2.0, (spec.canvas.height - 1.0) / 2.0};
    return spec;
}

AngleGrid::AngleGrid(int step_deg) : step_(step_deg)
{
    if (step_deg <= 0 || step_deg > 360 || 360 % step_deg != 0)
        throw UsageError(fmt::format("angle step {} does not divide 360", step_deg));
    for (int a = 0; a < 360; a += step_deg)
        angles_.push_back(static_cast<double>(a));
}

Point2 forward_map(Point2 p, const RotationSpec& spec)
{
    if (spec.theta == 0.0)
        return p + (spec.center_dst - spec.center_src);
    const double c = cos_deg(spec.theta);
    const double s = sin_deg(spec.theta);
    const Point2 d = p - spec.center_src;
    return Point2{c * d.x - s * d.y, s * d.x + c * d.y} + spec.center_dst;
}

Point2 inverse_map(Point2 p, const RotationSpec& spec)
{
    if (spec.theta == 0.0)
        return p + (spec.center_src - spec.center_dst);
    const double c = cos_deg(spec.theta);
    const double s = sin_deg(spec.theta);
    const Point2 d = p - spec.center_dst;
    // R(-theta) = R(theta)^T
    return Point2{c * d.x + s * d.y, -s * d.x + c * d.y} + spec.center_src;
}

Pose rotate_pose(const Pose& pose, const RotationSpec& spec)
{
    if (!pose.frame().is_original())
        throw StructuralError("rotate_pose expects a pose in the original frame");
    Pose out = pose;
    for (auto& kp : out.keypoints()) {
        if (!kp.detected())
            continue;
        const Point2 q = forward_map(kp.position(), spec);
        kp.x = q.x;
        kp.y = q.y;
    }
    out.set_frame(CoordinateFrame::rotated(spec.theta));
    return out;
}

Pose unrotate_pose(const Pose& pose, const RotationSpec& spec)
{
    if (pose.frame().is_original() || wrap_degrees(pose.frame().theta()) != spec.theta) {
        throw StructuralError(fmt::format("unrotate_pose: pose frame {} does not match rotation {}",
                                          pose.frame().is_original() ? std::string("original")
                                                                     : fmt::format("rotated({})", pose.frame().theta()),
                                          spec.theta));
    }
    Pose out = pose;
    for (auto& kp : out.keypoints()) {
        if (!kp.detected())
            continue;
        const Point2 p = inverse_map(kp.position(), spec);
        kp.x = p.x;
        kp.y = p.y;
    }
    out.set_frame(CoordinateFrame::original());
    return out;
}

Raster::Raster(int w, int h, int c, std::uint8_t fill)
    : width(w), height(h), channels(c), data(static_cast<std::size_t>(std::max(w, 0)) * std::max(h, 0) * c, fill)
{
}

Raster rotate_raster(const Raster& image, const RotationSpec& spec)
{
    if (image.empty() || image.channels <= 0)
        throw StructuralError(fmt::format("cannot rotate a {}x{} raster", image.width, image.height));
    if (image.size() != spec.source)
        throw StructuralError(fmt::format("raster is {}x{} but rotation spec expects {}x{}", image.width,
                                          image.height, spec.source.width, spec.source.height));

    Raster out(spec.canvas.width, spec.canvas.height, image.channels, 0);
    const int channels = image.channels;
    auto sample = [&](int x, int y, int c) -> double {
        if (x < 0 || y < 0 || x >= image.width || y >= image.height)
            return 0.0;
        return image.at(x, y, c);
    };

    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            const Point2 src = inverse_map({static_cast<double>(x), static_cast<double>(y)}, spec);
            if (src.x <= -1.0 || src.y <= -1.0 || src.x >= image.width || src.y >= image.height)
                continue;
            const int x0 = static_cast<int>(std::floor(src.x));
            const int y0 = static_cast<int>(std::floor(src.y));
            const double fx = src.x - x0;
            const double fy = src.y - y0;
            for (int c = 0; c < channels; ++c) {
                const double top = (1.0 - fx) * sample(x0, y0, c) + fx * sample(x0 + 1, y0, c);
                const double bottom = (1.0 - fx) * sample(x0, y0 + 1, c) + fx * sample(x0 + 1, y0 + 1, c);
                const double v = (1.0 - fy) * top + fy * bottom;
                out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        }
    }
    return out;
}

} // namespace rotpose

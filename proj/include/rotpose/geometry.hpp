// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

/// \file geometry.hpp
/// \brief Mapping between the original image and rotated, expanded canvases.
///
/// A rotation by theta is applied about the source image center and the result is
/// placed centered on a canvas just large enough to hold the whole rotated image:
///
///     p' = R(theta) * (p - center_src) + center_dst
///     R(theta) = [[cos, -sin], [sin, cos]]
///
/// R acts on raw pixel coordinates (x right, y down), so a positive theta turns
/// content clockwise as seen on screen and counter-clockwise in y-up math axes.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rotpose/skeleton.hpp"

namespace rotpose {

/// Wraps an angle in degrees into [0, 360).
double wrap_degrees(double deg);

/// Wraps an angle in degrees into (-180, 180].
double wrap_signed_degrees(double deg);

/// Shortest angular distance in [0, 180].
double circular_distance(double a_deg, double b_deg);

/// cos/sin of an angle in degrees; exact at multiples of 90.
double cos_deg(double deg);
double sin_deg(double deg);

struct ImageSize {
    int width = 0;
    int height = 0;
    friend bool operator==(ImageSize, ImageSize) = default;
};

struct RotationSpec {
    double theta = 0.0; ///< degrees in [0, 360)
    ImageSize source;
    ImageSize canvas;
    Point2 center_src;
    Point2 center_dst;

    /// Builds the spec for rotating a width x height image by theta degrees.
    static RotationSpec make(double theta_deg, ImageSize source);
};

/// Rotation angles [0, d, 2d, ..., 360 - d].
class AngleGrid {
public:
    /// Throws UsageError unless d > 0 is an integer number of degrees dividing 360.
    explicit AngleGrid(int step_deg);

    int step() const { return step_; }
    const std::vector<double>& angles() const { return angles_; }
    std::size_t size() const { return angles_.size(); }

private:
    int step_;
    std::vector<double> angles_;
};

Point2 forward_map(Point2 p, const RotationSpec& spec);
Point2 inverse_map(Point2 p, const RotationSpec& spec);

/// Maps an original-frame pose onto the rotated canvas. Undetected joints are left untouched.
Pose rotate_pose(const Pose& pose, const RotationSpec& spec);

/// Maps a pose predicted on the rotated canvas back to original coordinates.
/// Throws StructuralError if the pose is not tagged rotated(spec.theta).
Pose unrotate_pose(const Pose& pose, const RotationSpec& spec);

/// Interleaved 8-bit raster, row-major.
struct Raster {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> data;

    Raster() = default;
    Raster(int w, int h, int c, std::uint8_t fill = 0);

    bool empty() const { return width <= 0 || height <= 0; }
    ImageSize size() const { return {width, height}; }
    std::uint8_t& at(int x, int y, int c = 0) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    std::uint8_t at(int x, int y, int c = 0) const
    {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    friend bool operator==(const Raster&, const Raster&) = default;
};

/// Rotates image content onto spec.canvas with bilinear resampling. Samples that fall
/// outside the source read as black. Throws StructuralError on an empty image or
/// when the image size differs from spec.source.
Raster rotate_raster(const Raster& image, const RotationSpec& spec);

} // namespace rotpose

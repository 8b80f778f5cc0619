// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "rotpose/skeleton.hpp"

namespace rotpose {

inline constexpr double kDefaultBlendWeight = 0.8;

/// Exponential blend of the selected pose with the previous reconstruction:
///     out = w * selected + (1 - w) * previous
/// Joints seen only in the previous pose "coast" with confidence scaled by (1 - w)
/// unless coasting is disabled, in which case they stay undetected.
class Reconstructor {
public:
    /// Throws UsageError unless 0 < w <= 1.
    explicit Reconstructor(double w = kDefaultBlendWeight, bool coasting = true);

    /// Blends `selected` into the state and returns the new reconstruction.
    /// Throws StructuralError if selected is not in the original frame or its
    /// schema differs from the previous pose.
    const Pose& reconstruct(const Pose& selected);

    const std::optional<Pose>& previous() const { return previous_; }
    double weight() const { return w_; }
    bool coasting() const { return coasting_; }
    void reset() { previous_.reset(); }

private:
    double w_;
    bool coasting_;
    std::optional<Pose> previous_;
};

} // namespace rotpose

// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "rotpose/reconstructor.hpp"

#include <fmt/format.h>

#include "rotpose/error.hpp"

namespace rotpose {

Reconstructor::Reconstructor(double w, bool coasting) : w_(w), coasting_(coasting)
{
    if (!(w > 0.0 && w <= 1.0))
        throw UsageError(fmt::format("blend weight must lie in (0, 1] (got {})", w));
}

const Pose& Reconstructor::reconstruct(const Pose& selected)
{
    if (!selected.frame().is_original())
        throw StructuralError("reconstruct expects a pose in the original frame");
    if (!previous_) {
        previous_ = selected;
        return *previous_;
    }
    require_schema(selected, *previous_->schema());

    Pose out = selected;
    for (std::size_t k = 0; k < out.size(); ++k) {
        const Keypoint& cur = selected[k];
        const Keypoint& prev = (*previous_)[k];
        Keypoint& dst = out[k];
        if (cur.detected() && prev.detected()) {
            dst.x = w_ * cur.x + (1.0 - w_) * prev.x;
            dst.y = w_ * cur.y + (1.0 - w_) * prev.y;
            dst.confidence = cur.confidence;
        } else if (!cur.detected() && prev.detected() && coasting_) {
            dst = prev;
            dst.confidence = prev.confidence * (1.0 - w_);
        } else if (!cur.detected()) {
            dst = Keypoint{};
        }
    }
    previous_ = std::move(out);
    return *previous_;
}

} // namespace rotpose

// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "rotpose/geometry.hpp"

namespace rotpose {

/// Reads any format OpenCV can decode; throws IoError on failure.
Raster read_image(const std::filesystem::path& path);

/// Format follows the file extension; throws IoError on failure.
void write_image(const std::filesystem::path& path, const Raster& image);

} // namespace rotpose

// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "rotpose/image_io.hpp"

#include <cstring>

#include <fmt/format.h>
#include <opencv2/imgcodecs.hpp>

#include "rotpose/error.hpp"

namespace rotpose {

Raster read_image(const std::filesystem::path& path)
{
    cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (mat.empty())
        throw IoError(fmt::format("cannot read image '{}'", path.string()));
    if (mat.depth() != CV_8U)
        throw IoError(fmt::format("'{}': only 8-bit images are supported", path.string()));
    Raster out(mat.cols, mat.rows, mat.channels());
    const std::size_t row_bytes = static_cast<std::size_t>(mat.cols) * mat.channels();
    for (int y = 0; y < mat.rows; ++y)
        std::memcpy(&out.data[y * row_bytes], mat.ptr(y), row_bytes);
    return out;
}

void write_image(const std::filesystem::path& path, const Raster& image)
{
    if (image.empty())
        throw IoError(fmt::format("refusing to write empty image to '{}'", path.string()));
    cv::Mat mat(image.height, image.width, CV_MAKETYPE(CV_8U, image.channels),
                const_cast<std::uint8_t*>(image.data.data()));
    bool ok = false;
    try {
        ok = cv::imwrite(path.string(), mat);
    } catch (const cv::Exception& e) {
        throw IoError(fmt::format("cannot write image '{}': {}", path.string(), e.what()));
    }
    if (!ok)
        throw IoError(fmt::format("cannot write image '{}'", path.string()));
}

} // namespace rotpose

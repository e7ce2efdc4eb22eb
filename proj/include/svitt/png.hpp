// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace svitt::png {

struct Image {
    std::size_t width = 0, height = 0;
    std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel
};

// 8-bit RGB only.
void write_rgb(const std::string& path, const Image& img);
Image read_rgb(const std::string& path);

}  // namespace svitt::png

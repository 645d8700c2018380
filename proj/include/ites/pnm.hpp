// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "ites/segmentation.hpp"

namespace ites::pnm {

/// Decodes binary PGM (P5) or PPM (P6). Colour images are reduced to BT.601
/// luminance; 16-bit samples are rescaled to 8 bits. The returned frame has
/// timestamp 0.
segmentation::Frame decode(std::string_view bytes);
segmentation::Frame read(const std::filesystem::path& path);

/// Encodes a P5 image with maxval 255.
std::string encode_pgm(const segmentation::Frame& frame);
void write_pgm(const std::filesystem::path& path, const segmentation::Frame& frame);

}  // namespace ites::pnm

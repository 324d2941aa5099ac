// Copyright 2026 The cxnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cxnet/image.hpp"

namespace cxnet::io {

/// Decodes a PNG or JPEG raster into 8-bit grayscale. RGB input is converted with
/// Rec.601 luma weights; 16-bit input is rescaled linearly by its own maximum.
GrayImage read_gray(const std::filesystem::path& path);
GrayImage decode_gray(const std::vector<std::uint8_t>& encoded);

std::vector<std::uint8_t> encode_png(const GrayImage& img);
std::vector<std::uint8_t> encode_png(const RgbImage& img);
/// 1-bit PNG of a {0,1} mask.
std::vector<std::uint8_t> encode_mask_png(const BinaryGrid& mask);

void write_png(const std::filesystem::path& path, const GrayImage& img);
void write_png(const std::filesystem::path& path, const RgbImage& img);
void write_mask_png(const std::filesystem::path& path, const BinaryGrid& mask);
/// Reads a mask image; any nonzero pixel becomes 1.
BinaryGrid read_mask(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace cxnet::io

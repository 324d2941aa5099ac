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

#include "cxnet/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace cxnet::io {

namespace {

GrayImage from_mat(const cv::Mat& mat) {
  if (mat.empty()) throw IoError("image could not be decoded");
  const int channels = mat.channels();
  if (channels != 1 && channels != 3 && channels != 4) {
    throw IoError("unsupported channel count " + std::to_string(channels));
  }
  cv::Mat wide;
  mat.convertTo(wide, CV_MAKETYPE(CV_64F, channels));

  double scale = 1.0;
  if (mat.depth() == CV_16U) {
    double max_value = 0.0;
    cv::minMaxLoc(wide.reshape(1), nullptr, &max_value);
    scale = max_value > 0.0 ? 255.0 / max_value : 0.0;
  } else if (mat.depth() != CV_8U) {
    throw IoError("only 8-bit and 16-bit rasters are accepted");
  }

  GrayImage out(mat.rows, mat.cols);
  for (int r = 0; r < mat.rows; ++r) {
    const double* row = wide.ptr<double>(r);
    for (int c = 0; c < mat.cols; ++c) {
      double v;
      if (channels == 1) {
        v = row[c];
      } else {
        // OpenCV stores BGR(A).
        const double* px = row + static_cast<std::ptrdiff_t>(c) * channels;
        v = 0.114 * px[0] + 0.587 * px[1] + 0.299 * px[2];
      }
      out(r, c) = static_cast<std::uint8_t>(std::clamp(std::round(v * scale), 0.0, 255.0));
    }
  }
  return out;
}

std::vector<std::uint8_t> encode(const cv::Mat& mat, std::vector<int> params) {
  std::vector<std::uint8_t> bytes;
  params.insert(params.end(), {cv::IMWRITE_PNG_COMPRESSION, 6});
  if (!cv::imencode(".png", mat, bytes, params)) throw IoError("PNG encoding failed");
  return bytes;
}

}  // namespace

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

GrayImage decode_gray(const std::vector<std::uint8_t>& encoded) {
  if (encoded.empty()) throw IoError("empty image buffer");
  return from_mat(cv::imdecode(encoded, cv::IMREAD_UNCHANGED | cv::IMREAD_ANYDEPTH));
}

GrayImage read_gray(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("image not found: " + path.string());
  try {
    return decode_gray(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_png(const GrayImage& img) {
  cv::Mat mat(img.rows(), img.cols(), CV_8UC1, const_cast<std::uint8_t*>(img.pixels().data()));
  return encode(mat, {});
}

std::vector<std::uint8_t> encode_png(const RgbImage& img) {
  cv::Mat rgb(img.rows, img.cols, CV_8UC3, const_cast<std::uint8_t*>(img.rgb.data()));
  cv::Mat bgr(img.rows, img.cols, CV_8UC3);
  for (int r = 0; r < img.rows; ++r) {
    for (int c = 0; c < img.cols; ++c) {
      const auto& s = rgb.at<cv::Vec3b>(r, c);
      bgr.at<cv::Vec3b>(r, c) = cv::Vec3b(s[2], s[1], s[0]);
    }
  }
  return encode(bgr, {});
}

std::vector<std::uint8_t> encode_mask_png(const BinaryGrid& mask) {
  cv::Mat mat(mask.rows(), mask.cols(), CV_8UC1);
  for (int r = 0; r < mask.rows(); ++r) {
    for (int c = 0; c < mask.cols(); ++c) mat.at<std::uint8_t>(r, c) = mask(r, c) ? 255 : 0;
  }
  return encode(mat, {cv::IMWRITE_PNG_BILEVEL, 1});
}

void write_png(const std::filesystem::path& path, const GrayImage& img) {
  write_file(path, encode_png(img));
}

void write_png(const std::filesystem::path& path, const RgbImage& img) {
  write_file(path, encode_png(img));
}

void write_mask_png(const std::filesystem::path& path, const BinaryGrid& mask) {
  write_file(path, encode_mask_png(mask));
}

BinaryGrid read_mask(const std::filesystem::path& path) {
  GrayImage gray = read_gray(path);
  BinaryGrid mask(gray.rows(), gray.cols());
  auto src = gray.pixels();
  auto dst = mask.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] ? 1 : 0;
  return mask;
}

}  // namespace cxnet::io

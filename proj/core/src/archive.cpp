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

#include "cxnet/archive.hpp"

#include <cstring>
#include <fstream>

#include "cxnet/error.hpp"
#include "cxnet/hash.hpp"

namespace cxnet::io {

namespace {

constexpr char kMagic[8] = {'C', 'X', 'N', 'E', 'T', 'A', 'R', 'C'};
constexpr std::uint32_t kVersion = 1;

std::vector<std::uint8_t> payload_bytes(const std::map<std::string, nn::Tensor>& tensors) {
  std::size_t total = 0;
  for (const auto& [name, t] : tensors) total += t.numel() * sizeof(double);
  std::vector<std::uint8_t> bytes(total);
  std::size_t offset = 0;
  for (const auto& [name, t] : tensors) {
    std::memcpy(bytes.data() + offset, t.data(), t.numel() * sizeof(double));
    offset += t.numel() * sizeof(double);
  }
  return bytes;
}

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T get(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof value);
  return value;
}

}  // namespace

std::string TensorArchive::payload_sha256() const { return sha256_hex(payload_bytes(tensors)); }

void TensorArchive::save(const std::filesystem::path& path) const {
  const auto payload = payload_bytes(tensors);
  nlohmann::json header;
  header["meta"] = meta;
  header["payload_sha256"] = sha256_hex(payload);
  auto& index = header["tensors"] = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& [name, t] : tensors) {
    index.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
    offset += t.numel();
  }
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("short write to " + path.string());
}

TensorArchive TensorArchive::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open archive " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw IoError(path.string() + ": not a cxnet archive");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw IoError(path.string() + ": unsupported archive version");
  const auto header_len = get<std::uint64_t>(in);
  if (!in || header_len > (1ull << 30)) throw IoError(path.string() + ": corrupt header length");
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw IoError(path.string() + ": truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": corrupt header: " + e.what());
  }

  TensorArchive archive;
  archive.meta = header.value("meta", nlohmann::json::object());
  for (const auto& entry : header.at("tensors")) {
    nn::Shape shape = entry.at("shape").get<nn::Shape>();
    nn::Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.numel() * sizeof(double)));
    if (!in) throw IoError(path.string() + ": truncated payload");
    archive.tensors.emplace(entry.at("name").get<std::string>(), std::move(t));
  }
  if (archive.payload_sha256() != header.at("payload_sha256").get<std::string>()) {
    throw IoError(path.string() + ": payload checksum mismatch");
  }
  return archive;
}

}  // namespace cxnet::io

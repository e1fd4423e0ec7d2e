// Copyright 2026 The eegdiff Authors. All Rights Reserved.
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
#include <map>
#include <string>
#include <vector>

#include "eegdiff/tensor.hpp"

namespace eegdiff {

// Little-endian tensor container shared by checkpoints, token caches and
// generated latents:
//
//   "BGNT"  u32 version(=1)
//   u32 n_meta   { u32 len, key bytes, u32 len, value bytes } * n_meta
//   u32 n_blobs  { u32 len, name bytes, u32 rank, u64 dims[rank],
//                  f64 payload[prod(dims)] } * n_blobs
struct ArchiveBlob {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

struct TensorArchive {
  std::map<std::string, std::string> meta;
  std::vector<ArchiveBlob> blobs;

  const ArchiveBlob* find(const std::string& name) const;
  const ArchiveBlob& at(const std::string& name) const;
  const std::string& meta_at(const std::string& key) const;
};

inline constexpr char kArchiveMagic[4] = {'B', 'G', 'N', 'T'};
inline constexpr std::uint32_t kArchiveVersion = 1;

std::vector<std::uint8_t> serialize(const TensorArchive& archive);
TensorArchive deserialize(const std::vector<std::uint8_t>& bytes);
void save_archive(const std::filesystem::path& path, const TensorArchive& archive);
TensorArchive load_archive(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

// Hex SHA-1 of a byte string, and git's blob hash ("blob <n>\0" + content).
std::string sha1_hex(const void* data, std::size_t size);
std::string git_blob_hash(const std::vector<std::uint8_t>& bytes);

// Little-endian primitives.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v);
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void u64(std::uint64_t v);
  void f64(double v);
  void raw(const void* data, std::size_t size);
  void str(const std::string& s);

  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

// Reader that reports the byte offset of any truncation.
class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::uint64_t u64();
  double f64();
  void raw(void* out, std::size_t size);
  std::string str();

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what);

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace eegdiff

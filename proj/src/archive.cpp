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

#include "eegdiff/archive.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <fstream>

#include "eegdiff/errors.hpp"

namespace eegdiff {

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::raw(const void* data, std::size_t size) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  bytes_.insert(bytes_.end(), p, p + size);
}

void ByteWriter::str(const std::string& s) {
  u32(static_cast<std::uint32_t>(s.size()));
  raw(s.data(), s.size());
}

void ByteReader::need(std::size_t n, const char* what) {
  if (remaining() < n)
    fail(ErrorKind::format, std::string("truncated payload reading ") + what + " at byte offset " +
                                std::to_string(pos_) + " (need " + std::to_string(n) +
                                " bytes, " + std::to_string(remaining()) + " left)");
}

std::uint8_t ByteReader::u8() {
  need(1, "u8");
  return bytes_[pos_++];
}

std::uint32_t ByteReader::u32() {
  need(4, "u32");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8, "u64");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

void ByteReader::raw(void* out, std::size_t size) {
  need(size, "raw bytes");
  std::memcpy(out, bytes_.data() + pos_, size);
  pos_ += size;
}

std::string ByteReader::str() {
  const std::uint32_t n = u32();
  need(n, "string");
  std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
  pos_ += n;
  return s;
}

const ArchiveBlob* TensorArchive::find(const std::string& name) const {
  for (const auto& b : blobs)
    if (b.name == name) return &b;
  return nullptr;
}

const ArchiveBlob& TensorArchive::at(const std::string& name) const {
  const auto* b = find(name);
  if (!b) fail(ErrorKind::format, "archive has no blob named '" + name + "'");
  return *b;
}

const std::string& TensorArchive::meta_at(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) fail(ErrorKind::format, "archive has no metadata key '" + key + "'");
  return it->second;
}

std::vector<std::uint8_t> serialize(const TensorArchive& archive) {
  ByteWriter w;
  w.raw(kArchiveMagic, 4);
  w.u32(kArchiveVersion);
  w.u32(static_cast<std::uint32_t>(archive.meta.size()));
  for (const auto& [k, v] : archive.meta) {
    w.str(k);
    w.str(v);
  }
  w.u32(static_cast<std::uint32_t>(archive.blobs.size()));
  for (const auto& b : archive.blobs) {
    require(shape_numel(b.shape) == b.values.size(), ErrorKind::contract,
            "blob '" + b.name + "' payload does not match its shape");
    w.str(b.name);
    w.u32(static_cast<std::uint32_t>(b.shape.size()));
    for (auto d : b.shape) w.u64(d);
    for (double v : b.values) w.f64(v);
  }
  return std::move(w.bytes());
}

TensorArchive deserialize(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kArchiveMagic, 4) != 0)
    fail(ErrorKind::format, "bad magic at byte offset 0: expected BGNT");
  const std::uint32_t version = r.u32();
  if (version != kArchiveVersion)
    fail(ErrorKind::format, "unsupported archive version " + std::to_string(version) +
                                " at byte offset 4");
  TensorArchive out;
  const std::uint32_t n_meta = r.u32();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = r.str();
    out.meta[k] = r.str();
  }
  const std::uint32_t n_blobs = r.u32();
  for (std::uint32_t i = 0; i < n_blobs; ++i) {
    ArchiveBlob b;
    b.name = r.str();
    const std::size_t rank_offset = r.offset();
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 8)
      fail(ErrorKind::format, "implausible rank " + std::to_string(rank) + " at byte offset " +
                                  std::to_string(rank_offset));
    for (std::uint32_t d = 0; d < rank; ++d) b.shape.push_back(r.u64());
    const std::size_t n = shape_numel(b.shape);
    if (n > r.remaining() / 8)
      fail(ErrorKind::format, "truncated payload for blob '" + b.name + "' at byte offset " +
                                  std::to_string(r.offset()));
    b.values.resize(n);
    for (auto& v : b.values) v = r.f64();
    out.blobs.push_back(std::move(b));
  }
  if (r.remaining() != 0)
    fail(ErrorKind::format, "trailing bytes after archive at byte offset " +
                                std::to_string(r.offset()));
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::format, "cannot open '" + path.string() + "'");
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::format, "cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void save_archive(const std::filesystem::path& path, const TensorArchive& archive) {
  write_file(path, serialize(archive));
}

TensorArchive load_archive(const std::filesystem::path& path) {
  return deserialize(read_file(path));
}

std::string sha1_hex(const void* data, std::size_t size) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data, size, digest, &length, EVP_sha1(), nullptr) != 1)
    fail(ErrorKind::numeric, "SHA-1 digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    const unsigned char c = digest[i];
    out.push_back(kHex[c >> 4]);
    out.push_back(kHex[c & 15]);
  }
  return out;
}

std::string git_blob_hash(const std::vector<std::uint8_t>& bytes) {
  std::string header = "blob " + std::to_string(bytes.size());
  std::vector<std::uint8_t> buf(header.begin(), header.end());
  buf.push_back(0);
  buf.insert(buf.end(), bytes.begin(), bytes.end());
  return sha1_hex(buf.data(), buf.size());
}

}  // namespace eegdiff

// Copyright 2026 The diffspk Authors
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

// Little-endian byte buffers shared by the sequence and checkpoint formats.

#pragma once

#include "diffspk/io.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

namespace diffspk::detail {

class ByteWriter {
 public:
  void magic(std::string_view m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }

  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }

  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void byte(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }

  void text(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }

  void write_to(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::Data, "cannot open " + path.string() + " for writing");
    out.write(bytes_.data(), static_cast<std::streamsize>(bytes_.size()));
    require(static_cast<bool>(out), ErrorKind::Data, "write failed for " + path.string());
  }

  const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<char> bytes, std::string name)
      : bytes_(std::move(bytes)), name_(std::move(name)) {}

  static ByteReader from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::Data, "cannot open " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return ByteReader(std::move(bytes), path.string());
  }

  // Magic + version; a short or mismatched magic is a corrupt header.
  void expect_header(std::string_view magic) {
    if (remaining() < magic.size() + 4 || std::string_view(bytes_.data(), magic.size()) != magic)
      throw FormatError(FormatFault::CorruptHeader, name_ + ": bad magic, expected " + std::string(magic));
    pos_ = magic.size();
    const auto version = header_u32();
    if (version != kFormatVersion)
      throw FormatError(FormatFault::VersionMismatch,
                        name_ + ": unsupported version " + std::to_string(version));
  }

  std::uint32_t header_u32() {
    if (remaining() < 4) throw FormatError(FormatFault::CorruptHeader, name_ + ": header too short");
    return raw_u32();
  }

  std::uint32_t u32() {
    need(4);
    return raw_u32();
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }

  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

  std::uint8_t byte() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }

  std::string text() {
    const auto n = u32();
    need(n);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }

  // Payload size is checked up front so truncation is reported before decoding.
  void need_payload(std::size_t n) {
    if (remaining() < n)
      throw FormatError(FormatFault::TruncatedPayload,
                        name_ + ": payload truncated (" + std::to_string(remaining()) + " of " +
                            std::to_string(n) + " bytes)");
  }

  void expect_end() const {
    if (remaining() != 0)
      throw FormatError(FormatFault::CorruptHeader,
                        name_ + ": " + std::to_string(remaining()) + " trailing bytes");
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::uint32_t raw_u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  void need(std::size_t n) { need_payload(n); }

  std::vector<char> bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace diffspk::detail

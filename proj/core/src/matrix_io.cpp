// Copyright 2026 The LPL Authors. All Rights Reserved.
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

#include "lpl/matrix_io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>

#include "lpl/error.hpp"

namespace lpl {

namespace {

constexpr char kMagic[4] = {'L', 'P', 'L', 'F'};
constexpr std::size_t kHeaderBytes = 12;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  return v;
}

}  // namespace

std::string encode_lplf(const Matrix& m) {
  require(m.rows() <= std::numeric_limits<std::uint32_t>::max() &&
              m.cols() <= std::numeric_limits<std::uint32_t>::max(),
          ErrorKind::kFormat, "matrix too large for LPLF");
  std::string out(kMagic, sizeof(kMagic));
  out.reserve(kHeaderBytes + 4 * m.size());
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (double x : m.data()) {
    const float f = static_cast<float>(x);
    require(std::isfinite(f), ErrorKind::kNumeric, "value not representable as a finite float32");
    put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

Matrix decode_lplf(std::string_view bytes, std::string_view source) {
  const std::string where(source);
  require(bytes.size() >= kHeaderBytes, ErrorKind::kFormat,
          where + ": truncated LPLF header (" + std::to_string(bytes.size()) + " bytes)");
  require(bytes.substr(0, 4) == std::string_view(kMagic, 4), ErrorKind::kFormat,
          where + ": bad magic, expected LPLF");
  const std::size_t rows = get_u32(bytes, 4);
  const std::size_t cols = get_u32(bytes, 8);
  const std::size_t expected = kHeaderBytes + 4 * rows * cols;
  require(bytes.size() == expected, ErrorKind::kFormat,
          where + ": " + std::to_string(rows) + "x" + std::to_string(cols) + " needs " +
              std::to_string(expected) + " bytes, found " + std::to_string(bytes.size()));
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows * cols; ++i) {
    const float f = std::bit_cast<float>(get_u32(bytes, kHeaderBytes + 4 * i));
    require(std::isfinite(f), ErrorKind::kFormat,
            where + ": non-finite value at row " + std::to_string(i / cols) + ", column " +
                std::to_string(i % cols));
    m.data()[i] = static_cast<double>(f);
  }
  return m;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorKind::kIo, "write failed for " + path.string());
}

void write_lplf(const std::filesystem::path& path, const Matrix& m) {
  write_file_bytes(path, encode_lplf(m));
}

Matrix read_lplf(const std::filesystem::path& path) {
  return decode_lplf(read_file_bytes(path), path.string());
}

Matrix quantize_to_float(const Matrix& m) {
  Matrix out = m;
  for (double& x : out.data()) x = static_cast<double>(static_cast<float>(x));
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace lpl

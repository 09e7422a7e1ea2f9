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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "lpl/matrix.hpp"

namespace lpl {

/// "LPLF" binary matrix layout, all little-endian:
///   4 bytes   magic "LPLF"
///   uint32    rows
///   uint32    cols
///   float32   rows * cols values, row-major
/// Values are narrowed to float32 on write and widened back on read.
std::string encode_lplf(const Matrix& m);
Matrix decode_lplf(std::string_view bytes, std::string_view source = "<memory>");

void write_lplf(const std::filesystem::path& path, const Matrix& m);
Matrix read_lplf(const std::filesystem::path& path);

/// Rounds every entry to the nearest float32, i.e. what a write/read cycle yields.
Matrix quantize_to_float(const Matrix& m);

std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

}  // namespace lpl

/*
 *    Copyright 2026 The pythia-sim Contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace pythia {

inline constexpr std::uint64_t kLineBytes = 64;
inline constexpr std::uint64_t kPageBytes = 4096;
inline constexpr std::uint64_t kLinesPerPage = kPageBytes / kLineBytes;
inline constexpr unsigned kLineShift = 6;
inline constexpr unsigned kPageShift = 12;

using Tick = std::uint64_t;
using LineAddr = std::uint64_t;

constexpr LineAddr line_of(std::uint64_t byte_address) { return byte_address >> kLineShift; }
constexpr std::uint64_t page_of_line(LineAddr line) { return line >> (kPageShift - kLineShift); }
constexpr std::uint64_t page_offset_of_line(LineAddr line) { return line & (kLinesPerPage - 1); }

enum class Bandwidth { Low, High };

constexpr std::string_view to_string(Bandwidth bw) { return bw == Bandwidth::High ? "high" : "low"; }

// splitmix64 finalizer; a bijection on 64-bit words
constexpr std::uint64_t mix64(std::uint64_t x)
{
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

// FNV-1a, used for config hashes that must be stable across runs and platforms
constexpr std::uint64_t fnv1a(std::string_view text)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

} // namespace pythia

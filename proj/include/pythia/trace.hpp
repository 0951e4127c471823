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

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pythia/common.hpp"

namespace pythia {

enum class AccessKind { Load, Store };

struct MemoryRequest {
  Tick tick = 0;
  std::uint64_t pc = 0;
  std::uint64_t address = 0;
  AccessKind kind = AccessKind::Load;

  friend bool operator==(const MemoryRequest&, const MemoryRequest&) = default;
};

class TraceError : public std::runtime_error
{
public:
  enum class Kind { IO, Format };

  TraceError(Kind kind, std::size_t line, const std::string& what)
      : std::runtime_error(what), kind_(kind), line_(line)
  {
  }

  Kind kind() const { return kind_; }
  // 1-based line number of the offending record, 0 for IO errors
  std::size_t line() const { return line_; }

private:
  Kind kind_;
  std::size_t line_;
};

class SpecError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline bool parse_hex(std::string_view text, std::uint64_t& out)
{
  text = trim(text);
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X'))
    text.remove_prefix(2);
  if (text.empty())
    return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out, 16);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

} // namespace detail

// Canonical text format: one "<pc-hex>,<address-hex>,<L|S>" record per line,
// '#' comment lines and blank lines ignored.
inline std::vector<MemoryRequest> parse_trace(std::istream& in)
{
  std::vector<MemoryRequest> out;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = detail::trim(raw);
    if (line.empty() || line.front() == '#')
      continue;

    auto fail = [&](std::string_view field, std::string_view value) {
      throw TraceError(TraceError::Kind::Format, lineno,
                       "line " + std::to_string(lineno) + ": bad " + std::string(field) + " '" + std::string(value) + "'");
    };

    auto c1 = line.find(',');
    auto c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string_view::npos || line.find(',', c2 + 1) != std::string_view::npos)
      fail("record", line);

    MemoryRequest req;
    req.tick = out.size();
    auto pc = line.substr(0, c1);
    auto addr = line.substr(c1 + 1, c2 - c1 - 1);
    auto kind = detail::trim(line.substr(c2 + 1));
    if (!detail::parse_hex(pc, req.pc))
      fail("pc", pc);
    if (!detail::parse_hex(addr, req.address))
      fail("address", addr);
    if (kind == "L")
      req.kind = AccessKind::Load;
    else if (kind == "S")
      req.kind = AccessKind::Store;
    else
      fail("kind", kind);
    out.push_back(req);
  }
  return out;
}

inline std::vector<MemoryRequest> read_trace(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw TraceError(TraceError::Kind::IO, 0, "cannot open trace '" + path + "'");
  return parse_trace(in);
}

inline void write_trace(std::ostream& out, const std::vector<MemoryRequest>& trace)
{
  char buf[64];
  for (const auto& r : trace) {
    int n = std::snprintf(buf, sizeof buf, "0x%llx,0x%llx,%c\n", static_cast<unsigned long long>(r.pc),
                          static_cast<unsigned long long>(r.address), r.kind == AccessKind::Load ? 'L' : 'S');
    out.write(buf, n);
  }
}

inline void write_trace(const std::string& path, const std::vector<MemoryRequest>& trace)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw TraceError(TraceError::Kind::IO, 0, "cannot write trace '" + path + "'");
  write_trace(out, trace);
}

// Synthetic access patterns --------------------------------------------------

struct TraceSpec;

// Walks each page with a fixed cacheline stride: offsets 0, s, 2s, ... (or
// 63, 63+s, ... for negative strides).
struct ConstantStride {
  int stride_lines = 1;
  std::uint64_t pages = 1;
};

// Two accesses per page: first_offset, then first_offset + second_offset_delta.
struct PagePair {
  unsigned first_offset = 0;
  int second_offset_delta = 23;
  std::uint64_t pages = 1;
};

struct RandomInPage {
  unsigned accesses_per_page = 8;
  std::uint64_t pages = 1;
  std::uint64_t seed = 0;
};

// Round-robin merge of sub-patterns; each part should use its own base_page.
struct Interleaved {
  std::vector<TraceSpec> parts;
};

using TracePattern = std::variant<ConstantStride, PagePair, RandomInPage, Interleaved>;

struct TraceSpec {
  TracePattern pattern = ConstantStride{};
  std::vector<std::uint64_t> pcs; // rotated per request; empty means {0x401000}
  std::size_t length = 1;
  std::uint64_t base_page = 0x10000;
};

namespace detail {

inline void check_in_page(long offset, const char* what)
{
  if (offset < 0 || offset >= static_cast<long>(kLinesPerPage))
    throw SpecError(std::string(what) + " escapes the 4 KB page (line offset " + std::to_string(offset) + ")");
}

// Produces page-local line offsets for one page at a time.
inline std::vector<unsigned> page_offsets(const ConstantStride& p, std::mt19937_64&)
{
  if (p.stride_lines == 0 || p.stride_lines >= static_cast<int>(kLinesPerPage)
      || p.stride_lines <= -static_cast<int>(kLinesPerPage))
    throw SpecError("stride " + std::to_string(p.stride_lines) + " escapes the 4 KB page");
  std::vector<unsigned> out;
  long pos = p.stride_lines > 0 ? 0 : static_cast<long>(kLinesPerPage) - 1;
  for (; pos >= 0 && pos < static_cast<long>(kLinesPerPage); pos += p.stride_lines)
    out.push_back(static_cast<unsigned>(pos));
  return out;
}

inline std::vector<unsigned> page_offsets(const PagePair& p, std::mt19937_64&)
{
  long first = p.first_offset;
  long second = first + p.second_offset_delta;
  check_in_page(first, "first offset");
  check_in_page(second, "second offset");
  return {static_cast<unsigned>(first), static_cast<unsigned>(second)};
}

inline std::vector<unsigned> page_offsets(const RandomInPage& p, std::mt19937_64& rng)
{
  if (p.accesses_per_page == 0)
    throw SpecError("accesses_per_page must be positive");
  std::vector<unsigned> out(p.accesses_per_page);
  for (auto& o : out)
    o = static_cast<unsigned>(rng() >> 58); // top 6 bits: uniform over 64 lines
  return out;
}

template <typename P>
std::vector<MemoryRequest> generate_paged(const P& p, const TraceSpec& spec, std::uint64_t seed)
{
  if (p.pages == 0)
    throw SpecError("pattern needs at least one page");
  std::mt19937_64 rng(mix64(seed));
  std::vector<MemoryRequest> out;
  out.reserve(spec.length);
  std::uint64_t page_index = 0;
  while (out.size() < spec.length) {
    std::uint64_t page = spec.base_page + (page_index++ % p.pages);
    for (unsigned off : page_offsets(p, rng)) {
      if (out.size() == spec.length)
        break;
      MemoryRequest r;
      r.address = (page << kPageShift) | (static_cast<std::uint64_t>(off) << kLineShift);
      out.push_back(r);
    }
  }
  return out;
}

} // namespace detail

inline std::vector<MemoryRequest> generate_trace(const TraceSpec& spec, std::uint64_t seed)
{
  if (spec.length == 0)
    throw SpecError("trace length must be positive");

  std::vector<MemoryRequest> out;
  if (const auto* il = std::get_if<Interleaved>(&spec.pattern)) {
    if (il->parts.empty())
      throw SpecError("interleaved pattern needs at least one part");
    std::vector<std::vector<MemoryRequest>> streams;
    std::size_t per_part = (spec.length + il->parts.size() - 1) / il->parts.size();
    for (std::size_t i = 0; i < il->parts.size(); ++i) {
      TraceSpec part = il->parts[i];
      part.length = per_part;
      if (part.pcs.empty())
        part.pcs = spec.pcs;
      streams.push_back(generate_trace(part, mix64(seed + i + 1)));
    }
    for (std::size_t k = 0; out.size() < spec.length; ++k)
      for (const auto& s : streams)
        if (out.size() < spec.length)
          out.push_back(s[k]);
  } else {
    out = std::visit(
        [&](const auto& p) -> std::vector<MemoryRequest> {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, Interleaved>)
            return {};
          else if constexpr (std::is_same_v<P, RandomInPage>)
            return detail::generate_paged(p, spec, p.seed ^ seed);
          else
            return detail::generate_paged(p, spec, seed);
        },
        spec.pattern);
    static const std::vector<std::uint64_t> default_pcs{0x401000};
    const auto& pcs = spec.pcs.empty() ? default_pcs : spec.pcs;
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i].pc = pcs[i % pcs.size()];
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i].tick = i;
  return out;
}

} // namespace pythia

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
#include <optional>
#include <vector>

#include "pythia/common.hpp"
#include "pythia/trace.hpp"

namespace pythia {

// PC-indexed stride detector, 64 direct-mapped entries with a 2-bit
// saturating confidence. Prefetches line + stride once confidence >= 2.
class StridePrefetcher
{
public:
  static constexpr std::size_t kEntries = 64;
  static constexpr int kMaxConfidence = 3;
  static constexpr int kPrefetchConfidence = 2;

  struct Entry {
    bool valid = false;
    std::uint64_t pc = 0;
    LineAddr last_line = 0;
    std::int64_t last_stride = 0;
    int confidence = 0;
  };

  std::optional<LineAddr> step(const MemoryRequest& req)
  {
    LineAddr line = line_of(req.address);
    Entry& e = table_[req.pc % kEntries];
    if (!e.valid || e.pc != req.pc) {
      e = Entry{true, req.pc, line, 0, 0};
      return std::nullopt;
    }

    std::int64_t stride = static_cast<std::int64_t>(line) - static_cast<std::int64_t>(e.last_line);
    if (stride != 0 && stride == e.last_stride) {
      if (e.confidence < kMaxConfidence)
        ++e.confidence;
    } else if (e.confidence >= kPrefetchConfidence) {
      --e.confidence; // keep the learned stride through one glitch
    } else {
      e.last_stride = stride;
      e.confidence = stride != 0 ? 1 : 0;
    }
    e.last_line = line;

    if (e.confidence < kPrefetchConfidence)
      return std::nullopt;
    std::int64_t target = static_cast<std::int64_t>(page_offset_of_line(line)) + e.last_stride;
    if (target < 0 || target >= static_cast<std::int64_t>(kLinesPerPage))
      return std::nullopt;
    return static_cast<LineAddr>(static_cast<std::int64_t>(line) + e.last_stride);
  }

  const Entry& entry_for(std::uint64_t pc) const { return table_[pc % kEntries]; }

private:
  Entry table_[kEntries]{};
};

// Next-N-line streamer: on a demand miss, the next `degree` lines of the page.
class NextLinePrefetcher
{
public:
  explicit NextLinePrefetcher(unsigned degree = 1) : degree_(degree) {}

  std::vector<LineAddr> step(const MemoryRequest& req, bool demand_miss) const
  {
    std::vector<LineAddr> out;
    if (!demand_miss)
      return out;
    LineAddr line = line_of(req.address);
    std::uint64_t offset = page_offset_of_line(line);
    for (unsigned i = 1; i <= degree_ && offset + i < kLinesPerPage; ++i)
      out.push_back(line + i);
    return out;
  }

  unsigned degree() const { return degree_; }

private:
  unsigned degree_;
};

} // namespace pythia

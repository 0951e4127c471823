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

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "pythia/common.hpp"
#include "pythia/features.hpp"

namespace pythia {

enum class RewardLevel {
  AccurateTimely,
  AccurateLate,
  CoverageLoss,
  InaccurateHighBW,
  InaccurateLowBW,
  NoPrefetchHighBW,
  NoPrefetchLowBW,
};

inline constexpr std::size_t kNumRewardLevels = 7;

constexpr std::string_view to_string(RewardLevel r)
{
  switch (r) {
  case RewardLevel::AccurateTimely: return "r_at";
  case RewardLevel::AccurateLate: return "r_al";
  case RewardLevel::CoverageLoss: return "r_cl";
  case RewardLevel::InaccurateHighBW: return "r_in_h";
  case RewardLevel::InaccurateLowBW: return "r_in_l";
  case RewardLevel::NoPrefetchHighBW: return "r_np_h";
  case RewardLevel::NoPrefetchLowBW: return "r_np_l";
  }
  return "?";
}

struct RewardConfig {
  double r_at = 20;
  double r_al = 12;
  double r_cl = -12;
  double r_in_h = -14;
  double r_in_l = -8;
  double r_np_h = -2;
  double r_np_l = -4;

  friend bool operator==(const RewardConfig&, const RewardConfig&) = default;

  static RewardConfig basic() { return {}; }

  // favors not prefetching over inaccurate prefetches
  static RewardConfig strict()
  {
    RewardConfig r;
    r.r_in_h = -22;
    r.r_in_l = -20;
    r.r_np_h = 0;
    r.r_np_l = 0;
    return r;
  }

  static RewardConfig bandwidth_oblivious()
  {
    RewardConfig r;
    r.r_in_h = r.r_in_l = -8;
    r.r_np_h = r.r_np_l = -4;
    return r;
  }

  double value(RewardLevel level) const
  {
    switch (level) {
    case RewardLevel::AccurateTimely: return r_at;
    case RewardLevel::AccurateLate: return r_al;
    case RewardLevel::CoverageLoss: return r_cl;
    case RewardLevel::InaccurateHighBW: return r_in_h;
    case RewardLevel::InaccurateLowBW: return r_in_l;
    case RewardLevel::NoPrefetchHighBW: return r_np_h;
    case RewardLevel::NoPrefetchLowBW: return r_np_l;
    }
    return 0.0;
  }

  void validate() const
  {
    for (std::size_t i = 0; i < kNumRewardLevels; ++i) {
      auto level = static_cast<RewardLevel>(i);
      if (!std::isfinite(value(level)))
        throw std::invalid_argument("reward " + std::string(to_string(level)) + " must be finite");
    }
  }
};

enum class ActionKind { Prefetch, NoPrefetch, OutOfPage };

struct EQEntry {
  StateVector state;
  std::size_t action_index = 0;
  ActionKind kind = ActionKind::Prefetch;
  std::optional<LineAddr> prefetch_line; // empty for no-prefetch and out-of-page actions
  bool filled = false;
  std::optional<RewardLevel> reward;
};

struct SarsaTuple {
  const StateVector& s1;
  std::size_t a1;
  double reward;
  const StateVector& s2;
  std::size_t a2;
};

class MissingReward : public std::logic_error
{
public:
  using std::logic_error::logic_error;
};

struct RewardCounters {
  std::array<std::uint64_t, kNumRewardLevels> by_level{};
  std::uint64_t matched_demands = 0;
  std::uint64_t no_prefetch_actions = 0;
  std::uint64_t out_of_page_actions = 0;
  std::uint64_t unmatched_evictions = 0;
  std::uint64_t evictions = 0;

  std::uint64_t total_assigned() const
  {
    std::uint64_t s = 0;
    for (auto c : by_level)
      s += c;
    return s;
  }

  std::uint64_t count(RewardLevel r) const { return by_level[static_cast<std::size_t>(r)]; }
};

// FIFO of recently taken actions. Rewards are assigned at insertion
// (no-prefetch, out-of-page), during residency (demand match) or at eviction
// (inaccurate).
class EvaluationQueue
{
public:
  explicit EvaluationQueue(std::size_t capacity = 256) : capacity_(capacity)
  {
    if (capacity_ == 0)
      throw std::invalid_argument("eq.capacity must be positive");
  }

  // Rewards the oldest reward-less entry whose prefetch targets `line`.
  std::optional<RewardLevel> match_demand(LineAddr line)
  {
    for (auto& e : entries_) {
      if (!e.reward && e.prefetch_line && *e.prefetch_line == line) {
        auto level = e.filled ? RewardLevel::AccurateTimely : RewardLevel::AccurateLate;
        assign(e, level);
        ++counters_.matched_demands;
        return level;
      }
    }
    return std::nullopt;
  }

  void mark_filled(LineAddr line)
  {
    for (auto& e : entries_)
      if (e.prefetch_line && *e.prefetch_line == line)
        e.filled = true;
  }

  // Applies immediate rewards, appends `entry`, and returns the evicted
  // entry (always rewarded) when the queue was full.
  std::optional<EQEntry> insert(EQEntry entry, Bandwidth bw)
  {
    if (!entry.reward) {
      if (entry.kind == ActionKind::NoPrefetch) {
        assign(entry, bw == Bandwidth::High ? RewardLevel::NoPrefetchHighBW : RewardLevel::NoPrefetchLowBW);
        ++counters_.no_prefetch_actions;
      } else if (entry.kind == ActionKind::OutOfPage) {
        assign(entry, RewardLevel::CoverageLoss);
        ++counters_.out_of_page_actions;
      }
    }

    std::optional<EQEntry> evicted;
    if (entries_.size() == capacity_) {
      evicted = std::move(entries_.front());
      entries_.pop_front();
      ++counters_.evictions;
      if (!evicted->reward) {
        assign(*evicted, bw == Bandwidth::High ? RewardLevel::InaccurateHighBW : RewardLevel::InaccurateLowBW);
        ++counters_.unmatched_evictions;
      }
    }
    entries_.push_back(std::move(entry));
    return evicted;
  }

  // Oldest resident entry; after an insert this is never empty.
  const EQEntry& head() const
  {
    if (entries_.empty())
      throw std::logic_error("evaluation queue is empty");
    return entries_.front();
  }

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::deque<EQEntry>& entries() const { return entries_; }
  const RewardCounters& counters() const { return counters_; }

private:
  void assign(EQEntry& e, RewardLevel level)
  {
    e.reward = level;
    ++counters_.by_level[static_cast<std::size_t>(level)];
  }

  std::size_t capacity_;
  std::deque<EQEntry> entries_;
  RewardCounters counters_;
};

// (S1, A1, R, S2, A2) for the SARSA step: S1/A1/R from the evicted entry,
// S2/A2 from the queue head.
inline SarsaTuple sarsa_feed(const EQEntry& evicted, const EQEntry& head, const RewardConfig& rewards)
{
  if (!evicted.reward)
    throw MissingReward("evicted EQ entry carries no reward");
  return SarsaTuple{evicted.state, evicted.action_index, rewards.value(*evicted.reward), head.state, head.action_index};
}

} // namespace pythia

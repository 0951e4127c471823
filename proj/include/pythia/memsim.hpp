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

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pythia/common.hpp"

namespace pythia {

struct CacheConfig {
  std::uint64_t size_bytes = 2 * 1024 * 1024;
  unsigned ways = 16;
  Tick fill_latency_ticks = 20;

  std::uint64_t num_sets() const { return size_bytes / (kLineBytes * ways); }

  void validate() const
  {
    if (ways == 0)
      throw std::invalid_argument("cache.ways must be at least 1");
    if (size_bytes == 0 || size_bytes % (kLineBytes * ways) != 0)
      throw std::invalid_argument("cache.size_bytes must be a positive multiple of 64 * ways");
  }
};

// Sliding-window memory transfer counter. usage = transfers in the last
// window_ticks ticks / (window_ticks * peak), clamped to [0, 1].
class BandwidthMonitor
{
public:
  struct Config {
    Tick window_ticks = 64;
    double peak_transfers_per_tick = 1.0;
    double threshold_fraction = 0.5;
  };

  BandwidthMonitor() : BandwidthMonitor(Config{}) {}
  explicit BandwidthMonitor(Config cfg) : cfg_(cfg), counts_(cfg.window_ticks, 0), stamps_(cfg.window_ticks, kNever)
  {
    if (cfg_.window_ticks == 0)
      throw std::invalid_argument("bandwidth.window_ticks must be positive");
    if (!(cfg_.peak_transfers_per_tick > 0.0))
      throw std::invalid_argument("bandwidth.peak_transfers_per_tick must be positive");
  }

  void record_transfer(Tick tick, std::uint32_t count = 1)
  {
    auto slot = tick % cfg_.window_ticks;
    if (stamps_[slot] != tick) {
      stamps_[slot] = tick;
      counts_[slot] = 0;
    }
    counts_[slot] += count;
    total_ += count;
  }

  std::uint64_t transfers_in_window(Tick tick) const
  {
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < counts_.size(); ++i)
      if (stamps_[i] != kNever && stamps_[i] <= tick && tick - stamps_[i] < cfg_.window_ticks)
        sum += counts_[i];
    return sum;
  }

  double usage_fraction(Tick tick) const
  {
    double u = static_cast<double>(transfers_in_window(tick))
               / (static_cast<double>(cfg_.window_ticks) * cfg_.peak_transfers_per_tick);
    return std::clamp(u, 0.0, 1.0);
  }

  Bandwidth level(Tick tick) const { return usage_fraction(tick) >= cfg_.threshold_fraction ? Bandwidth::High : Bandwidth::Low; }

  std::uint64_t total_transfers() const { return total_; }
  const Config& config() const { return cfg_; }

private:
  static constexpr Tick kNever = std::numeric_limits<Tick>::max();

  Config cfg_;
  std::vector<std::uint32_t> counts_;
  std::vector<Tick> stamps_;
  std::uint64_t total_ = 0;
};

struct PrefetchStats {
  std::uint64_t demand_accesses = 0;
  // demands that missed and had to send a read to memory; demands that merge
  // with an in-flight fill are counted in inflight_merges instead
  std::uint64_t demand_misses = 0;
  std::uint64_t inflight_merges = 0;
  std::uint64_t late_prefetches = 0;
  std::uint64_t prefetches_issued = 0;
  std::uint64_t prefetch_fills = 0;
  std::uint64_t useful_prefetches = 0;
  std::uint64_t overpredictions = 0;
  std::uint64_t baseline_demand_misses = 0;

  double coverage() const
  {
    if (baseline_demand_misses == 0)
      return 0.0;
    return (static_cast<double>(baseline_demand_misses) - static_cast<double>(demand_misses))
           / static_cast<double>(baseline_demand_misses);
  }

  double accuracy() const
  {
    return prefetches_issued == 0 ? 0.0 : static_cast<double>(useful_prefetches) / static_cast<double>(prefetches_issued);
  }

  // memory reads with prefetching (demand reads + prefetch reads) relative to the no-prefetch run
  double overprediction_rate() const
  {
    if (baseline_demand_misses == 0)
      return 0.0;
    double reads = static_cast<double>(demand_misses + prefetches_issued);
    return (reads - static_cast<double>(baseline_demand_misses)) / static_cast<double>(baseline_demand_misses);
  }
};

enum class AccessResult { Hit, Miss };
enum class PrefetchResult { Issued, AlreadyCached };

struct FillEvent {
  LineAddr line;
  bool prefetch;
};

struct CacheLineMeta {
  bool valid = false;
  LineAddr tag = 0;
  std::uint64_t last_use_tick = 0; // recency stamp, strictly increasing per touch
  bool prefetched = false;
  bool used_since_fill = false;
};

// One set-associative LRU cache with a constant-latency fill path. Lines are
// installed when their fill completes; until then they live in the in-flight
// table and demands to them are misses that need no extra memory read.
class Cache
{
public:
  explicit Cache(CacheConfig cfg = {}, BandwidthMonitor::Config bw = {}) : cfg_(cfg), monitor_(bw)
  {
    cfg_.validate();
    sets_.assign(cfg_.num_sets() * cfg_.ways, CacheLineMeta{});
  }

  // Completes every fill due at or before `tick`, in issue order.
  std::vector<FillEvent> advance(Tick tick)
  {
    std::vector<FillEvent> events;
    while (!fill_order_.empty() && fill_order_.front().ready <= tick) {
      LineAddr line = fill_order_.front().line;
      fill_order_.pop_front();
      auto it = inflight_.find(line);
      if (it == inflight_.end())
        continue;
      Inflight f = it->second;
      inflight_.erase(it);
      install(line, f.is_prefetch, f.used);
      if (f.is_prefetch)
        ++stats_.prefetch_fills;
      events.push_back({line, f.is_prefetch});
    }
    return events;
  }

  // Completes all outstanding fills.
  std::vector<FillEvent> drain() { return advance(std::numeric_limits<Tick>::max()); }

  AccessResult access(std::uint64_t address, Tick tick)
  {
    ++stats_.demand_accesses;
    LineAddr line = line_of(address);
    if (CacheLineMeta* m = find(line)) {
      m->last_use_tick = ++stamp_;
      if (m->prefetched && !m->used_since_fill) {
        m->used_since_fill = true;
        ++stats_.useful_prefetches;
      }
      return AccessResult::Hit;
    }
    if (auto it = inflight_.find(line); it != inflight_.end()) {
      ++stats_.inflight_merges;
      if (it->second.is_prefetch && !it->second.used) {
        it->second.used = true;
        ++stats_.useful_prefetches;
        ++stats_.late_prefetches;
      }
      return AccessResult::Miss;
    }
    ++stats_.demand_misses;
    start_fill(line, tick, false);
    return AccessResult::Miss;
  }

  PrefetchResult prefetch(std::uint64_t address, Tick tick)
  {
    LineAddr line = line_of(address);
    if (resident(line) || in_flight(line))
      return PrefetchResult::AlreadyCached;
    ++stats_.prefetches_issued;
    start_fill(line, tick, true);
    return PrefetchResult::Issued;
  }

  bool resident(LineAddr line) const { return find(line) != nullptr; }
  bool in_flight(LineAddr line) const { return inflight_.count(line) != 0; }

  const PrefetchStats& stats() const { return stats_; }
  const BandwidthMonitor& bandwidth() const { return monitor_; }
  const CacheConfig& config() const { return cfg_; }

private:
  struct Inflight {
    Tick ready;
    bool is_prefetch;
    bool used;
  };
  struct Pending {
    Tick ready;
    LineAddr line;
  };

  std::size_t set_base(LineAddr line) const { return static_cast<std::size_t>(line % cfg_.num_sets()) * cfg_.ways; }

  const CacheLineMeta* find(LineAddr line) const
  {
    std::size_t base = set_base(line);
    for (unsigned w = 0; w < cfg_.ways; ++w) {
      const auto& m = sets_[base + w];
      if (m.valid && m.tag == line)
        return &m;
    }
    return nullptr;
  }

  CacheLineMeta* find(LineAddr line) { return const_cast<CacheLineMeta*>(std::as_const(*this).find(line)); }

  void start_fill(LineAddr line, Tick tick, bool is_prefetch)
  {
    monitor_.record_transfer(tick);
    Tick ready = tick + cfg_.fill_latency_ticks;
    inflight_[line] = Inflight{ready, is_prefetch, false};
    fill_order_.push_back({ready, line});
  }

  void install(LineAddr line, bool prefetched, bool used)
  {
    std::size_t base = set_base(line);
    CacheLineMeta* victim = &sets_[base];
    for (unsigned w = 0; w < cfg_.ways; ++w) {
      auto& m = sets_[base + w];
      if (!m.valid) {
        victim = &m;
        break;
      }
      if (m.last_use_tick < victim->last_use_tick)
        victim = &m;
    }
    if (victim->valid && victim->prefetched && !victim->used_since_fill)
      ++stats_.overpredictions;
    *victim = CacheLineMeta{true, line, ++stamp_, prefetched, used};
  }

  CacheConfig cfg_;
  BandwidthMonitor monitor_;
  std::vector<CacheLineMeta> sets_;
  std::unordered_map<LineAddr, Inflight> inflight_;
  std::deque<Pending> fill_order_;
  std::uint64_t stamp_ = 0;
  PrefetchStats stats_;
};

} // namespace pythia

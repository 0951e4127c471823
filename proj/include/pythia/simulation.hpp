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

#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "pythia/agent.hpp"
#include "pythia/baselines.hpp"
#include "pythia/memsim.hpp"
#include "pythia/trace.hpp"

namespace pythia {

enum class PrefetcherKind { Pythia, Stride, NextLine, None };

constexpr std::string_view to_string(PrefetcherKind k)
{
  switch (k) {
  case PrefetcherKind::Pythia: return "pythia";
  case PrefetcherKind::Stride: return "stride";
  case PrefetcherKind::NextLine: return "nextline";
  case PrefetcherKind::None: return "none";
  }
  return "?";
}

// Forces the High/Low signal seen by the agent, for ablations.
enum class BandwidthOverride { Auto, AlwaysHigh, AlwaysLow };

struct SimConfig {
  PrefetcherKind prefetcher = PrefetcherKind::Pythia;
  AgentConfig agent;
  CacheConfig cache;
  BandwidthMonitor::Config bandwidth;
  BandwidthOverride bandwidth_override = BandwidthOverride::Auto;
  unsigned nextline_degree = 1;
};

struct RunResult {
  PrefetchStats stats;
  RewardCounters rewards;
  std::vector<std::uint64_t> selections; // per action index, pythia only
  double mean_bandwidth_usage = 0.0;
  std::unique_ptr<PythiaAgent> agent; // final learned state, pythia only
};

using StepObserver = std::function<void(const MemoryRequest&, const StepResult&, const PythiaAgent&)>;

inline std::uint64_t baseline_misses(const std::vector<MemoryRequest>& trace, const CacheConfig& cache,
                                     const BandwidthMonitor::Config& bw = {})
{
  Cache c(cache, bw);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    c.advance(i);
    c.access(trace[i].address, i);
  }
  c.drain();
  return c.stats().demand_misses;
}

// Drives the cache and the configured prefetcher over the trace, one tick per
// demand. Fills due at a tick are delivered before that tick's demand.
// `known_baseline` skips the no-prefetch reference run when the caller already has it.
inline RunResult run_trace(const std::vector<MemoryRequest>& trace, const SimConfig& cfg,
                           const StepObserver& observer = nullptr, std::optional<std::uint64_t> known_baseline = {})
{
  RunResult out;
  Cache cache(cfg.cache, cfg.bandwidth);
  std::unique_ptr<PythiaAgent> agent;
  if (cfg.prefetcher == PrefetcherKind::Pythia)
    agent = std::make_unique<PythiaAgent>(cfg.agent);
  StridePrefetcher stride;
  NextLinePrefetcher nextline(cfg.nextline_degree);

  double usage_sum = 0.0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const Tick t = i;
    const auto& req = trace[i];
    for (const auto& ev : cache.advance(t))
      if (ev.prefetch && agent)
        agent->on_prefetch_fill(ev.line);

    AccessResult hit = cache.access(req.address, t);
    usage_sum += cache.bandwidth().usage_fraction(t);

    switch (cfg.prefetcher) {
    case PrefetcherKind::Pythia: {
      Bandwidth bw = cfg.bandwidth_override == BandwidthOverride::AlwaysHigh  ? Bandwidth::High
                     : cfg.bandwidth_override == BandwidthOverride::AlwaysLow ? Bandwidth::Low
                                                                               : cache.bandwidth().level(t);
      auto res = agent->step(req, bw, [&](LineAddr line) {
        auto r = cache.prefetch(line << kLineShift, t);
        return r == PrefetchResult::AlreadyCached && cache.resident(line);
      });
      if (observer)
        observer(req, res, *agent);
      break;
    }
    case PrefetcherKind::Stride:
      if (auto pf = stride.step(req))
        cache.prefetch(*pf << kLineShift, t);
      break;
    case PrefetcherKind::NextLine:
      for (auto pf : nextline.step(req, hit == AccessResult::Miss))
        cache.prefetch(pf << kLineShift, t);
      break;
    case PrefetcherKind::None: break;
    }
  }
  for (const auto& ev : cache.drain())
    if (ev.prefetch && agent)
      agent->on_prefetch_fill(ev.line);

  out.stats = cache.stats();
  out.stats.baseline_demand_misses = known_baseline ? *known_baseline : baseline_misses(trace, cfg.cache, cfg.bandwidth);
  out.mean_bandwidth_usage = trace.empty() ? 0.0 : usage_sum / static_cast<double>(trace.size());
  if (agent) {
    out.rewards = agent->queue().counters();
    out.selections = agent->selections();
    out.agent = std::move(agent);
  }
  return out;
}

// Stats CSV ------------------------------------------------------------------

inline const char* stats_csv_header()
{
  return "trace,prefetcher,config_hash,demand_accesses,demand_misses,baseline_misses,prefetches_issued,useful,"
         "overpredictions,coverage,accuracy,overprediction_rate,r_at_count,r_al_count,r_cl_count,r_in_h_count,"
         "r_in_l_count,r_np_h_count,r_np_l_count,mean_bandwidth_usage";
}

inline std::string stats_csv_row(std::string_view trace_name, PrefetcherKind kind, std::string_view config_hash,
                                 const RunResult& r)
{
  const auto& s = r.stats;
  std::string row;
  row += trace_name;
  row += ',';
  row += to_string(kind);
  row += ',';
  row += config_hash;
  char buf[512];
  std::snprintf(buf, sizeof buf, ",%llu,%llu,%llu,%llu,%llu,%llu,%.6f,%.6f,%.6f",
                static_cast<unsigned long long>(s.demand_accesses), static_cast<unsigned long long>(s.demand_misses),
                static_cast<unsigned long long>(s.baseline_demand_misses),
                static_cast<unsigned long long>(s.prefetches_issued),
                static_cast<unsigned long long>(s.useful_prefetches),
                static_cast<unsigned long long>(s.overpredictions), s.coverage(), s.accuracy(),
                s.overprediction_rate());
  row += buf;
  for (auto c : r.rewards.by_level)
    row += ',' + std::to_string(c);
  std::snprintf(buf, sizeof buf, ",%.6f", r.mean_bandwidth_usage);
  row += buf;
  return row;
}

} // namespace pythia

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
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "pythia/config.hpp"
#include "pythia/simulation.hpp"

namespace pythia {

struct TraceCase {
  std::string name;
  std::vector<MemoryRequest> requests;
  std::uint64_t baseline = 0; // filled by prepare_suite
};

using Suite = std::vector<TraceCase>;

inline void prepare_suite(Suite& suite, const CacheConfig& cache, const BandwidthMonitor::Config& bw = {})
{
  for (auto& t : suite)
    t.baseline = baseline_misses(t.requests, cache, bw);
}

// Ranking score: coverage minus overprediction rate, both against the
// no-prefetch run.
inline double experiment_score(const PrefetchStats& s) { return s.coverage() - s.overprediction_rate(); }

struct Evaluation {
  std::vector<double> per_trace;
  double mean = 0.0;
};

inline Evaluation evaluate(const SimConfig& cfg, const Suite& suite)
{
  Evaluation ev;
  for (const auto& t : suite) {
    auto r = run_trace(t.requests, cfg, nullptr, t.baseline);
    ev.per_trace.push_back(experiment_score(r.stats));
  }
  ev.mean = ev.per_trace.empty() ? 0.0
                                 : std::accumulate(ev.per_trace.begin(), ev.per_trace.end(), 0.0)
                                       / static_cast<double>(ev.per_trace.size());
  return ev;
}

// Runs fn(0..n-1) on at most `workers` threads. Each task owns its result
// slot, so the output does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn)
{
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back(body);
    for (auto& t : pool)
      t.join();
  }
  for (auto& e : errors)
    if (e)
      std::rethrow_exception(e);
}

inline void require_suite(const Suite& suite)
{
  if (suite.empty())
    throw std::invalid_argument("sweep needs at least one trace");
}

// Feature selection ----------------------------------------------------------

struct FeatureSweepRow {
  std::vector<FeatureSpec> features;
  bool supported = true;
  Evaluation eval;

  std::string key() const
  {
    std::string k;
    for (std::size_t i = 0; i < features.size(); ++i)
      k += (i ? ";" : "") + features[i].name();
    return k;
  }
};

inline std::vector<std::vector<FeatureSpec>> feature_combinations(unsigned max_combo)
{
  if (max_combo < 1 || max_combo > 3)
    throw std::invalid_argument("max_combo must be 1, 2 or 3");
  auto space = enumerate_feature_space();
  std::vector<std::vector<FeatureSpec>> out;
  const std::size_t n = space.size();
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({space[i]});
  if (max_combo >= 2)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        out.push_back({space[i], space[j]});
  if (max_combo >= 3)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        for (std::size_t k = j + 1; k < n; ++k)
          out.push_back({space[i], space[j], space[k]});
  return out;
}

// Every combination of up to max_combo features from the 32-entry space,
// ranked by mean score. Combinations containing a feature the trace model
// cannot compute are kept as unsupported rows at the bottom.
inline std::vector<FeatureSweepRow> feature_sweep(const Suite& suite, const SimConfig& base, unsigned max_combo,
                                                  unsigned workers = 1)
{
  require_suite(suite);
  auto combos = feature_combinations(max_combo);
  std::vector<FeatureSweepRow> rows(combos.size());
  parallel_for(combos.size(), workers, [&](std::size_t i) {
    rows[i].features = combos[i];
    rows[i].supported = std::all_of(combos[i].begin(), combos[i].end(), [](const FeatureSpec& f) { return f.supported(); });
    if (!rows[i].supported)
      return;
    SimConfig cfg = base;
    cfg.prefetcher = PrefetcherKind::Pythia;
    cfg.agent.features = combos[i];
    rows[i].eval = evaluate(cfg, suite);
  });
  std::stable_sort(rows.begin(), rows.end(), [](const FeatureSweepRow& a, const FeatureSweepRow& b) {
    if (a.supported != b.supported)
      return a.supported;
    return a.eval.mean > b.eval.mean;
  });
  return rows;
}

// Action pruning -------------------------------------------------------------

struct PruneResult {
  std::vector<int> kept;
  double full_score = 0.0;
  std::vector<std::pair<int, double>> degradation; // per removable offset
};

inline std::vector<int> full_action_range(int lo = -63, int hi = 63)
{
  std::vector<int> v;
  for (int a = lo; a <= hi; ++a)
    v.push_back(a);
  return v;
}

// Leave-one-out: an offset survives when removing it lowers the mean score by
// at least `threshold`. Offset 0 always survives; threshold <= 0 keeps all.
inline PruneResult action_prune(const Suite& suite, const SimConfig& base, const std::vector<int>& full_range,
                                double threshold, unsigned workers = 1)
{
  require_suite(suite);
  SimConfig cfg = base;
  cfg.prefetcher = PrefetcherKind::Pythia;
  cfg.agent.actions = full_range;
  if (std::find(full_range.begin(), full_range.end(), 0) == full_range.end())
    cfg.agent.actions.insert(cfg.agent.actions.begin(), 0);

  PruneResult res;
  res.full_score = evaluate(cfg, suite).mean;

  std::vector<int> candidates;
  for (int a : cfg.agent.actions)
    if (a != 0)
      candidates.push_back(a);
  std::vector<double> drop(candidates.size());
  parallel_for(candidates.size(), workers, [&](std::size_t i) {
    SimConfig c = cfg;
    c.agent.actions.erase(std::find(c.agent.actions.begin(), c.agent.actions.end(), candidates[i]));
    drop[i] = res.full_score - evaluate(c, suite).mean;
  });

  for (int a : cfg.agent.actions) {
    if (a == 0) {
      res.kept.push_back(0);
      continue;
    }
    auto i = static_cast<std::size_t>(std::find(candidates.begin(), candidates.end(), a) - candidates.begin());
    res.degradation.emplace_back(a, drop[i]);
    if (threshold <= 0.0 || drop[i] >= threshold)
      res.kept.push_back(a);
  }
  return res;
}

// Grid search ----------------------------------------------------------------

class GridTooLarge : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct ParamGrid {
  std::string key; // any config key, e.g. "hyperparameters.alpha"
  std::vector<double> values;
};

// {1e0, 1e-1, ..., 1e-(n-1)}
inline std::vector<double> exponential_grid(unsigned n = 10)
{
  std::vector<double> v;
  for (unsigned i = 0; i < n; ++i)
    v.push_back(std::pow(10.0, -static_cast<double>(i)));
  return v;
}

inline std::vector<ParamGrid> default_hyperparameter_grids()
{
  return {{"hyperparameters.alpha", exponential_grid()},
          {"hyperparameters.gamma", exponential_grid()},
          {"hyperparameters.epsilon", exponential_grid()}};
}

struct GridPoint {
  std::size_t index = 0; // position in enumeration order
  std::vector<double> values;
  SimConfig config;
  std::string hash;
  Evaluation eval;
};

struct GridSearchOptions {
  std::size_t top_k = 25;
  std::size_t budget = 10000;
  double gamma_clamp = 0.999; // gamma grid points >= 1 are replaced by this
  unsigned workers = 1;
};

struct GridSearchResult {
  std::vector<GridPoint> stage1; // every grid point on the small suite, ranked
  std::vector<GridPoint> stage2; // top-k re-evaluated on the full suite, ranked
  const GridPoint& winner() const { return stage2.front(); }
};

inline std::size_t grid_size(const std::vector<ParamGrid>& grids)
{
  std::size_t n = 1;
  for (const auto& g : grids) {
    if (g.values.empty())
      return 0;
    if (n > std::numeric_limits<std::size_t>::max() / g.values.size())
      return std::numeric_limits<std::size_t>::max();
    n *= g.values.size();
  }
  return n;
}

inline std::vector<GridPoint> enumerate_grid(const std::vector<ParamGrid>& grids, const SimConfig& base,
                                             double gamma_clamp)
{
  std::size_t n = grid_size(grids);
  std::vector<GridPoint> points(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& p = points[i];
    p.index = i;
    p.config = base;
    p.config.prefetcher = PrefetcherKind::Pythia;
    std::size_t rem = i;
    // the last grid varies fastest
    p.values.resize(grids.size());
    for (std::size_t g = grids.size(); g-- > 0;) {
      double v = grids[g].values[rem % grids[g].values.size()];
      rem /= grids[g].values.size();
      if (grids[g].key == "hyperparameters.gamma" && v >= 1.0)
        v = gamma_clamp;
      p.values[g] = v;
      set_config_key(p.config, grids[g].key, detail::fmt_real(v));
    }
    p.config.agent.validate();
    p.hash = config_hash(p.config);
  }
  return points;
}

namespace detail {

inline void rank(std::vector<GridPoint>& pts)
{
  std::stable_sort(pts.begin(), pts.end(), [](const GridPoint& a, const GridPoint& b) {
    if (a.eval.mean != b.eval.mean)
      return a.eval.mean > b.eval.mean;
    return a.index < b.index;
  });
}

} // namespace detail

// Two-stage uniform grid search: the whole Cartesian product on the small
// suite, then the best top_k again on the full suite.
inline GridSearchResult grid_search(const Suite& small_suite, const Suite& full_suite, const std::vector<ParamGrid>& grids,
                                    const SimConfig& base, const GridSearchOptions& opt = {})
{
  require_suite(small_suite);
  require_suite(full_suite);
  std::size_t n = grid_size(grids);
  if (n == 0)
    throw std::invalid_argument("grid search needs a non-empty grid for every parameter");
  if (n > opt.budget)
    throw GridTooLarge("grid has " + std::to_string(n) + " points, budget is " + std::to_string(opt.budget));

  GridSearchResult res;
  res.stage1 = enumerate_grid(grids, base, opt.gamma_clamp);
  parallel_for(res.stage1.size(), opt.workers, [&](std::size_t i) { res.stage1[i].eval = evaluate(res.stage1[i].config, small_suite); });
  detail::rank(res.stage1);

  std::size_t k = std::min(opt.top_k, res.stage1.size());
  res.stage2.assign(res.stage1.begin(), res.stage1.begin() + static_cast<std::ptrdiff_t>(k));
  parallel_for(res.stage2.size(), opt.workers, [&](std::size_t i) { res.stage2[i].eval = evaluate(res.stage2[i].config, full_suite); });
  detail::rank(res.stage2);
  return res;
}

// CSV writers ----------------------------------------------------------------

namespace detail {

inline std::string fmt_score(double d)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", d);
  return buf;
}

inline void write_suite_header(std::ostream& out, const Suite& suite)
{
  for (const auto& t : suite)
    out << ",score_" << t.name;
  out << ",mean_score\n";
}

inline void write_eval(std::ostream& out, const Evaluation& ev)
{
  for (double s : ev.per_trace)
    out << ',' << fmt_score(s);
  out << ',' << fmt_score(ev.mean) << '\n';
}

} // namespace detail

inline void write_feature_sweep_csv(std::ostream& out, const std::vector<FeatureSweepRow>& rows, const Suite& suite,
                                    const SimConfig& base)
{
  out << "rank,config_hash,features,status";
  detail::write_suite_header(out, suite);
  std::size_t rank = 0;
  for (const auto& r : rows) {
    SimConfig c = base;
    c.agent.features = r.features;
    out << ++rank << ',' << config_hash(c) << ',' << r.key() << ',' << (r.supported ? "ok" : "unsupported");
    if (r.supported) {
      detail::write_eval(out, r.eval);
    } else {
      for (std::size_t i = 0; i <= suite.size(); ++i)
        out << ',';
      out << '\n';
    }
  }
}

inline void write_prune_csv(std::ostream& out, const PruneResult& r)
{
  out << "offset,degradation,kept\n";
  for (const auto& [a, d] : r.degradation) {
    bool kept = std::find(r.kept.begin(), r.kept.end(), a) != r.kept.end();
    out << a << ',' << detail::fmt_score(d) << ',' << (kept ? 1 : 0) << '\n';
  }
}

inline void write_grid_csv(std::ostream& out, const std::vector<GridPoint>& pts, const std::vector<ParamGrid>& grids,
                           const Suite& suite)
{
  out << "rank,config_hash";
  for (const auto& g : grids)
    out << ',' << g.key;
  detail::write_suite_header(out, suite);
  std::size_t rank = 0;
  for (const auto& p : pts) {
    out << ++rank << ',' << p.hash;
    for (double v : p.values)
      out << ',' << detail::fmt_real(v);
    detail::write_eval(out, p.eval);
  }
}

} // namespace pythia

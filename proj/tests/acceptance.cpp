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

// Acceptance checks, one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "pythia/cli.hpp"
#include "pythia/simulation.hpp"
#include "pythia/storage.hpp"
#include "pythia/tuning.hpp"

using namespace pythia;
namespace fs = std::filesystem;

namespace {

// Tolerances and thresholds.
constexpr double kSarsaTol = 1e-9;
constexpr double kWarmupFraction = 0.2;
constexpr double kPagePairArgmaxMin = 0.95;
constexpr double kStrideSelectMin = 0.90;
constexpr double kStrideCoverageMin = 0.80;

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  const char* what;
  double time_limit_s; // 0: none
  std::function<Outcome()> body;
};

std::string fmt(const char* f, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string snapshot(const QVStore& q)
{
  std::ostringstream o;
  q.write_snapshot(o);
  return o.str();
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Conservation over one finished run; appended to criteria 4-6.
Outcome conservation(const char* name, const RunResult& r)
{
  const auto& c = r.rewards;
  std::uint64_t rhs = c.no_prefetch_actions + c.out_of_page_actions + c.matched_demands + c.unmatched_evictions;
  std::uint64_t resident_unrewarded = 0;
  for (const auto& e : r.agent->queue().entries())
    resident_unrewarded += !e.reward;
  bool ok = c.total_assigned() == rhs && r.agent->sarsa_updates() == c.evictions
            && c.evictions + r.agent->queue().size() == r.stats.demand_accesses;
  return {ok, fmt("%s: sum=%llu terms=%llu evictions=%llu updates=%llu unrewarded_resident=%llu", name,
                  (unsigned long long)c.total_assigned(), (unsigned long long)rhs, (unsigned long long)c.evictions,
                  (unsigned long long)r.agent->sarsa_updates(), (unsigned long long)resident_unrewarded)};
}

std::vector<Outcome> g_conservation;

Outcome storage()
{
  auto r = storage_report();
  bool ok = r.qvstore_bits == 196608 && r.eq_bits == 12288 && r.qvstore_kib() == 24.0 && r.eq_kib() == 1.5
            && r.total_kib() == 25.5;
  return {ok, fmt("QVStore %.4g KiB, EQ %.4g KiB, total %.4g KiB", r.qvstore_kib(), r.eq_kib(), r.total_kib())};
}

Outcome sarsa_oracle()
{
  AgentConfig cfg;
  PythiaAgent agent(cfg);
  EQEntry evicted, head;
  evicted.state = StateVector{{101, 202}, nullptr};
  evicted.action_index = 4;
  evicted.reward = RewardLevel::AccurateTimely;
  head.state = StateVector{{303, 404}, nullptr};
  head.action_index = 9;
  auto t = sarsa_feed(evicted, head, cfg.rewards);
  double q_before = agent.store().q_value(t.s1, t.a1);
  double d = agent.sarsa_delta(t);
  agent.store().update(t.s1, t.a1, d);
  double dq = agent.store().q_value(t.s1, t.a1) - q_before;
  bool ok = std::abs(d - 0.1235) <= kSarsaTol && std::abs(dq - 0.1235) <= kSarsaTol;
  return {ok, fmt("dQ = %.12f (expected 0.1235)", dq)};
}

Outcome monolithic_equivalence()
{
  constexpr std::size_t kActions = 16, kDomain = 128;
  QVStoreConfig qc;
  qc.num_planes = 1;
  qc.shift_constants = {0};
  qc.hash = PlaneHash::Identity;
  const double gamma = 0.556;
  QVStore store(1, kActions, gamma, qc);
  std::vector<double> table(kDomain * kActions, 1.0 / (1.0 - gamma));
  std::mt19937_64 rng(2024);
  std::size_t divergences = 0, ops = 10000;
  for (std::size_t i = 0; i < ops; ++i) {
    std::uint64_t f = rng() % kDomain;
    StateVector s{{f}, nullptr};
    switch (rng() % 3) {
    case 0: {
      std::size_t a = rng() % kActions;
      divergences += store.q_value(s, a) != table[f * kActions + a];
      break;
    }
    case 1: {
      std::size_t a = rng() % kActions;
      double d = (static_cast<double>(rng() % 20001) - 10000.0) / 1000.0;
      store.update(s, a, d);
      table[f * kActions + a] += d;
      break;
    }
    default: {
      std::size_t best = 0;
      for (std::size_t a = 1; a < kActions; ++a)
        if (table[f * kActions + a] > table[f * kActions + best])
          best = a;
      auto got = store.argmax_action(s);
      divergences += got.first != best || got.second != table[f * kActions + best];
    }
    }
  }
  return {divergences == 0, fmt("%zu operations, %zu divergences", ops, divergences)};
}

Outcome pagepair_argmax()
{
  const std::uint64_t first_pc = 0x436a81, second_pc = 0x4377c5;
  TraceSpec spec;
  spec.pattern = PagePair{0, 23, 100000};
  spec.pcs = {first_pc, second_pc};
  spec.length = 100000;
  auto trace = generate_trace(spec, 1);
  SimConfig cfg = preset_config("basic");
  const auto warm = static_cast<std::size_t>(kWarmupFraction * static_cast<double>(trace.size()));
  std::size_t step = 0, occ = 0, good = 0;
  std::vector<std::uint64_t> sel(cfg.agent.actions.size(), 0);
  auto r = run_trace(trace, cfg, [&](const MemoryRequest& req, const StepResult& res, const PythiaAgent& a) {
    if (step++ < warm)
      return;
    ++sel[res.action_index];
    if (req.pc != first_pc)
      return;
    ++occ;
    const auto& state = a.queue().entries().back().state; // this request's state
    good += a.config().actions[a.store().argmax_action(state).first] == 23;
  });
  std::size_t top = 0;
  bool top_set = false;
  for (std::size_t i = 0; i < sel.size(); ++i)
    if (cfg.agent.actions[i] != 0 && (!top_set || sel[i] > sel[top])) {
      top = i;
      top_set = true;
    }
  double frac = occ ? static_cast<double>(good) / static_cast<double>(occ) : 0.0;
  g_conservation.push_back(conservation("pagepair", r));
  bool ok = frac >= kPagePairArgmaxMin && cfg.agent.actions[top] == 23;
  return {ok, fmt("+23 argmax in %.4f of %zu occurrences; most-selected nonzero offset %+d (%llu)", frac, occ,
                  cfg.agent.actions[top], (unsigned long long)sel[top])};
}

Outcome stride_convergence()
{
  TraceSpec spec;
  spec.pattern = ConstantStride{3, 100000};
  spec.length = 50000;
  auto trace = generate_trace(spec, 1);
  SimConfig cfg = preset_config("basic");
  const auto warm = static_cast<std::size_t>(kWarmupFraction * static_cast<double>(trace.size()));
  std::size_t step = 0, counted = 0, plus3 = 0;
  auto r = run_trace(trace, cfg, [&](const MemoryRequest&, const StepResult& res, const PythiaAgent& a) {
    if (step++ < warm)
      return;
    ++counted;
    plus3 += a.config().actions[res.action_index] == 3;
  });
  double frac = static_cast<double>(plus3) / static_cast<double>(counted);
  g_conservation.push_back(conservation("stride+3", r));
  bool ok = frac >= kStrideSelectMin && r.stats.coverage() >= kStrideCoverageMin;
  return {ok, fmt("+3 selected in %.4f of post-warmup steps, coverage %.4f, accuracy %.4f", frac, r.stats.coverage(),
                  r.stats.accuracy())};
}

// Everything the agent did, with the High/Low reward levels merged since the
// level labels follow the signal even when their values are equal.
std::string behavior(const RunResult& r)
{
  const auto& s = r.stats;
  const auto& c = r.rewards;
  std::ostringstream o;
  o << s.demand_misses << ',' << s.inflight_merges << ',' << s.prefetches_issued << ',' << s.useful_prefetches << ','
    << s.overpredictions << ',' << s.late_prefetches << ';';
  for (auto n : r.selections)
    o << n << ',';
  o << ';' << c.count(RewardLevel::AccurateTimely) << ',' << c.count(RewardLevel::AccurateLate) << ','
    << c.count(RewardLevel::CoverageLoss) << ','
    << c.count(RewardLevel::InaccurateHighBW) + c.count(RewardLevel::InaccurateLowBW) << ','
    << c.count(RewardLevel::NoPrefetchHighBW) + c.count(RewardLevel::NoPrefetchLowBW) << ';';
  o << snapshot(r.agent->store());
  return o.str();
}

Outcome bandwidth_direction()
{
  // a dense unit-stride stream interleaved with random in-page accesses
  // keeps the monitor near saturation
  TraceSpec stream;
  stream.pattern = ConstantStride{1, 100000};
  stream.pcs = {0x500000};
  stream.base_page = 0x10000;
  TraceSpec noise;
  noise.pattern = RandomInPage{32, 100000, 7};
  noise.pcs = {0x600000};
  noise.base_page = 0x80000;
  TraceSpec spec;
  spec.pattern = Interleaved{{stream, noise}};
  spec.length = 60000;
  auto trace = generate_trace(spec, 3);

  SimConfig strict = preset_config("strict");
  SimConfig obl = preset_config("bw-oblivious");
  std::uint64_t baseline = baseline_misses(trace, strict.cache, strict.bandwidth);
  auto rs = run_trace(trace, strict, nullptr, baseline);
  auto ro = run_trace(trace, obl, nullptr, baseline);
  SimConfig hi = obl, lo = obl;
  hi.bandwidth_override = BandwidthOverride::AlwaysHigh;
  lo.bandwidth_override = BandwidthOverride::AlwaysLow;
  auto rh = run_trace(trace, hi, nullptr, baseline);
  auto rl = run_trace(trace, lo, nullptr, baseline);

  bool direction = rs.stats.prefetches_issued < ro.stats.prefetches_issued && rs.stats.accuracy() > ro.stats.accuracy();
  bool invariant = behavior(rh) == behavior(rl) && behavior(rh) == behavior(ro);
  g_conservation.push_back(conservation("bw strict", rs));
  g_conservation.push_back(conservation("bw oblivious", ro));
  return {direction && invariant,
          fmt("mean bw usage %.3f; strict issued %llu acc %.4f vs bw-oblivious issued %llu acc %.4f; "
              "High/Low ablation %s",
              ro.mean_bandwidth_usage, (unsigned long long)rs.stats.prefetches_issued, rs.stats.accuracy(),
              (unsigned long long)ro.stats.prefetches_issued, ro.stats.accuracy(), invariant ? "identical" : "differs")};
}

Outcome determinism()
{
  fs::path dir = fs::temp_directory_path() / ("pythia_accept_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto cli = [](std::vector<std::string> args) {
    std::ostringstream o, e;
    int code = cli::cli_main(std::move(args), o, e);
    if (code != 0)
      throw std::runtime_error("cli failed: " + e.str());
    return o.str();
  };
  auto p = [&](const std::string& n) { return (dir / n).string(); };
  cli({"gen", "--pattern", "random", "--length", "5000", "--pages", "400", "--seed", "11", "--out", p("r.trace")});
  cli({"gen", "--pattern", "stride", "--stride", "3", "--length", "5000", "--pages", "400", "--out", p("s.trace")});
  std::ofstream(p("suite")) << "r.trace\ns.trace\n";
  std::ofstream(p("h.sweep")) << "grid.hyperparameters.alpha = exp10:3\ngrid.hyperparameters.epsilon = exp10:3\ntop_k = 3\n";
  std::ofstream(p("f.sweep")) << "kind = feature\n";

  std::size_t compared = 0, mismatched = 0;
  auto same = [&](const std::string& a, const std::string& b) {
    ++compared;
    mismatched += a != b || a.empty();
  };
  for (const char* preset : {"basic", "strict"}) {
    auto a = cli({"run", "--trace", p("r.trace"), "--preset", preset, "--set", "seed=5", "--set", "hyperparameters.epsilon=0.05"});
    auto b = cli({"run", "--trace", p("r.trace"), "--preset", preset, "--set", "seed=5", "--set", "hyperparameters.epsilon=0.05"});
    same(a, b);
  }
  for (const char* w : {"1", "2"}) {
    cli({"sweep", "--suite", p("suite"), "--sweep", p("h.sweep"), "--out-dir", p(std::string("h") + w), "--workers", w});
    cli({"sweep", "--suite", p("suite"), "--sweep", p("f.sweep"), "--out-dir", p(std::string("f") + w), "--workers", w});
  }
  for (const char* f : {"grid_stage1.csv", "grid_stage2.csv", "winner.cfg"})
    same(slurp(dir / "h1" / f), slurp(dir / "h2" / f));
  same(slurp(dir / "f1" / "feature_sweep.csv"), slurp(dir / "f2" / "feature_sweep.csv"));
  fs::remove_all(dir);
  return {mismatched == 0, fmt("%zu output pairs compared, %zu differ", compared, mismatched)};
}

Outcome reward_conservation()
{
  Outcome o;
  if (g_conservation.empty())
    return {false, "no runs recorded"};
  for (const auto& c : g_conservation) {
    o.pass &= c.pass;
    o.detail += (o.detail.empty() ? "" : "; ") + c.detail;
  }
  return o;
}

Outcome grid_scale()
{
  SimConfig base = preset_config("basic");
  auto make = [&](TraceSpec s, std::uint64_t seed, const char* name) {
    s.length = 5000;
    return TraceCase{name, generate_trace(s, seed), 0};
  };
  TraceSpec stride3;
  stride3.pattern = ConstantStride{3, 1000};
  TraceSpec pair;
  pair.pattern = PagePair{0, 23, 10000};
  pair.pcs = {0x436a81, 0x4377c5};
  TraceSpec rnd;
  rnd.pattern = RandomInPage{8, 2000, 5};
  rnd.pcs = {0x401000, 0x401040};
  Suite full{make(stride3, 1, "stride3"), make(pair, 2, "pagepair"), make(rnd, 3, "random")};
  prepare_suite(full, base.cache, base.bandwidth);
  Suite small(full.begin(), full.begin() + 1);

  GridSearchOptions opt;
  opt.workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  auto grids = default_hyperparameter_grids();
  auto res = grid_search(small, full, grids, base, opt);
  std::size_t clamped = 0;
  for (const auto& p : res.stage1)
    clamped += p.config.agent.gamma == opt.gamma_clamp;
  bool ok = grid_size(grids) == 1000 && res.stage1.size() == 1000 && res.stage2.size() == 25;
  return {ok, fmt("stage 1 evaluated %zu configs (%zu with gamma clamped to %.3f), stage 2 re-ran %zu on %u worker(s)",
                  res.stage1.size(), clamped, opt.gamma_clamp, res.stage2.size(), opt.workers)};
}

} // namespace

int main()
{
  std::vector<Criterion> criteria{
      {1, "storage budget", 1, storage},
      {2, "SARSA unit oracle", 1, sarsa_oracle},
      {3, "QVStore vs direct table", 10, monolithic_equivalence},
      {4, "PagePair +23 argmax", 30, pagepair_argmax},
      {5, "stride +3 convergence", 30, stride_convergence},
      {6, "bandwidth-aware rewards", 60, bandwidth_direction},
      {7, "run/sweep determinism", 0, determinism},
      {8, "reward conservation", 0, reward_conservation},
      {9, "grid search scale", 600, grid_scale},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool in_time = c.time_limit_s <= 0 || secs < c.time_limit_s;
    if (!in_time)
      o.detail += fmt(" [over time limit of %.0f s]", c.time_limit_s);
    bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("criterion %d %-26s %s  %7.2fs  %s\n", c.id, c.what, pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}

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

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pythia/config.hpp"
#include "pythia/simulation.hpp"
#include "pythia/storage.hpp"
#include "pythia/trace.hpp"
#include "pythia/tuning.hpp"

namespace pythia::cli {

enum ExitCode : int { kOk = 0, kUserError = 1, kBudgetError = 2 };

struct ConfigOptions {
  std::string config_path;
  std::string preset;
  std::vector<std::string> overrides;

  void add_to(CLI::App* cmd)
  {
    cmd->add_option("--config", config_path, "config file (also searched in $PYTHIA_CONFIG_DIR)");
    cmd->add_option("--preset", preset, "built-in preset: basic, strict, bw-oblivious");
    cmd->add_option("--set", overrides, "key=value override, highest precedence")->take_all();
  }

  SimConfig load() const
  {
    return load_config(config_path.empty() ? std::string{} : resolve_config_path(config_path), overrides, preset);
  }
};

struct RunOptions {
  std::string trace_path;
  std::string output_path;
  std::string qsnapshot_path;
  std::string name;
  ConfigOptions config;
};

inline int cmd_run(const RunOptions& opt, std::ostream& out)
{
  SimConfig cfg = opt.config.load();
  auto trace = read_trace(opt.trace_path);
  auto result = run_trace(trace, cfg);
  std::string name = opt.name.empty() ? std::filesystem::path(opt.trace_path).stem().string() : opt.name;

  std::ostringstream csv;
  csv << stats_csv_header() << '\n' << stats_csv_row(name, cfg.prefetcher, config_hash(cfg), result) << '\n';
  if (opt.output_path.empty() || opt.output_path == "-") {
    out << csv.str();
  } else {
    std::ofstream f(opt.output_path, std::ios::binary);
    if (!f)
      throw std::runtime_error("cannot write '" + opt.output_path + "'");
    f << csv.str();
  }
  if (!opt.qsnapshot_path.empty()) {
    if (!result.agent)
      throw ConfigError("--qsnapshot needs prefetcher = pythia");
    std::ofstream f(opt.qsnapshot_path, std::ios::binary);
    if (!f)
      throw std::runtime_error("cannot write '" + opt.qsnapshot_path + "'");
    result.agent->store().write_snapshot(f);
  }
  return kOk;
}

struct GenOptions {
  std::string pattern;
  int stride = 1;
  unsigned first_offset = 0;
  int delta = 23;
  unsigned accesses_per_page = 8;
  std::uint64_t pages = 1024;
  std::size_t length = 10000;
  std::vector<std::string> pcs;
  std::uint64_t seed = 0;
  std::uint64_t base_page = 0x10000;
  std::string out_path;
};

inline TraceSpec make_trace_spec(const GenOptions& opt)
{
  TraceSpec spec;
  spec.length = opt.length;
  spec.base_page = opt.base_page;
  for (const auto& p : opt.pcs) {
    std::uint64_t v = 0;
    if (!detail::parse_hex(p, v))
      throw std::invalid_argument("bad pc '" + p + "'");
    spec.pcs.push_back(v);
  }
  if (opt.pattern == "stride")
    spec.pattern = ConstantStride{opt.stride, opt.pages};
  else if (opt.pattern == "pagepair")
    spec.pattern = PagePair{opt.first_offset, opt.delta, opt.pages};
  else if (opt.pattern == "random")
    spec.pattern = RandomInPage{opt.accesses_per_page, opt.pages, opt.seed};
  else
    throw std::invalid_argument("unknown pattern '" + opt.pattern + "' (expected stride, pagepair or random)");
  return spec;
}

inline int cmd_gen(const GenOptions& opt, std::ostream& out)
{
  auto trace = generate_trace(make_trace_spec(opt), opt.seed);
  if (opt.out_path.empty() || opt.out_path == "-")
    write_trace(out, trace);
  else
    write_trace(opt.out_path, trace);
  return kOk;
}

// Suite file: one trace path per line, relative to the suite file.
inline Suite load_suite(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("cannot open suite '" + path + "'");
  auto dir = std::filesystem::path(path).parent_path();
  Suite suite;
  std::string raw;
  while (std::getline(in, raw)) {
    auto line = detail::trim(raw);
    if (line.empty() || line.front() == '#')
      continue;
    std::filesystem::path p{std::string(line)};
    if (p.is_relative())
      p = dir / p;
    suite.push_back({p.stem().string(), read_trace(p.string()), 0});
  }
  return suite;
}

struct SweepSpec {
  std::string kind = "hyperparameter";
  std::vector<ParamGrid> grids;
  GridSearchOptions grid;
  std::size_t small_suite = 1;
  unsigned max_combo = 1;
  double threshold = 0.005;
  int range_lo = -63;
  int range_hi = 63;
};

// Flat "key = value" lines. grid.<config key> takes a comma list or
// exp10:N for {1e0, ..., 1e-(N-1)}.
inline SweepSpec parse_sweep_spec(std::string_view text)
{
  SweepSpec s;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    std::string_view line = raw;
    if (auto h = line.find('#'); h != std::string_view::npos)
      line = line.substr(0, h);
    line = detail::trim(line);
    if (line.empty())
      continue;
    auto eq = line.find('=');
    std::string key(detail::trim(line.substr(0, eq)));
    if (eq == std::string_view::npos || detail::trim(line.substr(eq + 1)).empty())
      throw ConfigError("missing value for sweep key '" + key + "'");
    auto value = detail::trim(line.substr(eq + 1));
    if (key == "kind") {
      s.kind = std::string(value);
      if (s.kind != "hyperparameter" && s.kind != "feature" && s.kind != "action")
        throw ConfigError("sweep key 'kind': expected hyperparameter, feature or action");
    } else if (key.rfind("grid.", 0) == 0) {
      ParamGrid g{key.substr(5), {}};
      if (value.rfind("exp10:", 0) == 0)
        g.values = exponential_grid(detail::parse_int<unsigned>(key, value.substr(6)));
      else
        for (auto v : detail::split_list(value))
          g.values.push_back(detail::parse_real(key, v));
      s.grids.push_back(std::move(g));
    } else if (key == "top_k") {
      s.grid.top_k = detail::parse_int<std::size_t>(key, value);
    } else if (key == "budget") {
      s.grid.budget = detail::parse_int<std::size_t>(key, value);
    } else if (key == "gamma_clamp") {
      s.grid.gamma_clamp = detail::parse_real(key, value);
    } else if (key == "workers") {
      s.grid.workers = detail::parse_int<unsigned>(key, value);
    } else if (key == "small_suite") {
      s.small_suite = detail::parse_int<std::size_t>(key, value);
    } else if (key == "max_combo") {
      s.max_combo = detail::parse_int<unsigned>(key, value);
    } else if (key == "threshold") {
      s.threshold = detail::parse_real(key, value);
    } else if (key == "range_lo") {
      s.range_lo = detail::parse_int<int>(key, value);
    } else if (key == "range_hi") {
      s.range_hi = detail::parse_int<int>(key, value);
    } else {
      throw ConfigError("unknown sweep key '" + key + "'");
    }
  }
  if (s.kind == "hyperparameter" && s.grids.empty())
    s.grids = default_hyperparameter_grids();
  return s;
}

struct SweepOptions {
  std::string suite_path;
  std::string sweep_path;
  std::string out_dir;
  unsigned workers = 0; // 0: take it from the sweep file
  ConfigOptions config;
};

inline void write_file(const std::filesystem::path& p, const std::string& content)
{
  std::ofstream f(p, std::ios::binary);
  if (!f)
    throw std::runtime_error("cannot write '" + p.string() + "'");
  f << content;
}

inline int cmd_sweep(const SweepOptions& opt, std::ostream& out)
{
  SimConfig base = opt.config.load();
  std::ifstream sf(opt.sweep_path);
  if (!sf)
    throw ConfigError("cannot open sweep config '" + opt.sweep_path + "'");
  std::stringstream ss;
  ss << sf.rdbuf();
  SweepSpec spec = parse_sweep_spec(ss.str());
  if (opt.workers)
    spec.grid.workers = opt.workers;

  Suite suite = load_suite(opt.suite_path);
  require_suite(suite);
  prepare_suite(suite, base.cache, base.bandwidth);
  std::filesystem::create_directories(opt.out_dir);
  std::filesystem::path dir(opt.out_dir);

  if (spec.kind == "feature") {
    auto rows = feature_sweep(suite, base, spec.max_combo, spec.grid.workers);
    std::ostringstream csv;
    write_feature_sweep_csv(csv, rows, suite, base);
    write_file(dir / "feature_sweep.csv", csv.str());
    out << "best features: " << rows.front().key() << " (mean score " << detail::fmt_score(rows.front().eval.mean) << ")\n";
  } else if (spec.kind == "action") {
    auto res = action_prune(suite, base, full_action_range(spec.range_lo, spec.range_hi), spec.threshold, spec.grid.workers);
    std::ostringstream csv;
    write_prune_csv(csv, res);
    write_file(dir / "action_prune.csv", csv.str());
    std::string kept;
    for (std::size_t i = 0; i < res.kept.size(); ++i)
      kept += (i ? "," : "") + std::to_string(res.kept[i]);
    write_file(dir / "pruned_actions.txt", kept + "\n");
    out << "kept actions: " << kept << "\n";
  } else {
    std::size_t n_small = std::clamp<std::size_t>(spec.small_suite, 1, suite.size());
    Suite small(suite.begin(), suite.begin() + static_cast<std::ptrdiff_t>(n_small));
    auto res = grid_search(small, suite, spec.grids, base, spec.grid);
    std::ostringstream s1, s2;
    write_grid_csv(s1, res.stage1, spec.grids, small);
    write_grid_csv(s2, res.stage2, spec.grids, suite);
    write_file(dir / "grid_stage1.csv", s1.str());
    write_file(dir / "grid_stage2.csv", s2.str());
    write_file(dir / "winner.cfg", to_config_text(res.winner().config));
    out << "evaluated " << res.stage1.size() << " configs, re-ran top " << res.stage2.size() << "; winner "
        << res.winner().hash << " (mean score " << detail::fmt_score(res.winner().eval.mean) << ")\n";
  }
  return kOk;
}

inline int cmd_report(const ConfigOptions& copt, std::ostream& out)
{
  SimConfig cfg = copt.load();
  StorageBudget b;
  b.vaults = cfg.agent.features.size();
  b.planes_per_vault = cfg.agent.qvstore.num_planes;
  b.feature_bins = cfg.agent.qvstore.feature_bins;
  b.actions = cfg.agent.actions.size();
  b.eq_entries = cfg.agent.eq_capacity;
  print_storage_report(out, b, storage_report(b));
  return kOk;
}

// Entry point shared by the pythia binary and the CLI tests.
inline int cli_main(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
  CLI::App app{"Trace-driven simulator for a reinforcement-learning prefetcher", "pythia"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "simulate one trace and write a stats CSV row");
  run_cmd->add_option("--trace", run.trace_path, "trace file")->required();
  run_cmd->add_option("--output,-o", run.output_path, "stats CSV path (default stdout)");
  run_cmd->add_option("--qsnapshot", run.qsnapshot_path, "write the final Q tables as CSV");
  run_cmd->add_option("--name", run.name, "trace name in the CSV (default: file stem)");
  run.config.add_to(run_cmd);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic trace");
  gen_cmd->add_option("--pattern", gen.pattern, "stride, pagepair or random")->required();
  gen_cmd->add_option("--stride", gen.stride, "cacheline stride (stride)");
  gen_cmd->add_option("--first-offset", gen.first_offset, "first line offset in each page (pagepair)");
  gen_cmd->add_option("--delta", gen.delta, "line distance of the second access (pagepair)");
  gen_cmd->add_option("--accesses-per-page", gen.accesses_per_page, "accesses per page (random)");
  gen_cmd->add_option("--pages", gen.pages, "number of distinct pages");
  gen_cmd->add_option("--length", gen.length, "number of requests");
  gen_cmd->add_option("--pcs", gen.pcs, "PCs to rotate through (hex)")->delimiter(',');
  gen_cmd->add_option("--seed", gen.seed, "generator seed");
  gen_cmd->add_option("--base-page", gen.base_page, "first page number");
  gen_cmd->add_option("--out,-o", gen.out_path, "output path (default stdout)");

  SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "design-space exploration over a trace suite");
  sweep_cmd->add_option("--suite", sweep.suite_path, "suite file listing trace paths")->required();
  sweep_cmd->add_option("--sweep", sweep.sweep_path, "sweep config")->required();
  sweep_cmd->add_option("--out-dir", sweep.out_dir, "output directory")->required();
  sweep_cmd->add_option("--workers", sweep.workers, "worker threads");
  sweep.config.add_to(sweep_cmd);

  ConfigOptions show;
  auto* config_cmd = app.add_subcommand("config", "print the fully resolved configuration");
  show.add_to(config_cmd);

  ConfigOptions report;
  auto* report_cmd = app.add_subcommand("report", "storage budget of a configuration");
  report.add_to(report_cmd);

  std::vector<const char*> argv{"pythia"};
  for (const auto& a : args)
    argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "pythia: " << e.what() << "\n";
    err << "run 'pythia --help' for usage\n";
    return kUserError;
  }

  try {
    if (*run_cmd)
      return cmd_run(run, out);
    if (*gen_cmd)
      return cmd_gen(gen, out);
    if (*sweep_cmd)
      return cmd_sweep(sweep, out);
    if (*config_cmd) {
      out << to_config_text(show.load());
      return kOk;
    }
    if (*report_cmd)
      return cmd_report(report, out);
  } catch (const GridTooLarge& e) {
    err << "pythia: " << e.what() << "\n";
    return kBudgetError;
  } catch (const std::exception& e) {
    err << "pythia: " << e.what() << "\n";
    return kUserError;
  }
  return kUserError;
}

} // namespace pythia::cli

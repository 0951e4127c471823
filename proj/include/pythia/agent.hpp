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

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "pythia/evalqueue.hpp"
#include "pythia/features.hpp"
#include "pythia/qvstore.hpp"
#include "pythia/trace.hpp"

namespace pythia {

inline const std::vector<int>& default_action_list()
{
  static const std::vector<int> kActions{-6, -3, -1, 0, 1, 3, 4, 5, 10, 11, 12, 16, 22, 23, 30, 32};
  return kActions;
}

inline std::vector<FeatureSpec> default_features()
{
  return {{ControlComponent::PC, DataComponent::Delta}, {ControlComponent::None, DataComponent::Last4Deltas}};
}

struct AgentConfig {
  double alpha = 0.0065;
  double gamma = 0.556;
  double epsilon = 0.002;
  std::vector<int> actions = default_action_list();
  std::vector<FeatureSpec> features = default_features();
  RewardConfig rewards;
  std::uint64_t rng_seed = 0;
  std::size_t eq_capacity = 256;
  QVStoreConfig qvstore;
  bool global_delta = false;

  void validate() const
  {
    if (!(alpha >= 0.0 && alpha <= 1.0))
      throw std::invalid_argument("alpha must lie in [0, 1]");
    if (!(gamma >= 0.0 && gamma < 1.0))
      throw std::invalid_argument("gamma must lie in [0, 1)");
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
      throw std::invalid_argument("epsilon must lie in [0, 1]");
    if (actions.empty())
      throw std::invalid_argument("action list must not be empty");
    bool has_zero = false;
    for (int a : actions) {
      if (a < -63 || a > 63)
        throw std::invalid_argument("action offset " + std::to_string(a) + " outside [-63, 63]");
      has_zero |= a == 0;
    }
    if (!has_zero)
      throw std::invalid_argument("action list must contain the no-prefetch offset 0");
    validate_features(features);
    rewards.validate();
  }
};

struct StepResult {
  std::optional<LineAddr> prefetch_line;
  std::size_t action_index = 0;
  ActionKind kind = ActionKind::NoPrefetch;
  bool explored = false;
  std::optional<RewardLevel> demand_reward; // reward given to a matched EQ entry this step
};

// Online SARSA prefetcher: one action per demand, rewarded through the
// evaluation queue and learned when the entry leaves the queue.
class PythiaAgent
{
public:
  explicit PythiaAgent(AgentConfig cfg)
      : cfg_((cfg.validate(), std::move(cfg))), specs_(std::make_shared<const std::vector<FeatureSpec>>(cfg_.features)),
        features_(cfg_.global_delta), store_(cfg_.features.size(), cfg_.actions.size(), cfg_.gamma, cfg_.qvstore),
        eq_(cfg_.eq_capacity), rng_(cfg_.rng_seed), selections_(cfg_.actions.size(), 0)
  {
  }

  // `issue(line)` sends the prefetch to the memory system and returns true
  // when the line is already resident (the entry then starts out filled).
  template <typename Issue>
  StepResult step(const MemoryRequest& req, Bandwidth bw, Issue&& issue)
  {
    StepResult res;
    LineAddr line = line_of(req.address);
    res.demand_reward = eq_.match_demand(line);

    StateVector state = extract_state(req, features_, specs_);

    double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    if (u < cfg_.epsilon) {
      res.action_index = static_cast<std::size_t>(rng_() % cfg_.actions.size());
      res.explored = true;
      ++explored_;
    } else {
      res.action_index = store_.argmax_action(state).first;
    }
    ++selections_[res.action_index];

    EQEntry entry;
    entry.action_index = res.action_index;
    int offset = cfg_.actions[res.action_index];
    long target = static_cast<long>(page_offset_of_line(line)) + offset;
    if (offset == 0) {
      entry.kind = ActionKind::NoPrefetch;
    } else if (target < 0 || target >= static_cast<long>(kLinesPerPage)) {
      entry.kind = ActionKind::OutOfPage;
    } else {
      entry.kind = ActionKind::Prefetch;
      LineAddr pf = static_cast<LineAddr>(static_cast<std::int64_t>(line) + offset);
      entry.prefetch_line = pf;
      entry.filled = issue(pf);
      res.prefetch_line = pf;
    }
    res.kind = entry.kind;
    entry.state = std::move(state);

    if (auto evicted = eq_.insert(std::move(entry), bw))
      learn(*evicted);
    return res;
  }

  StepResult step(const MemoryRequest& req, Bandwidth bw)
  {
    return step(req, bw, [](LineAddr) { return false; });
  }

  void on_prefetch_fill(LineAddr line) { eq_.mark_filled(line); }

  const AgentConfig& config() const { return cfg_; }
  const QVStore& store() const { return store_; }
  QVStore& store() { return store_; }
  const EvaluationQueue& queue() const { return eq_; }
  const std::vector<std::uint64_t>& selections() const { return selections_; }
  std::uint64_t explored_steps() const { return explored_; }
  std::uint64_t sarsa_updates() const { return updates_; }

  // Q(S1,A1) += alpha * (R + gamma * Q(S2,A2) - Q(S1,A1))
  double sarsa_delta(const SarsaTuple& t) const
  {
    double q1 = store_.q_value(t.s1, t.a1);
    double q2 = store_.q_value(t.s2, t.a2);
    return cfg_.alpha * (t.reward + cfg_.gamma * q2 - q1);
  }

private:
  void learn(const EQEntry& evicted)
  {
    auto t = sarsa_feed(evicted, eq_.head(), cfg_.rewards);
    store_.update(t.s1, t.a1, sarsa_delta(t));
    ++updates_;
  }

  AgentConfig cfg_;
  std::shared_ptr<const std::vector<FeatureSpec>> specs_;
  FeatureComponentState features_;
  QVStore store_;
  EvaluationQueue eq_;
  std::mt19937_64 rng_;
  std::vector<std::uint64_t> selections_;
  std::uint64_t explored_ = 0;
  std::uint64_t updates_ = 0;
};

} // namespace pythia

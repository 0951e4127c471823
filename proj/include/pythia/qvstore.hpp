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
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pythia/features.hpp"

namespace pythia {

enum class PlaneHash { MultiplyShift, Identity };

// How a SARSA increment reaches the vaults: every vault, or only the vault
// that supplied the max.
enum class VaultUpdate { AllVaults, MaxVault };

struct QVStoreConfig {
  unsigned num_planes = 3;
  unsigned feature_bins = 128;
  std::vector<unsigned> shift_constants{0, 2, 5};
  PlaneHash hash = PlaneHash::MultiplyShift;
  VaultUpdate update_rule = VaultUpdate::AllVaults;
};

// Tile-coded table of partial Q-values for one feature.
class Plane
{
public:
  Plane(unsigned shift, std::uint64_t multiplier, unsigned bins, std::size_t actions, PlaneHash hash, double init)
      : shift_(shift), multiplier_(multiplier | 1), bins_(bins), actions_(actions), hash_(hash),
        index_bits_(static_cast<unsigned>(std::countr_zero(bins))), table_(static_cast<std::size_t>(bins) * actions, init)
  {
  }

  unsigned index(std::uint64_t feature) const
  {
    std::uint64_t v = feature >> shift_;
    if (hash_ == PlaneHash::Identity)
      return static_cast<unsigned>(v % bins_);
    if (index_bits_ == 0)
      return 0;
    return static_cast<unsigned>((v * multiplier_) >> (64 - index_bits_));
  }

  double get(unsigned idx, std::size_t action) const { return table_[idx * actions_ + action]; }
  double& at(unsigned idx, std::size_t action) { return table_[idx * actions_ + action]; }

  unsigned shift() const { return shift_; }
  unsigned bins() const { return bins_; }

private:
  unsigned shift_;
  std::uint64_t multiplier_;
  unsigned bins_;
  std::size_t actions_;
  PlaneHash hash_;
  unsigned index_bits_;
  std::vector<double> table_;
};

// Q(phi, a) for one feature: the sum of the partial values of all planes.
class Vault
{
public:
  Vault(const QVStoreConfig& cfg, std::size_t actions, double q_init)
  {
    static constexpr std::array<std::uint64_t, 8> kMultipliers{
        0x9e3779b97f4a7c15ULL, 0xc2b2ae3d27d4eb4fULL, 0x165667b19e3779f9ULL, 0xd6e8feb86659fd93ULL,
        0xff51afd7ed558ccdULL, 0xc4ceb9fe1a85ec53ULL, 0x94d049bb133111ebULL, 0xbf58476d1ce4e5b9ULL};
    for (unsigned p = 0; p < cfg.num_planes; ++p)
      planes_.emplace_back(cfg.shift_constants[p], kMultipliers[p % kMultipliers.size()], cfg.feature_bins, actions,
                           cfg.hash, q_init / cfg.num_planes);
  }

  double q(std::uint64_t feature, std::size_t action) const
  {
    double sum = 0.0;
    for (const auto& p : planes_)
      sum += p.get(p.index(feature), action);
    return sum;
  }

  void add(std::uint64_t feature, std::size_t action, double delta)
  {
    double share = delta / static_cast<double>(planes_.size());
    for (auto& p : planes_)
      p.at(p.index(feature), action) += share;
  }

  const std::vector<Plane>& planes() const { return planes_; }

private:
  std::vector<Plane> planes_;
};

class QVStore
{
public:
  QVStore(std::size_t num_vaults, std::size_t num_actions, double gamma, QVStoreConfig cfg = {})
      : cfg_(std::move(cfg)), num_actions_(num_actions), gamma_(gamma), q_init_(1.0 / (1.0 - gamma))
  {
    if (num_vaults == 0)
      throw std::invalid_argument("QVStore needs at least one vault");
    if (num_actions == 0)
      throw std::invalid_argument("QVStore needs at least one action");
    if (!(gamma >= 0.0 && gamma < 1.0))
      throw std::invalid_argument("gamma must lie in [0, 1)");
    if (cfg_.num_planes == 0)
      throw std::invalid_argument("qvstore.planes must be at least 1");
    if (cfg_.shift_constants.size() < cfg_.num_planes)
      throw std::invalid_argument("qvstore needs one shift constant per plane");
    if (cfg_.feature_bins == 0 || (cfg_.hash == PlaneHash::MultiplyShift && !std::has_single_bit(cfg_.feature_bins)))
      throw std::invalid_argument("qvstore.feature_bins must be a power of two for the multiply-shift hash");
    for (std::size_t v = 0; v < num_vaults; ++v)
      vaults_.emplace_back(cfg_, num_actions_, q_init_);
  }

  std::size_t num_vaults() const { return vaults_.size(); }
  std::size_t num_actions() const { return num_actions_; }
  double gamma() const { return gamma_; }
  double q_init() const { return q_init_; }
  const QVStoreConfig& config() const { return cfg_; }
  const Vault& vault(std::size_t i) const { return vaults_.at(i); }

  double vault_q(std::size_t vault, std::uint64_t feature, std::size_t action) const
  {
    return vaults_[vault].q(feature, action);
  }

  // Q(S, a) = max over vaults of the vault's feature-action value.
  double q_value(const StateVector& state, std::size_t action) const
  {
    check(state, action);
    return q_unchecked(state, action);
  }

  // First-in-order maximizer over all actions.
  std::pair<std::size_t, double> argmax_action(const StateVector& state) const
  {
    check(state, 0);
    std::size_t best = 0;
    double best_q = q_unchecked(state, 0);
    for (std::size_t a = 1; a < num_actions_; ++a) {
      double q = q_unchecked(state, a);
      if (q > best_q) {
        best_q = q;
        best = a;
      }
    }
    return {best, best_q};
  }

  void update(const StateVector& state, std::size_t action, double delta)
  {
    check(state, action);
    if (delta == 0.0)
      return;
    if (cfg_.update_rule == VaultUpdate::AllVaults) {
      for (std::size_t v = 0; v < vaults_.size(); ++v)
        vaults_[v].add(state.values[v], action, delta);
      return;
    }
    std::size_t best = 0;
    double best_q = vaults_[0].q(state.values[0], action);
    for (std::size_t v = 1; v < state.values.size(); ++v) {
      double q = vaults_[v].q(state.values[v], action);
      if (q > best_q) {
        best_q = q;
        best = v;
      }
    }
    vaults_[best].add(state.values[best], action, delta);
  }

  // One row per plane cell: vault,plane,feature_index,action,q
  void write_snapshot(std::ostream& out) const
  {
    out << "vault,plane,feature_index,action,q\n";
    char buf[96];
    for (std::size_t v = 0; v < vaults_.size(); ++v) {
      const auto& planes = vaults_[v].planes();
      for (std::size_t p = 0; p < planes.size(); ++p)
        for (unsigned f = 0; f < planes[p].bins(); ++f)
          for (std::size_t a = 0; a < num_actions_; ++a) {
            int n = std::snprintf(buf, sizeof buf, "%zu,%zu,%u,%zu,%.17g\n", v, p, f, a, planes[p].get(f, a));
            out.write(buf, n);
          }
    }
  }

private:
  void check(const StateVector& state, std::size_t action) const
  {
    if (action >= num_actions_)
      throw std::out_of_range("action index " + std::to_string(action) + " out of range");
    if (state.values.size() != vaults_.size())
      throw std::invalid_argument("state vector has " + std::to_string(state.values.size()) + " features, store has "
                                  + std::to_string(vaults_.size()) + " vaults");
  }

  double q_unchecked(const StateVector& state, std::size_t action) const
  {
    double best = vaults_[0].q(state.values[0], action);
    for (std::size_t v = 1; v < state.values.size(); ++v)
      best = std::max(best, vaults_[v].q(state.values[v], action));
    return best;
  }

  QVStoreConfig cfg_;
  std::size_t num_actions_;
  double gamma_;
  double q_init_;
  std::vector<Vault> vaults_;
};

} // namespace pythia

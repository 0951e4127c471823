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

#include <gtest/gtest.h>

#include <random>

#include "pythia/agent.hpp"
#include "pythia/evalqueue.hpp"

using namespace pythia;

namespace {

EQEntry prefetch_entry(LineAddr line, std::size_t action = 0, std::uint64_t feature = 0)
{
  EQEntry e;
  e.state = StateVector{{feature}, nullptr};
  e.action_index = action;
  e.kind = ActionKind::Prefetch;
  e.prefetch_line = line;
  return e;
}

EQEntry kind_entry(ActionKind k, std::uint64_t feature = 0)
{
  EQEntry e;
  e.state = StateVector{{feature}, nullptr};
  e.kind = k;
  return e;
}

} // namespace

TEST(EvalQueue, DemandMatchOnFilledEntryIsTimely)
{
  EvaluationQueue q;
  q.insert(prefetch_entry(100), Bandwidth::Low);
  q.mark_filled(100);
  auto r = q.match_demand(100);
  ASSERT_TRUE(r);
  EXPECT_EQ(*r, RewardLevel::AccurateTimely);
  EXPECT_EQ(q.entries().front().reward, RewardLevel::AccurateTimely);
}

TEST(EvalQueue, DemandMatchOnUnfilledEntryIsLate)
{
  EvaluationQueue q;
  q.insert(prefetch_entry(100), Bandwidth::Low);
  EXPECT_EQ(q.match_demand(100), RewardLevel::AccurateLate);
}

TEST(EvalQueue, NoMatchLeavesEntriesAlone)
{
  EvaluationQueue q;
  q.insert(prefetch_entry(100), Bandwidth::Low);
  EXPECT_FALSE(q.match_demand(101));
  EXPECT_FALSE(q.entries().front().reward);
}

TEST(EvalQueue, OldestUnrewardedEntryWins)
{
  EvaluationQueue q;
  q.insert(prefetch_entry(100, 1), Bandwidth::Low);
  q.insert(prefetch_entry(100, 2), Bandwidth::Low);
  q.match_demand(100);
  EXPECT_TRUE(q.entries()[0].reward);
  EXPECT_FALSE(q.entries()[1].reward);
  q.match_demand(100);
  EXPECT_TRUE(q.entries()[1].reward);
  EXPECT_FALSE(q.match_demand(100));
}

TEST(EvalQueue, NoPrefetchRewardedAtInsertion)
{
  EvaluationQueue q;
  RewardConfig basic;
  q.insert(kind_entry(ActionKind::NoPrefetch), Bandwidth::Low);
  ASSERT_EQ(q.entries().back().reward, RewardLevel::NoPrefetchLowBW);
  EXPECT_EQ(basic.value(*q.entries().back().reward), -4);
  q.insert(kind_entry(ActionKind::NoPrefetch), Bandwidth::High);
  EXPECT_EQ(basic.value(*q.entries().back().reward), -2);
}

TEST(EvalQueue, OutOfPageActionIsCoverageLoss)
{
  // the agent classifies offset +30 at page offset 40 as out of page
  AgentConfig cfg;
  cfg.epsilon = 0;
  cfg.actions = {0, 30};
  PythiaAgent agent(cfg);
  MemoryRequest req{0, 0x400, 40 * 64, AccessKind::Load};
  FeatureComponentState fresh;
  agent.store().update(extract_state(req, fresh, cfg.features), 1, 10.0);
  auto res = agent.step(req, Bandwidth::Low);
  EXPECT_EQ(res.action_index, 1u);
  EXPECT_EQ(res.kind, ActionKind::OutOfPage);
  EXPECT_FALSE(res.prefetch_line);
  ASSERT_EQ(agent.queue().entries().back().reward, RewardLevel::CoverageLoss);
  EXPECT_EQ(cfg.rewards.value(RewardLevel::CoverageLoss), -12);
}

TEST(EvalQueue, EvictionAssignsInaccurateByBandwidth)
{
  EvaluationQueue q(256);
  q.insert(prefetch_entry(1), Bandwidth::Low);
  for (int i = 0; i < 255; ++i)
    EXPECT_FALSE(q.insert(kind_entry(ActionKind::NoPrefetch), Bandwidth::Low));
  auto ev = q.insert(kind_entry(ActionKind::NoPrefetch), Bandwidth::Low);
  ASSERT_TRUE(ev);
  EXPECT_EQ(ev->reward, RewardLevel::InaccurateLowBW);
  EXPECT_EQ(q.size(), 256u);
  EXPECT_EQ(q.counters().unmatched_evictions, 1u);

  EvaluationQueue h(1);
  h.insert(prefetch_entry(1), Bandwidth::High);
  auto ev2 = h.insert(prefetch_entry(2), Bandwidth::High);
  ASSERT_TRUE(ev2);
  EXPECT_EQ(ev2->reward, RewardLevel::InaccurateHighBW);
  EXPECT_EQ(RewardConfig{}.value(*ev2->reward), -14);
}

TEST(EvalQueue, EvictionKeepsEarlierReward)
{
  EvaluationQueue q(1);
  q.insert(prefetch_entry(5), Bandwidth::High);
  q.mark_filled(5);
  q.match_demand(5);
  auto ev = q.insert(prefetch_entry(6), Bandwidth::High);
  ASSERT_TRUE(ev);
  EXPECT_EQ(ev->reward, RewardLevel::AccurateTimely);
  EXPECT_EQ(q.counters().unmatched_evictions, 0u);
}

TEST(EvalQueue, FillDoesNotTouchRewardedEntry)
{
  EvaluationQueue q;
  q.insert(prefetch_entry(5), Bandwidth::Low);
  q.match_demand(5);
  q.mark_filled(5);
  EXPECT_EQ(q.entries().front().reward, RewardLevel::AccurateLate);
  EXPECT_TRUE(q.entries().front().filled);
}

TEST(EvalQueue, CapacityOneHeadIsNewEntry)
{
  EvaluationQueue q(1);
  q.insert(kind_entry(ActionKind::NoPrefetch, 1), Bandwidth::Low);
  auto ev = q.insert(kind_entry(ActionKind::NoPrefetch, 2), Bandwidth::Low);
  ASSERT_TRUE(ev);
  EXPECT_EQ(ev->state.values[0], 1u);
  EXPECT_EQ(q.head().state.values[0], 2u);
}

TEST(EvalQueue, SarsaFeedNeedsReward)
{
  EQEntry e = prefetch_entry(1);
  EXPECT_THROW(sarsa_feed(e, e, RewardConfig{}), MissingReward);
}

TEST(EvalQueue, SarsaStepOnFreshStore)
{
  AgentConfig cfg;
  PythiaAgent agent(cfg);
  EQEntry ev = prefetch_entry(1, 3);
  ev.state = StateVector{{11, 12}, nullptr};
  ev.reward = RewardLevel::AccurateTimely;
  EQEntry head = prefetch_entry(2, 5);
  head.state = StateVector{{21, 22}, nullptr};
  auto t = sarsa_feed(ev, head, cfg.rewards);
  EXPECT_EQ(t.reward, 20.0);
  EXPECT_EQ(t.a1, 3u);
  EXPECT_EQ(t.a2, 5u);
  // r + gamma*q_init - q_init = 20 - 1
  EXPECT_NEAR(agent.sarsa_delta(t), 0.0065 * 19, 1e-9);
  EXPECT_NEAR(agent.sarsa_delta(t), 0.1235, 1e-9);
}

TEST(EvalQueue, SarsaFixedPoint)
{
  AgentConfig cfg;
  cfg.rewards.r_at = (1.0 - cfg.gamma) * (1.0 / (1.0 - cfg.gamma)); // R = (1 - gamma) Q1
  PythiaAgent agent(cfg);
  EQEntry ev = prefetch_entry(1, 0);
  ev.state = StateVector{{7, 8}, nullptr};
  ev.reward = RewardLevel::AccurateTimely;
  auto t = sarsa_feed(ev, ev, cfg.rewards);
  EXPECT_NEAR(agent.sarsa_delta(t), 0.0, 1e-12);
}

TEST(EvalQueue, RewardConservation)
{
  // every evicted entry carries exactly one reward; counters add up
  std::mt19937_64 rng(3);
  EvaluationQueue q(16);
  std::uint64_t evicted_rewarded = 0, inserted = 0;
  for (int i = 0; i < 5000; ++i) {
    auto bw = rng() % 2 ? Bandwidth::High : Bandwidth::Low;
    switch (rng() % 4) {
    case 0: q.match_demand(rng() % 32); break;
    case 1: q.mark_filled(rng() % 32); break;
    default: {
      EQEntry e = rng() % 3 == 0 ? kind_entry(rng() % 2 ? ActionKind::NoPrefetch : ActionKind::OutOfPage)
                                 : prefetch_entry(rng() % 32);
      ++inserted;
      if (auto ev = q.insert(std::move(e), bw)) {
        ASSERT_TRUE(ev->reward);
        ++evicted_rewarded;
      }
    }
    }
  }
  std::uint64_t resident_rewarded = 0;
  for (const auto& e : q.entries())
    resident_rewarded += e.reward.has_value();
  const auto& c = q.counters();
  EXPECT_EQ(c.evictions, evicted_rewarded);
  EXPECT_EQ(inserted, c.evictions + q.size());
  EXPECT_EQ(c.total_assigned(), evicted_rewarded + resident_rewarded);
  EXPECT_EQ(c.matched_demands, c.count(RewardLevel::AccurateTimely) + c.count(RewardLevel::AccurateLate));
  EXPECT_EQ(c.unmatched_evictions,
            c.count(RewardLevel::InaccurateHighBW) + c.count(RewardLevel::InaccurateLowBW));
}

TEST(EvalQueue, RejectsZeroCapacity) { EXPECT_THROW(EvaluationQueue(0), std::invalid_argument); }

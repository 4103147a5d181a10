/*
 * Copyright 2026 The keen2act Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "model_builders.hpp"

#include <keen2act/error.hpp>
#include <keen2act/recommend.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace keen2act {
namespace {

using testing::hand_model;
using testing::random_model;

TEST(SelectItemsTest, InclusiveBoundary) {
  auto m = hand_model(1, {0.3, -0.2}, {{0, 0}, {0, 0}}, {0, 0}, {0, 0});
  m.thresholds.item_thresholds = {keen_score(m.keen, m.features, 0, 0),
                                  std::nextafter(keen_score(m.keen, m.features, 0, 1), 1.0)};
  const auto sel = select_items(m, 0);
  ASSERT_EQ(sel.size(), 1u);
  EXPECT_EQ(sel[0].item, 0u);
}

TEST(SelectItemsTest, HugeThresholdsSelectNothing) {
  auto m = hand_model(1, {5, 6, 7}, {{0}, {0}, {0}}, {1e300, 1e300, 1e300}, {0});
  EXPECT_TRUE(select_items(m, 0).empty());
  EXPECT_TRUE(recommend(m, 0).entries.empty());
}

TEST(SelectItemsTest, FiveItemOracle) {
  const std::vector<double> keen = {0.5, -1.0, 2.0, 0.1, 0.5};
  const std::vector<double> delta = {0.4, -1.5, 2.5, 0.1, 0.0};
  auto m = hand_model(1, keen, std::vector<std::vector<double>>(5, {0.0}), delta, {0});
  std::vector<ItemId> expected;
  for (ItemId v = 0; v < 5; ++v) {
    if (keen[v] >= delta[v]) expected.push_back(v);
  }
  std::vector<ItemId> got;
  for (const auto& s : select_items(m, 0)) got.push_back(s.item);
  std::sort(got.begin(), got.end());
  EXPECT_EQ(got, expected);
  // Sorted by score, ties by id: items 0 and 4 share 0.5.
  const auto sel = select_items(m, 0);
  EXPECT_EQ(sel[0].item, 0u);
  EXPECT_EQ(sel[1].item, 4u);
}

TEST(SelectItemsTest, ColdItemsUseFallback) {
  auto m = hand_model(1, {0.5, 0.5}, {{0}, {0}}, {0.0, 0.0}, {0});
  m.features.warm_items = {1, 0};
  m.thresholds.global_item_fallback = 1.0;
  const auto sel = select_items(m, 0);
  ASSERT_EQ(sel.size(), 1u);
  EXPECT_EQ(sel[0].item, 0u);
}

TEST(SelectItemsTest, Candidates) {
  auto m = hand_model(1, {1, 1, 1, 1}, std::vector<std::vector<double>>(4, {1.0}),
                      {0, 0, 0, 0}, {0});
  const std::vector<ItemId> only = {3, 1};
  const auto sel = select_items(m, 0, std::span<const ItemId>(only));
  ASSERT_EQ(sel.size(), 2u);
  EXPECT_EQ(sel[0].item, 1u);
  EXPECT_EQ(sel[1].item, 3u);
}

TEST(SelectItemsTest, UnknownUser) {
  auto m = hand_model(2, {1}, {{1}}, {0}, {0});
  EXPECT_THROW(select_items(m, 2), DimensionError);
  EXPECT_THROW(recommend(m, 5), DimensionError);
}

TEST(SelectActivitiesTest, PassingSetAndContract) {
  auto m = hand_model(1, {1.0, -1.0}, {{0.7, 0.2}, {0.9, 0.9}}, {0.0, 0.0}, {0.1, 0.5});
  const auto acts = select_activities(m, 0, 0);
  ASSERT_EQ(acts.size(), 1u);
  EXPECT_EQ(acts[0].activity, 0u);
  m.thresholds.activity_thresholds = {0.1, 0.1};
  EXPECT_EQ(select_activities(m, 0, 0).size(), 2u);
  m.thresholds.activity_thresholds = {1.0, 1.0};
  EXPECT_TRUE(select_activities(m, 0, 0).empty());
  EXPECT_THROW(select_activities(m, 0, 1), ContractError);
}

TEST(DecideTest, AndSemantics) {
  auto m = hand_model(1, {1.0, -1.0}, {{5.0, -5.0}, {5.0, 5.0}}, {0.0, 0.0}, {0.0, 0.0});
  EXPECT_TRUE(decide(m, 0, 0, 0));
  EXPECT_FALSE(decide(m, 0, 0, 1));
  EXPECT_FALSE(decide(m, 0, 1, 0));
  EXPECT_THROW(decide(m, 0, 0, 2), DimensionError);
}

TEST(RecommendTest, KeenPrecedenceOrdering) {
  auto m = hand_model(1, {0.9, 0.5}, {{0.7, 0.2}, {0.8, -1.0}}, {0.0, 0.0}, {0.0, 0.0});
  const auto list = recommend(m, 0);
  ASSERT_EQ(list.entries.size(), 3u);
  EXPECT_EQ(list.entries[0].item, 0u);
  EXPECT_EQ(list.entries[0].activity, 0u);
  EXPECT_EQ(list.entries[1].item, 0u);
  EXPECT_EQ(list.entries[1].activity, 1u);
  EXPECT_EQ(list.entries[2].item, 1u);
  EXPECT_EQ(list.entries[2].activity, 0u);
  const auto top = recommend(m, 0, 1);
  ASSERT_EQ(top.entries.size(), 1u);
  EXPECT_EQ(top.entries[0].item, 0u);
  EXPECT_EQ(top.entries[0].activity, 0u);
}

TEST(RecommendTest, ItemWithoutActivitiesIsDropped) {
  auto m = hand_model(1, {0.9, 0.5}, {{-3.0, -3.0}, {0.8, 0.1}}, {0.0, 0.0}, {0.0, 0.0});
  const auto list = recommend(m, 0);
  ASSERT_EQ(list.entries.size(), 2u);
  EXPECT_EQ(list.entries[0].item, 1u);
}

TEST(RecommendTest, EntriesRespectThresholdsAndOrder) {
  oracle::Gen g(14);
  for (int trial = 0; trial < 30; ++trial) {
    const auto m = random_model(g, 3, 15, 3);
    for (UserId u = 0; u < 3; ++u) {
      const auto list = recommend(m, u);
      for (std::size_t i = 0; i < list.entries.size(); ++i) {
        const auto& e = list.entries[i];
        EXPECT_GE(e.keen_score, m.thresholds.item_threshold(e.item, m.features.is_cold(e.item)));
        EXPECT_GE(e.act_score, m.thresholds.activity_threshold(e.activity));
        if (i == 0) continue;
        const auto& p = list.entries[i - 1];
        if (p.item == e.item) {
          EXPECT_TRUE(p.act_score > e.act_score ||
                      (p.act_score == e.act_score && p.activity < e.activity));
        } else {
          EXPECT_TRUE(p.keen_score > e.keen_score ||
                      (p.keen_score == e.keen_score && p.item < e.item));
        }
      }
      EXPECT_EQ(recommend(m, u), list);
    }
  }
}

TEST(RecommendTest, SetEqualsDecideEnumeration) {
  oracle::Gen g(15);
  for (int trial = 0; trial < 50; ++trial) {
    const auto nv = g.between(1, 20);
    const auto nz = g.between(1, 3);
    const auto m = random_model(g, 2, nv, nz);
    for (UserId u = 0; u < 2; ++u) {
      std::set<std::pair<ItemId, ActivityId>> from_list, from_decide;
      for (const auto& e : recommend(m, u).entries) from_list.insert({e.item, e.activity});
      for (ItemId v = 0; v < nv; ++v)
        for (ActivityId z = 0; z < nz; ++z)
          if (decide(m, u, v, z)) from_decide.insert({v, z});
      EXPECT_EQ(from_list, from_decide);
    }
  }
}

TEST(RecommendTest, ShiftInvariance) {
  oracle::Gen g(16);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = random_model(g, 2, 12, 2);
    auto shifted = m;
    const double c = 0.375;  // exactly representable
    shifted.keen.params.w0 += c;
    for (auto& d : shifted.thresholds.item_thresholds) d += c;
    shifted.thresholds.global_item_fallback += c;
    for (UserId u = 0; u < 2; ++u) {
      const auto a = recommend(m, u);
      const auto b = recommend(shifted, u);
      ASSERT_EQ(a.entries.size(), b.entries.size());
      for (std::size_t i = 0; i < a.entries.size(); ++i) {
        EXPECT_EQ(a.entries[i].item, b.entries[i].item);
        EXPECT_EQ(a.entries[i].activity, b.entries[i].activity);
        EXPECT_NEAR(b.entries[i].keen_score - a.entries[i].keen_score, c, 1e-12);
      }
    }
  }
}

TEST(RecommendTest, DecideAgreesWithComposition) {
  oracle::Gen g(17);
  const auto m = random_model(g, 4, 20, 3);
  for (int i = 0; i < 1000; ++i) {
    const auto u = static_cast<UserId>(g.index(4));
    const auto v = static_cast<ItemId>(g.index(20));
    const auto z = static_cast<ActivityId>(g.index(3));
    const auto items = select_items(m, u);
    const bool selected = std::any_of(items.begin(), items.end(),
                                      [&](const ScoredItem& s) { return s.item == v; });
    bool expected = false;
    if (selected) {
      for (const auto& a : select_activities(m, u, v)) expected |= a.activity == z;
    }
    EXPECT_EQ(decide(m, u, v, z), expected);
  }
}

TEST(RecommendTest, OutputFormat) {
  auto m = hand_model(1, {0.5}, {{0.25, -1.0}}, {0.0}, {0.0, 0.0});
  Catalog c;
  c.users.get_or_add("alice");
  c.items.get_or_add("repo");
  c.activities.get_or_add("fork");
  c.activities.get_or_add("watch");
  std::ostringstream out;
  write_recommendations(out, c, recommend(m, 0));
  EXPECT_EQ(out.str(), "alice\trepo\tfork\t0.5\t0.25\t1\n");
}

}  // namespace
}  // namespace keen2act

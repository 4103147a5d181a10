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

#pragma once

#include <keen2act/training.hpp>

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace keen2act {

struct ScoredItem {
  ItemId item = 0;
  double score = 0.0;

  friend bool operator==(const ScoredItem&, const ScoredItem&) = default;
};

struct ScoredActivity {
  ActivityId activity = 0;
  double score = 0.0;

  friend bool operator==(const ScoredActivity&, const ScoredActivity&) = default;
};

struct RecommendationEntry {
  ItemId item = 0;
  ActivityId activity = 0;
  double keen_score = 0.0;
  double act_score = 0.0;

  friend bool operator==(const RecommendationEntry&,
                         const RecommendationEntry&) = default;
};

// R+_u: Keen order first, Act order within an item, ties by ascending id.
struct RecommendationList {
  UserId user = 0;
  std::vector<RecommendationEntry> entries;

  friend bool operator==(const RecommendationList&,
                         const RecommendationList&) = default;
};

// V+_u = { v : K(u, v) >= delta_K(v) } over the candidates (all items when
// none are given), sorted by descending score then ascending id.
std::vector<ScoredItem> select_items(
  const TrainedModel& model, UserId user,
  std::optional<std::span<const ItemId>> candidates = std::nullopt);

// Z+_{u,v}; throws ContractError when v is not in V+_u.
std::vector<ScoredActivity> select_activities(const TrainedModel& model,
                                              UserId user, ItemId item);

// I[v in V+_u and z in Z+_{u,v}]
bool decide(const TrainedModel& model, UserId user, ItemId item,
            ActivityId activity);

RecommendationList recommend(
  const TrainedModel& model, UserId user, std::size_t k = kNoCutoff,
  std::optional<std::span<const ItemId>> candidates = std::nullopt);

// `user<TAB>item<TAB>activity<TAB>keen_score<TAB>act_score<TAB>rank`, rank
// starting at 1.
void write_recommendations(std::ostream& out, const Catalog& catalog,
                           const RecommendationList& list);

}  // namespace keen2act

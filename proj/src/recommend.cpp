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

#include <keen2act/error.hpp>
#include <keen2act/recommend.hpp>

#include <algorithm>
#include <charconv>
#include <ostream>

namespace keen2act {

namespace {

void check_user(const TrainedModel& model, UserId user) {
  if (user >= model.num_users()) {
    throw DimensionError("unknown user id " + std::to_string(user));
  }
}

std::vector<ScoredItem> select_with(const TrainedModel& model,
                                    UserScorer& scorer,
                                    std::optional<std::span<const ItemId>> candidates) {
  std::vector<ScoredItem> selected;
  const auto& f = model.features;
  auto consider = [&](ItemId v) {
    const double s = scorer.keen(v);
    if (s >= model.thresholds.item_threshold(v, f.is_cold(v))) {
      selected.push_back(ScoredItem{v, s});
    }
  };
  if (candidates) {
    for (const auto v : *candidates) {
      consider(v);
    }
  } else {
    for (ItemId v = 0; v < model.num_items(); ++v) {
      consider(v);
    }
  }
  std::sort(selected.begin(), selected.end(),
            [](const ScoredItem& a, const ScoredItem& b) {
              return a.score != b.score ? a.score > b.score : a.item < b.item;
            });
  return selected;
}

std::vector<ScoredActivity> activities_with(const TrainedModel& model,
                                            UserScorer& scorer, ItemId item) {
  const std::size_t n_acts = model.num_activities();
  std::vector<double> scores(n_acts);
  scorer.act_all(item, scores);
  std::vector<ScoredActivity> selected;
  for (ActivityId z = 0; z < n_acts; ++z) {
    if (scores[z] >= model.thresholds.activity_threshold(z)) {
      selected.push_back(ScoredActivity{z, scores[z]});
    }
  }
  std::sort(selected.begin(), selected.end(),
            [](const ScoredActivity& a, const ScoredActivity& b) {
              return a.score != b.score ? a.score > b.score
                                        : a.activity < b.activity;
            });
  return selected;
}

}  // namespace

std::vector<ScoredItem> select_items(
  const TrainedModel& model, UserId user,
  std::optional<std::span<const ItemId>> candidates) {
  check_user(model, user);
  UserScorer scorer(model.keen, model.features, user);
  return select_with(model, scorer, candidates);
}

std::vector<ScoredActivity> select_activities(const TrainedModel& model,
                                              UserId user, ItemId item) {
  check_user(model, user);
  const auto& f = model.features;
  UserScorer keen(model.keen, f, user);
  if (keen.keen(item) < model.thresholds.item_threshold(item, f.is_cold(item))) {
    throw ContractError("item " + std::to_string(item) +
                        " was not selected by the Keen stage");
  }
  UserScorer act(model.act, f, user);
  return activities_with(model, act, item);
}

bool decide(const TrainedModel& model, UserId user, ItemId item,
            ActivityId activity) {
  check_user(model, user);
  if (activity >= model.num_activities()) {
    throw DimensionError("unknown activity id " + std::to_string(activity));
  }
  const auto& f = model.features;
  UserScorer keen(model.keen, f, user);
  if (keen.keen(item) < model.thresholds.item_threshold(item, f.is_cold(item))) {
    return false;
  }
  UserScorer act(model.act, f, user);
  return act.act(item, activity) >= model.thresholds.activity_threshold(activity);
}

RecommendationList recommend(const TrainedModel& model, UserId user,
                             std::size_t k,
                             std::optional<std::span<const ItemId>> candidates) {
  check_user(model, user);
  RecommendationList list;
  list.user = user;
  UserScorer keen(model.keen, model.features, user);
  UserScorer act(model.act, model.features, user);
  for (const auto& item : select_with(model, keen, candidates)) {
    for (const auto& a : activities_with(model, act, item.item)) {
      if (list.entries.size() >= k) {
        return list;
      }
      list.entries.push_back(
        RecommendationEntry{item.item, a.activity, item.score, a.score});
    }
  }
  return list;
}

void write_recommendations(std::ostream& out, const Catalog& catalog,
                           const RecommendationList& list) {
  char buf[64];
  auto num = [&buf](double x) {
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
  };
  std::size_t rank = 0;
  for (const auto& e : list.entries) {
    out << catalog.users.raw(list.user) << '\t' << catalog.items.raw(e.item)
        << '\t' << catalog.activities.raw(e.activity) << '\t'
        << num(e.keen_score) << '\t' << num(e.act_score) << '\t' << ++rank
        << '\n';
  }
}

}  // namespace keen2act

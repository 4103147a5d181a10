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

#include <keen2act/data_model.hpp>
#include <keen2act/features.hpp>
#include <keen2act/training.hpp>

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace keen2act {

struct PairKey {
  ItemId item = 0;
  ActivityId activity = 0;

  friend auto operator<=>(const PairKey&, const PairKey&) = default;
};

using RankedPairs = std::vector<PairKey>;

// Bijection (item, activity) <-> item * |Z| + activity.
class FlatPairSpace {
 public:
  FlatPairSpace(std::size_t num_items, std::size_t num_activities);

  std::size_t size() const noexcept { return num_items_ * num_activities_; }
  std::uint32_t flatten(ItemId item, ActivityId activity) const;
  PairKey unflatten(std::uint32_t flat) const;

 private:
  std::size_t num_items_;
  std::size_t num_activities_;
};

// AP@k = (1 / min(|relevant|, k)) * sum over relevant hits at rank i <= k of
// precision@i. `relevant` need not be sorted.
double average_precision_at_k(std::span<const PairKey> ranked,
                              std::span<const PairKey> relevant,
                              std::size_t k = kNoCutoff);

// Mean AP@k over users holding at least one test triple. `lists[u]` is user
// u's ranked list; users beyond lists.size() count as empty lists.
double map_at_k(std::span<const RankedPairs> lists, const InteractionStore& test,
                std::size_t k = kNoCutoff);

enum class Variant { kKeen2Act, kKeenOnly, kActOnly, kFmBpr, kFmWarp };

inline constexpr std::array<Variant, 5> kAllVariants = {
  Variant::kFmBpr, Variant::kFmWarp, Variant::kKeenOnly, Variant::kActOnly,
  Variant::kKeen2Act};

// keen2act, keen_only, act_only, fm_bpr, fm_warp
std::string variant_name(Variant variant);
std::string variant_label(Variant variant);
Variant parse_variant(std::string_view name);

enum class BaselineKind { kBpr, kWarp };

// One FM over the flat (item, activity) space.
struct FlatModel {
  BaselineKind kind = BaselineKind::kWarp;
  RankingModel model;
  FeatureSet features;
};

class BaselineTrainer {
 public:
  BaselineTrainer(BaselineKind kind, const InteractionStore& train,
                  FeatureSet features, TrainConfig config);

  // One update for the positive triple; returns the loss term (0 when no
  // update happened).
  double bpr_step(UserId user, ItemId item, ActivityId activity);
  double warp_step(UserId user, ItemId item, ActivityId activity);
  double epoch();
  FlatModel run() &&;

  RankingModel& model() noexcept { return flat_.model; }

 private:
  std::span<const std::uint32_t> user_positives(UserId user) const;

  BaselineKind kind_;
  const InteractionStore& train_;
  TrainConfig config_;
  FlatModel flat_;
  FlatPairSpace space_;
  AdamState adam_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> user_offsets_;
  std::vector<std::uint32_t> flat_positives_;
  std::size_t epoch_ = 0;
};

FlatModel train_baseline(BaselineKind kind, const InteractionStore& train,
                         FeatureSet features, const TrainConfig& config);

// Full flat ranking by descending score, ties by ascending flat id.
RankedPairs rank_flat(const FlatModel& model, UserId user);

// Keen2Act, Keen-only or Act-only lists from a trained two-stage model.
RankedPairs rank_two_stage(const TrainedModel& model, Variant variant,
                           UserId user);

// Drops pairs the user already has in `train`.
RankedPairs exclude_seen(RankedPairs ranked, const InteractionStore& train,
                         UserId user);

inline constexpr std::array<std::size_t, 5> kCutoffs = {5, 10, 20, 50,
                                                        kNoCutoff};
std::string metric_name(std::size_t cutoff);

struct EvalReport {
  std::string dataset;
  std::vector<Variant> variants;
  // values[variant index][split][cutoff index]
  std::vector<std::vector<std::array<double, kCutoffs.size()>>> values;
  std::size_t users_evaluated = 0;
  double runtime_seconds = 0.0;

  std::size_t num_splits() const {
    return values.empty() ? 0 : values.front().size();
  }
  double mean(std::size_t variant_index, std::size_t cutoff_index) const;
  std::optional<std::size_t> index_of(Variant variant) const;

  // `dataset<TAB>variant<TAB>metric<TAB>split<TAB>value`, split being the
  // index or "mean".
  void write_records(std::ostream& out) const;
  // Aligned table of mean values, one row per variant.
  void write_table(std::ostream& out) const;
};

struct ExperimentConfig {
  TrainConfig train;
  double split_fraction = 0.8;
  std::size_t n_splits = 5;
  std::vector<Variant> variants{kAllVariants.begin(), kAllVariants.end()};
  bool exclude_train_pairs = true;
};

// MAP@{5,10,20,50,inf} of the chosen variants on one split.
std::vector<std::array<double, kCutoffs.size()>> run_split(
  const Dataset& dataset, const SplitPair& split, const TagMap* tags,
  const std::vector<Variant>& variants, const ExperimentConfig& config,
  std::size_t* users_evaluated = nullptr);

std::array<double, kCutoffs.size()> run_variant(Variant variant,
                                                const Dataset& dataset,
                                                const SplitPair& split,
                                                const TagMap* tags,
                                                const ExperimentConfig& config);

// n_splits seeded splits; split i uses seed train.seed + i for both the
// split and the models.
EvalReport run_experiment(const std::string& name, const Dataset& dataset,
                          const TagMap* tags, const ExperimentConfig& config);

}  // namespace keen2act

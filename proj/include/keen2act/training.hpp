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
#include <keen2act/fm.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace keen2act {

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t max_neg_samples = 50;
  std::size_t k = 32;
  double init_scale = 0.01;
  AdamConfig adam;
  double lambda_keen = 0.01;
  double lambda_act = 0.01;
  double margin = 1.0;
  std::uint64_t seed = 42;
  std::size_t threshold_epochs = 10;
  // Negatives per positive drawn for threshold learning; nullopt enumerates
  // every item.
  std::optional<double> threshold_negative_ratio;
  std::optional<double> threshold_lr;
  bool id_onehots = true;
  UserFeatureScaling user_feature_scaling = UserFeatureScaling::kL2;
  bool early_stop = false;
  // For every accepted WARP pair, take a plain gradient step of size
  // min(lr, 1e-3) on a copy and count pairs whose hinge did not shrink.
  bool diagnostic_checks = false;

  void validate() const;
  LayoutOptions layout_options() const;
  AdamConfig threshold_adam() const;
};

// Per-item Keen thresholds, per-activity Act thresholds and the fallback
// used for items without a learned threshold.
struct ThresholdTable {
  std::vector<double> item_thresholds;
  std::vector<double> activity_thresholds;
  double global_item_fallback = 0.0;

  double item_threshold(ItemId item, bool cold) const;
  double activity_threshold(ActivityId activity) const {
    return activity_thresholds.at(activity);
  }

  friend bool operator==(const ThresholdTable&, const ThresholdTable&) = default;
};

struct RankingModel {
  FeatureLayout layout;
  FMParameters params;

  friend bool operator==(const RankingModel&, const RankingModel&) = default;
};

struct ReportRecord {
  std::size_t epoch = 0;
  std::string phase;
  std::string metric;
  double value = 0.0;
};

struct TrainingReport {
  std::vector<ReportRecord> records;
  std::size_t keen_skipped = 0;
  std::size_t act_skipped = 0;
  std::size_t hinge_checks = 0;
  std::size_t hinge_not_decreased = 0;

  void add(std::size_t epoch, std::string phase, std::string metric,
           double value);
  // `epoch<TAB>phase<TAB>metric<TAB>value` lines.
  void write(std::ostream& out) const;
};

struct TrainedModel {
  RankingModel keen;
  RankingModel act;
  ThresholdTable thresholds;
  FeatureSet features;
  TrainingReport report;

  std::size_t num_users() const { return keen.layout.num_users(); }
  std::size_t num_items() const { return keen.layout.num_items(); }
  std::size_t num_activities() const { return act.layout.num_activities(); }
};

// Harmonic rank weight H_n.
double phi(std::size_t n);

// max(1, floor((total_negatives - 1) / draws_to_violation)).
std::size_t estimate_rank(std::size_t total_negatives,
                          std::size_t draws_to_violation);

// Numerically stable CE(x, y) = -[y ln s(x) + (1 - y) ln(1 - s(x))].
double cross_entropy(double x, double label);
double sigmoid(double x);
// d CE(score - delta, label) / d delta.
double threshold_gradient(double score, double delta, double label);

// Scores many items for one user, caching the user half of the input.
class UserScorer {
 public:
  UserScorer(const RankingModel& model, const FeatureSet& features,
             UserId user);

  double keen(ItemId item);
  double act(ItemId item, ActivityId activity);
  // Act scores for every activity of one item.
  void act_all(ItemId item, std::span<double> out);

 private:
  void load_item(ItemId item);

  const RankingModel& model_;
  const FeatureSet& features_;
  FmPartial user_part_;
  FmPartial item_part_;
  FmPartial scratch_;
};

double keen_score(const RankingModel& model, const FeatureSet& features,
                  UserId user, ItemId item);
double act_score(const RankingModel& model, const FeatureSet& features,
                 UserId user, ItemId item, ActivityId activity);

// Per-coordinate Adam on thresholds minimizing CE(score - delta, label).
class ThresholdLearner {
 public:
  ThresholdLearner(std::size_t size, const AdamConfig& config,
                   double initial = 0.0);

  // Returns the sample's loss before the update.
  double update(std::size_t index, double score, bool label);
  const std::vector<double>& thresholds() const noexcept { return delta_; }

 private:
  AdamConfig config_;
  std::vector<double> delta_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::vector<std::uint64_t> t_;
};

struct WarpStepResult {
  bool skipped = false;
  bool updated = false;
  std::size_t draws = 0;
  double loss = 0.0;
};

// Algorithm state for training the Keen and Act scorers: Phase 1 WARP rank
// learning followed by Phase 2 threshold learning.
class Trainer {
 public:
  Trainer(const InteractionStore& train, FeatureSet features,
          TrainConfig config);

  WarpStepResult warp_step_keen(UserId user, ItemId item);
  WarpStepResult warp_step_act(UserId user, ItemId item, ActivityId activity);

  // One Phase 1 epoch; returns the sampled WARP loss (Keen + Act).
  double rank_epoch();
  void learn_thresholds_keen();
  void learn_thresholds_act();

  // Runs every phase per the config and returns the model.
  TrainedModel run() &&;

  RankingModel& keen() noexcept { return model_.keen; }
  RankingModel& act() noexcept { return model_.act; }
  const TrainedModel& model() const noexcept { return model_; }
  TrainedModel release() && { return std::move(model_); }
  std::size_t epochs_run() const noexcept { return epoch_; }

 private:
  WarpStepResult apply_warp(RankingModel& model, AdamState& adam,
                            double lambda, const SparseVector& pos,
                            const SparseVector& neg, double weight,
                            double pos_score, double neg_score);

  const InteractionStore& train_;
  TrainConfig config_;
  TrainedModel model_;
  AdamState keen_adam_;
  AdamState act_adam_;
  std::mt19937_64 rng_;
  std::size_t epoch_ = 0;
  bool nonfinite_score_ = false;
};

TrainedModel train(const InteractionStore& train, FeatureSet features,
                   const TrainConfig& config);

// Exact WARP objective with ranks from full enumeration over V \ V+_u.
double exact_keen_warp_loss(const RankingModel& keen, const FeatureSet& features,
                            const InteractionStore& train, double margin);

}  // namespace keen2act

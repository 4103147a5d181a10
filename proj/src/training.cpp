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
#include <keen2act/sampling.hpp>
#include <keen2act/training.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <ostream>

namespace keen2act {

void TrainConfig::validate() const {
  if (epochs < 1) {
    throw ConfigError("epochs must be >= 1");
  }
  if (max_neg_samples < 1) {
    throw ConfigError("max_neg_samples must be >= 1");
  }
  if (k < 1) {
    throw ConfigError("k must be >= 1");
  }
  if (lambda_keen < 0.0 || lambda_act < 0.0) {
    throw ConfigError("regularization strengths must be >= 0");
  }
  if (!(margin > 0.0)) {
    throw ConfigError("margin must be > 0");
  }
  if (!(adam.lr > 0.0) || !(adam.eps > 0.0) || adam.beta1 < 0.0 ||
      adam.beta1 >= 1.0 || adam.beta2 < 0.0 || adam.beta2 >= 1.0) {
    throw ConfigError("invalid Adam hyperparameters");
  }
  if (threshold_negative_ratio && !(*threshold_negative_ratio > 0.0)) {
    throw ConfigError("threshold_negative_ratio must be > 0 or 'full'");
  }
  if (threshold_lr && !(*threshold_lr > 0.0)) {
    throw ConfigError("threshold_lr must be > 0");
  }
  if (init_scale < 0.0) {
    throw ConfigError("init_scale must be >= 0");
  }
}

LayoutOptions TrainConfig::layout_options() const {
  LayoutOptions options;
  options.user_id = id_onehots;
  options.item_id = id_onehots;
  return options;
}

AdamConfig TrainConfig::threshold_adam() const {
  AdamConfig cfg = adam;
  if (threshold_lr) {
    cfg.lr = *threshold_lr;
  }
  return cfg;
}

double ThresholdTable::item_threshold(ItemId item, bool cold) const {
  if (cold || item >= item_thresholds.size()) {
    return global_item_fallback;
  }
  return item_thresholds[item];
}

void TrainingReport::add(std::size_t epoch, std::string phase,
                         std::string metric, double value) {
  records.push_back(
    ReportRecord{epoch, std::move(phase), std::move(metric), value});
}

void TrainingReport::write(std::ostream& out) const {
  char buf[64];
  for (const auto& r : records) {
    const auto res = std::to_chars(buf, buf + sizeof(buf), r.value);
    out << r.epoch << '\t' << r.phase << '\t' << r.metric << '\t'
        << std::string_view(buf, res.ptr) << '\n';
  }
}

double phi(std::size_t n) {
  constexpr std::size_t kExactLimit = 4096;
  if (n <= kExactLimit) {
    double h = 0.0;
    for (std::size_t i = n; i >= 1; --i) {
      h += 1.0 / static_cast<double>(i);
    }
    return h;
  }
  // Asymptotic expansion; error below 1e-17 at this size.
  constexpr double kEulerGamma = 0.57721566490153286061;
  const double x = static_cast<double>(n);
  return std::log(x) + kEulerGamma + 1.0 / (2.0 * x) - 1.0 / (12.0 * x * x) +
         1.0 / (120.0 * x * x * x * x);
}

std::size_t estimate_rank(std::size_t total_negatives,
                          std::size_t draws_to_violation) {
  if (total_negatives < 1 || draws_to_violation < 1) {
    throw ContractError("estimate_rank needs >= 1 negative and >= 1 draw");
  }
  return std::max<std::size_t>(1, (total_negatives - 1) / draws_to_violation);
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double cross_entropy(double x, double label) {
  // softplus(x) - y * x
  const double softplus = std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  return softplus - label * x;
}

double threshold_gradient(double score, double delta, double label) {
  return label - sigmoid(score - delta);
}

UserScorer::UserScorer(const RankingModel& model, const FeatureSet& features,
                       UserId user)
  : model_(model),
    features_(features),
    user_part_(model.params.k),
    item_part_(model.params.k),
    scratch_(model.params.k) {
  const auto& layout = model.layout;
  if (user >= layout.num_users()) {
    throw DimensionError("user id " + std::to_string(user) + " out of range");
  }
  if (layout.user_id().size > 0) {
    user_part_.add(model.params,
                   static_cast<std::uint32_t>(layout.user_id().offset + user),
                   1.0);
  }
  if (layout.user_features().size > 0 && user < features.users.rows()) {
    for (const auto& e : features.users.row(user).entries()) {
      user_part_.add(model.params,
                     static_cast<std::uint32_t>(
                       layout.user_features().offset + e.index),
                     e.value);
    }
  }
}

void UserScorer::load_item(ItemId item) {
  const auto& layout = model_.layout;
  const bool cold = features_.is_cold(item);
  item_part_.clear();
  if (!cold && layout.item_id().size > 0) {
    if (item >= layout.num_items()) {
      throw DimensionError("item id " + std::to_string(item) +
                           " out of range");
    }
    item_part_.add(model_.params,
                   static_cast<std::uint32_t>(layout.item_id().offset + item),
                   1.0);
  }
  if (layout.item_features().size > 0 && item < features_.items.rows()) {
    for (const auto& e : features_.items.row(item).entries()) {
      item_part_.add(model_.params,
                     static_cast<std::uint32_t>(
                       layout.item_features().offset + e.index),
                     e.value);
    }
  }
}

double UserScorer::keen(ItemId item) {
  load_item(item);
  return fm_score(model_.params, user_part_, item_part_);
}

double UserScorer::act(ItemId item, ActivityId activity) {
  load_item(item);
  const auto& block = model_.layout.activity();
  if (activity >= block.size) {
    throw DimensionError("activity id out of range");
  }
  scratch_ = item_part_;
  scratch_.add(model_.params,
               static_cast<std::uint32_t>(block.offset + activity), 1.0);
  return fm_score(model_.params, user_part_, scratch_);
}

void UserScorer::act_all(ItemId item, std::span<double> out) {
  load_item(item);
  const auto& block = model_.layout.activity();
  if (out.size() != block.size) {
    throw DimensionError("output span must hold one score per activity");
  }
  for (std::size_t z = 0; z < block.size; ++z) {
    scratch_ = item_part_;
    scratch_.add(model_.params, static_cast<std::uint32_t>(block.offset + z),
                 1.0);
    out[z] = fm_score(model_.params, user_part_, scratch_);
  }
}

double keen_score(const RankingModel& model, const FeatureSet& features,
                  UserId user, ItemId item) {
  return fm_score(model.params,
                  assemble_keen_input(user, item, model.layout, features.users,
                                      features.items, features.is_cold(item)));
}

double act_score(const RankingModel& model, const FeatureSet& features,
                 UserId user, ItemId item, ActivityId activity) {
  return fm_score(model.params,
                  assemble_act_input(user, item, activity, model.layout,
                                     features.users, features.items,
                                     features.is_cold(item)));
}

ThresholdLearner::ThresholdLearner(std::size_t size, const AdamConfig& config,
                                   double initial)
  : config_(config),
    delta_(size, initial),
    m_(size, 0.0),
    v_(size, 0.0),
    t_(size, 0) {}

double ThresholdLearner::update(std::size_t index, double score, bool label) {
  const double y = label ? 1.0 : 0.0;
  const double loss = cross_entropy(score - delta_.at(index), y);
  const double grad = threshold_gradient(score, delta_[index], y);
  delta_[index] += adam_delta(grad, m_[index], v_[index], ++t_[index], config_);
  return loss;
}

Trainer::Trainer(const InteractionStore& train, FeatureSet features,
                 TrainConfig config)
  : train_(train), config_(std::move(config)), rng_(config_.seed) {
  config_.validate();
  if (train.empty()) {
    throw EmptyDatasetError();
  }
  const auto options = config_.layout_options();
  model_.features = std::move(features);
  const auto& f = model_.features;
  if (f.users.rows() != train.num_users() ||
      f.items.rows() != train.num_items()) {
    throw DimensionError("feature matrices do not match the catalog");
  }
  model_.keen.layout = FeatureLayout::keen(
    train.num_users(), train.num_items(), f.users.dim(), f.items.dim(), options);
  model_.act.layout =
    FeatureLayout::act(train.num_users(), train.num_items(),
                       train.num_activities(), f.users.dim(), f.items.dim(),
                       options);
  model_.keen.params = init_params(model_.keen.layout.dim(), config_.k,
                                   config_.seed * 2 + 1, config_.init_scale);
  model_.act.params = init_params(model_.act.layout.dim(), config_.k,
                                  config_.seed * 2 + 2, config_.init_scale);
  keen_adam_ = AdamState::for_params(model_.keen.params);
  act_adam_ = AdamState::for_params(model_.act.params);
  model_.thresholds.item_thresholds.assign(train.num_items(), 0.0);
  model_.thresholds.activity_thresholds.assign(train.num_activities(), 0.0);
}

WarpStepResult Trainer::apply_warp(RankingModel& model, AdamState& adam,
                                   double lambda, const SparseVector& pos,
                                   const SparseVector& neg, double weight,
                                   double pos_score, double neg_score) {
  WarpStepResult result;
  result.updated = true;
  result.loss = weight * (config_.margin - pos_score + neg_score);
  FMGradient grad = fm_gradient(model.params, pos, -weight);
  grad.add(fm_gradient(model.params, neg, weight));
  grad.add_weight_decay(model.params, lambda);
  if (config_.diagnostic_checks) {
    // Probe the plain gradient step; Adam momentum from earlier updates may
    // legitimately move this pair's hinge either way.
    FMParameters probe = model.params;
    const double alpha = std::min(config_.adam.lr, 1e-3);
    probe.w0 -= alpha * grad.w0;
    for (std::size_t j = 0; j < grad.indices.size(); ++j) {
      const auto i = grad.indices[j];
      probe.w[i] -= alpha * grad.w[j];
      auto row = probe.factor_row(i);
      const auto g = grad.factor_row(j);
      for (std::size_t c = 0; c < probe.k; ++c) {
        row[c] -= alpha * g[c];
      }
    }
    const double after =
      config_.margin - fm_score(probe, pos) + fm_score(probe, neg);
    ++model_.report.hinge_checks;
    if (!(after < config_.margin - pos_score + neg_score)) {
      ++model_.report.hinge_not_decreased;
    }
  }
  adam_update(model.params, adam, grad, config_.adam);
  return result;
}

WarpStepResult Trainer::warp_step_keen(UserId user, ItemId item) {
  const auto positives = train_.positive_items(user);
  const std::size_t total_neg = train_.num_items() - positives.size();
  WarpStepResult result;
  if (total_neg == 0) {
    result.skipped = true;
    ++model_.report.keen_skipped;
    return result;
  }
  auto& model = model_.keen;
  UserScorer scorer(model, model_.features, user);
  const double pos_score = scorer.keen(item);
  nonfinite_score_ |= !std::isfinite(pos_score);
  std::optional<ItemId> violator;
  double neg_score = 0.0;
  result.draws = sample_negatives(
    train_.num_items(), positives, config_.max_neg_samples, rng_,
    [&](std::uint32_t candidate, std::size_t) {
      const double s = scorer.keen(candidate);
      if (pos_score < config_.margin + s) {
        violator = candidate;
        neg_score = s;
        return true;
      }
      return false;
    });
  if (!violator) {
    return result;
  }
  const auto& f = model_.features;
  const double weight = phi(estimate_rank(total_neg, result.draws));
  const auto pos = assemble_keen_input(user, item, model.layout, f.users,
                                       f.items, f.is_cold(item));
  const auto neg = assemble_keen_input(user, *violator, model.layout, f.users,
                                       f.items, f.is_cold(*violator));
  const auto draws = result.draws;
  result = apply_warp(model, keen_adam_, config_.lambda_keen, pos, neg, weight,
                      pos_score, neg_score);
  result.draws = draws;
  return result;
}

WarpStepResult Trainer::warp_step_act(UserId user, ItemId item,
                                      ActivityId activity) {
  const auto positives = train_.positive_activities(user, item);
  const std::size_t total_neg = train_.num_activities() - positives.size();
  WarpStepResult result;
  if (total_neg == 0) {
    result.skipped = true;
    ++model_.report.act_skipped;
    return result;
  }
  auto& model = model_.act;
  UserScorer scorer(model, model_.features, user);
  const double pos_score = scorer.act(item, activity);
  nonfinite_score_ |= !std::isfinite(pos_score);
  std::optional<ActivityId> violator;
  double neg_score = 0.0;
  result.draws = sample_negatives(
    train_.num_activities(), positives, config_.max_neg_samples, rng_,
    [&](std::uint32_t candidate, std::size_t) {
      const double s = scorer.act(item, candidate);
      if (pos_score < config_.margin + s) {
        violator = candidate;
        neg_score = s;
        return true;
      }
      return false;
    });
  if (!violator) {
    return result;
  }
  const auto& f = model_.features;
  const bool cold = f.is_cold(item);
  const double weight = phi(estimate_rank(total_neg, result.draws));
  const auto pos = assemble_act_input(user, item, activity, model.layout,
                                      f.users, f.items, cold);
  const auto neg = assemble_act_input(user, item, *violator, model.layout,
                                      f.users, f.items, cold);
  const auto draws = result.draws;
  result = apply_warp(model, act_adam_, config_.lambda_act, pos, neg, weight,
                      pos_score, neg_score);
  result.draws = draws;
  return result;
}

double Trainer::rank_epoch() {
  ++epoch_;
  std::vector<std::size_t> order(train_.keen_pairs().size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng_);
  double keen_loss = 0.0;
  double keen_draws = 0.0;
  std::size_t keen_updates = 0;
  for (const auto i : order) {
    const auto& p = train_.keen_pairs()[i];
    const auto r = warp_step_keen(p.user, p.item);
    keen_loss += r.loss;
    keen_draws += static_cast<double>(r.draws);
    keen_updates += r.updated ? 1 : 0;
  }

  order.resize(train_.triples().size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng_);
  double act_loss = 0.0;
  double act_draws = 0.0;
  std::size_t act_updates = 0;
  for (const auto i : order) {
    const auto& t = train_.triples()[i];
    const auto r = warp_step_act(t.user, t.item, t.activity);
    act_loss += r.loss;
    act_draws += static_cast<double>(r.draws);
    act_updates += r.updated ? 1 : 0;
  }

  const double n_pairs = static_cast<double>(train_.keen_pairs().size());
  const double n_triples = static_cast<double>(train_.triples().size());
  auto& report = model_.report;
  report.add(epoch_, "keen_rank", "warp_loss", keen_loss);
  report.add(epoch_, "keen_rank", "mean_draws", keen_draws / n_pairs);
  report.add(epoch_, "keen_rank", "violation_rate",
             static_cast<double>(keen_updates) / n_pairs);
  report.add(epoch_, "act_rank", "warp_loss", act_loss);
  report.add(epoch_, "act_rank", "mean_draws", act_draws / n_triples);
  report.add(epoch_, "act_rank", "violation_rate",
             static_cast<double>(act_updates) / n_triples);

  const double total = keen_loss + act_loss;
  if (!std::isfinite(total) || nonfinite_score_ ||
      !model_.keen.params.all_finite() ||
      !model_.act.params.all_finite()) {
    throw NumericalError(epoch_, "non-finite loss, score or parameters");
  }
  return total;
}

void Trainer::learn_thresholds_keen() {
  const std::size_t n_users = train_.num_users();
  const std::size_t n_items = train_.num_items();
  const auto& f = model_.features;
  ThresholdLearner learner(n_items, config_.threshold_adam());
  std::vector<UserId> users;
  for (UserId u = 0; u < n_users; ++u) {
    if (!train_.positive_items(u).empty()) {
      users.push_back(u);
    }
  }

  // Keen scores are frozen during Phase 2; in full mode cache them once.
  const bool full = !config_.threshold_negative_ratio.has_value();
  std::vector<double> cache;
  if (full) {
    cache.resize(users.size() * n_items);
    for (std::size_t i = 0; i < users.size(); ++i) {
      UserScorer scorer(model_.keen, f, users[i]);
      for (ItemId v = 0; v < n_items; ++v) {
        cache[i * n_items + v] = scorer.keen(v);
      }
    }
  }

  std::vector<std::size_t> order(users.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 1; epoch <= config_.threshold_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng_);
    double loss = 0.0;
    std::size_t samples = 0;
    for (const auto i : order) {
      const UserId u = users[i];
      const auto positives = train_.positive_items(u);
      if (full) {
        std::size_t next_pos = 0;
        for (ItemId v = 0; v < n_items; ++v) {
          const bool label =
            next_pos < positives.size() && positives[next_pos] == v;
          next_pos += label ? 1 : 0;
          loss += learner.update(v, cache[i * n_items + v], label);
          ++samples;
        }
        continue;
      }
      UserScorer scorer(model_.keen, f, u);
      for (const auto v : positives) {
        loss += learner.update(v, scorer.keen(v), true);
        ++samples;
      }
      const auto wanted = static_cast<std::size_t>(std::ceil(
        *config_.threshold_negative_ratio * static_cast<double>(positives.size())));
      sample_negatives(n_items, positives, std::max<std::size_t>(wanted, 1),
                       rng_, [&](std::uint32_t v, std::size_t) {
                         loss += learner.update(v, scorer.keen(v), false);
                         ++samples;
                         return false;
                       });
    }
    model_.report.add(epoch, "keen_threshold", "ce_loss",
                      samples ? loss / static_cast<double>(samples) : 0.0);
  }

  auto& table = model_.thresholds;
  table.item_thresholds = learner.thresholds();
  double sum = 0.0;
  std::size_t warm = 0;
  for (ItemId v = 0; v < n_items; ++v) {
    if (!f.is_cold(v)) {
      sum += table.item_thresholds[v];
      ++warm;
    }
  }
  table.global_item_fallback = warm ? sum / static_cast<double>(warm) : 0.0;
}

void Trainer::learn_thresholds_act() {
  const std::size_t n_acts = train_.num_activities();
  const auto pairs = train_.keen_pairs();
  const auto& f = model_.features;
  ThresholdLearner learner(n_acts, config_.threshold_adam());

  std::vector<double> cache(pairs.size() * n_acts);
  std::size_t i = 0;
  while (i < pairs.size()) {
    const UserId u = pairs[i].user;
    UserScorer scorer(model_.act, f, u);
    for (; i < pairs.size() && pairs[i].user == u; ++i) {
      scorer.act_all(pairs[i].item,
                     std::span<double>(cache).subspan(i * n_acts, n_acts));
    }
  }

  // Visit users in shuffled order, each user's positive items in order.
  std::vector<std::pair<std::size_t, std::size_t>> user_ranges;
  for (std::size_t b = 0; b < pairs.size();) {
    std::size_t e = b;
    while (e < pairs.size() && pairs[e].user == pairs[b].user) {
      ++e;
    }
    user_ranges.emplace_back(b, e);
    b = e;
  }
  for (std::size_t epoch = 1; epoch <= config_.threshold_epochs; ++epoch) {
    std::shuffle(user_ranges.begin(), user_ranges.end(), rng_);
    double loss = 0.0;
    std::size_t samples = 0;
    for (const auto& [b, e] : user_ranges) {
      for (std::size_t p = b; p < e; ++p) {
        const auto acts = train_.pair_activities(p);
        for (ActivityId z = 0; z < n_acts; ++z) {
          const bool label = std::binary_search(acts.begin(), acts.end(), z);
          loss += learner.update(z, cache[p * n_acts + z], label);
          ++samples;
        }
      }
    }
    model_.report.add(epoch, "act_threshold", "ce_loss",
                      samples ? loss / static_cast<double>(samples) : 0.0);
  }
  model_.thresholds.activity_thresholds = learner.thresholds();
}

TrainedModel Trainer::run() && {
  double previous = 0.0;
  std::size_t flat_epochs = 0;
  for (std::size_t e = 0; e < config_.epochs; ++e) {
    const double loss = rank_epoch();
    if (config_.early_stop && e > 0) {
      const double rel =
        previous > 0.0 ? (previous - loss) / previous : 0.0;
      flat_epochs = rel < 1e-4 ? flat_epochs + 1 : 0;
      if (flat_epochs >= 3) {
        break;
      }
    }
    previous = loss;
  }
  learn_thresholds_keen();
  learn_thresholds_act();
  auto& report = model_.report;
  report.add(epoch_, "summary", "keen_skipped",
             static_cast<double>(report.keen_skipped));
  report.add(epoch_, "summary", "act_skipped",
             static_cast<double>(report.act_skipped));
  return std::move(model_);
}

TrainedModel train(const InteractionStore& train, FeatureSet features,
                   const TrainConfig& config) {
  return Trainer(train, std::move(features), config).run();
}

double exact_keen_warp_loss(const RankingModel& keen, const FeatureSet& features,
                            const InteractionStore& train, double margin) {
  double loss = 0.0;
  for (UserId u = 0; u < train.num_users(); ++u) {
    const auto positives = train.positive_items(u);
    if (positives.empty()) {
      continue;
    }
    UserScorer scorer(keen, features, u);
    std::vector<double> scores(train.num_items());
    for (ItemId v = 0; v < train.num_items(); ++v) {
      scores[v] = scorer.keen(v);
    }
    for (const auto v : positives) {
      std::size_t rank = 0;
      for (ItemId n = 0; n < train.num_items(); ++n) {
        if (!std::binary_search(positives.begin(), positives.end(), n) &&
            scores[v] < margin + scores[n]) {
          ++rank;
        }
      }
      loss += phi(rank);
    }
  }
  return loss;
}

}  // namespace keen2act

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
#include <keen2act/eval.hpp>
#include <keen2act/recommend.hpp>
#include <keen2act/sampling.hpp>

#include <algorithm>
#include <chrono>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

namespace keen2act {

FlatPairSpace::FlatPairSpace(std::size_t num_items, std::size_t num_activities)
  : num_items_(num_items), num_activities_(num_activities) {
  if (num_activities_ == 0) {
    throw DimensionError("flat pair space needs at least one activity");
  }
  if (num_items_ * num_activities_ > UINT32_MAX) {
    throw DimensionError("flat pair space exceeds 32-bit ids");
  }
}

std::uint32_t FlatPairSpace::flatten(ItemId item, ActivityId activity) const {
  if (item >= num_items_ || activity >= num_activities_) {
    throw DimensionError("pair outside the flat space");
  }
  return static_cast<std::uint32_t>(item * num_activities_ + activity);
}

PairKey FlatPairSpace::unflatten(std::uint32_t flat) const {
  if (flat >= size()) {
    throw DimensionError("flat id outside the flat space");
  }
  return PairKey{static_cast<ItemId>(flat / num_activities_),
                 static_cast<ActivityId>(flat % num_activities_)};
}

double average_precision_at_k(std::span<const PairKey> ranked,
                              std::span<const PairKey> relevant,
                              std::size_t k) {
  if (relevant.empty()) {
    throw ContractError("average precision needs a non-empty relevant set");
  }
  if (k == 0) {
    throw ContractError("cutoff k must be >= 1");
  }
  std::vector<PairKey> rel(relevant.begin(), relevant.end());
  std::sort(rel.begin(), rel.end());
  rel.erase(std::unique(rel.begin(), rel.end()), rel.end());
  std::vector<PairKey> hit_so_far;
  const std::size_t depth = std::min(k, ranked.size());
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < depth; ++i) {
    const auto& p = ranked[i];
    if (!std::binary_search(rel.begin(), rel.end(), p) ||
        std::find(hit_so_far.begin(), hit_so_far.end(), p) != hit_so_far.end()) {
      continue;
    }
    hit_so_far.push_back(p);
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return sum / static_cast<double>(std::min(rel.size(), k));
}

namespace {

std::vector<PairKey> test_pairs(const InteractionStore& test, UserId user) {
  std::vector<PairKey> rel;
  for (const auto& t : test.user_triples(user)) {
    rel.push_back(PairKey{t.item, t.activity});
  }
  return rel;
}

}  // namespace

double map_at_k(std::span<const RankedPairs> lists, const InteractionStore& test,
                std::size_t k) {
  double sum = 0.0;
  std::size_t users = 0;
  const RankedPairs empty;
  for (UserId u = 0; u < test.num_users(); ++u) {
    const auto rel = test_pairs(test, u);
    if (rel.empty()) {
      continue;
    }
    const auto& list = u < lists.size() ? lists[u] : empty;
    sum += average_precision_at_k(list, rel, k);
    ++users;
  }
  if (users == 0) {
    throw EmptyDatasetError();
  }
  return sum / static_cast<double>(users);
}

std::string variant_name(Variant variant) {
  switch (variant) {
    case Variant::kKeen2Act:
      return "keen2act";
    case Variant::kKeenOnly:
      return "keen_only";
    case Variant::kActOnly:
      return "act_only";
    case Variant::kFmBpr:
      return "fm_bpr";
    case Variant::kFmWarp:
      return "fm_warp";
  }
  return "unknown";
}

std::string variant_label(Variant variant) {
  switch (variant) {
    case Variant::kKeen2Act:
      return "Keen2Act";
    case Variant::kKeenOnly:
      return "Keen Model";
    case Variant::kActOnly:
      return "Act Model";
    case Variant::kFmBpr:
      return "FM_BPR";
    case Variant::kFmWarp:
      return "FM_WARP";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (const auto v : kAllVariants) {
    if (variant_name(v) == name) {
      return v;
    }
  }
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

BaselineTrainer::BaselineTrainer(BaselineKind kind,
                                 const InteractionStore& train,
                                 FeatureSet features, TrainConfig config)
  : kind_(kind),
    train_(train),
    config_(std::move(config)),
    space_(train.num_items(), train.num_activities()),
    rng_(config_.seed) {
  config_.validate();
  if (train.empty()) {
    throw EmptyDatasetError();
  }
  flat_.kind = kind;
  flat_.features = std::move(features);
  const auto& f = flat_.features;
  flat_.model.layout = FeatureLayout::act(
    train.num_users(), train.num_items(), train.num_activities(), f.users.dim(),
    f.items.dim(), config_.layout_options());
  flat_.model.params = init_params(flat_.model.layout.dim(), config_.k,
                                   config_.seed * 2 + 3, config_.init_scale);
  adam_ = AdamState::for_params(flat_.model.params);

  user_offsets_.assign(train.num_users() + 1, 0);
  for (UserId u = 0; u < train.num_users(); ++u) {
    for (const auto& t : train.user_triples(u)) {
      flat_positives_.push_back(space_.flatten(t.item, t.activity));
    }
    user_offsets_[u + 1] = flat_positives_.size();
  }
}

std::span<const std::uint32_t> BaselineTrainer::user_positives(
  UserId user) const {
  return std::span<const std::uint32_t>(flat_positives_)
    .subspan(user_offsets_[user], user_offsets_[user + 1] - user_offsets_[user]);
}

double BaselineTrainer::bpr_step(UserId user, ItemId item,
                                 ActivityId activity) {
  const auto positives = user_positives(user);
  auto& model = flat_.model;
  const auto& f = flat_.features;
  std::optional<PairKey> negative;
  sample_negatives(space_.size(), positives, 1, rng_,
                   [&](std::uint32_t flat, std::size_t) {
                     negative = space_.unflatten(flat);
                     return true;
                   });
  if (!negative) {
    return 0.0;
  }
  const auto pos = assemble_act_input(user, item, activity, model.layout,
                                      f.users, f.items, f.is_cold(item));
  const auto neg =
    assemble_act_input(user, negative->item, negative->activity, model.layout,
                       f.users, f.items, f.is_cold(negative->item));
  const double diff = fm_score(model.params, pos) - fm_score(model.params, neg);
  const double coef = sigmoid(-diff);
  FMGradient grad = fm_gradient(model.params, pos, -coef);
  grad.add(fm_gradient(model.params, neg, coef));
  grad.add_weight_decay(model.params, config_.lambda_keen);
  adam_update(model.params, adam_, grad, config_.adam);
  return cross_entropy(diff, 1.0);
}

double BaselineTrainer::warp_step(UserId user, ItemId item,
                                  ActivityId activity) {
  const auto positives = user_positives(user);
  const std::size_t total_neg = space_.size() - positives.size();
  if (total_neg == 0) {
    return 0.0;
  }
  auto& model = flat_.model;
  const auto& f = flat_.features;
  UserScorer scorer(model, f, user);
  const double pos_score = scorer.act(item, activity);
  std::optional<PairKey> violator;
  double neg_score = 0.0;
  const std::size_t draws = sample_negatives(
    space_.size(), positives, config_.max_neg_samples, rng_,
    [&](std::uint32_t flat, std::size_t) {
      const auto p = space_.unflatten(flat);
      const double s = scorer.act(p.item, p.activity);
      if (pos_score < config_.margin + s) {
        violator = p;
        neg_score = s;
        return true;
      }
      return false;
    });
  if (!violator) {
    return 0.0;
  }
  const double weight = phi(estimate_rank(total_neg, draws));
  const auto pos = assemble_act_input(user, item, activity, model.layout,
                                      f.users, f.items, f.is_cold(item));
  const auto neg =
    assemble_act_input(user, violator->item, violator->activity, model.layout,
                       f.users, f.items, f.is_cold(violator->item));
  FMGradient grad = fm_gradient(model.params, pos, -weight);
  grad.add(fm_gradient(model.params, neg, weight));
  grad.add_weight_decay(model.params, config_.lambda_keen);
  adam_update(model.params, adam_, grad, config_.adam);
  return weight * (config_.margin - pos_score + neg_score);
}

double BaselineTrainer::epoch() {
  ++epoch_;
  std::vector<std::size_t> order(train_.triples().size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng_);
  double loss = 0.0;
  for (const auto i : order) {
    const auto& t = train_.triples()[i];
    loss += kind_ == BaselineKind::kBpr ? bpr_step(t.user, t.item, t.activity)
                                        : warp_step(t.user, t.item, t.activity);
  }
  if (!std::isfinite(loss) || !flat_.model.params.all_finite()) {
    throw NumericalError(epoch_, "non-finite baseline loss or parameters");
  }
  return loss;
}

FlatModel BaselineTrainer::run() && {
  for (std::size_t e = 0; e < config_.epochs; ++e) {
    epoch();
  }
  return std::move(flat_);
}

FlatModel train_baseline(BaselineKind kind, const InteractionStore& train,
                         FeatureSet features, const TrainConfig& config) {
  return BaselineTrainer(kind, train, std::move(features), config).run();
}

namespace {

RankedPairs sort_scored(std::vector<std::pair<double, PairKey>>& scored) {
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  RankedPairs out;
  out.reserve(scored.size());
  for (const auto& [s, p] : scored) {
    out.push_back(p);
  }
  return out;
}

}  // namespace

RankedPairs rank_flat(const FlatModel& model, UserId user) {
  const auto& layout = model.model.layout;
  const std::size_t n_acts = layout.num_activities();
  UserScorer scorer(model.model, model.features, user);
  std::vector<std::pair<double, PairKey>> scored;
  scored.reserve(layout.num_items() * n_acts);
  std::vector<double> scores(n_acts);
  for (ItemId v = 0; v < layout.num_items(); ++v) {
    scorer.act_all(v, scores);
    for (ActivityId z = 0; z < n_acts; ++z) {
      scored.emplace_back(scores[z], PairKey{v, z});
    }
  }
  return sort_scored(scored);
}

RankedPairs rank_two_stage(const TrainedModel& model, Variant variant,
                           UserId user) {
  RankedPairs out;
  switch (variant) {
    case Variant::kKeen2Act:
      for (const auto& e : recommend(model, user).entries) {
        out.push_back(PairKey{e.item, e.activity});
      }
      return out;
    case Variant::kKeenOnly:
      for (const auto& item : select_items(model, user)) {
        for (ActivityId z = 0; z < model.num_activities(); ++z) {
          out.push_back(PairKey{item.item, z});
        }
      }
      return out;
    case Variant::kActOnly: {
      const std::size_t n_acts = model.num_activities();
      UserScorer scorer(model.act, model.features, user);
      std::vector<double> scores(n_acts);
      std::vector<std::pair<double, PairKey>> scored;
      for (ItemId v = 0; v < model.num_items(); ++v) {
        scorer.act_all(v, scores);
        for (ActivityId z = 0; z < n_acts; ++z) {
          if (scores[z] >= model.thresholds.activity_threshold(z)) {
            scored.emplace_back(scores[z], PairKey{v, z});
          }
        }
      }
      return sort_scored(scored);
    }
    case Variant::kFmBpr:
    case Variant::kFmWarp:
      break;
  }
  throw ContractError("variant " + variant_name(variant) +
                      " is not a two-stage variant");
}

RankedPairs exclude_seen(RankedPairs ranked, const InteractionStore& train,
                         UserId user) {
  std::erase_if(ranked, [&](const PairKey& p) {
    return train.contains(user, p.item, p.activity);
  });
  return ranked;
}

std::string metric_name(std::size_t cutoff) {
  return cutoff == kNoCutoff ? "MAP" : "MAP@" + std::to_string(cutoff);
}

double EvalReport::mean(std::size_t variant_index,
                        std::size_t cutoff_index) const {
  const auto& splits = values.at(variant_index);
  if (splits.empty()) {
    return 0.0;
  }
  double sum = 0.0;
  for (const auto& row : splits) {
    sum += row.at(cutoff_index);
  }
  return sum / static_cast<double>(splits.size());
}

std::optional<std::size_t> EvalReport::index_of(Variant variant) const {
  const auto it = std::find(variants.begin(), variants.end(), variant);
  if (it == variants.end()) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(it - variants.begin());
}

void EvalReport::write_records(std::ostream& out) const {
  char buf[64];
  auto num = [&buf](double x) {
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
  };
  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    const auto name = variant_name(variants[vi]);
    for (std::size_t ci = 0; ci < kCutoffs.size(); ++ci) {
      const auto metric = metric_name(kCutoffs[ci]);
      for (std::size_t s = 0; s < values[vi].size(); ++s) {
        out << dataset << '\t' << name << '\t' << metric << '\t' << s << '\t'
            << num(values[vi][s][ci]) << '\n';
      }
      out << dataset << '\t' << name << '\t' << metric << "\tmean\t"
          << num(mean(vi, ci)) << '\n';
    }
  }
}

void EvalReport::write_table(std::ostream& out) const {
  out << std::left << std::setw(12) << "Dataset" << std::setw(12) << "Model";
  for (const auto c : kCutoffs) {
    out << std::right << std::setw(9) << metric_name(c);
  }
  out << '\n';
  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    out << std::left << std::setw(12) << (vi == 0 ? dataset : "")
        << std::setw(12) << variant_label(variants[vi]);
    for (std::size_t ci = 0; ci < kCutoffs.size(); ++ci) {
      out << std::right << std::setw(9) << std::fixed << std::setprecision(3)
          << mean(vi, ci);
    }
    out << '\n';
  }
  out.unsetf(std::ios::floatfield);
}

std::vector<std::array<double, kCutoffs.size()>> run_split(
  const Dataset& dataset, const SplitPair& split, const TagMap* tags,
  const std::vector<Variant>& variants, const ExperimentConfig& config,
  std::size_t* users_evaluated) {
  const auto features = build_features(split.train, dataset.catalog, tags,
                                       config.train.user_feature_scaling);
  TrainConfig train_cfg = config.train;
  train_cfg.seed = split.seed;

  std::optional<TrainedModel> two_stage;
  std::optional<FlatModel> bpr;
  std::optional<FlatModel> warp;
  for (const auto v : variants) {
    if (v == Variant::kFmBpr && !bpr) {
      bpr = train_baseline(BaselineKind::kBpr, split.train, features, train_cfg);
    } else if (v == Variant::kFmWarp && !warp) {
      warp =
        train_baseline(BaselineKind::kWarp, split.train, features, train_cfg);
    } else if (v != Variant::kFmBpr && v != Variant::kFmWarp && !two_stage) {
      two_stage = train(split.train, features, train_cfg);
    }
  }

  std::vector<UserId> users;
  for (UserId u = 0; u < split.test.num_users(); ++u) {
    if (!split.test.user_triples(u).empty()) {
      users.push_back(u);
    }
  }
  if (users.empty()) {
    throw EmptyDatasetError();
  }
  if (users_evaluated) {
    *users_evaluated = users.size();
  }

  std::vector<std::array<double, kCutoffs.size()>> out;
  for (const auto v : variants) {
    std::array<double, kCutoffs.size()> sums{};
    for (const auto u : users) {
      RankedPairs ranked;
      if (v == Variant::kFmBpr) {
        ranked = rank_flat(*bpr, u);
      } else if (v == Variant::kFmWarp) {
        ranked = rank_flat(*warp, u);
      } else {
        ranked = rank_two_stage(*two_stage, v, u);
      }
      if (config.exclude_train_pairs) {
        ranked = exclude_seen(std::move(ranked), split.train, u);
      }
      const auto rel = test_pairs(split.test, u);
      for (std::size_t ci = 0; ci < kCutoffs.size(); ++ci) {
        sums[ci] += average_precision_at_k(ranked, rel, kCutoffs[ci]);
      }
    }
    for (auto& s : sums) {
      s /= static_cast<double>(users.size());
    }
    out.push_back(sums);
  }
  return out;
}

std::array<double, kCutoffs.size()> run_variant(Variant variant,
                                                const Dataset& dataset,
                                                const SplitPair& split,
                                                const TagMap* tags,
                                                const ExperimentConfig& config) {
  return run_split(dataset, split, tags, {variant}, config).front();
}

EvalReport run_experiment(const std::string& name, const Dataset& dataset,
                          const TagMap* tags, const ExperimentConfig& config) {
  if (config.n_splits < 1) {
    throw ConfigError("n_splits must be >= 1");
  }
  if (config.variants.empty()) {
    throw ConfigError("no variants requested");
  }
  const auto start = std::chrono::steady_clock::now();
  EvalReport report;
  report.dataset = name;
  report.variants = config.variants;
  report.values.assign(config.variants.size(), {});
  for (std::size_t s = 0; s < config.n_splits; ++s) {
    const auto split = split_per_user(dataset.store, config.split_fraction,
                                      config.train.seed + s);
    std::size_t users = 0;
    const auto rows =
      run_split(dataset, split, tags, config.variants, config, &users);
    report.users_evaluated = std::max(report.users_evaluated, users);
    for (std::size_t vi = 0; vi < rows.size(); ++vi) {
      report.values[vi].push_back(rows[vi]);
    }
  }
  report.runtime_seconds = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start)
                             .count();
  return report;
}

}  // namespace keen2act

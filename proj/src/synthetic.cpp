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
#include <keen2act/synthetic.hpp>
#include <keen2act/training.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace keen2act {

namespace {

std::vector<std::string> activity_names(std::size_t n) {
  if (n == 2) {
    return {"fork", "watch"};
  }
  std::vector<std::string> names;
  for (std::size_t z = 0; z < n; ++z) {
    names.push_back("act" + std::to_string(z));
  }
  return names;
}

// Bias b such that sum_v sigmoid(logits[v] + b) == target.
double calibrate_bias(const std::vector<double>& logits, double target) {
  double lo = -60.0;
  double hi = 60.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    double total = 0.0;
    for (const double l : logits) {
      total += sigmoid(l + mid);
    }
    (total < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

SyntheticCorpus generate_two_stage_corpus(const SyntheticConfig& config) {
  if (config.users == 0 || config.items == 0 || config.activities == 0 ||
      config.categories == 0) {
    throw ConfigError("synthetic corpus sizes must be positive");
  }
  if (static_cast<double>(config.min_items_per_user) >
      static_cast<double>(config.items)) {
    throw ConfigError("min_items_per_user exceeds the item count");
  }
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n_cat = config.categories;
  const std::size_t n_act = config.activities;

  SyntheticCorpus corpus;
  auto& catalog = corpus.dataset.catalog;
  catalog.activities = IdIndex(activity_names(n_act));

  // Items: a category, a noisy category embedding and a popularity offset.
  std::uniform_int_distribution<std::size_t> pick_cat(0, n_cat - 1);
  std::vector<std::vector<double>> item_vec(config.items,
                                            std::vector<double>(n_cat));
  std::vector<double> popularity(config.items);
  corpus.item_category.resize(config.items);
  std::uniform_int_distribution<std::size_t> pick_tag(
    0, std::max<std::size_t>(config.noise_vocabulary, 1) - 1);
  for (std::size_t v = 0; v < config.items; ++v) {
    const auto c = pick_cat(rng);
    corpus.item_category[v] = c;
    for (std::size_t d = 0; d < n_cat; ++d) {
      item_vec[v][d] = (d == c ? 1.0 : 0.0) + 0.3 * normal(rng);
    }
    popularity[v] = config.popularity_sd * normal(rng);
    const auto raw = "i" + std::to_string(v);
    catalog.items.get_or_add(raw);
    auto& tags = corpus.tags[raw];
    tags.push_back("cat" + std::to_string(c));
    for (std::size_t t = 0; t < config.noise_tags_per_item &&
                            config.noise_vocabulary > 0;
         ++t) {
      tags.push_back("t" + std::to_string(pick_tag(rng)));
    }
  }

  std::vector<Interaction> triples;
  std::poisson_distribution<std::size_t> item_count(config.mean_items_per_user);
  std::vector<double> logits(config.items);
  std::vector<double> user_vec(n_cat);
  std::vector<double> act_bias(n_act);
  std::int64_t clock = 1380585600;  // 2013-10-01
  for (std::size_t u = 0; u < config.users; ++u) {
    catalog.users.get_or_add("u" + std::to_string(u));
    // Two favourite categories with decreasing weight.
    const auto fav1 = pick_cat(rng);
    auto fav2 = pick_cat(rng);
    if (n_cat > 1) {
      while (fav2 == fav1) {
        fav2 = pick_cat(rng);
      }
    }
    for (std::size_t d = 0; d < n_cat; ++d) {
      user_vec[d] = 0.2 * normal(rng);
    }
    user_vec[fav1] += 1.0;
    if (fav2 != fav1) {
      user_vec[fav2] += 0.6;
    }
    for (auto& b : act_bias) {
      b = config.user_activity_sd * normal(rng);
    }
    for (std::size_t v = 0; v < config.items; ++v) {
      double dot = 0.0;
      for (std::size_t d = 0; d < n_cat; ++d) {
        dot += user_vec[d] * item_vec[v][d];
      }
      logits[v] = config.affinity_scale * dot + popularity[v];
    }
    const auto target = std::clamp<double>(
      static_cast<double>(std::max(item_count(rng), config.min_items_per_user)),
      1.0, static_cast<double>(config.items) - 0.5);
    const double bias = calibrate_bias(logits, target);

    std::vector<ItemId> adopted;
    for (int attempt = 0; attempt < 20; ++attempt) {
      adopted.clear();
      for (std::size_t v = 0; v < config.items; ++v) {
        if (unit(rng) < sigmoid(logits[v] + bias)) {
          adopted.push_back(static_cast<ItemId>(v));
        }
      }
      if (adopted.size() >= config.min_items_per_user) {
        break;
      }
    }
    if (adopted.size() < config.min_items_per_user) {
      // Top up with the most likely remaining items.
      std::vector<ItemId> order(config.items);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](ItemId a, ItemId b) {
        return logits[a] > logits[b];
      });
      for (const auto v : order) {
        if (adopted.size() >= config.min_items_per_user) {
          break;
        }
        if (std::find(adopted.begin(), adopted.end(), v) == adopted.end()) {
          adopted.push_back(v);
        }
      }
    }

    for (const auto v : adopted) {
      const std::size_t dominant = corpus.item_category[v] % n_act;
      bool any = false;
      for (std::size_t z = 0; z < n_act; ++z) {
        const double logit =
          (z == dominant ? config.activity_strength : -config.activity_strength) +
          act_bias[z];
        if (unit(rng) < sigmoid(logit)) {
          triples.push_back(Interaction{static_cast<UserId>(u), v,
                                        static_cast<ActivityId>(z), clock++});
          any = true;
        }
      }
      if (!any) {
        triples.push_back(Interaction{static_cast<UserId>(u), v,
                                      static_cast<ActivityId>(dominant),
                                      clock++});
      }
    }
  }
  corpus.dataset.store =
    InteractionStore(catalog.num_users(), catalog.num_items(),
                     catalog.num_activities(), std::move(triples));
  return corpus;
}

void write_corpus(const std::filesystem::path& dir,
                  const SyntheticCorpus& corpus) {
  std::filesystem::create_directories(dir);
  write_interactions(dir / "interactions.tsv", corpus.dataset.catalog,
                     corpus.dataset.store);
  std::ofstream tags(dir / "tags.tsv");
  if (!tags) {
    throw Error("cannot write " + (dir / "tags.tsv").string());
  }
  const auto& items = corpus.dataset.catalog.items;
  for (ItemId v = 0; v < items.size(); ++v) {
    const auto it = corpus.tags.find(items.raw(v));
    if (it == corpus.tags.end()) {
      continue;
    }
    tags << items.raw(v) << '\t';
    for (std::size_t i = 0; i < it->second.size(); ++i) {
      tags << (i ? "," : "") << it->second[i];
    }
    tags << '\n';
  }
}

}  // namespace keen2act

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

#include <cstdint>
#include <filesystem>

namespace keen2act {

// Two-stage generative corpus: latent user-item affinity drives Bernoulli
// item adoption, and each adopted item draws its activities from
// per-(user, item) activity probabilities.
struct SyntheticConfig {
  std::size_t users = 200;
  std::size_t items = 500;
  std::size_t activities = 2;
  std::size_t categories = 8;
  double mean_items_per_user = 18.0;
  std::size_t min_items_per_user = 10;
  // Sharpness of the category preference in the adoption logit.
  double affinity_scale = 3.0;
  double popularity_sd = 0.5;
  // Logit gap between an item's dominant activity and the others.
  double activity_strength = 2.5;
  double user_activity_sd = 0.5;
  std::size_t noise_tags_per_item = 2;
  std::size_t noise_vocabulary = 40;
  std::uint64_t seed = 1;
};

struct SyntheticCorpus {
  Dataset dataset;
  TagMap tags;
  // Generating category of each item, indexed by dense item id.
  std::vector<std::size_t> item_category;
};

SyntheticCorpus generate_two_stage_corpus(const SyntheticConfig& config);

// Writes interactions.tsv and tags.tsv into `dir`.
void write_corpus(const std::filesystem::path& dir, const SyntheticCorpus& corpus);

}  // namespace keen2act

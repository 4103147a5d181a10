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

#include <keen2act/types.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace keen2act {

// Bidirectional map between external string ids and dense ids 0..size()-1.
class IdIndex {
 public:
  IdIndex() = default;
  explicit IdIndex(std::vector<std::string> raw_ids);

  std::uint32_t get_or_add(std::string_view raw);
  std::optional<std::uint32_t> find(std::string_view raw) const;
  const std::string& raw(std::uint32_t id) const { return raw_.at(id); }
  std::size_t size() const noexcept { return raw_.size(); }
  const std::vector<std::string>& raw_ids() const noexcept { return raw_; }

 private:
  std::vector<std::string> raw_;
  std::unordered_map<std::string, std::uint32_t> dense_;
};

struct Catalog {
  IdIndex users;
  IdIndex items;
  IdIndex activities;

  std::size_t num_users() const noexcept { return users.size(); }
  std::size_t num_items() const noexcept { return items.size(); }
  std::size_t num_activities() const noexcept { return activities.size(); }
};

struct Interaction {
  UserId user = 0;
  ItemId item = 0;
  ActivityId activity = 0;
  std::optional<std::int64_t> timestamp;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

struct KeenPair {
  UserId user = 0;
  ItemId item = 0;

  friend bool operator==(const KeenPair&, const KeenPair&) = default;
};

// Observed Act triples I_A and the derived Keen pairs I_K. Triples are
// deduplicated and sorted by (user, item, activity); an immutable value once
// constructed.
class InteractionStore {
 public:
  InteractionStore() = default;
  InteractionStore(std::size_t num_users, std::size_t num_items,
                   std::size_t num_activities,
                   std::vector<Interaction> triples);

  std::size_t num_users() const noexcept { return num_users_; }
  std::size_t num_items() const noexcept { return num_items_; }
  std::size_t num_activities() const noexcept { return num_activities_; }

  bool empty() const noexcept { return triples_.empty(); }
  std::span<const Interaction> triples() const noexcept { return triples_; }
  std::span<const KeenPair> keen_pairs() const noexcept { return pairs_; }

  // V+_u, ascending.
  std::span<const ItemId> positive_items(UserId user) const;
  // Z+_{u,v}, ascending; empty when (u, v) is not a Keen pair.
  std::span<const ActivityId> positive_activities(UserId user, ItemId item) const;
  // Z+ for the i-th Keen pair.
  std::span<const ActivityId> pair_activities(std::size_t pair_index) const;
  std::span<const Interaction> user_triples(UserId user) const;

  bool contains(UserId user, ItemId item) const;
  bool contains(UserId user, ItemId item, ActivityId activity) const;

  // Users with at least one triple.
  std::size_t num_active_users() const;
  std::size_t duplicates_removed() const noexcept { return duplicates_; }

 private:
  std::optional<std::size_t> pair_index(UserId user, ItemId item) const;

  std::size_t num_users_ = 0;
  std::size_t num_items_ = 0;
  std::size_t num_activities_ = 0;
  std::size_t duplicates_ = 0;
  std::vector<Interaction> triples_;
  std::vector<ActivityId> triple_activities_;
  std::vector<std::size_t> user_triple_offsets_;
  std::vector<KeenPair> pairs_;
  std::vector<ItemId> pair_items_;
  std::vector<std::size_t> user_pair_offsets_;
  std::vector<std::size_t> pair_triple_offsets_;
};

struct Dataset {
  Catalog catalog;
  InteractionStore store;
};

struct IngestSchema {
  // Declared activity names; dense activity ids follow this order.
  std::vector<std::string> activities;
  bool has_header = false;
};

struct IngestResult {
  Dataset dataset;
  std::size_t rows = 0;
  std::size_t duplicates = 0;
};

IngestResult ingest(std::istream& in, const IngestSchema& schema);
IngestResult ingest(const std::filesystem::path& path, const IngestSchema& schema);

// Keeps users with >= min_activities triples and re-densifies users and items
// in their original relative order.
Dataset filter_active_users(const Dataset& dataset, std::size_t min_activities);

struct SplitPair {
  InteractionStore train;
  InteractionStore test;
  std::uint64_t seed = 0;
  double fraction = 0.8;
};

// Per user, ceil(fraction * n_u) triples of a seeded shuffle go to train and
// the rest to test.
SplitPair split_per_user(const InteractionStore& store, double fraction,
                         std::uint64_t seed);

std::size_t train_count(std::size_t n, double fraction);

// Tab-separated `user<TAB>item<TAB>activity<TAB>timestamp`, raw ids.
void write_interactions(std::ostream& out, const Catalog& catalog,
                        const InteractionStore& store);
void write_interactions(const std::filesystem::path& path,
                        const Catalog& catalog, const InteractionStore& store);

// Writes train.tsv, test.tsv and split.meta into `dir`.
void write_split(const std::filesystem::path& dir, const Catalog& catalog,
                 const SplitPair& split);

// Re-reads a log against an existing catalog (ids must already be known).
InteractionStore read_interactions(std::istream& in, const Catalog& catalog,
                                   bool has_header = false);

struct DatasetStats {
  std::size_t users = 0;
  std::size_t items = 0;
  std::vector<std::pair<std::string, std::size_t>> activity_counts;
  std::size_t keen_pairs = 0;
  std::size_t act_triples = 0;
};

DatasetStats dataset_stats(const Dataset& dataset);

}  // namespace keen2act

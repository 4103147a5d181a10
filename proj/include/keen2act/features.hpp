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
#include <keen2act/types.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace keen2act {

struct SparseEntry {
  std::uint32_t index = 0;
  double value = 0.0;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

// Sorted, zero-free sparse vector of fixed dimensionality.
class SparseVector {
 public:
  SparseVector() = default;
  explicit SparseVector(std::size_t dim) : dim_(dim) {}
  // Entries must be strictly increasing in index; zeros are dropped.
  SparseVector(std::size_t dim, std::vector<SparseEntry> entries);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t nnz() const noexcept { return entries_.size(); }
  std::span<const SparseEntry> entries() const noexcept { return entries_; }
  double norm() const;

  // Appends an entry; index must exceed the last stored index.
  void push_back(std::uint32_t index, double value);

  friend bool operator==(const SparseVector&, const SparseVector&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<SparseEntry> entries_;
};

enum class EntityKind { kUser, kItem };

class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(EntityKind kind, std::size_t dim, std::vector<SparseVector> rows);

  EntityKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t rows() const noexcept { return rows_.size(); }
  const SparseVector& row(std::size_t r) const { return rows_.at(r); }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  EntityKind kind_ = EntityKind::kUser;
  std::size_t dim_ = 0;
  std::vector<SparseVector> rows_;
};

// Counts of shared (item, activity) combinations between users; raw counts,
// zero diagonal. Computed from the training split only.
FeatureMatrix co_participation_features(const InteractionStore& train);

using TagMap = std::map<std::string, std::vector<std::string>>;

// Smoothed TF-IDF over item tags, L2-normalized per row. Vocabulary order is
// first appearance while walking items in dense-id order.
FeatureMatrix tfidf_item_features(const TagMap& tags, const Catalog& catalog);

double smoothed_idf(std::size_t num_items, std::size_t document_frequency);

// `item_id<TAB>tag1,tag2,...`
TagMap read_tags(std::istream& in);
TagMap read_tags(const std::filesystem::path& path);

// `dims: R C` header then `row<TAB>col<TAB>value` lines.
void write_feature_matrix(std::ostream& out, const FeatureMatrix& m);
FeatureMatrix read_feature_matrix(std::istream& in, EntityKind kind);

struct LayoutOptions {
  bool user_id = true;
  bool item_id = true;
  bool user_features = true;
  bool item_features = true;

  friend bool operator==(const LayoutOptions&, const LayoutOptions&) = default;
};

// Column layout of the FM input:
// [user one-hot][item one-hot][user features][item features][activity one-hot]
// with disabled blocks taking zero width. The activity block is Act-only.
class FeatureLayout {
 public:
  struct Block {
    std::size_t offset = 0;
    std::size_t size = 0;

    friend bool operator==(const Block&, const Block&) = default;
  };

  FeatureLayout() = default;
  static FeatureLayout keen(std::size_t num_users, std::size_t num_items,
                            std::size_t user_feature_dim,
                            std::size_t item_feature_dim,
                            const LayoutOptions& options = {});
  static FeatureLayout act(std::size_t num_users, std::size_t num_items,
                           std::size_t num_activities,
                           std::size_t user_feature_dim,
                           std::size_t item_feature_dim,
                           const LayoutOptions& options = {});

  const Block& user_id() const noexcept { return user_id_; }
  const Block& item_id() const noexcept { return item_id_; }
  const Block& user_features() const noexcept { return user_features_; }
  const Block& item_features() const noexcept { return item_features_; }
  const Block& activity() const noexcept { return activity_; }
  const LayoutOptions& options() const noexcept { return options_; }
  bool has_activity_block() const noexcept { return with_activity_; }
  std::size_t num_users() const noexcept { return num_users_; }
  std::size_t num_items() const noexcept { return num_items_; }
  std::size_t num_activities() const noexcept { return num_activities_; }
  std::size_t user_feature_dim() const noexcept { return user_feature_dim_; }
  std::size_t item_feature_dim() const noexcept { return item_feature_dim_; }
  std::size_t dim() const noexcept { return dim_; }

  friend bool operator==(const FeatureLayout&, const FeatureLayout&) = default;

 private:
  static FeatureLayout build(std::size_t num_users, std::size_t num_items,
                             std::size_t num_activities, bool with_activity,
                             std::size_t user_feature_dim,
                             std::size_t item_feature_dim,
                             const LayoutOptions& options);

  LayoutOptions options_;
  bool with_activity_ = false;
  std::size_t num_users_ = 0;
  std::size_t num_items_ = 0;
  std::size_t num_activities_ = 0;
  std::size_t user_feature_dim_ = 0;
  std::size_t item_feature_dim_ = 0;
  Block user_id_;
  Block item_id_;
  Block user_features_;
  Block item_features_;
  Block activity_;
  std::size_t dim_ = 0;
};

// Side features plus the set of items observed in training. Items never seen
// in training are cold: they lose their id one-hot and are judged against the
// global threshold fallback.
struct FeatureSet {
  FeatureMatrix users;
  FeatureMatrix items;
  std::vector<std::uint8_t> warm_items;

  bool is_cold(ItemId item) const {
    return item >= warm_items.size() || warm_items[item] == 0;
  }
};

// Builds user co-participation and item tag features from a training split.
enum class UserFeatureScaling { kRaw, kL2 };

// Scales every non-empty row to unit L2 norm.
FeatureMatrix l2_normalize_rows(const FeatureMatrix& m);

FeatureSet build_features(const InteractionStore& train, const Catalog& catalog,
                          const TagMap* tags,
                          UserFeatureScaling scaling = UserFeatureScaling::kL2);

SparseVector assemble_keen_input(UserId user, ItemId item,
                                 const FeatureLayout& layout,
                                 const FeatureMatrix& user_feats,
                                 const FeatureMatrix& item_feats,
                                 bool cold_item = false);

SparseVector assemble_act_input(UserId user, ItemId item, ActivityId activity,
                                const FeatureLayout& layout,
                                const FeatureMatrix& user_feats,
                                const FeatureMatrix& item_feats,
                                bool cold_item = false);

// Entry lists for the user half and item half of an input, with layout
// offsets applied; used by cached scoring paths.
void append_user_part(std::vector<SparseEntry>& out, UserId user,
                      const FeatureLayout& layout, const FeatureMatrix& user_feats);
void append_item_part(std::vector<SparseEntry>& out, ItemId item,
                      const FeatureLayout& layout, const FeatureMatrix& item_feats,
                      bool cold_item);

}  // namespace keen2act

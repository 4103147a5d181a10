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
#include <keen2act/features.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace keen2act {

SparseVector::SparseVector(std::size_t dim, std::vector<SparseEntry> entries)
  : dim_(dim) {
  entries_.reserve(entries.size());
  for (const auto& e : entries) {
    push_back(e.index, e.value);
  }
}

void SparseVector::push_back(std::uint32_t index, double value) {
  if (index >= dim_) {
    throw DimensionError("sparse index " + std::to_string(index) +
                         " out of range for dim " + std::to_string(dim_));
  }
  if (!entries_.empty() && index <= entries_.back().index) {
    throw DimensionError("sparse indices must be strictly increasing");
  }
  if (value != 0.0) {
    entries_.push_back(SparseEntry{index, value});
  }
}

double SparseVector::norm() const {
  double sq = 0.0;
  for (const auto& e : entries_) {
    sq += e.value * e.value;
  }
  return std::sqrt(sq);
}

FeatureMatrix::FeatureMatrix(EntityKind kind, std::size_t dim,
                             std::vector<SparseVector> rows)
  : kind_(kind), dim_(dim), rows_(std::move(rows)) {
  for (const auto& r : rows_) {
    if (r.dim() != dim_) {
      throw DimensionError("feature rows must share the matrix dimension");
    }
  }
}

FeatureMatrix co_participation_features(const InteractionStore& train) {
  const std::size_t n_users = train.num_users();
  const std::size_t n_acts = train.num_activities();
  // Group users by (item, activity).
  std::unordered_map<std::uint64_t, std::vector<UserId>> groups;
  for (const auto& t : train.triples()) {
    const std::uint64_t key =
      static_cast<std::uint64_t>(t.item) * n_acts + t.activity;
    groups[key].push_back(t.user);
  }
  std::vector<std::unordered_map<UserId, double>> counts(n_users);
  for (const auto& [key, users] : groups) {
    for (std::size_t a = 0; a < users.size(); ++a) {
      for (std::size_t b = a + 1; b < users.size(); ++b) {
        if (users[a] == users[b]) {
          continue;
        }
        counts[users[a]][users[b]] += 1.0;
        counts[users[b]][users[a]] += 1.0;
      }
    }
  }
  std::vector<SparseVector> rows;
  rows.reserve(n_users);
  std::vector<SparseEntry> entries;
  for (std::size_t u = 0; u < n_users; ++u) {
    entries.clear();
    for (const auto& [other, c] : counts[u]) {
      entries.push_back(SparseEntry{other, c});
    }
    std::sort(entries.begin(), entries.end(),
              [](const SparseEntry& a, const SparseEntry& b) {
                return a.index < b.index;
              });
    rows.emplace_back(n_users, entries);
  }
  return FeatureMatrix(EntityKind::kUser, n_users, std::move(rows));
}

double smoothed_idf(std::size_t num_items, std::size_t document_frequency) {
  return std::log((1.0 + static_cast<double>(num_items)) /
                  (1.0 + static_cast<double>(document_frequency))) +
         1.0;
}

FeatureMatrix tfidf_item_features(const TagMap& tags, const Catalog& catalog) {
  const std::size_t n_items = catalog.num_items();
  IdIndex vocab;
  std::vector<std::vector<std::pair<std::uint32_t, double>>> tf(n_items);
  for (ItemId v = 0; v < n_items; ++v) {
    const auto it = tags.find(catalog.items.raw(v));
    if (it == tags.end()) {
      continue;
    }
    std::map<std::uint32_t, double> counts;
    for (const auto& tag : it->second) {
      counts[vocab.get_or_add(tag)] += 1.0;
    }
    tf[v].assign(counts.begin(), counts.end());
  }
  std::vector<std::size_t> df(vocab.size(), 0);
  for (const auto& row : tf) {
    for (const auto& [t, c] : row) {
      ++df[t];
    }
  }
  std::vector<SparseVector> rows;
  rows.reserve(n_items);
  for (ItemId v = 0; v < n_items; ++v) {
    double sq = 0.0;
    std::vector<SparseEntry> entries;
    for (const auto& [t, c] : tf[v]) {
      const double value = c * smoothed_idf(n_items, df[t]);
      entries.push_back(SparseEntry{t, value});
      sq += value * value;
    }
    if (sq > 0.0) {
      const double inv = 1.0 / std::sqrt(sq);
      for (auto& e : entries) {
        e.value *= inv;
      }
    }
    rows.emplace_back(vocab.size(), std::move(entries));
  }
  return FeatureMatrix(EntityKind::kItem, vocab.size(), std::move(rows));
}

TagMap read_tags(std::istream& in) {
  TagMap tags;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw ParseError(line_no, "expected item_id<TAB>tags");
    }
    auto& list = tags[line.substr(0, tab)];
    std::stringstream ss(line.substr(tab + 1));
    std::string tag;
    while (std::getline(ss, tag, ',')) {
      if (!tag.empty()) {
        list.push_back(tag);
      }
    }
  }
  return tags;
}

TagMap read_tags(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  return read_tags(in);
}

void write_feature_matrix(std::ostream& out, const FeatureMatrix& m) {
  out << "dims: " << m.rows() << ' ' << m.dim() << '\n';
  char buf[64];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (const auto& e : m.row(r).entries()) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), e.value);
      out << r << '\t' << e.index << '\t' << std::string_view(buf, res.ptr)
          << '\n';
    }
  }
}

FeatureMatrix read_feature_matrix(std::istream& in, EntityKind kind) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("dims: ", 0) != 0) {
    throw ParseError(1, "expected 'dims: R C' header");
  }
  std::size_t n_rows = 0;
  std::size_t dim = 0;
  {
    std::istringstream hs(line.substr(6));
    if (!(hs >> n_rows >> dim)) {
      throw ParseError(1, "bad dims header");
    }
  }
  std::vector<SparseVector> rows(n_rows, SparseVector(dim));
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    std::size_t r = 0;
    std::uint32_t c = 0;
    double value = 0.0;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    auto next = [&](auto& out) {
      const auto res = std::from_chars(p, end, out);
      if (res.ec != std::errc()) {
        throw ParseError(line_no, "bad feature triplet");
      }
      p = res.ptr;
      if (p < end && *p == '\t') {
        ++p;
      }
    };
    next(r);
    next(c);
    next(value);
    if (r >= n_rows) {
      throw ParseError(line_no, "row index out of range");
    }
    rows[r].push_back(c, value);
  }
  return FeatureMatrix(kind, dim, std::move(rows));
}

FeatureLayout FeatureLayout::build(std::size_t num_users, std::size_t num_items,
                                   std::size_t num_activities,
                                   bool with_activity,
                                   std::size_t user_feature_dim,
                                   std::size_t item_feature_dim,
                                   const LayoutOptions& options) {
  FeatureLayout layout;
  layout.options_ = options;
  layout.with_activity_ = with_activity;
  layout.num_users_ = num_users;
  layout.num_items_ = num_items;
  layout.num_activities_ = with_activity ? num_activities : 0;
  layout.user_feature_dim_ = user_feature_dim;
  layout.item_feature_dim_ = item_feature_dim;
  std::size_t offset = 0;
  auto place = [&offset](Block& block, std::size_t size) {
    block.offset = offset;
    block.size = size;
    offset += size;
  };
  place(layout.user_id_, options.user_id ? num_users : 0);
  place(layout.item_id_, options.item_id ? num_items : 0);
  place(layout.user_features_, options.user_features ? user_feature_dim : 0);
  place(layout.item_features_, options.item_features ? item_feature_dim : 0);
  place(layout.activity_, with_activity ? num_activities : 0);
  layout.dim_ = offset;
  if (layout.dim_ == 0) {
    throw DimensionError("feature layout has no enabled blocks");
  }
  return layout;
}

FeatureLayout FeatureLayout::keen(std::size_t num_users, std::size_t num_items,
                                  std::size_t user_feature_dim,
                                  std::size_t item_feature_dim,
                                  const LayoutOptions& options) {
  return build(num_users, num_items, 0, false, user_feature_dim,
               item_feature_dim, options);
}

FeatureLayout FeatureLayout::act(std::size_t num_users, std::size_t num_items,
                                 std::size_t num_activities,
                                 std::size_t user_feature_dim,
                                 std::size_t item_feature_dim,
                                 const LayoutOptions& options) {
  if (num_activities == 0) {
    throw DimensionError("act layout needs at least one activity");
  }
  return build(num_users, num_items, num_activities, true, user_feature_dim,
               item_feature_dim, options);
}

FeatureMatrix l2_normalize_rows(const FeatureMatrix& m) {
  std::vector<SparseVector> rows;
  rows.reserve(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto& row = m.row(r);
    const double n = row.norm();
    SparseVector out(m.dim());
    for (const auto& e : row.entries()) {
      out.push_back(e.index, e.value / n);
    }
    rows.push_back(std::move(out));
  }
  return FeatureMatrix(m.kind(), m.dim(), std::move(rows));
}

FeatureSet build_features(const InteractionStore& train, const Catalog& catalog,
                          const TagMap* tags, UserFeatureScaling scaling) {
  FeatureSet set;
  set.users = co_participation_features(train);
  if (scaling == UserFeatureScaling::kL2) {
    set.users = l2_normalize_rows(set.users);
  }
  set.items = tfidf_item_features(tags ? *tags : TagMap{}, catalog);
  set.warm_items.assign(train.num_items(), 0);
  for (const auto& p : train.keen_pairs()) {
    set.warm_items[p.item] = 1;
  }
  return set;
}

namespace {

void append_one_hot(std::vector<SparseEntry>& out,
                    const FeatureLayout::Block& block, std::size_t id) {
  if (block.size == 0) {
    return;
  }
  out.push_back(
    SparseEntry{static_cast<std::uint32_t>(block.offset + id), 1.0});
}

void append_row(std::vector<SparseEntry>& out, const FeatureLayout::Block& block,
                const FeatureMatrix& feats, std::size_t row) {
  if (block.size == 0 || row >= feats.rows()) {
    return;
  }
  if (feats.dim() != block.size) {
    throw DimensionError("feature matrix dim does not match layout block");
  }
  for (const auto& e : feats.row(row).entries()) {
    out.push_back(SparseEntry{
      static_cast<std::uint32_t>(block.offset + e.index), e.value});
  }
}

void check_ids(UserId user, ItemId item, const FeatureLayout& layout,
               bool cold_item) {
  if (user >= layout.num_users()) {
    throw DimensionError("user id " + std::to_string(user) + " out of range");
  }
  if (!cold_item && item >= layout.num_items()) {
    throw DimensionError("item id " + std::to_string(item) + " out of range");
  }
}

SparseVector assemble(UserId user, ItemId item,
                      std::optional<ActivityId> activity,
                      const FeatureLayout& layout,
                      const FeatureMatrix& user_feats,
                      const FeatureMatrix& item_feats, bool cold_item) {
  check_ids(user, item, layout, cold_item);
  std::vector<SparseEntry> entries;
  append_one_hot(entries, layout.user_id(), user);
  if (!cold_item) {
    append_one_hot(entries, layout.item_id(), item);
  }
  append_row(entries, layout.user_features(), user_feats, user);
  append_row(entries, layout.item_features(), item_feats, item);
  if (activity) {
    if (*activity >= layout.activity().size) {
      throw DimensionError("activity id out of range");
    }
    append_one_hot(entries, layout.activity(), *activity);
  }
  return SparseVector(layout.dim(), std::move(entries));
}

}  // namespace

SparseVector assemble_keen_input(UserId user, ItemId item,
                                 const FeatureLayout& layout,
                                 const FeatureMatrix& user_feats,
                                 const FeatureMatrix& item_feats,
                                 bool cold_item) {
  return assemble(user, item, std::nullopt, layout, user_feats, item_feats,
                  cold_item);
}

SparseVector assemble_act_input(UserId user, ItemId item, ActivityId activity,
                                const FeatureLayout& layout,
                                const FeatureMatrix& user_feats,
                                const FeatureMatrix& item_feats,
                                bool cold_item) {
  if (!layout.has_activity_block()) {
    throw DimensionError("layout has no activity block");
  }
  return assemble(user, item, activity, layout, user_feats, item_feats,
                  cold_item);
}

void append_user_part(std::vector<SparseEntry>& out, UserId user,
                      const FeatureLayout& layout,
                      const FeatureMatrix& user_feats) {
  if (user >= layout.num_users()) {
    throw DimensionError("user id " + std::to_string(user) + " out of range");
  }
  append_one_hot(out, layout.user_id(), user);
  append_row(out, layout.user_features(), user_feats, user);
}

void append_item_part(std::vector<SparseEntry>& out, ItemId item,
                      const FeatureLayout& layout,
                      const FeatureMatrix& item_feats, bool cold_item) {
  if (!cold_item) {
    if (item >= layout.num_items()) {
      throw DimensionError("item id " + std::to_string(item) + " out of range");
    }
    append_one_hot(out, layout.item_id(), item);
  }
  append_row(out, layout.item_features(), item_feats, item);
}

}  // namespace keen2act

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

#include <keen2act/data_model.hpp>
#include <keen2act/error.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

namespace keen2act {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cols;
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') {
    line.remove_suffix(1);
  }
  return line;
}

std::optional<std::int64_t> parse_timestamp(std::string_view text,
                                            std::size_t line_no) {
  if (text.empty()) {
    return std::nullopt;
  }
  std::int64_t value = 0;
  const auto [ptr, ec] =
    std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(line_no, "bad timestamp '" + std::string(text) + "'");
  }
  return value;
}

struct RawRow {
  std::string_view user;
  std::string_view item;
  std::string_view activity;
  std::optional<std::int64_t> timestamp;
};

// Returns nullopt for blank lines.
std::optional<RawRow> parse_row(std::string_view line, std::size_t line_no) {
  line = strip_cr(line);
  if (line.find_first_not_of(" \t") == std::string_view::npos) {
    return std::nullopt;
  }
  const auto cols = split_tabs(line);
  if (cols.size() != 3 && cols.size() != 4) {
    throw ParseError(line_no, "expected 4 tab-separated columns, got " +
                                std::to_string(cols.size()));
  }
  for (std::size_t i = 0; i < 3; ++i) {
    if (cols[i].empty()) {
      throw ParseError(line_no, "empty column " + std::to_string(i + 1));
    }
  }
  RawRow row{cols[0], cols[1], cols[2], std::nullopt};
  if (cols.size() == 4) {
    row.timestamp = parse_timestamp(cols[3], line_no);
  }
  return row;
}

}  // namespace

IdIndex::IdIndex(std::vector<std::string> raw_ids) {
  for (auto& raw : raw_ids) {
    if (!dense_.emplace(raw, static_cast<std::uint32_t>(raw_.size())).second) {
      throw SchemaError("duplicate id '" + raw + "'");
    }
    raw_.push_back(std::move(raw));
  }
}

std::uint32_t IdIndex::get_or_add(std::string_view raw) {
  const auto it = dense_.find(std::string(raw));
  if (it != dense_.end()) {
    return it->second;
  }
  const auto id = static_cast<std::uint32_t>(raw_.size());
  raw_.emplace_back(raw);
  dense_.emplace(raw_.back(), id);
  return id;
}

std::optional<std::uint32_t> IdIndex::find(std::string_view raw) const {
  const auto it = dense_.find(std::string(raw));
  if (it == dense_.end()) {
    return std::nullopt;
  }
  return it->second;
}

InteractionStore::InteractionStore(std::size_t num_users, std::size_t num_items,
                                   std::size_t num_activities,
                                   std::vector<Interaction> triples)
  : num_users_(num_users),
    num_items_(num_items),
    num_activities_(num_activities) {
  for (const auto& t : triples) {
    if (t.user >= num_users || t.item >= num_items ||
        t.activity >= num_activities) {
      throw DimensionError("interaction references an id outside the catalog");
    }
  }
  std::sort(triples.begin(), triples.end(),
            [](const Interaction& a, const Interaction& b) {
              return std::tie(a.user, a.item, a.activity) <
                     std::tie(b.user, b.item, b.activity);
            });
  // Deduplicate, keeping the earliest timestamp.
  for (auto& t : triples) {
    if (!triples_.empty()) {
      auto& last = triples_.back();
      if (last.user == t.user && last.item == t.item &&
          last.activity == t.activity) {
        if (t.timestamp &&
            (!last.timestamp || *t.timestamp < *last.timestamp)) {
          last.timestamp = t.timestamp;
        }
        ++duplicates_;
        continue;
      }
    }
    triples_.push_back(t);
  }

  triple_activities_.reserve(triples_.size());
  user_triple_offsets_.assign(num_users_ + 1, 0);
  user_pair_offsets_.assign(num_users_ + 1, 0);
  for (std::size_t i = 0; i < triples_.size(); ++i) {
    const auto& t = triples_[i];
    triple_activities_.push_back(t.activity);
    ++user_triple_offsets_[t.user + 1];
    if (pairs_.empty() || pairs_.back().user != t.user ||
        pairs_.back().item != t.item) {
      pairs_.push_back(KeenPair{t.user, t.item});
      pair_items_.push_back(t.item);
      pair_triple_offsets_.push_back(i);
      ++user_pair_offsets_[t.user + 1];
    }
  }
  pair_triple_offsets_.push_back(triples_.size());
  std::partial_sum(user_triple_offsets_.begin(), user_triple_offsets_.end(),
                   user_triple_offsets_.begin());
  std::partial_sum(user_pair_offsets_.begin(), user_pair_offsets_.end(),
                   user_pair_offsets_.begin());
}

std::span<const ItemId> InteractionStore::positive_items(UserId user) const {
  if (user >= num_users_) {
    throw DimensionError("user id out of range");
  }
  const std::span<const ItemId> all(pair_items_);
  return all.subspan(user_pair_offsets_[user],
                     user_pair_offsets_[user + 1] - user_pair_offsets_[user]);
}

std::optional<std::size_t> InteractionStore::pair_index(UserId user,
                                                        ItemId item) const {
  if (user >= num_users_) {
    return std::nullopt;
  }
  const auto first = pair_items_.begin() +
                     static_cast<std::ptrdiff_t>(user_pair_offsets_[user]);
  const auto last = pair_items_.begin() +
                    static_cast<std::ptrdiff_t>(user_pair_offsets_[user + 1]);
  const auto it = std::lower_bound(first, last, item);
  if (it == last || *it != item) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(it - pair_items_.begin());
}

std::span<const ActivityId> InteractionStore::pair_activities(
  std::size_t pair_index) const {
  const std::span<const ActivityId> all(triple_activities_);
  return all.subspan(pair_triple_offsets_.at(pair_index),
                     pair_triple_offsets_[pair_index + 1] -
                       pair_triple_offsets_[pair_index]);
}

std::span<const ActivityId> InteractionStore::positive_activities(
  UserId user, ItemId item) const {
  const auto idx = pair_index(user, item);
  if (!idx) {
    return {};
  }
  return pair_activities(*idx);
}

std::span<const Interaction> InteractionStore::user_triples(UserId user) const {
  if (user >= num_users_) {
    throw DimensionError("user id out of range");
  }
  const std::span<const Interaction> all(triples_);
  return all.subspan(user_triple_offsets_[user],
                     user_triple_offsets_[user + 1] -
                       user_triple_offsets_[user]);
}

bool InteractionStore::contains(UserId user, ItemId item) const {
  return pair_index(user, item).has_value();
}

bool InteractionStore::contains(UserId user, ItemId item,
                                ActivityId activity) const {
  const auto acts = positive_activities(user, item);
  return std::binary_search(acts.begin(), acts.end(), activity);
}

std::size_t InteractionStore::num_active_users() const {
  std::size_t n = 0;
  for (std::size_t u = 0; u < num_users_; ++u) {
    n += user_triple_offsets_[u + 1] > user_triple_offsets_[u] ? 1 : 0;
  }
  return n;
}

IngestResult ingest(std::istream& in, const IngestSchema& schema) {
  if (schema.activities.empty()) {
    throw SchemaError("at least one activity type must be declared");
  }
  IngestResult result;
  Catalog& catalog = result.dataset.catalog;
  catalog.activities = IdIndex(schema.activities);

  std::vector<Interaction> triples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && schema.has_header) {
      continue;
    }
    const auto row = parse_row(line, line_no);
    if (!row) {
      continue;
    }
    const auto activity = catalog.activities.find(row->activity);
    if (!activity) {
      throw SchemaError("line " + std::to_string(line_no) +
                        ": unknown activity '" + std::string(row->activity) +
                        "'");
    }
    Interaction t;
    t.user = catalog.users.get_or_add(row->user);
    t.item = catalog.items.get_or_add(row->item);
    t.activity = *activity;
    t.timestamp = row->timestamp;
    triples.push_back(t);
    ++result.rows;
  }
  if (triples.empty()) {
    throw EmptyDatasetError();
  }
  result.dataset.store =
    InteractionStore(catalog.num_users(), catalog.num_items(),
                     catalog.num_activities(), std::move(triples));
  result.duplicates = result.dataset.store.duplicates_removed();
  return result;
}

IngestResult ingest(const std::filesystem::path& path,
                    const IngestSchema& schema) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  return ingest(in, schema);
}

Dataset filter_active_users(const Dataset& dataset,
                            std::size_t min_activities) {
  if (min_activities < 1) {
    throw ContractError("min_activities must be >= 1");
  }
  const auto& store = dataset.store;
  std::vector<std::uint32_t> user_map(store.num_users(), UINT32_MAX);
  std::vector<std::uint32_t> item_map(store.num_items(), UINT32_MAX);
  std::vector<std::string> users;
  for (UserId u = 0; u < store.num_users(); ++u) {
    if (store.user_triples(u).size() >= min_activities) {
      user_map[u] = static_cast<std::uint32_t>(users.size());
      users.push_back(dataset.catalog.users.raw(u));
    }
  }
  if (users.empty()) {
    throw EmptyDatasetError();
  }
  std::vector<char> item_used(store.num_items(), 0);
  for (const auto& t : store.triples()) {
    if (user_map[t.user] != UINT32_MAX) {
      item_used[t.item] = 1;
    }
  }
  std::vector<std::string> items;
  for (ItemId v = 0; v < store.num_items(); ++v) {
    if (item_used[v]) {
      item_map[v] = static_cast<std::uint32_t>(items.size());
      items.push_back(dataset.catalog.items.raw(v));
    }
  }
  std::vector<Interaction> triples;
  for (const auto& t : store.triples()) {
    if (user_map[t.user] == UINT32_MAX) {
      continue;
    }
    triples.push_back(
      Interaction{user_map[t.user], item_map[t.item], t.activity, t.timestamp});
  }
  Dataset out;
  out.catalog.users = IdIndex(std::move(users));
  out.catalog.items = IdIndex(std::move(items));
  out.catalog.activities = dataset.catalog.activities;
  out.store = InteractionStore(out.catalog.num_users(), out.catalog.num_items(),
                               out.catalog.num_activities(), std::move(triples));
  return out;
}

std::size_t train_count(std::size_t n, double fraction) {
  // The epsilon keeps products like 0.7 * 10 from rounding up past 7.
  const double raw = fraction * static_cast<double>(n);
  const auto count = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::min(n, count);
}

SplitPair split_per_user(const InteractionStore& store, double fraction,
                         std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ContractError("split fraction must lie in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  std::vector<Interaction> train;
  std::vector<Interaction> test;
  std::vector<Interaction> user_rows;
  for (UserId u = 0; u < store.num_users(); ++u) {
    const auto rows = store.user_triples(u);
    if (rows.empty()) {
      continue;
    }
    user_rows.assign(rows.begin(), rows.end());
    std::shuffle(user_rows.begin(), user_rows.end(), rng);
    const auto n_train = train_count(user_rows.size(), fraction);
    train.insert(train.end(), user_rows.begin(),
                 user_rows.begin() + static_cast<std::ptrdiff_t>(n_train));
    test.insert(test.end(),
                user_rows.begin() + static_cast<std::ptrdiff_t>(n_train),
                user_rows.end());
  }
  SplitPair split;
  split.seed = seed;
  split.fraction = fraction;
  split.train = InteractionStore(store.num_users(), store.num_items(),
                                 store.num_activities(), std::move(train));
  split.test = InteractionStore(store.num_users(), store.num_items(),
                                store.num_activities(), std::move(test));
  return split;
}

void write_interactions(std::ostream& out, const Catalog& catalog,
                        const InteractionStore& store) {
  for (const auto& t : store.triples()) {
    out << catalog.users.raw(t.user) << '\t' << catalog.items.raw(t.item)
        << '\t' << catalog.activities.raw(t.activity) << '\t';
    if (t.timestamp) {
      out << *t.timestamp;
    }
    out << '\n';
  }
}

void write_interactions(const std::filesystem::path& path,
                        const Catalog& catalog, const InteractionStore& store) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  write_interactions(out, catalog, store);
}

void write_split(const std::filesystem::path& dir, const Catalog& catalog,
                 const SplitPair& split) {
  std::filesystem::create_directories(dir);
  write_interactions(dir / "train.tsv", catalog, split.train);
  write_interactions(dir / "test.tsv", catalog, split.test);
  std::ofstream meta(dir / "split.meta");
  meta << "seed\t" << split.seed << '\n'
       << "fraction\t" << split.fraction << '\n'
       << "train_triples\t" << split.train.triples().size() << '\n'
       << "test_triples\t" << split.test.triples().size() << '\n';
}

InteractionStore read_interactions(std::istream& in, const Catalog& catalog,
                                   bool has_header) {
  std::vector<Interaction> triples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && has_header) {
      continue;
    }
    const auto row = parse_row(line, line_no);
    if (!row) {
      continue;
    }
    const auto u = catalog.users.find(row->user);
    const auto v = catalog.items.find(row->item);
    const auto z = catalog.activities.find(row->activity);
    if (!u || !v || !z) {
      throw SchemaError("line " + std::to_string(line_no) +
                        ": id not present in catalog");
    }
    triples.push_back(Interaction{*u, *v, *z, row->timestamp});
  }
  return InteractionStore(catalog.num_users(), catalog.num_items(),
                          catalog.num_activities(), std::move(triples));
}

DatasetStats dataset_stats(const Dataset& dataset) {
  DatasetStats stats;
  const auto& store = dataset.store;
  stats.users = store.num_active_users();
  std::vector<char> seen(store.num_items(), 0);
  std::vector<std::size_t> per_activity(store.num_activities(), 0);
  for (const auto& t : store.triples()) {
    seen[t.item] = 1;
    ++per_activity[t.activity];
  }
  stats.items = static_cast<std::size_t>(std::count(seen.begin(), seen.end(), 1));
  for (ActivityId z = 0; z < per_activity.size(); ++z) {
    stats.activity_counts.emplace_back(dataset.catalog.activities.raw(z),
                                       per_activity[z]);
  }
  stats.keen_pairs = store.keen_pairs().size();
  stats.act_triples = store.triples().size();
  return stats;
}

}  // namespace keen2act

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

#include "oracles.hpp"

#include <keen2act/error.hpp>
#include <keen2act/features.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

namespace keen2act {
namespace {

double entry(const SparseVector& v, std::uint32_t index) {
  for (const auto& e : v.entries()) {
    if (e.index == index) {
      return e.value;
    }
  }
  return 0.0;
}

TEST(SparseVectorTest, Invariants) {
  SparseVector v(5);
  v.push_back(1, 2.0);
  v.push_back(3, 0.0);
  EXPECT_EQ(v.nnz(), 1u);
  EXPECT_THROW(v.push_back(1, 1.0), DimensionError);
  EXPECT_THROW(v.push_back(5, 1.0), DimensionError);
  EXPECT_THROW(SparseVector(3, {{2, 1.0}, {1, 1.0}}), DimensionError);
}

TEST(CoParticipationTest, HandExamples) {
  // u0 and u1 fork and watch x; u2 forks y alone; u3 watches y.
  const InteractionStore s(4, 2, 2,
                           {{0, 0, 0, {}}, {0, 0, 1, {}}, {1, 0, 0, {}},
                            {1, 0, 1, {}}, {2, 1, 0, {}}, {3, 1, 1, {}}});
  const auto m = co_participation_features(s);
  EXPECT_EQ(m.dim(), 4u);
  EXPECT_EQ(m.rows(), 4u);
  EXPECT_DOUBLE_EQ(entry(m.row(0), 1), 2.0);
  EXPECT_DOUBLE_EQ(entry(m.row(0), 0), 0.0);
  // Same item, different activity types: no co-participation.
  EXPECT_EQ(m.row(2).nnz(), 0u);
  EXPECT_EQ(m.row(3).nnz(), 0u);
}

TEST(CoParticipationTest, MatchesPairCountingOracle) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    oracle::Gen g(seed);
    const auto s = g.store(g.between(1, 50), g.between(1, 20), g.between(1, 3),
                           g.uniform(0.02, 0.2));
    const auto m = co_participation_features(s);
    const auto expected = oracle::co_participation(s);
    for (UserId a = 0; a < s.num_users(); ++a) {
      for (UserId b = 0; b < s.num_users(); ++b) {
        ASSERT_DOUBLE_EQ(entry(m.row(a), b), expected[a][b]);
        ASSERT_DOUBLE_EQ(entry(m.row(a), b), entry(m.row(b), a));
      }
    }
  }
}

Catalog items_catalog(std::initializer_list<const char*> names) {
  Catalog c;
  for (const auto* n : names) {
    c.items.get_or_add(n);
  }
  return c;
}

TEST(TfidfTest, SingleTagIsUnit) {
  const auto c = items_catalog({"x"});
  const auto m = tfidf_item_features({{"x", {"go"}}}, c);
  ASSERT_EQ(m.row(0).nnz(), 1u);
  EXPECT_DOUBLE_EQ(m.row(0).entries()[0].value, 1.0);
}

TEST(TfidfTest, RarerTagWeighsMore) {
  EXPECT_DOUBLE_EQ(smoothed_idf(2, 1), std::log(1.5) + 1.0);
  EXPECT_DOUBLE_EQ(smoothed_idf(2, 2), 1.0);
  EXPECT_GT(smoothed_idf(2, 1), smoothed_idf(2, 2));
  for (std::size_t df = 1; df < 50; ++df) {
    EXPECT_GE(smoothed_idf(50, df), smoothed_idf(50, df + 1));
  }
  const auto c = items_catalog({"x", "y"});
  const auto m = tfidf_item_features({{"x", {"common", "rare"}}, {"y", {"common"}}}, c);
  const auto& row = m.row(0);
  ASSERT_EQ(row.nnz(), 2u);
  // Vocabulary is sorted: common=0, rare=1.
  EXPECT_GT(entry(row, 1), entry(row, 0));
}

TEST(TfidfTest, UntaggedAndNorms) {
  oracle::Gen g(4);
  Catalog c;
  TagMap tags;
  for (int v = 0; v < 30; ++v) {
    const auto name = "i" + std::to_string(v);
    c.items.get_or_add(name);
    if (v % 4 != 0) {
      for (std::size_t t = 0; t < g.between(1, 5); ++t) {
        tags[name].push_back("t" + std::to_string(g.index(8)));
      }
    }
  }
  tags["unknown-item"] = {"ignored"};
  const auto m = tfidf_item_features(tags, c);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double n = m.row(r).norm();
    if (r % 4 == 0) {
      EXPECT_EQ(n, 0.0);
    } else {
      EXPECT_NEAR(n, 1.0, 1e-12);
    }
  }
}

TEST(TagsTest, ReadFormat) {
  std::istringstream in("x\tgo,cli,go\ny\t\n\nz\trust\n");
  const auto tags = read_tags(in);
  EXPECT_EQ(tags.at("x"), (std::vector<std::string>{"go", "cli", "go"}));
  EXPECT_TRUE(tags.at("y").empty());
  EXPECT_EQ(tags.at("z").size(), 1u);
}

TEST(FeatureMatrixTest, TextRoundTrip) {
  oracle::Gen g(5);
  std::vector<SparseVector> rows;
  for (int r = 0; r < 7; ++r) {
    rows.push_back(g.sparse(11, 4));
  }
  const FeatureMatrix m(EntityKind::kItem, 11, rows);
  std::ostringstream out;
  write_feature_matrix(out, m);
  EXPECT_EQ(out.str().substr(0, 11), "dims: 7 11\n");
  std::istringstream in(out.str());
  EXPECT_EQ(read_feature_matrix(in, EntityKind::kItem), m);
}

FeatureMatrix feats(EntityKind kind, std::size_t rows, std::size_t dim,
                    std::vector<std::pair<std::size_t, SparseVector>> set) {
  std::vector<SparseVector> r(rows, SparseVector(dim));
  for (auto& [i, v] : set) {
    r[i] = v;
  }
  return FeatureMatrix(kind, dim, std::move(r));
}

TEST(LayoutTest, BlocksAreContiguous) {
  const auto k = FeatureLayout::keen(5, 7, 4, 3);
  EXPECT_EQ(k.user_id().offset, 0u);
  EXPECT_EQ(k.item_id().offset, 5u);
  EXPECT_EQ(k.user_features().offset, 12u);
  EXPECT_EQ(k.item_features().offset, 16u);
  EXPECT_EQ(k.dim(), 19u);
  EXPECT_EQ(k.activity().size, 0u);
  EXPECT_FALSE(k.has_activity_block());
  const auto a = FeatureLayout::act(5, 7, 2, 4, 3);
  EXPECT_EQ(a.activity().offset, 19u);
  EXPECT_EQ(a.dim(), 21u);
  LayoutOptions no_ids;
  no_ids.user_id = false;
  no_ids.item_id = false;
  const auto n = FeatureLayout::keen(5, 7, 4, 3, no_ids);
  EXPECT_EQ(n.dim(), 7u);
  EXPECT_EQ(n.user_features().offset, 0u);
}

TEST(AssemblyTest, OnlyUserOneHot) {
  LayoutOptions o{true, false, false, false};
  const auto layout = FeatureLayout::keen(5, 4, 2, 2, o);
  const auto uf = feats(EntityKind::kUser, 5, 2, {});
  const auto itf = feats(EntityKind::kItem, 4, 2, {});
  const auto x = assemble_keen_input(3, 1, layout, uf, itf);
  ASSERT_EQ(x.nnz(), 1u);
  EXPECT_EQ(x.entries()[0], (SparseEntry{3, 1.0}));
}

TEST(AssemblyTest, EntryCounts) {
  const auto uf = feats(EntityKind::kUser, 3, 6,
                        {{1, SparseVector(6, {{0, 2.0}, {4, 1.0}})}});
  const auto itf = feats(EntityKind::kItem, 4, 5,
                         {{2, SparseVector(5, {{0, 0.5}, {1, 0.5}, {3, 0.7}})}});
  const auto keen = FeatureLayout::keen(3, 4, 6, 5);
  const auto x = assemble_keen_input(1, 2, keen, uf, itf);
  EXPECT_EQ(x.nnz(), 7u);
  EXPECT_EQ(x.dim(), keen.dim());
  const auto act = FeatureLayout::act(3, 4, 2, 6, 5);
  const auto y0 = assemble_act_input(1, 2, 0, act, uf, itf);
  const auto y1 = assemble_act_input(1, 2, 1, act, uf, itf);
  EXPECT_EQ(y0.nnz(), 8u);
  std::size_t differing = 0;
  for (std::size_t i = 0; i < y0.nnz(); ++i) {
    differing += y0.entries()[i] == y1.entries()[i] ? 0 : 1;
  }
  EXPECT_EQ(differing, 1u);
}

TEST(AssemblyTest, ActivityOnly) {
  const LayoutOptions o{false, false, false, false};
  const auto layout = FeatureLayout::act(3, 3, 2, 2, 2, o);
  const auto uf = feats(EntityKind::kUser, 3, 2, {});
  const auto itf = feats(EntityKind::kItem, 3, 2, {});
  const auto x = assemble_act_input(0, 0, 1, layout, uf, itf);
  ASSERT_EQ(x.nnz(), 1u);
  EXPECT_EQ(x.entries()[0], (SparseEntry{static_cast<std::uint32_t>(layout.activity().offset + 1), 1.0}));
}

TEST(AssemblyTest, ColdItemKeepsOnlyUserBlocks) {
  const auto uf = feats(EntityKind::kUser, 2, 3, {{0, SparseVector(3, {{1, 1.0}})}});
  const auto itf = feats(EntityKind::kItem, 6, 2, {});
  const auto layout = FeatureLayout::keen(2, 5, 3, 2);
  // Item 5 is outside the id block; flagged cold it is still scorable.
  const auto x = assemble_keen_input(0, 5, layout, uf, itf, true);
  EXPECT_EQ(x.nnz(), 2u);
  for (const auto& e : x.entries()) {
    EXPECT_TRUE(e.index < 2 || (e.index >= layout.user_features().offset &&
                                e.index < layout.item_features().offset));
  }
  EXPECT_THROW(assemble_keen_input(0, 5, layout, uf, itf, false), DimensionError);
  EXPECT_THROW(assemble_keen_input(2, 0, layout, uf, itf), DimensionError);
}

TEST(AssemblyTest, InjectiveWithIds) {
  oracle::Gen g(8);
  const std::size_t nu = 6, nv = 7, nz = 3;
  std::vector<SparseVector> ur, ir;
  for (std::size_t i = 0; i < nu; ++i) ur.push_back(g.sparse(4, 2));
  for (std::size_t i = 0; i < nv; ++i) ir.push_back(g.sparse(3, 2));
  const FeatureMatrix uf(EntityKind::kUser, 4, ur), itf(EntityKind::kItem, 3, ir);
  const auto layout = FeatureLayout::act(nu, nv, nz, 4, 3);
  std::set<std::vector<std::pair<std::uint32_t, double>>> seen;
  for (UserId u = 0; u < nu; ++u) {
    for (ItemId v = 0; v < nv; ++v) {
      for (ActivityId z = 0; z < nz; ++z) {
        const auto x = assemble_act_input(u, v, z, layout, uf, itf);
        std::vector<std::pair<std::uint32_t, double>> key;
        for (const auto& e : x.entries()) key.emplace_back(e.index, e.value);
        EXPECT_TRUE(seen.insert(key).second);
      }
    }
  }
}

TEST(BuildFeaturesTest, WarmItemsAndScaling) {
  const InteractionStore s(3, 4, 1, {{0, 0, 0, {}}, {1, 0, 0, {}}, {2, 2, 0, {}}});
  Catalog c;
  for (auto n : {"u0", "u1", "u2"}) c.users.get_or_add(n);
  for (auto n : {"a", "b", "c", "d"}) c.items.get_or_add(n);
  c.activities.get_or_add("fork");
  const auto raw = build_features(s, c, nullptr, UserFeatureScaling::kRaw);
  EXPECT_FALSE(raw.is_cold(0));
  EXPECT_TRUE(raw.is_cold(1));
  EXPECT_FALSE(raw.is_cold(2));
  EXPECT_TRUE(raw.is_cold(3));
  EXPECT_EQ(raw.items.dim(), 0u);
  EXPECT_DOUBLE_EQ(entry(raw.users.row(0), 1), 1.0);
  const auto l2 = build_features(s, c, nullptr, UserFeatureScaling::kL2);
  for (std::size_t r = 0; r < 3; ++r) {
    const double n = l2.users.row(r).norm();
    EXPECT_TRUE(n == 0.0 || std::abs(n - 1.0) < 1e-12);
  }
}

}  // namespace
}  // namespace keen2act

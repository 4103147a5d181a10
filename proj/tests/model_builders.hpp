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

// Small hand-wired models with directly controllable scores.

#include "oracles.hpp"

#include <keen2act/training.hpp>

namespace keen2act::testing {

// K(u, v) = keen[v] and A(u, v, z) = act[v][z] for every user.
inline TrainedModel hand_model(std::size_t users, const std::vector<double>& keen,
                               const std::vector<std::vector<double>>& act,
                               const std::vector<double>& keen_thresholds,
                               const std::vector<double>& act_thresholds) {
  const std::size_t nv = keen.size();
  const std::size_t nz = act_thresholds.size();
  TrainedModel m;
  m.features.users = FeatureMatrix(EntityKind::kUser, 0,
                                   std::vector<SparseVector>(users, SparseVector(0)));
  m.features.items = FeatureMatrix(EntityKind::kItem, 0,
                                   std::vector<SparseVector>(nv, SparseVector(0)));
  m.features.warm_items.assign(nv, 1);

  const LayoutOptions items_only{false, true, false, false};
  m.keen.layout = FeatureLayout::keen(users, nv, 0, 0, items_only);
  m.keen.params = init_params(m.keen.layout.dim(), 1, 1, 0.0);
  for (std::size_t v = 0; v < nv; ++v) {
    m.keen.params.w[m.keen.layout.item_id().offset + v] = keen[v];
  }

  // One latent column per activity: <v_item, v_z> picks act[v][z].
  m.act.layout = FeatureLayout::act(users, nv, nz, 0, 0, items_only);
  m.act.params = init_params(m.act.layout.dim(), nz, 1, 0.0);
  for (std::size_t v = 0; v < nv; ++v) {
    auto row = m.act.params.factor_row(m.act.layout.item_id().offset + v);
    for (std::size_t z = 0; z < nz; ++z) {
      row[z] = act[v][z];
    }
  }
  for (std::size_t z = 0; z < nz; ++z) {
    m.act.params.factor_row(m.act.layout.activity().offset + z)[z] = 1.0;
  }
  m.thresholds.item_thresholds = keen_thresholds;
  m.thresholds.activity_thresholds = act_thresholds;
  m.thresholds.global_item_fallback = 0.0;
  return m;
}

// Random full-layout model with thresholds near the score distribution.
inline TrainedModel random_model(oracle::Gen& g, std::size_t users,
                                 std::size_t items, std::size_t acts) {
  TrainedModel m;
  std::vector<SparseVector> ur, ir;
  for (std::size_t u = 0; u < users; ++u) ur.push_back(g.sparse(3, 2));
  for (std::size_t v = 0; v < items; ++v) ir.push_back(g.sparse(4, 2));
  m.features.users = FeatureMatrix(EntityKind::kUser, 3, ur);
  m.features.items = FeatureMatrix(EntityKind::kItem, 4, ir);
  m.features.warm_items.resize(items);
  for (auto& w : m.features.warm_items) w = g.coin(0.8) ? 1 : 0;
  m.keen.layout = FeatureLayout::keen(users, items, 3, 4);
  m.keen.params = g.params(m.keen.layout.dim(), 3);
  m.act.layout = FeatureLayout::act(users, items, acts, 3, 4);
  m.act.params = g.params(m.act.layout.dim(), 3);
  for (std::size_t v = 0; v < items; ++v) {
    m.thresholds.item_thresholds.push_back(g.uniform(-1.5, 1.5));
  }
  for (std::size_t z = 0; z < acts; ++z) {
    m.thresholds.activity_thresholds.push_back(g.uniform(-1.5, 1.5));
  }
  m.thresholds.global_item_fallback = g.uniform(-1.0, 1.0);
  return m;
}

}  // namespace keen2act::testing

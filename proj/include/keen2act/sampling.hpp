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

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace keen2act {

// Uniform negative sampler over [0, n) minus a sorted exclusion list, without
// replacement within one sampling loop. `visit(value, draw)` is called with
// the 1-based draw count and stops the loop by returning true. Returns the
// number of draws made.
template <class Rng, class Visit>
std::size_t sample_negatives(std::size_t n,
                             std::span<const std::uint32_t> excluded,
                             std::size_t max_draws, Rng& rng, Visit&& visit) {
  const std::size_t total = n - std::min(n, excluded.size());
  if (total == 0 || max_draws == 0) {
    return 0;
  }
  const std::size_t draws = std::min(max_draws, total);
  if (excluded.size() * 2 >= n || total <= 4 * draws) {
    // Dense exclusion: enumerate candidates and partially shuffle.
    std::vector<std::uint32_t> pool;
    pool.reserve(total);
    std::size_t e = 0;
    for (std::uint32_t x = 0; x < n; ++x) {
      while (e < excluded.size() && excluded[e] < x) {
        ++e;
      }
      if (e < excluded.size() && excluded[e] == x) {
        continue;
      }
      pool.push_back(x);
    }
    for (std::size_t d = 0; d < draws; ++d) {
      std::uniform_int_distribution<std::size_t> pick(d, pool.size() - 1);
      std::swap(pool[d], pool[pick(rng)]);
      if (visit(pool[d], d + 1)) {
        return d + 1;
      }
    }
    return draws;
  }
  std::vector<std::uint32_t> drawn;
  drawn.reserve(draws);
  std::uniform_int_distribution<std::uint32_t> pick(
    0, static_cast<std::uint32_t>(n - 1));
  for (std::size_t d = 0; d < draws; ++d) {
    std::uint32_t x = 0;
    do {
      x = pick(rng);
    } while (std::binary_search(excluded.begin(), excluded.end(), x) ||
             std::find(drawn.begin(), drawn.end(), x) != drawn.end());
    drawn.push_back(x);
    if (visit(x, d + 1)) {
      return d + 1;
    }
  }
  return draws;
}

}  // namespace keen2act

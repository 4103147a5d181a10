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

#include <keen2act/features.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace keen2act {

// Second-order factorization machine parameters: bias, linear weights and a
// dim x k row-major factor matrix.
struct FMParameters {
  std::size_t dim = 0;
  std::size_t k = 0;
  double w0 = 0.0;
  std::vector<double> w;
  std::vector<double> factors;

  std::span<const double> factor_row(std::size_t i) const {
    return std::span<const double>(factors).subspan(i * k, k);
  }
  std::span<double> factor_row(std::size_t i) {
    return std::span<double>(factors).subspan(i * k, k);
  }
  bool all_finite() const;
  double factor_norm() const;

  friend bool operator==(const FMParameters&, const FMParameters&) = default;
};

// w0 = 0, w = 0, factors ~ U(-scale, scale) from a seeded generator.
FMParameters init_params(std::size_t dim, std::size_t k, std::uint64_t seed,
                         double scale);

double fm_score(const FMParameters& params, const SparseVector& x);

// Gradient restricted to the coordinates an input touches. `indices` is
// sorted and unique; `factors` holds indices.size() rows of k values.
struct FMGradient {
  std::size_t k = 0;
  double w0 = 0.0;
  std::vector<std::uint32_t> indices;
  std::vector<double> w;
  std::vector<double> factors;

  std::span<const double> factor_row(std::size_t j) const {
    return std::span<const double>(factors).subspan(j * k, k);
  }

  // Sum with another sparse gradient (merging index sets).
  void add(const FMGradient& other);
  // Adds lambda * theta on every touched w_i and v_i (never on w0).
  void add_weight_decay(const FMParameters& params, double lambda);
  bool is_zero() const;
};

// d(upstream * score)/d(theta) for one input.
FMGradient fm_gradient(const FMParameters& params, const SparseVector& x,
                       double upstream);

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Moment accumulators shaped like FMParameters plus the step counter. Sparse
// updates only advance the moments of the coordinates they touch.
struct AdamState {
  std::uint64_t t = 0;
  double m_w0 = 0.0;
  double v_w0 = 0.0;
  std::vector<double> m_w;
  std::vector<double> v_w;
  std::vector<double> m_factors;
  std::vector<double> v_factors;

  static AdamState for_params(const FMParameters& params);
};

// Bias-corrected Adam step for one coordinate at step t (t >= 1). Returns the
// parameter delta.
double adam_delta(double grad, double& m, double& v, std::uint64_t t,
                  const AdamConfig& config);

void adam_update(FMParameters& params, AdamState& state,
                 const FMGradient& gradient, const AdamConfig& config);

// Running sums of a partial input, so inputs sharing a user half can be
// scored by adding only their item half.
struct FmPartial {
  double linear = 0.0;
  double squares = 0.0;
  std::vector<double> sums;

  explicit FmPartial(std::size_t k = 0) : sums(k, 0.0) {}
  void clear();
  void add(const FMParameters& params, std::uint32_t index, double value);
  void add(const FMParameters& params, std::span<const SparseEntry> entries);
};

// Score of the input made of the disjoint parts `a` and `b`.
double fm_score(const FMParameters& params, const FmPartial& a,
                const FmPartial& b);

}  // namespace keen2act

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
#include <keen2act/fm.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace keen2act {

bool FMParameters::all_finite() const {
  const auto finite = [](double x) { return std::isfinite(x); };
  return std::isfinite(w0) && std::all_of(w.begin(), w.end(), finite) &&
         std::all_of(factors.begin(), factors.end(), finite);
}

double FMParameters::factor_norm() const {
  double sq = 0.0;
  for (const double f : factors) {
    sq += f * f;
  }
  return std::sqrt(sq);
}

FMParameters init_params(std::size_t dim, std::size_t k, std::uint64_t seed,
                         double scale) {
  if (dim < 1 || k < 1) {
    throw DimensionError("FM needs dim >= 1 and k >= 1");
  }
  FMParameters params;
  params.dim = dim;
  params.k = k;
  params.w.assign(dim, 0.0);
  params.factors.assign(dim * k, 0.0);
  if (scale > 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-scale, scale);
    for (auto& f : params.factors) {
      f = dist(rng);
    }
  }
  return params;
}

namespace {

void check_dim(const FMParameters& params, const SparseVector& x) {
  if (x.dim() != params.dim) {
    throw DimensionError("input dim " + std::to_string(x.dim()) +
                         " does not match model dim " +
                         std::to_string(params.dim));
  }
}

}  // namespace

double fm_score(const FMParameters& params, const SparseVector& x) {
  check_dim(params, x);
  FmPartial part(params.k);
  part.add(params, x.entries());
  const FmPartial none(params.k);
  return fm_score(params, part, none);
}

FMGradient fm_gradient(const FMParameters& params, const SparseVector& x,
                       double upstream) {
  check_dim(params, x);
  const std::size_t k = params.k;
  FMGradient g;
  g.k = k;
  g.w0 = upstream;
  const auto entries = x.entries();
  std::vector<double> sums(k, 0.0);
  for (const auto& e : entries) {
    const auto row = params.factor_row(e.index);
    for (std::size_t f = 0; f < k; ++f) {
      sums[f] += row[f] * e.value;
    }
  }
  g.indices.reserve(entries.size());
  g.w.reserve(entries.size());
  g.factors.reserve(entries.size() * k);
  for (const auto& e : entries) {
    g.indices.push_back(e.index);
    g.w.push_back(upstream * e.value);
    const auto row = params.factor_row(e.index);
    const double x2 = e.value * e.value;
    for (std::size_t f = 0; f < k; ++f) {
      g.factors.push_back(upstream * (e.value * sums[f] - row[f] * x2));
    }
  }
  return g;
}

void FMGradient::add(const FMGradient& other) {
  if (other.indices.empty() && other.w0 == 0.0) {
    return;
  }
  if (k == 0) {
    k = other.k;
  }
  if (other.k != k) {
    throw DimensionError("gradient latent dims differ");
  }
  w0 += other.w0;
  std::vector<std::uint32_t> idx;
  std::vector<double> wv;
  std::vector<double> fv;
  idx.reserve(indices.size() + other.indices.size());
  std::size_t a = 0;
  std::size_t b = 0;
  auto take = [&](const FMGradient& src, std::size_t j) {
    idx.push_back(src.indices[j]);
    wv.push_back(src.w[j]);
    const auto row = src.factor_row(j);
    fv.insert(fv.end(), row.begin(), row.end());
  };
  while (a < indices.size() || b < other.indices.size()) {
    if (b == other.indices.size() ||
        (a < indices.size() && indices[a] < other.indices[b])) {
      take(*this, a++);
    } else if (a == indices.size() || other.indices[b] < indices[a]) {
      take(other, b++);
    } else {
      take(*this, a);
      wv.back() += other.w[b];
      const auto row = other.factor_row(b);
      for (std::size_t f = 0; f < k; ++f) {
        fv[fv.size() - k + f] += row[f];
      }
      ++a;
      ++b;
    }
  }
  indices = std::move(idx);
  w = std::move(wv);
  factors = std::move(fv);
}

void FMGradient::add_weight_decay(const FMParameters& params, double lambda) {
  if (lambda == 0.0) {
    return;
  }
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const auto i = indices[j];
    w[j] += lambda * params.w[i];
    const auto row = params.factor_row(i);
    for (std::size_t f = 0; f < k; ++f) {
      factors[j * k + f] += lambda * row[f];
    }
  }
}

bool FMGradient::is_zero() const {
  const auto zero = [](double x) { return x == 0.0; };
  return w0 == 0.0 && std::all_of(w.begin(), w.end(), zero) &&
         std::all_of(factors.begin(), factors.end(), zero);
}

AdamState AdamState::for_params(const FMParameters& params) {
  AdamState s;
  s.m_w.assign(params.w.size(), 0.0);
  s.v_w.assign(params.w.size(), 0.0);
  s.m_factors.assign(params.factors.size(), 0.0);
  s.v_factors.assign(params.factors.size(), 0.0);
  return s;
}

double adam_delta(double grad, double& m, double& v, std::uint64_t t,
                  const AdamConfig& config) {
  m = config.beta1 * m + (1.0 - config.beta1) * grad;
  v = config.beta2 * v + (1.0 - config.beta2) * grad * grad;
  const double td = static_cast<double>(t);
  const double m_hat = m / (1.0 - std::pow(config.beta1, td));
  const double v_hat = v / (1.0 - std::pow(config.beta2, td));
  return -config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
}

void adam_update(FMParameters& params, AdamState& state,
                 const FMGradient& gradient, const AdamConfig& config) {
  if (state.m_w.size() != params.w.size() ||
      state.m_factors.size() != params.factors.size()) {
    throw DimensionError("Adam state shape does not match parameters");
  }
  if (!gradient.indices.empty() && gradient.k != params.k) {
    throw DimensionError("gradient latent dim does not match parameters");
  }
  ++state.t;
  const auto t = state.t;
  params.w0 += adam_delta(gradient.w0, state.m_w0, state.v_w0, t, config);
  const std::size_t k = params.k;
  for (std::size_t j = 0; j < gradient.indices.size(); ++j) {
    const std::size_t i = gradient.indices[j];
    params.w[i] +=
      adam_delta(gradient.w[j], state.m_w[i], state.v_w[i], t, config);
    for (std::size_t f = 0; f < k; ++f) {
      const std::size_t c = i * k + f;
      params.factors[c] += adam_delta(gradient.factors[j * k + f],
                                      state.m_factors[c], state.v_factors[c],
                                      t, config);
    }
  }
}

void FmPartial::clear() {
  linear = 0.0;
  squares = 0.0;
  std::fill(sums.begin(), sums.end(), 0.0);
}

void FmPartial::add(const FMParameters& params, std::uint32_t index,
                    double value) {
  linear += params.w[index] * value;
  const auto row = params.factor_row(index);
  const double x2 = value * value;
  for (std::size_t f = 0; f < sums.size(); ++f) {
    sums[f] += row[f] * value;
    squares += row[f] * row[f] * x2;
  }
}

void FmPartial::add(const FMParameters& params,
                    std::span<const SparseEntry> entries) {
  for (const auto& e : entries) {
    add(params, e.index, e.value);
  }
}

double fm_score(const FMParameters& params, const FmPartial& a,
                const FmPartial& b) {
  double pair = 0.0;
  for (std::size_t f = 0; f < params.k; ++f) {
    const double s = a.sums[f] + b.sums[f];
    pair += s * s;
  }
  return params.w0 + a.linear + b.linear + 0.5 * (pair - a.squares - b.squares);
}

}  // namespace keen2act

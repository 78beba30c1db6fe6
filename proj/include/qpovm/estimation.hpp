// Copyright 2026 The qpovm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Shot sampling, expectation-value estimators, bias and tomography-based
// bias mitigation, and per-outcome second-moment breakdowns.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "qpovm/error.hpp"
#include "qpovm/linalg.hpp"
#include "qpovm/povm_core.hpp"
#include "qpovm/tomography.hpp"

namespace qpovm {

/// Sparse outcome counts keyed by (mixed-radix) global outcome index.
struct OutcomeHistogram {
  std::map<std::uint64_t, std::uint64_t> counts;
  std::uint64_t shots = 0;
  std::uint64_t num_outcomes = 0;

  void add(std::uint64_t outcome, std::uint64_t n = 1) {
    if (outcome >= num_outcomes) throw DimensionError("outcome index out of range");
    counts[outcome] += n;
    shots += n;
  }

  Probabilities frequencies() const {
    Probabilities f = Probabilities::Zero(static_cast<Eigen::Index>(num_outcomes));
    for (const auto& [k, n] : counts) f(static_cast<Eigen::Index>(k)) = static_cast<double>(n) / shots;
    return f;
  }
};

inline constexpr std::uint64_t kShotsPerShard = 1u << 16;

/// Multinomial draw from a joint distribution. Shots are split into shards
/// of 65536 with stream (seed, shard).
inline OutcomeHistogram sample_outcomes(const Probabilities& p, std::uint64_t shots, std::uint64_t seed) {
  if (p.size() == 0) throw DimensionError("empty distribution");
  if (std::abs(p.sum() - 1.0) > 1e-9 || p.minCoeff() < -1e-12) throw ValidationError("distribution must be normalized");
  OutcomeHistogram h;
  h.num_outcomes = static_cast<std::uint64_t>(p.size());
  const Probabilities q = p.cwiseMax(0.0) / p.cwiseMax(0.0).sum();
  for (std::uint64_t shard = 0; shard * kShotsPerShard < shots; ++shard) {
    const std::uint64_t n = std::min(kShotsPerShard, shots - shard * kShotsPerShard);
    auto rng = task_rng(seed, {shard});
    const auto c = multinomial(n, q, rng);
    for (std::size_t k = 0; k < c.size(); ++k) {
      if (c[k] > 0) h.add(k, c[k]);
    }
  }
  return h;
}

/// Per-qubit categorical draws for a product distribution; factor q gives
/// digit q of the little-endian global index.
inline OutcomeHistogram sample_outcomes(const std::vector<Probabilities>& factors, std::uint64_t shots,
                                        std::uint64_t seed) {
  if (factors.empty()) throw DimensionError("no factor distributions");
  OutcomeHistogram h;
  h.num_outcomes = 1;
  std::vector<std::uint64_t> stride;
  for (const auto& f : factors) {
    if (std::abs(f.sum() - 1.0) > 1e-9 || f.minCoeff() < -1e-12) throw ValidationError("factor must be normalized");
    stride.push_back(h.num_outcomes);
    h.num_outcomes *= static_cast<std::uint64_t>(f.size());
  }
  std::vector<std::discrete_distribution<int>> dists;
  for (const auto& f : factors) {
    const RVector w = f.cwiseMax(0.0);
    dists.emplace_back(w.data(), w.data() + w.size());
  }
  for (std::uint64_t shard = 0; shard * kShotsPerShard < shots; ++shard) {
    const std::uint64_t n = std::min(kShotsPerShard, shots - shard * kShotsPerShard);
    auto rng = task_rng(seed, {shard});
    for (std::uint64_t s = 0; s < n; ++s) {
      std::uint64_t g = 0;
      for (std::size_t q = 0; q < dists.size(); ++q) g += stride[q] * static_cast<std::uint64_t>(dists[q](rng));
      h.add(g);
    }
  }
  return h;
}

enum class CoefficientSource { kTheoretical, kTomographic };

struct EstimationReport {
  double estimate = 0.0;
  double std_error = 0.0;
  double second_moment = 0.0;
  std::uint64_t shots = 0;
  CoefficientSource source = CoefficientSource::kTheoretical;
};

namespace detail {
template <class Lookup>
EstimationReport estimate_with(const OutcomeHistogram& h, std::uint64_t coverage, Lookup&& c) {
  if (h.shots == 0) throw ValidationError("histogram has no shots");
  double s1 = 0.0;
  double s2 = 0.0;
  for (const auto& [k, n] : h.counts) {
    if (k >= coverage) throw DimensionError("observed outcome " + std::to_string(k) + " has no coefficient");
    const double ck = c(k);
    s1 += ck * static_cast<double>(n);
    s2 += ck * ck * static_cast<double>(n);
  }
  EstimationReport r;
  r.shots = h.shots;
  r.estimate = s1 / h.shots;
  r.second_moment = s2 / h.shots;
  r.std_error = std::sqrt(std::max(0.0, r.second_moment - r.estimate * r.estimate) / h.shots);
  return r;
}
}  // namespace detail

/// Σ c_m N_m / N with the plug-in standard error √((Σ c²N/N − est²)/N).
inline EstimationReport estimate_expectation(const OutcomeHistogram& h, const Coefficients& c) {
  return detail::estimate_with(h, static_cast<std::uint64_t>(c.size()),
                               [&](std::uint64_t k) { return c(static_cast<Eigen::Index>(k)); });
}

/// Lazy product coefficients: only observed outcomes are evaluated.
inline EstimationReport estimate_expectation(const OutcomeHistogram& h, const ProductCoefficients& c) {
  return detail::estimate_with(h, c.size(), [&](std::uint64_t k) { return c(k); });
}

/// Σ c_m (p_exp,m − p_theo,m).
inline double bias(const Coefficients& c, const Probabilities& p_exp, const Probabilities& p_theo) {
  if (c.size() != p_exp.size() || c.size() != p_theo.size()) throw DimensionError("bias inputs differ in length");
  return c.dot(p_exp - p_theo);
}

/// Re-derives the coefficients against a tomographically reconstructed POVM.
inline EstimationReport mitigated_estimate(const Observable& obs, const Povm& tomo_povm, const OutcomeHistogram& h) {
  auto r = estimate_expectation(h, decompose_observable(obs, tomo_povm));
  r.source = CoefficientSource::kTomographic;
  return r;
}

inline EstimationReport mitigated_estimate(const Observable& obs, const ProductPovm& tomo_povm,
                                           const OutcomeHistogram& h) {
  for (const auto& f : tomo_povm.factors()) require_informationally_complete(f);
  auto r = estimate_expectation(h, decompose_observable(obs, tomo_povm));
  r.source = CoefficientSource::kTomographic;
  return r;
}

// ---------------------------------------------------------------------------
// Second-moment breakdown

struct ScatterRow {
  std::uint64_t outcome = 0;
  double c = 0.0;
  double p = 0.0;
  double c2p = 0.0;
};

struct ScatterTable {
  std::vector<ScatterRow> rows;  // by c²p, descending
  double expectation = 0.0;
  double second_moment = 0.0;
  double variance = 0.0;
};

inline constexpr int kMaxScatterQubits = 6;

/// Per-outcome (c_m, p_m, c_m² p_m) for an n-qubit pure state, n ≤ 6.
inline ScatterTable scatter_export(const Observable& obs, const ProductPovm& povm, const CVector& state) {
  const int n = povm.n_qubits();
  if (n > kMaxScatterQubits) {
    throw UnsupportedSizeError("scatter export enumerates all outcomes; limited to " +
                               std::to_string(kMaxScatterQubits) + " qubits");
  }
  if (state.size() != (Eigen::Index{1} << n)) throw DimensionError("state length must be 2^n");
  const double norm = state.norm();
  if (std::abs(norm - 1.0) > 1e-9) throw ValidationError("state vector must be normalized");
  const Probabilities p = outcome_probabilities(projector(state), povm, kMaxScatterQubits);
  const Coefficients c = decompose_observable(obs, povm).dense(kMaxScatterQubits);
  ScatterTable t;
  t.expectation = expectation_from_probs(c, p);
  const auto v = estimator_variance(c, p);
  t.second_moment = v.second_moment;
  t.variance = v.variance;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    t.rows.push_back({static_cast<std::uint64_t>(k), c(k), p(k), c(k) * c(k) * p(k)});
  }
  std::stable_sort(t.rows.begin(), t.rows.end(), [](const auto& a, const auto& b) { return a.c2p > b.c2p; });
  return t;
}

}  // namespace qpovm

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

// Synthetic detector data, linear-inversion and maximum-likelihood detector
// tomography, constrained readout mitigation and the shot-scaling study.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qpovm/error.hpp"
#include "qpovm/linalg.hpp"
#include "qpovm/parallel.hpp"
#include "qpovm/povm_core.hpp"

namespace qpovm {

/// Independent generator for a task identified by (seed, ids...).
inline std::mt19937_64 task_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> ids = {}) {
  std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  for (auto id : ids) {
    words.push_back(static_cast<std::uint32_t>(id));
    words.push_back(static_cast<std::uint32_t>(id >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

/// Multinomial draw by sequential binomials.
template <class Rng>
std::vector<std::uint64_t> multinomial(std::uint64_t shots, const Probabilities& p, Rng& rng) {
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(p.size()), 0);
  std::uint64_t left = shots;
  double mass = 1.0;
  for (Eigen::Index m = 0; m < p.size() && left > 0; ++m) {
    if (m + 1 == p.size()) {
      counts[m] = left;
      break;
    }
    const double q = mass > 0.0 ? std::clamp(p(m) / mass, 0.0, 1.0) : 0.0;
    std::binomial_distribution<std::uint64_t> bin(left, q);
    counts[m] = bin(rng);
    left -= counts[m];
    mass -= p(m);
  }
  return counts;
}

struct ReferenceStateSet {
  std::vector<std::string> labels;
  std::vector<CMatrix> states;  // density matrices

  std::size_t size() const { return states.size(); }
};

/// |0⟩, |1⟩, |+⟩, |−⟩, |i⟩, |−i⟩.
inline ReferenceStateSet stabilizer_states() {
  return {{"0", "1", "+", "-", "+i", "-i"},
          {projector(kets::zero()), projector(kets::one()), projector(kets::plus()), projector(kets::minus()),
           projector(kets::plus_i()), projector(kets::minus_i())}};
}

/// Column-stochastic P(measured | prepared).
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(RMatrix c, double tol = 1e-9) : c_(std::move(c)) {
    if (c_.rows() != c_.cols() || c_.rows() == 0) throw DimensionError("confusion matrix must be square");
    if (c_.minCoeff() < -tol || c_.maxCoeff() > 1.0 + tol) {
      throw ValidationError("confusion matrix entries must lie in [0, 1]");
    }
    for (Eigen::Index j = 0; j < c_.cols(); ++j) {
      if (std::abs(c_.col(j).sum() - 1.0) > tol) throw ValidationError("confusion matrix columns must sum to 1");
    }
  }

  static ConfusionMatrix identity(int m) { return ConfusionMatrix(RMatrix::Identity(m, m)); }

  const RMatrix& matrix() const { return c_; }
  Eigen::Index size() const { return c_.rows(); }
  Probabilities apply(const Probabilities& p) const {
    if (p.size() != c_.cols()) throw DimensionError("confusion matrix and distribution sizes differ");
    return c_ * p;
  }
  /// Effective POVM seen through the readout: E'_i = sum_j C_ij E_j.
  Povm apply(const Povm& povm) const {
    if (povm.size() != static_cast<std::size_t>(c_.cols())) {
      throw DimensionError("confusion matrix and POVM sizes differ");
    }
    std::vector<CMatrix> ops;
    for (Eigen::Index i = 0; i < c_.rows(); ++i) {
      CMatrix e = CMatrix::Zero(povm.dim(), povm.dim());
      for (Eigen::Index j = 0; j < c_.cols(); ++j) e += c_(i, j) * povm[j];
      ops.push_back(e);
    }
    return Povm(std::move(ops), povm.labels());
  }

 private:
  RMatrix c_;
};

/// Measured qudit readout assignment probabilities (column = prepared level).
inline ConfusionMatrix reference_confusion() {
  RMatrix c(4, 4);
  c << 0.983, 0.042, 0.006, 0.002,
       0.005, 0.888, 0.088, 0.021,
       0.008, 0.069, 0.593, 0.228,
       0.004, 0.001, 0.313, 0.749;
  return ConfusionMatrix(c);
}

struct CountsTable {
  std::vector<std::string> state_labels;
  RMatrix counts;  // rows: states, cols: outcomes; whole numbers

  Eigen::Index num_states() const { return counts.rows(); }
  Eigen::Index num_outcomes() const { return counts.cols(); }
  double shots(Eigen::Index j) const { return counts.row(j).sum(); }

  RMatrix frequencies() const {
    RMatrix f = counts;
    for (Eigen::Index j = 0; j < f.rows(); ++j) {
      const double s = f.row(j).sum();
      if (s > 0.0) f.row(j) /= s;
    }
    return f;
  }

  void validate() const {
    if (counts.size() == 0) throw ValidationError("counts table is empty");
    if (counts.minCoeff() < 0.0) throw ValidationError("counts must be non-negative");
    for (Eigen::Index j = 0; j < counts.rows(); ++j) {
      if (!(shots(j) > 0.0)) throw ValidationError("every reference state needs at least one shot");
    }
  }
};

/// Exact outcome distributions: row j is (Tr ρ_j Π^m)_m.
inline RMatrix probability_table(const Povm& povm, const ReferenceStateSet& states) {
  RMatrix p(static_cast<Eigen::Index>(states.size()), static_cast<Eigen::Index>(povm.size()));
  for (std::size_t j = 0; j < states.size(); ++j) {
    p.row(static_cast<Eigen::Index>(j)) = outcome_probabilities(DensityMatrix(states.states[j]), povm).transpose();
  }
  return p;
}

/// Multinomial counts per reference state, optionally passed through a
/// readout confusion matrix. State j draws from the stream (seed, j).
inline CountsTable sample_counts(const Povm& povm, const ReferenceStateSet& states, std::uint64_t shots,
                                 std::uint64_t seed, const std::optional<ConfusionMatrix>& confusion = std::nullopt) {
  if (shots < 1) throw ValidationError("shots must be at least 1");
  if (confusion && confusion->size() != static_cast<Eigen::Index>(povm.size())) {
    throw DimensionError("confusion matrix does not match the outcome count");
  }
  const RMatrix p = probability_table(povm, states);
  CountsTable t;
  t.state_labels = states.labels;
  t.counts.resize(p.rows(), p.cols());
  for (Eigen::Index j = 0; j < p.rows(); ++j) {
    Probabilities pj = p.row(j).transpose();
    if (confusion) pj = confusion->apply(pj);
    auto rng = task_rng(seed, {static_cast<std::uint64_t>(j)});
    const auto c = multinomial(shots, pj, rng);
    for (Eigen::Index m = 0; m < p.cols(); ++m) t.counts(j, m) = static_cast<double>(c[m]);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Linear inversion

struct LinearInversionResult {
  std::vector<CMatrix> operators;  // Hermitian, summing to 𝟙, possibly not PSD
  double min_eigenvalue = 0.0;
  bool physical = true;
};

namespace detail {
inline std::array<CMatrix, 4> qubit_operator_basis() {
  return {pauli_matrix('I'), pauli_matrix('X'), pauli_matrix('Y'), pauli_matrix('Z')};
}
}  // namespace detail

/// Least-squares solve of Tr(ρ_j Π^m) = f_jm for each m, Π^m expanded in the
/// Pauli basis.
inline LinearInversionResult linear_inversion(const CountsTable& counts, const ReferenceStateSet& states) {
  counts.validate();
  if (static_cast<std::size_t>(counts.num_states()) != states.size()) {
    throw DimensionError("counts table and reference states differ in length");
  }
  const auto basis = detail::qubit_operator_basis();
  RMatrix a(static_cast<Eigen::Index>(states.size()), 4);
  for (std::size_t j = 0; j < states.size(); ++j) {
    for (int k = 0; k < 4; ++k) a(static_cast<Eigen::Index>(j), k) = 0.5 * (states.states[j] * basis[k]).trace().real();
  }
  Eigen::CompleteOrthogonalDecomposition<RMatrix> solver(a);
  if (solver.rank() < 4) throw InformationalIncompletenessError("reference states do not span the qubit operators");
  const RMatrix f = counts.frequencies();
  LinearInversionResult r;
  r.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (Eigen::Index m = 0; m < f.cols(); ++m) {
    const RVector x = solver.solve(RVector(f.col(m)));
    CMatrix op = CMatrix::Zero(2, 2);
    for (int k = 0; k < 4; ++k) op += 0.5 * x(k) * basis[k];
    r.min_eigenvalue = std::min(r.min_eigenvalue, hermitian_eigenvalues(op)(0));
    r.operators.push_back(std::move(op));
  }
  r.physical = r.min_eigenvalue >= -kPsdTolerance;
  return r;
}

/// Nearby valid POVM: negative eigenvalues clamped, then Π ← S^{−½} Π S^{−½}
/// with S = Σ Π.
inline Povm physical_projection(const std::vector<CMatrix>& operators) {
  std::vector<CMatrix> ops;
  CMatrix s = CMatrix::Zero(operators.front().rows(), operators.front().cols());
  for (const auto& op : operators) {
    ops.push_back(clamp_psd(op));
    s += ops.back();
  }
  const CMatrix w = inverse_sqrt_psd(s);
  for (auto& op : ops) op = w * op * w;
  return Povm(std::move(ops));
}

// ---------------------------------------------------------------------------
// Maximum likelihood

inline constexpr double kProbabilityFloor = 1e-12;

/// Σ_j Σ_m N_jm log Tr(ρ_j Π^m); zero counts contribute nothing.
inline double log_likelihood(const Povm& povm, const CountsTable& counts, const ReferenceStateSet& states) {
  double ll = 0.0;
  for (std::size_t j = 0; j < states.size(); ++j) {
    for (std::size_t m = 0; m < povm.size(); ++m) {
      const double n = counts.counts(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(m));
      if (n == 0.0) continue;
      const double p = std::max((states.states[j] * povm[m]).trace().real(), kProbabilityFloor);
      ll += n * std::log(p);
    }
  }
  return ll;
}

struct MlOptions {
  double tol = 1e-8;
  int max_iter = 10000;
  bool record_trace = false;
};

struct MlResult {
  Povm povm;
  int iterations = 0;
  bool converged = false;
  double last_step = 0.0;  // D_OD between the last two iterates
  std::vector<double> log_likelihood_trace;
  std::vector<std::string> warnings;
};

/// Fixed-point iteration R_m = Σ_j (N_jm / p_jm) ρ_j, λ = Σ_m R_m Π_m R_m,
/// Π_m ← λ^{−½} R_m Π_m R_m λ^{−½}, started from Π_m = 𝟙/M.
inline MlResult ml_tomography(const CountsTable& counts, const ReferenceStateSet& states, const MlOptions& opt = {}) {
  counts.validate();
  if (static_cast<std::size_t>(counts.num_states()) != states.size()) {
    throw DimensionError("counts table and reference states differ in length");
  }
  if (!(opt.tol > 0.0)) throw ValidationError("ML tolerance must be positive");
  const auto mcount = static_cast<std::size_t>(counts.num_outcomes());
  const int d = static_cast<int>(states.states.front().rows());
  std::vector<CMatrix> pi(mcount, CMatrix::Identity(d, d) / static_cast<double>(mcount));
  MlResult r;
  bool floored = false;
  auto current = [&] { return Povm(pi); };
  if (opt.record_trace) r.log_likelihood_trace.push_back(log_likelihood(current(), counts, states));
  std::vector<CMatrix> rm(mcount);
  for (int it = 0; it < opt.max_iter; ++it) {
    for (std::size_t m = 0; m < mcount; ++m) {
      rm[m] = CMatrix::Zero(d, d);
      for (std::size_t j = 0; j < states.size(); ++j) {
        const double n = counts.counts(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(m));
        if (n == 0.0) continue;
        double p = (states.states[j] * pi[m]).trace().real();
        if (p < kProbabilityFloor) {
          p = kProbabilityFloor;
          floored = true;
        }
        rm[m] += (n / p) * states.states[j];
      }
    }
    // Plain step R Π R; if it lowers the likelihood, fall back to the diluted
    // step (𝟙 + εR) Π (𝟙 + εR) with ε halved until the likelihood does not drop.
    auto step = [&](double eps) {
      CMatrix lambda = CMatrix::Zero(d, d);
      std::vector<CMatrix> next(mcount);
      for (std::size_t m = 0; m < mcount; ++m) {
        const CMatrix a = eps > 0.0 ? CMatrix(CMatrix::Identity(d, d) + eps * rm[m]) : rm[m];
        next[m] = a * pi[m] * a;
        lambda += next[m];
      }
      const CMatrix w = inverse_sqrt_psd(lambda);
      for (auto& op : next) {
        op = w * op * w;
        op = 0.5 * (op + op.adjoint());
      }
      return next;
    };
    const double ll_now = log_likelihood(current(), counts, states);
    std::vector<CMatrix> next = step(0.0);
    if (log_likelihood(Povm(next), counts, states) < ll_now) {
      double rnorm = 0.0;
      for (const auto& a : rm) rnorm = std::max(rnorm, hermitian_spectral_norm(a));
      double eps = 1.0 / rnorm;
      next = step(eps);
      while (log_likelihood(Povm(next), counts, states) < ll_now && eps > 1e-12 / rnorm) {
        eps *= 0.5;
        next = step(eps);
      }
      if (log_likelihood(Povm(next), counts, states) < ll_now) next = pi;
    }
    const Povm before(pi);
    pi = std::move(next);
    r.iterations = it + 1;
    r.last_step = operational_distance(before, current());
    if (opt.record_trace) r.log_likelihood_trace.push_back(log_likelihood(current(), counts, states));
    if (r.last_step < opt.tol) {
      r.converged = true;
      break;
    }
  }
  if (floored) {
    r.warnings.push_back("a predicted probability fell below 1e-12 for an observed outcome and was floored");
  }
  if (!r.converged) r.warnings.push_back("ML iteration stopped at the iteration cap before reaching tolerance");
  r.povm = current();
  return r;
}

// ---------------------------------------------------------------------------
// Readout mitigation

inline constexpr std::size_t kMaxMitigationOutcomes = 16;

/// argmin ‖C q − p‖₂ over the probability simplex. Every support set is
/// solved as an equality-constrained least-squares problem; the best
/// feasible candidate is the exact optimum.
inline Probabilities mitigate_readout(const Probabilities& raw, const ConfusionMatrix& confusion,
                                      std::vector<std::string>* warnings = nullptr) {
  const RMatrix& c = confusion.matrix();
  const Eigen::Index m = c.cols();
  if (raw.size() != c.rows()) throw DimensionError("confusion matrix and distribution sizes differ");
  if (std::abs(raw.sum() - 1.0) > 1e-6 || raw.minCoeff() < -1e-12) {
    throw ValidationError("raw probabilities must be normalized");
  }
  if (static_cast<std::size_t>(m) > kMaxMitigationOutcomes) {
    throw UnsupportedSizeError("constrained mitigation limited to 16 outcomes");
  }
  Eigen::FullPivLU<RMatrix> lu(c);
  const bool singular = !lu.isInvertible();
  if (singular && warnings) warnings->push_back("confusion matrix is singular; using pseudo-inverse solves");
  if (!singular) {
    const RVector q = lu.solve(raw);
    if (q.minCoeff() >= 0.0) return q / q.sum();
  }
  RVector best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (mask & (1u << i)) idx.push_back(i);
    }
    const auto k = static_cast<Eigen::Index>(idx.size());
    RMatrix cs(c.rows(), k);
    for (Eigen::Index a = 0; a < k; ++a) cs.col(a) = c.col(idx[a]);
    RMatrix kkt = RMatrix::Zero(k + 1, k + 1);
    kkt.topLeftCorner(k, k) = 2.0 * cs.transpose() * cs;
    kkt.block(0, k, k, 1).setOnes();
    kkt.block(k, 0, 1, k).setOnes();
    RVector rhs(k + 1);
    rhs.head(k) = 2.0 * cs.transpose() * raw;
    rhs(k) = 1.0;
    const RVector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    if (sol.head(k).minCoeff() < -1e-12) continue;
    RVector q = RVector::Zero(m);
    for (Eigen::Index a = 0; a < k; ++a) q(idx[a]) = std::max(0.0, sol(a));
    if (!(q.sum() > 0.0)) continue;
    q /= q.sum();
    const double obj = (c * q - raw).squaredNorm();
    if (obj < best_obj - 1e-15) {
      best_obj = obj;
      best = q;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Shot scaling

struct ScalingRow {
  std::uint64_t n_tomo = 0;
  double d_od = 0.0;  // mean over repetitions
  std::vector<double> repetitions;
};

struct ScalingResult {
  std::vector<ScalingRow> rows;
  double slope = 0.0;      // fitted d log D_OD / d log N
  double intercept = 0.0;
};

/// Least-squares line through (log x, log y).
inline std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw ValidationError("log-log fit needs at least two points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n};
}

/// For each total budget N (split evenly over the six stabilizer states),
/// samples counts, reconstructs by ML and records D_OD to the true POVM.
/// Repetition r of budget i uses the stream (seed, i, r).
inline ScalingResult tomo_scaling_experiment(const Povm& povm, const std::vector<std::uint64_t>& shot_grid,
                                             std::uint64_t seed, int repetitions = 5, int threads = 1,
                                             const MlOptions& ml = {}) {
  if (shot_grid.size() < 2) throw ValidationError("shot grid needs at least two budgets");
  const auto states = stabilizer_states();
  ScalingResult res;
  res.rows.resize(shot_grid.size());
  const std::size_t reps = static_cast<std::size_t>(std::max(1, repetitions));
  std::vector<double> dods(shot_grid.size() * reps);
  parallel_for(dods.size(), threads, [&](std::size_t task) {
    const std::size_t i = task / reps;
    const std::size_t r = task % reps;
    const std::uint64_t per_state = std::max<std::uint64_t>(1, shot_grid[i] / states.size());
    auto rng = task_rng(seed, {i, r});
    const auto counts = sample_counts(povm, states, per_state, rng());
    dods[task] = operational_distance(povm, ml_tomography(counts, states, ml).povm);
  });
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < shot_grid.size(); ++i) {
    auto& row = res.rows[i];
    row.n_tomo = shot_grid[i];
    row.repetitions.assign(dods.begin() + i * reps, dods.begin() + (i + 1) * reps);
    double s = 0.0;
    for (double v : row.repetitions) s += v;
    row.d_od = s / reps;
    xs.push_back(static_cast<double>(row.n_tomo));
    ys.push_back(row.d_od);
  }
  std::tie(res.slope, res.intercept) = loglog_fit(xs, ys);
  return res;
}

}  // namespace qpovm

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

// Charge-basis transmon spectrum, calibration to a target qubit frequency,
// and the multi-channel downward decay model.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "qpovm/error.hpp"
#include "qpovm/linalg.hpp"

namespace qpovm {

/// Energies in GHz (h = 1).
struct TransmonParams {
  double ej = 0.0;
  double ec = 0.0;
  int levels = 5;
  int charge_cutoff = 20;

  double ratio() const { return ej / ec; }

  void validate() const {
    if (!(ec > 0.0) || !(ej / ec > 1.0)) throw ValidationError("transmon needs E_C > 0 and E_J/E_C > 1");
    if (levels < 4) throw ValidationError("transmon needs at least 4 levels");
    if (charge_cutoff < 10) throw ValidationError("charge cutoff must be at least 10");
    if (levels > 2 * charge_cutoff + 1) throw ValidationError("more levels than charge states");
  }
};

/// Lowest `levels` eigenvalues of
///   H = 4E_C (k − n_g)² − (E_J/2)(|k⟩⟨k+1| + h.c.),  k ∈ [−cutoff, cutoff],
/// shifted so that E_0 = 0.
inline RVector diagonalize(const TransmonParams& p, double n_g) {
  p.validate();
  const int n = 2 * p.charge_cutoff + 1;
  RVector diag(n);
  RVector off = RVector::Constant(n - 1, -0.5 * p.ej);
  for (int i = 0; i < n; ++i) {
    const double k = i - p.charge_cutoff - n_g;
    diag(i) = 4.0 * p.ec * k * k;
  }
  Eigen::SelfAdjointEigenSolver<RMatrix> es;
  es.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
  RVector e = es.eigenvalues().head(p.levels);
  return e.array() - e(0);
}

inline std::vector<double> uniform_grid(int points) {
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) g[i] = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
  return g;
}

inline constexpr int kSpectrumGridPoints = 21;

struct Spectrum {
  std::vector<double> n_g;
  RMatrix energies;        // rows: grid points, cols: levels
  RVector mean_energies;   // uniform average over the grid
  RVector transition_freqs;  // ω̄_n = Ē_{n+1} − Ē_n
  RVector dispersions;     // ε_n = |E_n(0) − E_n(½)|
  RVector anharmonicities;  // α_n = ω̄_n − ω̄_{n−1}; entry 0 unused (NaN)
};

inline RVector mean_energies(const TransmonParams& p, int grid_points = kSpectrumGridPoints) {
  RVector acc = RVector::Zero(p.levels);
  const auto grid = uniform_grid(grid_points);
  for (double x : grid) acc += diagonalize(p, x);
  return acc / static_cast<double>(grid.size());
}

inline double charge_dispersion(const TransmonParams& p, int n) {
  if (n < 0 || n >= p.levels) throw DimensionError("level index out of range");
  return std::abs(diagonalize(p, 0.0)(n) - diagonalize(p, 0.5)(n));
}

/// α_n = ω̄_n − ω̄_{n−1} from n_g-averaged energies.
inline double anharmonicity(const TransmonParams& p, int n, int grid_points = kSpectrumGridPoints) {
  if (n < 1 || n >= p.levels - 1) throw DimensionError("anharmonicity index out of range");
  const RVector e = mean_energies(p, grid_points);
  return (e(n + 1) - e(n)) - (e(n) - e(n - 1));
}

inline Spectrum compute_spectrum(const TransmonParams& p, int grid_points = kSpectrumGridPoints) {
  Spectrum s;
  s.n_g = uniform_grid(grid_points);
  s.energies.resize(grid_points, p.levels);
  for (int i = 0; i < grid_points; ++i) s.energies.row(i) = diagonalize(p, s.n_g[i]).transpose();
  s.mean_energies = s.energies.colwise().mean().transpose();
  s.transition_freqs.resize(p.levels - 1);
  for (int n = 0; n + 1 < p.levels; ++n) {
    s.transition_freqs(n) = s.mean_energies(n + 1) - s.mean_energies(n);
  }
  const RVector e0 = diagonalize(p, 0.0);
  const RVector eh = diagonalize(p, 0.5);
  s.dispersions = (e0 - eh).cwiseAbs();
  s.anharmonicities = RVector::Constant(p.levels - 1, std::numeric_limits<double>::quiet_NaN());
  for (int n = 1; n + 1 < p.levels; ++n) {
    s.anharmonicities(n) = s.transition_freqs(n) - s.transition_freqs(n - 1);
  }
  return s;
}

namespace detail {

template <class F>
double bracketed_root(F f, double lo, double hi, const std::string& what) {
  const double flo = f(lo);
  const double fhi = f(hi);
  if (!(flo * fhi <= 0.0)) {
    throw CalibrationError(what + ": root not bracketed in [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "] (f = " + std::to_string(flo) + ", " +
                           std::to_string(fhi) + ")");
  }
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi,
                                                   boost::math::tools::eps_tolerance<double>(50), iters);
  if (iters >= 200) throw CalibrationError(what + ": root solve did not converge");
  return 0.5 * (r.first + r.second);
}

}  // namespace detail

/// E_C (with E_J = ratio·E_C) such that ω_0(n_g = 0) equals `target_freq`.
inline TransmonParams calibrate_params(double target_freq, double ratio, int levels = 5,
                                       int charge_cutoff = 20) {
  if (!(ratio >= 10.0 && ratio <= 200.0)) throw ValidationError("E_J/E_C must lie in [10, 200]");
  if (!(target_freq > 0.0)) throw ValidationError("target frequency must be positive");
  auto make = [&](double ec) { return TransmonParams{ratio * ec, ec, levels, charge_cutoff}; };
  auto f = [&](double ec) { return diagonalize(make(ec), 0.0)(1) - target_freq; };
  const double ec = detail::bracketed_root(f, target_freq / 100.0, target_freq, "transmon calibration");
  return make(ec);
}

/// Parameters reproducing a qubit frequency and first anharmonicity, both
/// either at n_g = 0 or n_g-averaged.
inline TransmonParams params_from_frequency_and_anharmonicity(double omega01, double alpha1,
                                                              bool averaged = true, int levels = 5,
                                                              int charge_cutoff = 20) {
  auto freqs = [&](const TransmonParams& p) {
    const RVector e = averaged ? mean_energies(p) : diagonalize(p, 0.0);
    return std::pair{e(1) - e(0), (e(2) - e(1)) - (e(1) - e(0))};
  };
  // Both quantities scale linearly with E_C at fixed ratio, so only the
  // ratio needs a root solve.
  auto at_ratio = [&](double r) {
    const auto [w, a] = freqs(TransmonParams{r, 1.0, levels, charge_cutoff});
    const double ec = omega01 / w;
    return std::pair{TransmonParams{r * ec, ec, levels, charge_cutoff}, a * ec};
  };
  auto f = [&](double r) { return at_ratio(r).second - alpha1; };
  const double r = detail::bracketed_root(f, 5.0, 400.0, "anharmonicity calibration");
  return at_ratio(r).first;
}

// ---------------------------------------------------------------------------
// Decay model

/// Downward rates Γ(i, j), i > j, in 1/µs; Γ(i, i) = −Σ_{j<i} Γ(i, j).
/// Populations obey dp/dt = Γᵀ p.
class DecayModel {
 public:
  static constexpr int kLevels = 4;

  DecayModel() : rates_(RMatrix::Zero(kLevels, kLevels)) {}

  /// Builds from the strictly lower-triangular part of `rates`.
  explicit DecayModel(const RMatrix& rates) : rates_(RMatrix::Zero(kLevels, kLevels)) {
    if (rates.rows() != kLevels || rates.cols() != kLevels) throw DimensionError("decay rates must be 4x4");
    for (int i = 0; i < kLevels; ++i) {
      for (int j = 0; j < kLevels; ++j) {
        if (j > i && rates(i, j) != 0.0) throw ValidationError("decay model allows downward rates only");
        if (j < i) {
          if (!(rates(i, j) >= 0.0)) throw ValidationError("decay rates must be non-negative");
          rates_(i, j) = rates(i, j);
        }
      }
      double out = 0.0;
      for (int j = 0; j < i; ++j) out += rates_(i, j);
      rates_(i, i) = -out;
    }
  }

  /// Rates ordered (Γ32, Γ31, Γ30, Γ21, Γ20, Γ10).
  static DecayModel from_channels(const std::array<double, 6>& g) {
    RMatrix r = RMatrix::Zero(kLevels, kLevels);
    r(3, 2) = g[0];
    r(3, 1) = g[1];
    r(3, 0) = g[2];
    r(2, 1) = g[3];
    r(2, 0) = g[4];
    r(1, 0) = g[5];
    return DecayModel(r);
  }

  std::array<double, 6> channels() const {
    return {rates_(3, 2), rates_(3, 1), rates_(3, 0), rates_(2, 1), rates_(2, 0), rates_(1, 0)};
  }

  const RMatrix& rates() const { return rates_; }
  RMatrix generator() const { return rates_.transpose(); }

  double rate(int i, int j) const { return rates_(i, j); }

  /// T1 of level i (µs); infinite for level 0 or when no channel is open.
  double t1(int i) const {
    const double g = -rates_(i, i);
    return g > 0.0 ? 1.0 / g : std::numeric_limits<double>::infinity();
  }

 private:
  RMatrix rates_;
};

/// Measured transmon qudit decay rates, 1/µs.
inline DecayModel reference_decay_model() {
  return DecayModel::from_channels({0.029, 0.0, 0.0, 0.030, 0.004, 0.013});
}

inline RVector decay_evolve(const DecayModel& model, const RVector& p0, double t_us) {
  if (p0.size() != DecayModel::kLevels) throw DimensionError("population vector must have 4 entries");
  if (t_us < 0.0) throw ValidationError("evolution time must be non-negative");
  if (std::abs(p0.sum() - 1.0) > 1e-9 || p0.minCoeff() < -1e-12) {
    throw ValidationError("initial populations must be a probability vector");
  }
  if (t_us == 0.0) return p0;
  const RMatrix a = model.generator() * t_us;
  RVector p = a.exp() * p0;
  p = p.cwiseMax(0.0).cwiseMin(1.0);
  return p / p.sum();
}

/// Populations at times t_i after preparing `initial`.
struct DecaySeries {
  RVector initial;
  std::vector<double> times_us;
  RMatrix populations;  // rows: times, cols: levels 0..3
};

struct DecayFit {
  DecayModel model;
  double residual = 0.0;  // Σ‖p_model − p_data‖²
  std::array<double, 4> t1_us{};
  int evaluations = 0;
};

namespace detail {

/// Nelder-Mead minimizer, standard coefficients.
template <class F>
std::pair<RVector, double> nelder_mead(F f, RVector x0, double step, int max_evals, double ftol,
                                       int& total_evals) {
  const Eigen::Index n = x0.size();
  int evals = 0;
  std::vector<RVector> s(n + 1, x0);
  std::vector<double> fs(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) s[i + 1](i) += step;
  for (Eigen::Index i = 0; i <= n; ++i) fs[i] = f(s[i]);
  evals += static_cast<int>(n + 1);
  std::vector<Eigen::Index> order(n + 1);
  while (evals < max_evals) {
    for (Eigen::Index i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return fs[a] < fs[b]; });
    const auto best = order.front();
    const auto worst = order.back();
    const auto second = order[n - 1];
    if (std::abs(fs[worst] - fs[best]) <= ftol * (std::abs(fs[best]) + 1e-300)) break;
    RVector centroid = RVector::Zero(n);
    for (Eigen::Index i = 0; i <= n; ++i) {
      if (i != worst) centroid += s[i];
    }
    centroid /= static_cast<double>(n);
    const RVector xr = centroid + (centroid - s[worst]);
    const double fr = f(xr);
    ++evals;
    if (fr < fs[best]) {
      const RVector xe = centroid + 2.0 * (centroid - s[worst]);
      const double fe = f(xe);
      ++evals;
      if (fe < fr) {
        s[worst] = xe;
        fs[worst] = fe;
      } else {
        s[worst] = xr;
        fs[worst] = fr;
      }
    } else if (fr < fs[second]) {
      s[worst] = xr;
      fs[worst] = fr;
    } else {
      const bool outside = fr < fs[worst];
      const RVector xc = outside ? RVector(centroid + 0.5 * (xr - centroid))
                                 : RVector(centroid + 0.5 * (s[worst] - centroid));
      const double fc = f(xc);
      ++evals;
      if (fc < (outside ? fr : fs[worst])) {
        s[worst] = xc;
        fs[worst] = fc;
      } else {
        for (Eigen::Index i = 0; i <= n; ++i) {
          if (i == best) continue;
          s[i] = s[best] + 0.5 * (s[i] - s[best]);
          fs[i] = f(s[i]);
          ++evals;
        }
      }
    }
  }
  total_evals += evals;
  const auto it = std::min_element(fs.begin(), fs.end());
  return {s[it - fs.begin()], *it};
}

}  // namespace detail

/// Non-negative least-squares fit of the six downward rates. Rates are
/// parametrized as squares; the simplex search is restarted from several
/// deterministic starting points and the best result is polished once more.
inline DecayFit decay_fit(const std::vector<DecaySeries>& data, int restarts = 5, std::uint64_t seed = 0) {
  std::size_t points = 0;
  double spread = 0.0;
  double t_max = 0.0;
  for (const auto& s : data) {
    if (s.populations.cols() != DecayModel::kLevels || s.initial.size() != DecayModel::kLevels) {
      throw DimensionError("decay series need 4 population columns");
    }
    if (static_cast<std::size_t>(s.populations.rows()) != s.times_us.size()) {
      throw DimensionError("decay series time and population counts differ");
    }
    points += s.times_us.size();
    for (Eigen::Index i = 0; i < s.populations.rows(); ++i) {
      spread = std::max(spread, (s.populations.row(i).transpose() - s.initial).cwiseAbs().maxCoeff());
      t_max = std::max(t_max, s.times_us[i]);
    }
  }
  if (points < 10) throw FitError("decay fit needs at least 10 time points");
  if (spread < 1e-9 || t_max <= 0.0) throw FitError("populations do not change; decay rates are unidentifiable");

  auto objective = [&](const RVector& x) {
    std::array<double, 6> g{};
    for (int k = 0; k < 6; ++k) g[k] = x(k) * x(k);
    const RMatrix gen = DecayModel::from_channels(g).generator();
    double acc = 0.0;
    for (const auto& s : data) {
      for (std::size_t i = 0; i < s.times_us.size(); ++i) {
        const RMatrix a = gen * s.times_us[i];
        const RVector p = a.exp() * s.initial;
        acc += (p - s.populations.row(static_cast<Eigen::Index>(i)).transpose()).squaredNorm();
      }
    }
    return acc;
  };

  // Starting scale: a rate of order 1/t_max.
  const double scale = std::sqrt(1.0 / t_max);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  DecayFit best;
  double best_f = std::numeric_limits<double>::infinity();
  RVector best_x;
  int evals = 0;
  for (int r = 0; r < std::max(1, restarts); ++r) {
    RVector x0(6);
    for (int k = 0; k < 6; ++k) x0(k) = scale * (r == 0 ? 1.0 : u(rng));
    auto [x, fx] = detail::nelder_mead(objective, x0, 0.5 * scale, 6000, 1e-14, evals);
    if (fx < best_f) {
      best_f = fx;
      best_x = x;
    }
  }
  for (int polish = 0; polish < 2; ++polish) {
    auto [x, fx] = detail::nelder_mead(objective, best_x, 0.05 * best_x.cwiseAbs().maxCoeff() + 1e-6, 6000,
                                       1e-16, evals);
    if (fx <= best_f) {
      best_f = fx;
      best_x = x;
    }
  }
  std::array<double, 6> g{};
  for (int k = 0; k < 6; ++k) g[k] = best_x(k) * best_x(k);
  best.model = DecayModel::from_channels(g);
  best.residual = best_f;
  for (int i = 0; i < 4; ++i) best.t1_us[i] = best.model.t1(i);
  best.evaluations = evals;
  return best;
}

}  // namespace qpovm

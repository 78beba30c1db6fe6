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

// Rotating-frame pulse simulation of a charge-noisy transmon: per-sample
// exact propagation, the offset-charge noise channel, subspace gate
// fidelity, √X calibration, simulated POVMs and the E_J/E_C sweep.

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "qpovm/envelope.hpp"
#include "qpovm/error.hpp"
#include "qpovm/linalg.hpp"
#include "qpovm/naimark.hpp"
#include "qpovm/parallel.hpp"
#include "qpovm/povm_core.hpp"
#include "qpovm/transmon.hpp"

namespace qpovm {

inline constexpr int kChannelSamples = 20;
inline constexpr double kGHz = 1e9;

/// Relative coupling of transition k ↔ k+1 (harmonic-oscillator matrix element).
inline double coupling_weight(int k) { return std::sqrt(static_cast<double>(k + 1)); }

struct DriveConfig {
  double sample_dt = kSampleDt;           // seconds
  std::array<int, 3> samples{};           // pulse length per transition
  std::array<double, 3> amplitudes{};     // π/2 amplitude per transition, GHz

  void validate() const {
    if (!(sample_dt > 0.0)) throw ValidationError("sample_dt must be positive");
    for (int s : samples) {
      if (s < 1) throw ValidationError("pulse durations must be at least one sample");
    }
  }

  std::array<double, 3> durations() const {
    return {samples[0] * sample_dt, samples[1] * sample_dt, samples[2] * sample_dt};
  }
};

/// Carrier frequencies ω̄_n (rad/s) from n_g-averaged energies in GHz.
inline std::array<double, 3> frame_freqs_from_energies(const RVector& mean_energies_ghz) {
  std::array<double, 3> w{};
  for (int n = 0; n < 3; ++n) w[n] = kTwoPi * kGHz * (mean_energies_ghz(n + 1) - mean_energies_ghz(n));
  return w;
}

/// Offset charges sampled by the noise channel: midpoints (k + ½)/K.
inline std::vector<double> channel_offsets(int k_samples) {
  if (k_samples < 1) throw ValidationError("channel needs at least one offset-charge sample");
  std::vector<double> x(k_samples);
  for (int k = 0; k < k_samples; ++k) x[k] = (k + 0.5) / k_samples;
  return x;
}

// ---------------------------------------------------------------------------
// Propagation

/// Propagator of one drive on carrier ν (GHz) with phase 0: the product of
/// exp(−i 2π [diag(E_m − mν) + (Ω a_k / 2) Σ g_j (|j+1⟩⟨j| + h.c.)] dt) over
/// envelope samples a_k. Energies in GHz, dt in seconds.
inline CMatrix drive_unitary_phase0(const RVector& energies, double carrier, const std::vector<double>& envelope,
                                    double amplitude, double dt) {
  const int d = static_cast<int>(energies.size());
  const double dt_ns = dt * kGHz;
  RMatrix h0 = RMatrix::Zero(d, d);
  RMatrix c = RMatrix::Zero(d, d);
  for (int m = 0; m < d; ++m) h0(m, m) = energies(m) - m * carrier;
  for (int k = 0; k + 1 < d; ++k) c(k + 1, k) = c(k, k + 1) = coupling_weight(k);
  CMatrix u = CMatrix::Identity(d, d);
  // The envelope is symmetric for the standard shape; reuse repeated steps.
  std::map<double, CMatrix> steps;
  Eigen::SelfAdjointEigenSolver<RMatrix> es;
  for (double a : envelope) {
    auto it = steps.find(a);
    if (it == steps.end()) {
      const RMatrix h = kTwoPi * (h0 + (0.5 * amplitude * a) * c);
      es.compute(h);
      CVector ph(d);
      for (int m = 0; m < d; ++m) ph(m) = std::exp(Complex(0.0, -es.eigenvalues()(m) * dt_ns));
      const CMatrix v = es.eigenvectors().cast<Complex>();
      it = steps.emplace(a, v * ph.asDiagonal() * v.transpose()).first;
    }
    u = it->second * u;
  }
  return u;
}

/// Free evolution exp(−i 2π diag(E_m − mν) T).
inline CMatrix idle_unitary(const RVector& energies, double carrier, double duration) {
  const int d = static_cast<int>(energies.size());
  CVector ph(d);
  for (int m = 0; m < d; ++m) ph(m) = std::exp(-kI * (kTwoPi * (energies(m) - m * carrier) * duration * kGHz));
  return ph.asDiagonal();
}

/// Drive phase φ enters as diag(e^{imφ}) U₀ diag(e^{−imφ}).
inline CMatrix apply_drive_phase(const CMatrix& u0, double phase) {
  const Eigen::Index d = u0.rows();
  CVector ph(d);
  for (Eigen::Index m = 0; m < d; ++m) ph(m) = std::exp(kI * (static_cast<double>(m) * phase));
  return ph.asDiagonal() * u0 * ph.conjugate().asDiagonal();
}

/// Unitary of a schedule on a transmon with level energies `energies` (GHz,
/// E_0 = 0). Each pulse is simulated in its own carrier frame; pulses with an
/// empty envelope or zero angle idle for their duration.
inline CMatrix propagate(const PulseSchedule& sched, const RVector& energies) {
  const int d = static_cast<int>(energies.size());
  std::map<std::tuple<int, double, std::vector<double>>, CMatrix> cache;
  CMatrix u = CMatrix::Identity(d, d);
  for (const auto& p : sched.pulses) {
    if (p.transition < 0 || p.transition + 1 >= d || p.transition > 2) {
      throw ValidationError("pulse on transition " + std::to_string(p.transition) +
                            " is outside the simulated level structure");
    }
    const double carrier = sched.frame_freqs[p.transition] / (kTwoPi * kGHz);
    const bool drives = !p.envelope.empty() && p.theta != 0.0;
    if (!drives) {
      u = idle_unitary(energies, carrier, p.duration) * u;
      continue;
    }
    if (p.amplitude == 0.0) throw ValidationError("pulse has no calibrated amplitude");
    auto key = std::make_tuple(p.transition, p.amplitude, p.envelope);
    auto it = cache.find(key);
    if (it == cache.end()) {
      it = cache.emplace(std::move(key), drive_unitary_phase0(energies, carrier, p.envelope, p.amplitude,
                                                              sched.sample_dt)).first;
    }
    u = apply_drive_phase(it->second, p.drive_phase) * u;
  }
  return u;
}

inline CMatrix propagate(const PulseSchedule& sched, const TransmonParams& params, double n_g) {
  return propagate(sched, diagonalize(params, n_g));
}

// ---------------------------------------------------------------------------
// Noise channel and fidelity

struct NoiseChannel {
  std::vector<std::pair<double, CMatrix>> members;

  void validate(double tol = 1e-8) const {
    if (members.empty()) throw ValidationError("noise channel has no members");
    double w = 0.0;
    for (const auto& [wi, u] : members) {
      if (wi < 0.0) throw ValidationError("noise channel weights must be non-negative");
      if (unitarity_residual(u) > tol) throw ValidationError("noise channel member is not unitary");
      w += wi;
    }
    if (std::abs(w - 1.0) > 1e-12) throw ValidationError("noise channel weights must sum to one");
  }
};

/// Equal-weight ensemble of propagators at n_g = (k + ½)/K.
inline NoiseChannel charge_noise_channel(const PulseSchedule& sched, const TransmonParams& params,
                                         int k_samples = kChannelSamples) {
  NoiseChannel ch;
  for (double x : channel_offsets(k_samples)) ch.members.emplace_back(1.0 / k_samples, propagate(sched, params, x));
  return ch;
}

/// Level set {0,1,2} for the 0↔1 and 1↔2 gates, {1,2,3} for 2↔3.
inline std::vector<int> fidelity_subspace(int transition) {
  return transition == 2 ? std::vector<int>{1, 2, 3} : std::vector<int>{0, 1, 2};
}

/// F = (d_s F_e + 1)/(d_s + 1), F_e = Σ_i w_i |Tr(P U_tar† U_i P)/d_s|².
inline double average_gate_fidelity(const NoiseChannel& ch, const CMatrix& target, const std::vector<int>& subspace) {
  if (subspace.empty()) throw ValidationError("fidelity subspace is empty");
  const double ds = static_cast<double>(subspace.size());
  double fe = 0.0;
  for (const auto& [w, u] : ch.members) {
    if (u.rows() != target.rows()) throw DimensionError("channel and target dimensions differ");
    Complex tr = 0.0;
    for (int a : subspace) {
      for (Eigen::Index k = 0; k < u.rows(); ++k) tr += std::conj(target(k, a)) * u(k, a);
    }
    fe += w * std::norm(tr / ds);
  }
  return (ds * fe + 1.0) / (ds + 1.0);
}

/// Ideal R_n(θ, φ) including idle phases at the given energies.
inline CMatrix rotation_target(const RVector& energies, int n, int samples, double dt, double theta = kPi / 2.0,
                               double phi = 0.0) {
  const double carrier = energies(n + 1) - energies(n);
  return givens_matrix(n, theta, phi, static_cast<int>(energies.size())) *
         idle_unitary(energies, carrier, samples * dt);
}

/// 2·atan2(|U(n+1,n)|, |U(n,n)|).
inline double rotation_angle(const CMatrix& u, int n) {
  return 2.0 * std::atan2(std::abs(u(n + 1, n)), std::abs(u(n, n)));
}

/// Amplitude Ω (GHz) giving a π/2 rotation on transition n at energies `e`
/// for a lifted-Gaussian pulse of `samples` samples.
inline double calibrate_amplitude(const RVector& e, int n, int samples, double dt = kSampleDt,
                                  double theta = kPi / 2.0) {
  const auto env = lifted_gaussian(samples);
  double area = 0.0;
  for (double a : env) area += a;
  area *= dt * kGHz;
  if (!(area > 0.0)) throw CalibrationError("pulse envelope has zero area");
  const double guess = theta / (kTwoPi * coupling_weight(n) * area);
  const double carrier = e(n + 1) - e(n);
  auto f = [&](double amp) {
    return rotation_angle(drive_unitary_phase0(e, carrier, env, amp, dt), n) - theta;
  };
  for (const auto& [lo, hi] : {std::pair{0.5, 1.5}, std::pair{0.25, 3.0}}) {
    const double a = lo * guess;
    const double b = hi * guess;
    const double fa = f(a);
    const double fb = f(b);
    if (fa * fb > 0.0) continue;
    std::uintmax_t iters = 100;
    const auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(44),
                                                     iters);
    return 0.5 * (r.first + r.second);
  }
  throw CalibrationError("no π/2 amplitude found for transition " + std::to_string(n) + " at " +
                         std::to_string(samples) + " samples");
}

struct CalibrationResult {
  int transition = 0;
  std::vector<int> samples;           // duration grid in samples
  std::vector<double> duration_grid;  // seconds
  std::vector<double> fidelities;     // NaN where calibration failed
  std::vector<double> amplitudes;     // GHz, NaN where calibration failed
  std::size_t opt_index = 0;
  double t_opt = 0.0;
  double amplitude = 0.0;
  double sample_dt = kSampleDt;

  int opt_samples() const { return samples[opt_index]; }
  double fidelity_opt() const { return fidelities[opt_index]; }
};

/// Precomputed level structure shared by calibration and simulation.
struct TransmonGrid {
  TransmonParams params;
  std::vector<double> n_g;          // channel offsets
  std::vector<RVector> energies;    // per offset, GHz
  RVector mean_energies;            // 21-point average, GHz

  static TransmonGrid make(const TransmonParams& p, int k_samples = kChannelSamples) {
    TransmonGrid g;
    g.params = p;
    g.n_g = channel_offsets(k_samples);
    for (double x : g.n_g) g.energies.push_back(diagonalize(p, x));
    g.mean_energies = qpovm::mean_energies(p);
    return g;
  }

  std::array<double, 3> frame_freqs() const { return frame_freqs_from_energies(mean_energies); }
};

/// √X fidelity under the charge-noise channel for one duration.
inline std::pair<double, double> sqrtx_fidelity(const TransmonGrid& g, int n, int samples, double dt) {
  const double amp = calibrate_amplitude(g.mean_energies, n, samples, dt);
  const auto env = lifted_gaussian(samples);
  const double carrier = g.mean_energies(n + 1) - g.mean_energies(n);
  NoiseChannel ch;
  for (const auto& e : g.energies) {
    ch.members.emplace_back(1.0 / g.energies.size(), drive_unitary_phase0(e, carrier, env, amp, dt));
  }
  const double f = average_gate_fidelity(ch, rotation_target(g.mean_energies, n, samples, dt), fidelity_subspace(n));
  return {f, amp};
}

inline CalibrationResult calibrate_sqrtx(const TransmonGrid& g, int transition, const std::vector<int>& grid,
                                         double dt = kSampleDt) {
  if (transition < 0 || transition > 2) throw ValidationError("transition must be 0, 1 or 2");
  if (grid.empty()) throw ValidationError("duration grid is empty");
  CalibrationResult r;
  r.transition = transition;
  r.sample_dt = dt;
  double best = -1.0;
  for (int s : grid) {
    if (s < 1) throw ValidationError("durations must be whole positive sample counts");
    r.samples.push_back(s);
    r.duration_grid.push_back(s * dt);
    double f = std::numeric_limits<double>::quiet_NaN();
    double a = f;
    try {
      std::tie(f, a) = sqrtx_fidelity(g, transition, s, dt);
    } catch (const CalibrationError&) {
    }
    r.fidelities.push_back(f);
    r.amplitudes.push_back(a);
    if (f > best) {
      best = f;
      r.opt_index = r.samples.size() - 1;
    }
  }
  if (best < 0.0) throw CalibrationError("no duration on the grid could be calibrated");
  r.t_opt = r.duration_grid[r.opt_index];
  r.amplitude = r.amplitudes[r.opt_index];
  return r;
}

inline CalibrationResult calibrate_sqrtx(const TransmonParams& params, int transition, const std::vector<int>& grid,
                                         int k_samples = kChannelSamples, double dt = kSampleDt) {
  return calibrate_sqrtx(TransmonGrid::make(params, k_samples), transition, grid, dt);
}

/// Duration grid used by default: fine steps for short pulses, coarse for long.
inline std::vector<int> default_duration_grid() {
  std::vector<int> g;
  for (int s = 8; s < 40; s += 2) g.push_back(s);
  for (int s = 40; s <= 410; s += 10) g.push_back(s);
  return g;
}

// ---------------------------------------------------------------------------
// Simulated POVMs

/// Compiles `seq` with the drive settings and attaches calibrated amplitudes
/// (scaled by θ/(π/2)).
inline PulseSchedule build_drive_schedule(const GateSequence& seq, const std::array<double, 3>& frame_freqs,
                                          const DriveConfig& drive) {
  drive.validate();
  PulseSchedule s = compile_schedule(seq, frame_freqs, drive.durations(), drive.sample_dt);
  for (auto& p : s.pulses) {
    p.envelope = lifted_gaussian(drive.samples[p.transition]);
    p.amplitude = drive.amplitudes[p.transition] * p.theta / (kPi / 2.0);
  }
  return s;
}

/// Π_sim^m = (1/K) Σ_k Π^m(U(n_g,k)); leakage into level ≥ 4 counts as outcome 3.
inline Povm simulated_povm(const PulseSchedule& sched, const TransmonGrid& g) {
  std::vector<CMatrix> acc(kQuditDim, CMatrix::Zero(2, 2));
  for (const auto& e : g.energies) {
    const Povm p = povm_from_dilation(propagate(sched, e), 1e-8);
    for (int m = 0; m < kQuditDim; ++m) acc[m] += p[m] / static_cast<double>(g.energies.size());
  }
  return Povm(std::move(acc));
}

inline Povm simulated_povm(const PulseSchedule& sched, const TransmonParams& params,
                           int k_samples = kChannelSamples) {
  return simulated_povm(sched, TransmonGrid::make(params, k_samples));
}

// ---------------------------------------------------------------------------
// Duration budget

struct BudgetResult {
  std::array<std::size_t, 3> grid_index{};
  std::array<int, 3> samples{};
  std::array<double, 3> amplitudes{};
  std::array<double, 3> fidelities{};
  double total_duration = 0.0;  // seconds
};

/// Starts every transition at its optimum and repeatedly steps the pulse
/// whose fidelity drops least to the next shorter calibrated duration until
/// Σ count_n T_n ≤ t_max. Ties go to the lowest transition index.
inline BudgetResult budgeted_schedule(const std::array<CalibrationResult, 3>& cal,
                                      const std::array<std::size_t, 3>& pulse_counts, double t_max) {
  BudgetResult b;
  for (int n = 0; n < 3; ++n) b.grid_index[n] = cal[n].opt_index;
  auto total = [&] {
    double t = 0.0;
    for (int n = 0; n < 3; ++n) t += pulse_counts[n] * cal[n].duration_grid[b.grid_index[n]];
    return t;
  };
  double min_total = 0.0;
  for (int n = 0; n < 3; ++n) min_total += pulse_counts[n] * cal[n].sample_dt;
  if (t_max < min_total - 1e-18) {
    throw InfeasibleError("duration budget below one sample per pulse");
  }
  auto shorter = [&](int n) -> std::optional<std::size_t> {
    const auto& c = cal[n];
    std::optional<std::size_t> pick;
    for (std::size_t i = 0; i < c.samples.size(); ++i) {
      if (!std::isfinite(c.fidelities[i])) continue;
      if (c.samples[i] >= c.samples[b.grid_index[n]]) continue;
      if (!pick || c.samples[i] > c.samples[*pick]) pick = i;
    }
    return pick;
  };
  while (total() > t_max + 1e-15) {
    int best_n = -1;
    double best_drop = std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (int n = 0; n < 3; ++n) {
      if (pulse_counts[n] == 0) continue;
      const auto i = shorter(n);
      if (!i) continue;
      const double drop = cal[n].fidelities[b.grid_index[n]] - cal[n].fidelities[*i];
      if (drop < best_drop) {
        best_drop = drop;
        best_n = n;
        best_i = *i;
      }
    }
    if (best_n < 0) throw InfeasibleError("duration budget cannot be met on the calibrated grid");
    b.grid_index[best_n] = best_i;
  }
  for (int n = 0; n < 3; ++n) {
    b.samples[n] = cal[n].samples[b.grid_index[n]];
    b.amplitudes[n] = cal[n].amplitudes[b.grid_index[n]];
    b.fidelities[n] = cal[n].fidelities[b.grid_index[n]];
  }
  b.total_duration = total();
  return b;
}

// ---------------------------------------------------------------------------
// E_J/E_C sweep

struct SweepOptions {
  double target_freq = 5.0;  // GHz, qubit frequency at n_g = 0
  int k_samples = kChannelSamples;
  double sample_dt = kSampleDt;
  std::vector<int> duration_grid = default_duration_grid();
  Lowering lowering = Lowering::kCompact;
  int threads = 1;
};

struct SweepRow {
  double ratio = 0.0;
  double t_max = 0.0;  // seconds; +inf for unconstrained
  double d_od = std::numeric_limits<double>::quiet_NaN();
  double t_total = std::numeric_limits<double>::quiet_NaN();
  std::array<double, 3> fidelities{std::numeric_limits<double>::quiet_NaN(),
                                   std::numeric_limits<double>::quiet_NaN(),
                                   std::numeric_limits<double>::quiet_NaN()};
  std::array<int, 3> samples{};
  std::string error;
};

struct RatioCalibration {
  TransmonGrid grid;
  std::array<CalibrationResult, 3> cal;
};

inline RatioCalibration calibrate_ratio(double ratio, const SweepOptions& opt) {
  RatioCalibration rc{TransmonGrid::make(calibrate_params(opt.target_freq, ratio), opt.k_samples), {}};
  for (int n = 0; n < 3; ++n) rc.cal[n] = calibrate_sqrtx(rc.grid, n, opt.duration_grid, opt.sample_dt);
  return rc;
}

/// Simulated POVM of `seq` with durations from the budget.
inline Povm simulate_with_budget(const RatioCalibration& rc, const GateSequence& seq, const BudgetResult& b,
                                 double dt) {
  DriveConfig drive;
  drive.sample_dt = dt;
  drive.samples = b.samples;
  drive.amplitudes = b.amplitudes;
  return simulated_povm(build_drive_schedule(seq, rc.grid.frame_freqs(), drive), rc.grid);
}

/// Evaluates every (ratio, t_max) cell. Rows come back in (ratio, t_max)
/// order; a failing cell records its error and the sweep continues.
inline std::vector<SweepRow> sweep_ejec(const std::vector<double>& ratios, const std::vector<double>& t_max_list,
                                        const Povm& povm, const SweepOptions& opt = {}) {
  const GateSequence seq = lower_sequence(givens_decompose(build_naimark_unitary(povm)), opt.lowering);
  const std::array<std::size_t, 3> counts{count_givens(seq, 0), count_givens(seq, 1), count_givens(seq, 2)};
  std::vector<SweepRow> rows(ratios.size() * t_max_list.size());
  parallel_for(ratios.size(), opt.threads, [&](std::size_t i) {
    std::optional<RatioCalibration> rc;
    std::string cal_error;
    try {
      rc = calibrate_ratio(ratios[i], opt);
    } catch (const std::exception& e) {
      cal_error = e.what();
    }
    for (std::size_t j = 0; j < t_max_list.size(); ++j) {
      SweepRow& row = rows[i * t_max_list.size() + j];
      row.ratio = ratios[i];
      row.t_max = t_max_list[j];
      if (!rc) {
        row.error = cal_error;
        continue;
      }
      try {
        const BudgetResult b = budgeted_schedule(rc->cal, counts, t_max_list[j]);
        const Povm sim = simulate_with_budget(*rc, seq, b, opt.sample_dt);
        row.d_od = operational_distance(povm, sim);
        row.t_total = b.total_duration;
        row.fidelities = b.fidelities;
        row.samples = b.samples;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  });
  return rows;
}

}  // namespace qpovm

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

// Naimark dilation of rank-one qubit POVMs into a 4-level qudit, Givens
// decomposition of the dilation unitary, √X lowering and frame-tracked
// pulse-schedule compilation with virtual Z gates.

#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "qpovm/envelope.hpp"
#include "qpovm/error.hpp"
#include "qpovm/linalg.hpp"
#include "qpovm/povm_core.hpp"

namespace qpovm {

inline constexpr int kQuditDim = 4;
inline constexpr double kUnitaryTol = 1e-10;

// ---------------------------------------------------------------------------
// Gates

/// Two-level rotation on levels (n, n+1):
///   [[cos θ/2, −i sin θ/2 e^{−iφ}], [−i sin θ/2 e^{iφ}, cos θ/2]].
struct GivensGate {
  int transition = 0;
  double theta = 0.0;
  double phi = 0.0;
};

/// diag(e^{−iφ/2}, e^{iφ/2}) on levels (n, n+1).
struct ZGate {
  int transition = 0;
  double phi = 0.0;
};

using Gate = std::variant<GivensGate, ZGate>;

/// Gates in time order: element 0 acts first.
using GateSequence = std::vector<Gate>;

inline GivensGate sqrt_x(int transition) { return {transition, kPi / 2.0, 0.0}; }

inline int transition_of(const Gate& g) {
  return std::visit([](const auto& x) { return x.transition; }, g);
}

inline bool is_givens(const Gate& g) { return std::holds_alternative<GivensGate>(g); }

inline void check_transition(int n, int dim) {
  if (n < 0 || n + 1 >= dim) {
    throw DimensionError("transition " + std::to_string(n) + "<->" + std::to_string(n + 1) +
                         " outside a " + std::to_string(dim) + "-level system");
  }
}

inline CMatrix givens_matrix(int n, double theta, double phi, int dim = kQuditDim) {
  check_transition(n, dim);
  CMatrix g = CMatrix::Identity(dim, dim);
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  g(n, n) = c;
  g(n + 1, n + 1) = c;
  g(n, n + 1) = -kI * s * std::exp(-kI * phi);
  g(n + 1, n) = -kI * s * std::exp(kI * phi);
  return g;
}

inline CMatrix z_matrix(int n, double phi, int dim = kQuditDim) {
  check_transition(n, dim);
  CMatrix z = CMatrix::Identity(dim, dim);
  z(n, n) = std::exp(-kI * phi / 2.0);
  z(n + 1, n + 1) = std::exp(kI * phi / 2.0);
  return z;
}

inline CMatrix gate_matrix(const Gate& g, int dim = kQuditDim) {
  if (const auto* gv = std::get_if<GivensGate>(&g)) {
    return givens_matrix(gv->transition, gv->theta, gv->phi, dim);
  }
  const auto& z = std::get<ZGate>(g);
  return z_matrix(z.transition, z.phi, dim);
}

/// Product of the sequence; later gates multiply from the left.
inline CMatrix sequence_unitary(const GateSequence& seq, int dim = kQuditDim) {
  CMatrix u = CMatrix::Identity(dim, dim);
  for (const auto& g : seq) u = gate_matrix(g, dim) * u;
  return u;
}

inline std::size_t count_givens(const GateSequence& seq, int transition = -1) {
  std::size_t n = 0;
  for (const auto& g : seq) {
    if (is_givens(g) && (transition < 0 || transition_of(g) == transition)) ++n;
  }
  return n;
}

/// Z angles are 4π-periodic; wrap into (−2π, 2π].
inline double wrap_z_angle(double phi) {
  double w = std::remainder(phi, 2.0 * kTwoPi);
  if (w <= -kTwoPi) w += 2.0 * kTwoPi;
  return w;
}

// ---------------------------------------------------------------------------
// Naimark unitary

/// 4×4 unitary with U(0,3) = 0. The POVM it implements is read from its first
/// two columns.
class NaimarkUnitary {
 public:
  explicit NaimarkUnitary(CMatrix u, double tol = kUnitaryTol) : u_(std::move(u)) {
    if (u_.rows() != kQuditDim || u_.cols() != kQuditDim) {
      throw DimensionError("Naimark unitary must be 4x4");
    }
    if (unitarity_residual(u_) > tol) {
      throw ValidationError("Naimark unitary is not unitary (residual " +
                            std::to_string(unitarity_residual(u_)) + ")");
    }
    if (std::abs(u_(0, 3)) > tol) {
      throw ValidationError("Naimark unitary must have a vanishing top-right element");
    }
  }

  const CMatrix& matrix() const { return u_; }
  bool top_right_zero() const { return std::abs(u_(0, 3)) <= kUnitaryTol; }

 private:
  CMatrix u_;
};

/// Induced POVM of a d×d unitary (d ≥ 4) acting on a qubit in levels 0 and 1:
/// Π^m = w_m w_m† with w_m = (U(m,0), U(m,1))^*. Rows m ≥ 4 are leakage
/// levels and are merged into outcome 3.
inline Povm povm_from_dilation(const CMatrix& u, double tol = 1e-8) {
  if (u.rows() != u.cols() || u.rows() < kQuditDim) {
    throw DimensionError("dilation must be square with at least 4 levels");
  }
  if (unitarity_residual(u) > tol) throw ValidationError("dilation is not unitary");
  std::vector<CMatrix> ops(kQuditDim, CMatrix::Zero(2, 2));
  for (Eigen::Index r = 0; r < u.rows(); ++r) {
    CVector w(2);
    w << std::conj(u(r, 0)), std::conj(u(r, 1));
    ops[std::min<Eigen::Index>(r, kQuditDim - 1)] += w * w.adjoint();
  }
  return Povm(std::move(ops));
}

inline Povm povm_from_unitary(const NaimarkUnitary& u) { return povm_from_dilation(u.matrix()); }

namespace detail {

/// Residual of `v` after removing its components along orthonormal `basis`
/// (two passes).
inline CVector orthogonal_residual(CVector v, const std::vector<CVector>& basis) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& b : basis) v -= b.dot(v) * b;
  }
  return v;
}

/// Unit vector orthogonal to `basis`, taken from the standard-basis candidate
/// with the largest residual (first wins ties).
inline CVector complete_column(const std::vector<CVector>& basis, const std::vector<int>& candidates) {
  CVector best;
  double best_norm = -1.0;
  for (int k : candidates) {
    CVector v = orthogonal_residual(kets::basis(kQuditDim, k), basis);
    if (v.norm() > best_norm + 1e-12) {
      best_norm = v.norm();
      best = v;
    }
  }
  return best / best.norm();
}

}  // namespace detail

/// Builds the dilation whose first two columns satisfy Π^m = Γ_m|π_m⟩⟨π_m|,
/// U(m,0) = √Γ_m ⟨π_m|0⟩, U(m,1) = √Γ_m ⟨π_m|1⟩. Column 3 is chosen with
/// U(0,3) = 0, column 2 completes the basis.
inline NaimarkUnitary build_naimark_unitary(const Povm& povm, double tol = kPsdTolerance) {
  if (povm.dim() != 2 || povm.size() != kQuditDim) {
    throw DimensionError("Naimark compilation needs exactly 4 operators on a qubit");
  }
  require_valid(povm, tol);
  CMatrix u = CMatrix::Zero(kQuditDim, kQuditDim);
  for (std::size_t m = 0; m < povm.size(); ++m) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (povm[m] + povm[m].adjoint()));
    const RVector& ev = es.eigenvalues();
    if (ev(0) > tol) {
      throw NotRankOneError("POVM operator " + std::to_string(m) + " has rank 2 (eigenvalues " +
                            std::to_string(ev(0)) + ", " + std::to_string(ev(1)) + ")");
    }
    const double gamma = std::max(ev(1), 0.0);
    CVector vec = es.eigenvectors().col(1);
    const int lead = std::abs(vec(0)) > 1e-12 ? 0 : 1;
    vec *= std::polar(1.0, -std::arg(vec(lead)));
    const CVector pi = std::sqrt(gamma) * vec;
    u(static_cast<Eigen::Index>(m), 0) = std::conj(pi(0));
    u(static_cast<Eigen::Index>(m), 1) = std::conj(pi(1));
  }
  // Löwdin-orthonormalize the qubit columns to absorb round-off in the
  // completeness relation.
  const CMatrix qubit_cols = u.leftCols(2);
  u.leftCols(2) = qubit_cols * inverse_sqrt_psd(qubit_cols.adjoint() * qubit_cols);

  std::vector<CVector> basis{u.col(0), u.col(1)};
  CVector e0 = detail::orthogonal_residual(kets::basis(kQuditDim, 0), basis);
  std::vector<CVector> with_e0 = basis;
  if (e0.norm() > 1e-8) with_e0.push_back(e0 / e0.norm());
  CVector c3 = detail::complete_column(with_e0, {3, 2, 1});
  c3(0) = 0.0;
  c3 = detail::orthogonal_residual(c3, basis);
  c3 /= c3.norm();
  u.col(3) = c3;
  basis.push_back(c3);
  u.col(2) = detail::complete_column(basis, {2, 3, 1, 0});
  u(0, 3) = 0.0;
  return NaimarkUnitary(u);
}

// ---------------------------------------------------------------------------
// Givens decomposition

namespace detail {

/// Givens angles that zero M(row, col) against M(row+1, col).
inline GivensGate zeroing_rotation(const CMatrix& m, Eigen::Index col, int row) {
  const Complex x1 = m(row, col);
  const Complex x2 = m(row + 1, col);
  GivensGate g;
  g.transition = row;
  g.theta = 2.0 * std::atan2(std::abs(x1), std::abs(x2));
  const double d1 = std::abs(x1) > 0.0 ? std::arg(x1) : 0.0;
  const double d2 = std::abs(x2) > 0.0 ? std::arg(x2) : 0.0;
  g.phi = wrap_phase(kPi / 2.0 - d1 + d2);
  return g;
}

}  // namespace detail

/// Decomposes U (up to global phase) into five Givens rotations and three Z
/// gates. Returned in time order; sequence_unitary(result) = e^{iγ}U.
inline GateSequence givens_decompose(const NaimarkUnitary& u) {
  const CMatrix& target = u.matrix();
  const Complex det = target.determinant();
  CMatrix m = target * std::pow(det, -0.25);
  std::vector<Gate> applied;
  const std::array<std::pair<int, std::vector<int>>, 3> plan{{{3, {1, 2}}, {2, {0, 1}}, {1, {0}}}};
  for (const auto& [col, rows] : plan) {
    for (int r : rows) {
      const GivensGate g = detail::zeroing_rotation(m, col, r);
      m = givens_matrix(g.transition, g.theta, g.phi) * m;
      applied.emplace_back(g);
    }
    const double beta = std::arg(m(col, col));
    const ZGate z{col - 1, -2.0 * beta};
    m = z_matrix(z.transition, z.phi) * m;
    applied.emplace_back(z);
  }
  // U ∝ applied[0]† · applied[1]† ⋯ ; in time order the last applied gate
  // acts first.
  GateSequence seq;
  for (auto it = applied.rbegin(); it != applied.rend(); ++it) {
    if (const auto* g = std::get_if<GivensGate>(&*it)) {
      seq.emplace_back(GivensGate{g->transition, wrap_positive(g->theta), wrap_phase(g->phi + kPi)});
    } else {
      const auto& z = std::get<ZGate>(*it);
      seq.emplace_back(ZGate{z.transition, wrap_z_angle(-z.phi)});
    }
  }
  return seq;
}

inline GateSequence givens_decompose(const CMatrix& u) { return givens_decompose(NaimarkUnitary(u)); }

// ---------------------------------------------------------------------------
// Lowering to √X pulses

/// G(θ,φ) = Z(φ−π/2)·√X·Z(π−θ)·√X·Z(−φ−π/2): every Givens becomes two √X
/// pulses and three Z gates.
inline GateSequence to_sqrtx_sequence(const GateSequence& seq) {
  GateSequence out;
  for (const auto& g : seq) {
    const auto* gv = std::get_if<GivensGate>(&g);
    if (!gv) {
      out.push_back(g);
      continue;
    }
    const int n = gv->transition;
    out.emplace_back(ZGate{n, wrap_z_angle(-gv->phi - kPi / 2.0)});
    out.emplace_back(sqrt_x(n));
    out.emplace_back(ZGate{n, wrap_z_angle(kPi - gv->theta)});
    out.emplace_back(sqrt_x(n));
    out.emplace_back(ZGate{n, wrap_z_angle(gv->phi - kPi / 2.0)});
  }
  return out;
}

enum class Lowering {
  kGivens,   // one arbitrary-angle pulse per Givens rotation
  kSqrtX,    // two √X per Givens, always
  kCompact,  // as kSqrtX, identity rotations (θ = 0) dropped
  kMinimal,  // as kCompact, θ = π/2 rotations use a single √X
};

inline bool is_identity_rotation(const GivensGate& g, double tol = 1e-12) {
  return std::abs(std::sin(g.theta / 2.0)) <= tol && std::cos(g.theta / 2.0) > 0.0;
}

inline GateSequence lower_sequence(const GateSequence& seq, Lowering mode) {
  if (mode == Lowering::kGivens) return seq;
  if (mode == Lowering::kSqrtX) return to_sqrtx_sequence(seq);
  GateSequence out;
  for (const auto& g : seq) {
    const auto* gv = std::get_if<GivensGate>(&g);
    if (!gv) {
      out.push_back(g);
      continue;
    }
    if (is_identity_rotation(*gv)) continue;
    if (mode == Lowering::kMinimal && std::abs(gv->theta - kPi / 2.0) <= 1e-12) {
      // G(π/2, φ) = Z(φ)·√X·Z(−φ)
      out.emplace_back(ZGate{gv->transition, wrap_z_angle(-gv->phi)});
      out.emplace_back(sqrt_x(gv->transition));
      out.emplace_back(ZGate{gv->transition, wrap_z_angle(gv->phi)});
      continue;
    }
    const auto expanded = to_sqrtx_sequence({g});
    out.insert(out.end(), expanded.begin(), expanded.end());
  }
  return out;
}

/// Replaces every Z gate by two physical π rotations:
/// Z(φ) = G(π, φ/2 + π)·G(π, 0).
inline GateSequence expand_virtual_z(const GateSequence& seq) {
  GateSequence out;
  for (const auto& g : seq) {
    const auto* z = std::get_if<ZGate>(&g);
    if (!z) {
      out.push_back(g);
      continue;
    }
    out.emplace_back(GivensGate{z->transition, kPi, 0.0});
    out.emplace_back(GivensGate{z->transition, kPi, wrap_phase(z->phi / 2.0 + kPi)});
  }
  return out;
}

/// Fixed sequence for the four-outcome demonstration POVM, time order:
/// √X₀₁, √X₁₂, Z₁₂(π/2), √X₀₁, √X₂₃, √X₁₂.
inline GateSequence schedule_demo() {
  return {sqrt_x(0), sqrt_x(1), ZGate{1, kPi / 2.0}, sqrt_x(0), sqrt_x(2), sqrt_x(1)};
}

// ---------------------------------------------------------------------------
// Pulse schedules

struct PulseInstruction {
  int transition = 0;
  double theta = 0.0;
  double drive_phase = 0.0;  // radians
  double duration = 0.0;     // seconds
  std::vector<double> envelope;  // unit-peak shape, one value per sample
  double amplitude = 0.0;    // peak drive amplitude Ω in GHz; 0 until calibrated
};

struct PulseSchedule {
  std::vector<PulseInstruction> pulses;
  std::array<double, 3> frame_phases{};  // final register values, radians
  std::array<double, 3> frame_freqs{};   // ω̄_n, rad/s
  std::array<double, 3> durations{};     // per-transition pulse length, s
  double sample_dt = kSampleDt;

  double total_duration() const {
    double t = 0.0;
    for (const auto& p : pulses) t += p.duration;
    return t;
  }

  std::size_t count(int transition) const {
    std::size_t n = 0;
    for (const auto& p : pulses) n += p.transition == transition ? 1 : 0;
    return n;
  }
};

/// Frame-tracked compilation. Z gates only update the phase registers
/// (frame n loses φ, neighbouring frames gain φ/2). A Givens rotation on
/// frame n emits one pulse with drive phase = register n + φ and then
/// advances every other frame m by −(ω_m − ω_n)T.
inline PulseSchedule compile_schedule(const GateSequence& seq, const std::array<double, 3>& frame_freqs,
                                      const std::array<double, 3>& durations,
                                      double sample_dt = kSampleDt) {
  PulseSchedule sched;
  sched.frame_freqs = frame_freqs;
  sched.durations = durations;
  sched.sample_dt = sample_dt;
  auto& ph = sched.frame_phases;
  for (const auto& g : seq) {
    const int n = transition_of(g);
    if (n < 0 || n > 2) {
      throw ValidationError("gate on transition " + std::to_string(n) + " cannot be scheduled");
    }
    if (const auto* gv = std::get_if<GivensGate>(&g)) {
      const double t = durations[n];
      PulseInstruction p;
      p.transition = n;
      p.theta = gv->theta;
      p.drive_phase = wrap_phase(ph[n] + gv->phi);
      p.duration = t;
      p.envelope = lifted_gaussian(std::max(1, samples_for(t, sample_dt)));
      sched.pulses.push_back(std::move(p));
      for (int m = 0; m < 3; ++m) {
        if (m != n) ph[m] = wrap_phase(ph[m] - (frame_freqs[m] - frame_freqs[n]) * t);
      }
    } else {
      const double phi = std::get<ZGate>(g).phi;
      ph[n] = wrap_phase(ph[n] - phi);
      if (n > 0) ph[n - 1] = wrap_phase(ph[n - 1] + phi / 2.0);
      if (n < 2) ph[n + 1] = wrap_phase(ph[n + 1] + phi / 2.0);
    }
  }
  return sched;
}

/// Rotating-frame propagator of a resonant pulse on transition n with
/// carrier ω_n: G_n(θ,φ)·diag(e^{−i(E_m − mω_n)T}).
inline CMatrix r_pulse_matrix(int n, double theta, double phi, double duration, const RVector& energies,
                              double carrier) {
  const int d = static_cast<int>(energies.size());
  CVector idle(d);
  for (int m = 0; m < d; ++m) idle(m) = std::exp(-kI * ((energies(m) - m * carrier) * duration));
  return givens_matrix(n, theta, phi, d) * idle.asDiagonal();
}

/// Noise-free unitary of a schedule; `energies` are level energies in rad/s
/// (E_0 = 0), one per simulated level.
inline CMatrix ideal_unitary_of_schedule(const PulseSchedule& sched, const RVector& energies) {
  const int d = static_cast<int>(energies.size());
  if (d < kQuditDim) throw DimensionError("need at least four level energies");
  CMatrix u = CMatrix::Identity(d, d);
  for (const auto& p : sched.pulses) {
    u = r_pulse_matrix(p.transition, p.theta, p.drive_phase, p.duration, energies,
                       sched.frame_freqs[p.transition]) * u;
  }
  return u;
}

/// Level energies (rad/s) consistent with the schedule's frame frequencies.
inline RVector energies_from_frames(const std::array<double, 3>& frame_freqs) {
  RVector e(kQuditDim);
  e(0) = 0.0;
  for (int n = 0; n < 3; ++n) e(n + 1) = e(n) + frame_freqs[n];
  return e;
}

/// One instruction per line, fixed precision, for diffing.
inline std::string schedule_text(const PulseSchedule& sched) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(9);
  for (std::size_t k = 0; k < sched.pulses.size(); ++k) {
    const auto& p = sched.pulses[k];
    os << k << " R" << p.transition << (p.transition + 1) << " theta=" << p.theta
       << " phase=" << p.drive_phase << " duration_ns=" << p.duration * 1e9
       << " samples=" << p.envelope.size() << '\n';
  }
  os << "frames";
  for (double f : sched.frame_phases) os << ' ' << f;
  os << '\n';
  return os.str();
}

/// One-call pipeline POVM → schedule.
inline PulseSchedule compile_povm(const Povm& povm, const std::array<double, 3>& frame_freqs,
                                  const std::array<double, 3>& durations, Lowering mode = Lowering::kSqrtX,
                                  double sample_dt = kSampleDt) {
  const auto seq = lower_sequence(givens_decompose(build_naimark_unitary(povm)), mode);
  return compile_schedule(seq, frame_freqs, durations, sample_dt);
}

}  // namespace qpovm

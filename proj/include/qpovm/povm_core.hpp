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

// POVM data model, outcome probabilities, observable decomposition into
// POVM effects, estimator moments and POVM distance measures.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qpovm/error.hpp"
#include "qpovm/linalg.hpp"

namespace qpovm {

using Probabilities = RVector;
using Coefficients = RVector;

/// Eigenvalues ≥ −kPsdTolerance are treated as round-off.
inline constexpr double kPsdTolerance = 1e-9;

/// An ordered list of effects on a `dim`-dimensional space. Construction only
/// checks shapes; use validate_povm() for positivity and completeness.
class Povm {
 public:
  Povm() = default;
  explicit Povm(std::vector<CMatrix> operators,
                std::vector<std::string> labels = {})
      : operators_(std::move(operators)), labels_(std::move(labels)) {
    if (operators_.empty()) {
      throw DimensionError("a POVM needs at least one operator");
    }
    const auto d = operators_.front().rows();
    if (d == 0) throw DimensionError("POVM operators must be non-empty");
    for (const auto& op : operators_) {
      if (op.rows() != d || op.cols() != d) {
        throw DimensionError("POVM operators must be square and of equal dimension");
      }
    }
    if (labels_.empty()) {
      for (std::size_t m = 0; m < operators_.size(); ++m) {
        labels_.push_back(std::to_string(m));
      }
    }
    if (labels_.size() != operators_.size()) {
      throw DimensionError("POVM label count differs from operator count");
    }
  }

  int dim() const { return static_cast<int>(operators_.front().rows()); }
  std::size_t size() const { return operators_.size(); }
  const CMatrix& operator[](std::size_t m) const { return operators_[m]; }
  const std::vector<CMatrix>& operators() const { return operators_; }
  const std::vector<std::string>& labels() const { return labels_; }

  CMatrix sum() const {
    CMatrix s = CMatrix::Zero(dim(), dim());
    for (const auto& op : operators_) s += op;
    return s;
  }

 private:
  std::vector<CMatrix> operators_;
  std::vector<std::string> labels_;
};

struct ValidationReport {
  double psd_violation = 0.0;          // −(most negative eigenvalue), or 0
  std::size_t worst_operator = 0;      // index attaining psd_violation
  double hermiticity_residual = 0.0;
  double completeness_residual = 0.0;  // ‖ΣΠ − 𝟙‖_max
  double tol = kPsdTolerance;
  bool valid = false;

  std::string message() const {
    if (valid) return "valid";
    std::string msg;
    if (hermiticity_residual > tol) {
      msg += "non-Hermitian operator (residual " + std::to_string(hermiticity_residual) + "); ";
    }
    if (psd_violation > tol) {
      msg += "operator " + std::to_string(worst_operator) +
             " is not positive semidefinite (eigenvalue " + std::to_string(-psd_violation) + "); ";
    }
    if (completeness_residual > tol) {
      msg += "completeness violated (residual " + std::to_string(completeness_residual) + ")";
    }
    return msg;
  }
};

inline ValidationReport validate_povm(const Povm& povm, double tol = kPsdTolerance) {
  ValidationReport r;
  r.tol = tol;
  for (std::size_t m = 0; m < povm.size(); ++m) {
    r.hermiticity_residual = std::max(r.hermiticity_residual, hermiticity_residual(povm[m]));
    const double lo = hermitian_eigenvalues(povm[m])(0);
    if (-lo > r.psd_violation) {
      r.psd_violation = -lo;
      r.worst_operator = m;
    }
  }
  r.completeness_residual = max_abs(povm.sum() - CMatrix::Identity(povm.dim(), povm.dim()));
  r.valid = r.psd_violation <= tol && r.completeness_residual <= tol &&
            r.hermiticity_residual <= tol;
  return r;
}

inline void require_valid(const Povm& povm, double tol = kPsdTolerance) {
  const auto report = validate_povm(povm, tol);
  if (!report.valid) throw ValidationError("invalid POVM: " + report.message());
}

// ---------------------------------------------------------------------------
// States

namespace kets {
inline CVector basis(int dim, int k) {
  CVector v = CVector::Zero(dim);
  v(k) = 1.0;
  return v;
}
inline CVector zero() { return basis(2, 0); }
inline CVector one() { return basis(2, 1); }
inline CVector plus() { return CVector{{1.0, 1.0}} / std::sqrt(2.0); }
inline CVector minus() { return CVector{{1.0, -1.0}} / std::sqrt(2.0); }
inline CVector plus_i() { return CVector{{1.0, kI}} / std::sqrt(2.0); }
inline CVector minus_i() { return CVector{{1.0, -kI}} / std::sqrt(2.0); }
}  // namespace kets

inline CMatrix projector(const CVector& ket) { return ket * ket.adjoint(); }

/// A density operator; unit trace and positivity are checked on construction.
class DensityMatrix {
 public:
  explicit DensityMatrix(CMatrix rho, double tol = 1e-9) : rho_(std::move(rho)) {
    if (rho_.rows() != rho_.cols() || rho_.rows() == 0) {
      throw DimensionError("density matrix must be square");
    }
    if (std::abs(rho_.trace() - Complex(1.0)) > tol) {
      throw ValidationError("density matrix must have unit trace");
    }
    if (hermiticity_residual(rho_) > tol || hermitian_eigenvalues(rho_)(0) < -tol) {
      throw ValidationError("density matrix must be Hermitian positive semidefinite");
    }
  }

  static DensityMatrix pure(const CVector& ket) {
    const double n = ket.norm();
    if (n == 0.0) throw ValidationError("zero state vector");
    return DensityMatrix(projector(ket / n));
  }

  /// α|0⟩ + β|1⟩, normalized.
  static DensityMatrix qubit(Complex alpha, Complex beta) {
    return pure(CVector{{alpha, beta}});
  }

  int dim() const { return static_cast<int>(rho_.rows()); }
  const CMatrix& matrix() const { return rho_; }

 private:
  CMatrix rho_;
};

using QubitState = DensityMatrix;

namespace detail {
inline Probabilities clamp_normalize(Probabilities p) {
  p = p.cwiseMax(0.0);
  const double s = p.sum();
  if (s > 0.0) p /= s;
  return p;
}
}  // namespace detail

/// p_m = Tr(ρ Π^m); round-off negatives clamped and the vector renormalized.
inline Probabilities outcome_probabilities(const DensityMatrix& state, const Povm& povm,
                                           double tol = kPsdTolerance) {
  if (state.dim() != povm.dim()) throw DimensionError("state and POVM dimensions differ");
  require_valid(povm, tol);
  Probabilities p(povm.size());
  for (std::size_t m = 0; m < povm.size(); ++m) {
    p(m) = (state.matrix() * povm[m]).trace().real();
  }
  return detail::clamp_normalize(std::move(p));
}

// ---------------------------------------------------------------------------
// Standard POVMs

/// Tetrahedral SIC-POVM: Π^m = ½|ψ_m⟩⟨ψ_m| with |ψ_0⟩ = |0⟩ and
/// |ψ_m⟩ = (|0⟩ + √2 e^{2πi(m−1)/3}|1⟩)/√3.
inline Povm sic_povm() {
  std::vector<CMatrix> ops;
  ops.push_back(0.5 * projector(kets::zero()));
  for (int m = 1; m <= 3; ++m) {
    const Complex phase = std::polar(std::sqrt(2.0), kTwoPi * (m - 1) / 3.0);
    const CVector psi = CVector{{1.0, phase}} / std::sqrt(3.0);
    ops.push_back(0.5 * projector(psi));
  }
  return Povm(std::move(ops), {"sic0", "sic1", "sic2", "sic3"});
}

/// The informationally complete four-outcome POVM used in the hardware
/// demonstration: {¾|ψ₀⟩⟨ψ₀|, ½|+⟩⟨+|, ½|0⟩⟨0|, ¼|−i⟩⟨−i|} with
/// |ψ₀⟩ = (|0⟩ + (i−2)|1⟩)/√6.
inline Povm demo_povm() {
  const CVector psi0 = CVector{{Complex(1.0), Complex(-2.0, 1.0)}} / std::sqrt(6.0);
  return Povm({0.75 * projector(psi0), 0.5 * projector(kets::plus()),
               0.5 * projector(kets::zero()), 0.25 * projector(kets::minus_i())},
              {"psi0", "plus", "zero", "minus_i"});
}

/// Projective measurement in the orthonormal qubit basis {b0, b1}, padded with
/// zero operators to four outcomes.
inline Povm projective_povm(const CVector& b0, const CVector& b1) {
  const CMatrix zero = CMatrix::Zero(2, 2);
  return Povm({projector(b0), projector(b1), zero, zero});
}

inline Povm projective_z_povm() { return projective_povm(kets::zero(), kets::one()); }
inline Povm projective_x_povm() { return projective_povm(kets::plus(), kets::minus()); }

// ---------------------------------------------------------------------------
// Observables

inline CMatrix pauli_matrix(char p) {
  switch (p) {
    case 'I': return CMatrix::Identity(2, 2);
    case 'X': return CMatrix{{0.0, 1.0}, {1.0, 0.0}};
    case 'Y': return CMatrix{{0.0, -kI}, {kI, 0.0}};
    case 'Z': return CMatrix{{1.0, 0.0}, {0.0, -1.0}};
    default: throw ValidationError(std::string("invalid Pauli letter '") + p + "'");
  }
}

inline int pauli_index(char p) {
  switch (p) {
    case 'I': return 0;
    case 'X': return 1;
    case 'Y': return 2;
    case 'Z': return 3;
    default: throw ValidationError(std::string("invalid Pauli letter '") + p + "'");
  }
}

struct PauliTerm {
  double weight = 0.0;
  std::string paulis;  // character q acts on qubit q
};

/// Real-weighted sum of Pauli strings, or an explicit Hermitian matrix.
class Observable {
 public:
  Observable(int n_qubits, std::vector<PauliTerm> terms)
      : n_qubits_(n_qubits), terms_(std::move(terms)) {
    if (n_qubits_ < 1) throw ValidationError("observable needs at least one qubit");
    for (const auto& t : terms_) {
      if (static_cast<int>(t.paulis.size()) != n_qubits_) {
        throw ValidationError("Pauli string '" + t.paulis + "' has wrong length");
      }
      for (char c : t.paulis) pauli_index(c);
    }
  }

  static Observable pauli(const std::string& word, double weight = 1.0) {
    return Observable(static_cast<int>(word.size()), {{weight, word}});
  }

  /// Wrap a dense Hermitian matrix of size 2^n.
  static Observable from_matrix(const CMatrix& m, double tol = 1e-9) {
    if (m.rows() != m.cols()) throw DimensionError("observable matrix must be square");
    if (hermiticity_residual(m) > tol) throw ValidationError("observable must be Hermitian");
    int n = 0;
    while ((Eigen::Index{1} << n) < m.rows()) ++n;
    Observable o;
    o.n_qubits_ = n;
    o.dense_ = m;
    return o;
  }

  int n_qubits() const { return n_qubits_; }
  int dim() const { return 1 << n_qubits_; }
  bool has_terms() const { return !dense_.has_value(); }

  /// Pauli terms; for matrix-backed observables the Pauli expansion is
  /// computed on demand.
  std::vector<PauliTerm> terms() const {
    if (!dense_) return terms_;
    std::vector<PauliTerm> out;
    const std::uint64_t count = std::uint64_t{1} << (2 * n_qubits_);
    for (std::uint64_t code = 0; code < count; ++code) {
      std::string word(n_qubits_, 'I');
      for (int q = 0; q < n_qubits_; ++q) word[q] = "IXYZ"[(code >> (2 * q)) & 3];
      const double w = (pauli_string_matrix(word) * *dense_).trace().real() / dim();
      if (std::abs(w) > 1e-14) out.push_back({w, word});
    }
    return out;
  }

  CMatrix dense() const {
    if (dense_) return *dense_;
    CMatrix m = CMatrix::Zero(dim(), dim());
    for (const auto& t : terms_) m += t.weight * pauli_string_matrix(t.paulis);
    return m;
  }

  /// Qubit 0 is the least-significant tensor factor.
  static CMatrix pauli_string_matrix(const std::string& word) {
    CMatrix m = CMatrix::Identity(1, 1);
    for (int q = static_cast<int>(word.size()) - 1; q >= 0; --q) {
      m = kron(m, pauli_matrix(word[q]));
    }
    return m;
  }

 private:
  Observable() = default;
  int n_qubits_ = 0;
  std::vector<PauliTerm> terms_;
  std::optional<CMatrix> dense_;
};

// ---------------------------------------------------------------------------
// Product POVMs

/// Tensor product of single-qubit POVMs. Global outcome indices are
/// little-endian mixed radix: qubit 0 is the least-significant digit.
class ProductPovm {
 public:
  explicit ProductPovm(std::vector<Povm> factors) : factors_(std::move(factors)) {
    if (factors_.empty()) throw DimensionError("product POVM needs at least one factor");
    std::uint64_t stride = 1;
    for (const auto& f : factors_) {
      if (f.dim() != 2) throw DimensionError("product POVM factors must act on a qubit");
      strides_.push_back(stride);
      stride *= f.size();
    }
    num_outcomes_ = stride;
  }

  static ProductPovm uniform(const Povm& factor, int n) {
    return ProductPovm(std::vector<Povm>(n, factor));
  }

  int n_qubits() const { return static_cast<int>(factors_.size()); }
  std::uint64_t num_outcomes() const { return num_outcomes_; }
  const Povm& factor(int q) const { return factors_[q]; }
  const std::vector<Povm>& factors() const { return factors_; }

  int local_outcome(std::uint64_t global, int q) const {
    return static_cast<int>((global / strides_[q]) % factors_[q].size());
  }

  std::uint64_t global_index(const std::vector<int>& local) const {
    std::uint64_t g = 0;
    for (int q = 0; q < n_qubits(); ++q) g += strides_[q] * static_cast<std::uint64_t>(local[q]);
    return g;
  }

  CMatrix global_operator(std::uint64_t global) const {
    CMatrix m = CMatrix::Identity(1, 1);
    for (int q = n_qubits() - 1; q >= 0; --q) m = kron(m, factors_[q][local_outcome(global, q)]);
    return m;
  }

  /// Materialize all 4^N global operators; small N only.
  Povm dense(int max_qubits = 6) const {
    if (n_qubits() > max_qubits) {
      throw UnsupportedSizeError("dense product POVM limited to " + std::to_string(max_qubits) + " qubits");
    }
    std::vector<CMatrix> ops;
    ops.reserve(num_outcomes_);
    for (std::uint64_t g = 0; g < num_outcomes_; ++g) ops.push_back(global_operator(g));
    return Povm(std::move(ops));
  }

  void require_valid(double tol = kPsdTolerance) const {
    for (const auto& f : factors_) qpovm::require_valid(f, tol);
  }

 private:
  std::vector<Povm> factors_;
  std::vector<std::uint64_t> strides_;
  std::uint64_t num_outcomes_ = 0;
};

/// Exact outcome distribution of an n-qubit density matrix under a product
/// POVM, computed by contracting one qubit at a time (never forms 4^N × 2^N
/// operators).
inline Probabilities outcome_probabilities(const CMatrix& rho, const ProductPovm& povm,
                                           int max_qubits = 8) {
  const int n = povm.n_qubits();
  if (n > max_qubits) throw UnsupportedSizeError("dense outcome distribution too large");
  if (rho.rows() != (Eigen::Index{1} << n) || rho.cols() != rho.rows()) {
    throw DimensionError("state dimension does not match product POVM");
  }
  povm.require_valid();
  // r is indexed by mixed radix digits; digit q starts as (i_q + 2 j_q) and
  // becomes the outcome index of qubit q after contraction.
  std::vector<std::uint64_t> radix(n, 4);
  std::vector<Complex> r(std::size_t{1} << (2 * n));
  for (Eigen::Index i = 0; i < rho.rows(); ++i) {
    for (Eigen::Index j = 0; j < rho.cols(); ++j) {
      std::uint64_t k = 0;
      for (int q = n - 1; q >= 0; --q) k = k * 4 + (((i >> q) & 1) + 2 * ((j >> q) & 1));
      r[k] = rho(i, j);
    }
  }
  for (int q = 0; q < n; ++q) {
    const Povm& f = povm.factor(q);
    const std::uint64_t mq = f.size();
    std::uint64_t below = 1;
    for (int s = 0; s < q; ++s) below *= radix[s];
    std::uint64_t above = 1;
    for (int s = q + 1; s < n; ++s) above *= radix[s];
    std::vector<Complex> next(below * mq * above);
    for (std::uint64_t hi = 0; hi < above; ++hi) {
      for (std::uint64_t lo = 0; lo < below; ++lo) {
        for (std::uint64_t m = 0; m < mq; ++m) {
          Complex acc = 0.0;
          for (int k = 0; k < 4; ++k) {
            const int i = k & 1;
            const int j = k >> 1;
            acc += f[m](j, i) * r[(hi * 4 + k) * below + lo];
          }
          next[(hi * mq + m) * below + lo] = acc;
        }
      }
    }
    radix[q] = mq;
    r = std::move(next);
  }
  Probabilities p(static_cast<Eigen::Index>(r.size()));
  for (std::size_t k = 0; k < r.size(); ++k) p(static_cast<Eigen::Index>(k)) = r[k].real();
  return detail::clamp_normalize(std::move(p));
}

// ---------------------------------------------------------------------------
// Observable decomposition  O = Σ_m c_m Π^m

inline constexpr double kGramConditionLimit = 1e12;

namespace detail {
struct GramSystem {
  RMatrix gram;
  RVector rhs;
};

inline GramSystem gram_system(const CMatrix& obs, const Povm& povm) {
  if (obs.rows() != povm.dim() || obs.cols() != povm.dim()) {
    throw DimensionError("observable and POVM dimensions differ");
  }
  if (hermiticity_residual(obs) > 1e-9) throw ValidationError("observable must be Hermitian");
  const auto m = static_cast<Eigen::Index>(povm.size());
  GramSystem g{RMatrix(m, m), RVector(m)};
  for (Eigen::Index k = 0; k < m; ++k) {
    for (Eigen::Index l = k; l < m; ++l) {
      g.gram(k, l) = g.gram(l, k) = (povm[k] * povm[l]).trace().real();
    }
    g.rhs(k) = (povm[k] * obs).trace().real();
  }
  return g;
}

inline RVector pseudo_solve(const Eigen::SelfAdjointEigenSolver<RMatrix>& es, const RVector& rhs, double cutoff) {
  const RVector& ev = es.eigenvalues();
  RVector inv = RVector::Zero(ev.size());
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    if (ev(k) > cutoff) inv(k) = 1.0 / ev(k);
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose() * rhs;
}
}  // namespace detail

/// Solves the Gram system Tr(Π^k Π^m) c_m = Tr(Π^k O). Falls back to the
/// pseudo-inverse for over-complete or badly conditioned POVMs.
inline Coefficients decompose_observable(const CMatrix& obs, const Povm& povm) {
  const auto [gram, rhs] = detail::gram_system(obs, povm);
  const Eigen::Index m = gram.rows();
  Eigen::SelfAdjointEigenSolver<RMatrix> es(gram);
  const RVector& ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  const double cutoff = 1e-12 * std::max(top, 1e-300);
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < m; ++k) rank += ev(k) > cutoff ? 1 : 0;
  const Eigen::Index needed = static_cast<Eigen::Index>(povm.dim()) * povm.dim();
  if (rank < needed) {
    throw InformationalIncompletenessError(
        "POVM effects span a " + std::to_string(rank) + "-dimensional operator space, need " +
        std::to_string(needed));
  }
  const double cond = top / std::max(ev(0), 1e-300);
  if (rank == m && cond <= kGramConditionLimit) return gram.ldlt().solve(rhs);
  return detail::pseudo_solve(es, rhs, cutoff);
}

/// Throws InformationalIncompletenessError unless the effects span the
/// full operator space.
inline void require_informationally_complete(const Povm& povm) {
  decompose_observable(CMatrix::Identity(povm.dim(), povm.dim()), povm);
}

/// Minimum-norm coefficients for an observable inside the span of a
/// possibly incomplete POVM; throws when the observable lies outside it.
inline Coefficients decompose_in_span(const CMatrix& obs, const Povm& povm, double tol = 1e-9) {
  const auto [gram, rhs] = detail::gram_system(obs, povm);
  Eigen::SelfAdjointEigenSolver<RMatrix> es(gram);
  const double cutoff = 1e-12 * std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
  Coefficients c = detail::pseudo_solve(es, rhs, cutoff);
  CMatrix r = -obs;
  for (std::size_t k = 0; k < povm.size(); ++k) r += c(static_cast<Eigen::Index>(k)) * povm[k];
  if (max_abs(r) > tol * std::max(1.0, max_abs(obs))) {
    throw InformationalIncompletenessError("observable lies outside the span of the POVM effects");
  }
  return c;
}

inline Coefficients decompose_observable(const Observable& obs, const Povm& povm) {
  return decompose_observable(obs.dense(), povm);
}

/// Σ_m c_m Π^m.
inline CMatrix reconstruct(const Coefficients& c, const Povm& povm) {
  if (static_cast<std::size_t>(c.size()) != povm.size()) {
    throw DimensionError("coefficient count differs from POVM size");
  }
  CMatrix o = CMatrix::Zero(povm.dim(), povm.dim());
  for (std::size_t m = 0; m < povm.size(); ++m) o += c(static_cast<Eigen::Index>(m)) * povm[m];
  return o;
}

/// Coefficients of a Pauli-sum observable against a product POVM, evaluated
/// lazily per global outcome:
///   c_(m_1…m_N) = Σ_t w_t Π_q c^(q)_{m_q}(P_{t,q}).
class ProductCoefficients {
 public:
  ProductCoefficients(const Observable& obs, const ProductPovm& povm) : povm_(povm) {
    if (obs.n_qubits() != povm.n_qubits()) {
      throw DimensionError("observable and product POVM act on different qubit counts");
    }
    for (const auto& t : obs.terms()) {
      std::vector<int> idx;
      for (char c : t.paulis) idx.push_back(pauli_index(c));
      terms_.emplace_back(t.weight, std::move(idx));
    }
    // Only the Pauli factors that occur are decomposed, so incomplete
    // factors work whenever those Paulis lie in their span.
    tables_.resize(povm.n_qubits());
    for (int q = 0; q < povm.n_qubits(); ++q) {
      for (const auto& [w, idx] : terms_) {
        Coefficients& c = tables_[q][idx[q]];
        if (c.size() == 0) c = decompose_in_span(pauli_matrix("IXYZ"[idx[q]]), povm.factor(q));
      }
    }
  }

  std::uint64_t size() const { return povm_.num_outcomes(); }

  double operator()(std::uint64_t outcome) const {
    if (outcome >= size()) throw DimensionError("outcome index out of range");
    const int n = povm_.n_qubits();
    std::vector<int> local(n);
    for (int q = 0; q < n; ++q) local[q] = povm_.local_outcome(outcome, q);
    double c = 0.0;
    for (const auto& [w, paulis] : terms_) {
      double prod = w;
      for (int q = 0; q < n && prod != 0.0; ++q) prod *= tables_[q][paulis[q]](local[q]);
      c += prod;
    }
    return c;
  }

  Coefficients dense(int max_qubits = 8) const {
    if (povm_.n_qubits() > max_qubits) throw UnsupportedSizeError("too many outcomes to materialize");
    Coefficients c(static_cast<Eigen::Index>(size()));
    for (std::uint64_t g = 0; g < size(); ++g) c(static_cast<Eigen::Index>(g)) = (*this)(g);
    return c;
  }

  const ProductPovm& povm() const { return povm_; }

 private:
  ProductPovm povm_;
  std::vector<std::array<Coefficients, 4>> tables_;
  std::vector<std::pair<double, std::vector<int>>> terms_;
};

inline ProductCoefficients decompose_observable(const Observable& obs, const ProductPovm& povm) {
  return ProductCoefficients(obs, povm);
}

// ---------------------------------------------------------------------------
// Estimator moments

inline double expectation_from_probs(const Coefficients& c, const Probabilities& p) {
  if (c.size() != p.size()) throw DimensionError("coefficient and probability lengths differ");
  return c.dot(p);
}

struct VarianceResult {
  double variance = 0.0;
  double second_moment = 0.0;
};

/// Single-shot variance Σ c² p − (Σ c p)², clamped at zero.
inline VarianceResult estimator_variance(const Coefficients& c, const Probabilities& p) {
  const double mean = expectation_from_probs(c, p);
  VarianceResult r;
  r.second_moment = c.cwiseAbs2().dot(p);
  r.variance = std::max(0.0, r.second_moment - mean * mean);
  return r;
}

// ---------------------------------------------------------------------------
// Distances

inline double total_variation(const Probabilities& p, const Probabilities& q) {
  if (p.size() != q.size()) throw DimensionError("distribution lengths differ");
  return 0.5 * (p - q).cwiseAbs().sum();
}

inline constexpr std::size_t kMaxSubsetOutcomes = 16;

/// Operational distance: the maximum over outcome subsets I′ of
/// ‖Σ_{m∈I′}(A^m − B^m)‖_∞. Subsets are visited in Gray-code order so each
/// step adds or removes a single difference operator.
inline double operational_distance(const Povm& a, const Povm& b,
                                   std::size_t max_outcomes = kMaxSubsetOutcomes) {
  if (a.dim() != b.dim() || a.size() != b.size()) {
    throw DimensionError("operational distance needs POVMs of equal shape");
  }
  const std::size_t m = a.size();
  if (m > max_outcomes || m >= 63) {
    throw UnsupportedSizeError("operational distance enumerates 2^M subsets; M=" +
                               std::to_string(m) + " exceeds limit " + std::to_string(max_outcomes));
  }
  std::vector<CMatrix> diff(m);
  for (std::size_t k = 0; k < m; ++k) diff[k] = a[k] - b[k];
  CMatrix acc = CMatrix::Zero(a.dim(), a.dim());
  double best = 0.0;
  std::uint64_t gray = 0;
  for (std::uint64_t step = 1; step < (std::uint64_t{1} << m); ++step) {
    const int bit = std::countr_zero(step);
    gray ^= std::uint64_t{1} << bit;
    if (gray & (std::uint64_t{1} << bit)) {
      acc += diff[bit];
    } else {
      acc -= diff[bit];
    }
    best = std::max(best, hermitian_spectral_norm(acc));
  }
  return best;
}

}  // namespace qpovm

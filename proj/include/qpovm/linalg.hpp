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

// Small dense linear-algebra helpers shared by all modules.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace qpovm {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

/// Largest absolute entry, ‖A‖_max.
inline double max_abs(const CMatrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

inline double hermiticity_residual(const CMatrix& a) {
  return max_abs(a - a.adjoint());
}

/// ‖U†U − 𝟙‖_max.
inline double unitarity_residual(const CMatrix& u) {
  if (u.rows() != u.cols()) return INFINITY;
  return max_abs(u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols()));
}

/// Eigenvalues of the Hermitian part of `a`, ascending.
inline RVector hermitian_eigenvalues(const CMatrix& a) {
  const CMatrix h = 0.5 * (a + a.adjoint());
  if (h.rows() == 2) {
    // closed form; the hot path of every operational-distance evaluation
    const double p = h(0, 0).real();
    const double q = h(1, 1).real();
    const double m = 0.5 * (p + q);
    const double r = std::hypot(0.5 * (p - q), std::abs(h(0, 1)));
    RVector ev(2);
    ev << m - r, m + r;
    return ev;
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

/// Spectral norm of a Hermitian operator (largest |eigenvalue|).
inline double hermitian_spectral_norm(const CMatrix& a) {
  const RVector ev = hermitian_eigenvalues(a);
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

/// exp(−i H t) for Hermitian H.
inline CMatrix expm_hermitian(const CMatrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (h + h.adjoint()));
  const RVector& ev = es.eigenvalues();
  CVector phases(ev.size());
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    phases(k) = std::exp(Complex(0.0, -ev(k) * t));
  }
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

/// A^{−1/2} for a positive semidefinite A, eigenvalues floored at `floor`.
inline CMatrix inverse_sqrt_psd(const CMatrix& a, double floor = 1e-14) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (a + a.adjoint()));
  RVector ev = es.eigenvalues();
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    ev(k) = 1.0 / std::sqrt(std::max(ev(k), floor));
  }
  return es.eigenvectors() * ev.cast<Complex>().asDiagonal() *
         es.eigenvectors().adjoint();
}

/// Clamp negative eigenvalues of a Hermitian operator to zero.
inline CMatrix clamp_psd(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (a + a.adjoint()));
  RVector ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.cast<Complex>().asDiagonal() *
         es.eigenvectors().adjoint();
}

/// Wrap to (−π, π].
inline double wrap_phase(double phi) {
  double w = std::remainder(phi, kTwoPi);
  if (w <= -kPi) w += kTwoPi;
  return w;
}

/// Wrap to [0, 2π).
inline double wrap_positive(double theta) {
  double w = std::fmod(theta, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w -= kTwoPi;
  return w;
}

/// Kronecker product a ⊗ b.
inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace qpovm

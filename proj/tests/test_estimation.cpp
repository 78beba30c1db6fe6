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

#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include "test_support.hpp"

namespace qpovm {
namespace {

using testing::random_ket;

CVector product_ket(const CVector& a, const CVector& b) {
  // qubit 0 is the least-significant factor
  return kron(b, a);
}

Probabilities delta(int n, int k) {
  Probabilities p = Probabilities::Zero(n);
  p(k) = 1.0;
  return p;
}

double chi_square(const OutcomeHistogram& h, const Probabilities& p) {
  double x = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const auto it = h.counts.find(static_cast<std::uint64_t>(k));
    const double obs = it == h.counts.end() ? 0.0 : static_cast<double>(it->second);
    const double e = p(k) * h.shots;
    x += (obs - e) * (obs - e) / e;
  }
  return x;
}

// ---------------------------------------------------------------------------
// Sampling

TEST(SampleOutcomes, DeterministicDistributionPutsAllShotsOnOneOutcome) {
  const auto h = sample_outcomes(delta(4, 2), 1000, 3);
  ASSERT_EQ(h.counts.size(), 1u);
  EXPECT_EQ(h.counts.at(2), 1000u);
  EXPECT_EQ(h.shots, 1000u);
}

TEST(SampleOutcomes, CountsSumToShotsAndIndicesInRange) {
  std::mt19937_64 rng(5);
  const ProductPovm pp = ProductPovm::uniform(sic_povm(), 3);
  const CVector psi = random_ket(8, rng);
  const Probabilities p = outcome_probabilities(projector(psi), pp);
  for (std::uint64_t shots : {1ull, 65535ull, 65536ull, 200001ull}) {
    const auto h = sample_outcomes(p, shots, 9);
    std::uint64_t total = 0;
    for (const auto& [k, n] : h.counts) {
      EXPECT_LT(k, 64u);
      total += n;
    }
    EXPECT_EQ(total, shots);
    EXPECT_EQ(h.shots, shots);
  }
}

TEST(SampleOutcomes, FixedSeedReproduces) {
  const Probabilities p = outcome_probabilities(DensityMatrix::pure(kets::plus()), sic_povm());
  EXPECT_EQ(sample_outcomes(p, 300000, 17).counts, sample_outcomes(p, 300000, 17).counts);
  EXPECT_NE(sample_outcomes(p, 300000, 17).counts, sample_outcomes(p, 300000, 18).counts);
  const std::vector<Probabilities> f{p, p};
  EXPECT_EQ(sample_outcomes(f, 100000, 4).counts, sample_outcomes(f, 100000, 4).counts);
}

TEST(SampleOutcomes, ProductSamplingMatchesJointDistribution) {
  // product state, so the joint distribution factorizes
  std::mt19937_64 rng(21);
  const CVector a = random_ket(2, rng);
  const CVector b = random_ket(2, rng);
  const Probabilities pa = outcome_probabilities(DensityMatrix::pure(a), sic_povm());
  const Probabilities pb = outcome_probabilities(DensityMatrix::pure(b), demo_povm());
  const ProductPovm pp({sic_povm(), demo_povm()});
  const Probabilities joint = outcome_probabilities(projector(product_ket(a, b)), pp);
  const boost::math::chi_squared dist(15);
  const double limit = boost::math::quantile(dist, 0.999);
  const auto hp = sample_outcomes(std::vector<Probabilities>{pa, pb}, 100000, 1);
  const auto hj = sample_outcomes(joint, 100000, 1);
  EXPECT_LT(chi_square(hp, joint), limit);
  EXPECT_LT(chi_square(hj, joint), limit);
}

TEST(SampleOutcomes, RejectsUnnormalizedInput) {
  EXPECT_THROW(sample_outcomes(Probabilities::Constant(4, 0.3), 10, 0), ValidationError);
  EXPECT_THROW(sample_outcomes(Probabilities{}, 10, 0), DimensionError);
}

// ---------------------------------------------------------------------------
// Estimators

TEST(EstimateExpectation, ExactFrequenciesReproduceExpectation) {
  const Probabilities p = outcome_probabilities(DensityMatrix::pure(kets::zero()), sic_povm());
  const Coefficients c = decompose_observable(pauli_matrix('Z'), sic_povm());
  OutcomeHistogram h;
  h.num_outcomes = 4;
  // p = (1/2, 1/6, 1/6, 1/6) is exact at 6000 shots
  for (int k = 0; k < 4; ++k) h.add(k, static_cast<std::uint64_t>(std::llround(p(k) * 6000)));
  const auto r = estimate_expectation(h, c);
  EXPECT_NEAR(r.estimate, expectation_from_probs(c, p), 1e-12);
  EXPECT_NEAR(r.second_moment, estimator_variance(c, p).second_moment, 1e-12);
  EXPECT_EQ(r.source, CoefficientSource::kTheoretical);
}

TEST(EstimateExpectation, SicZOnZeroWithinFiveStandardErrors) {
  const Probabilities p = outcome_probabilities(DensityMatrix::pure(kets::zero()), sic_povm());
  const Coefficients c = decompose_observable(pauli_matrix('Z'), sic_povm());
  const auto r = estimate_expectation(sample_outcomes(p, 1000000, 2), c);
  EXPECT_LT(std::abs(r.estimate - 1.0), 5.0 * r.std_error);
  // σ/√N with single-shot variance 4
  EXPECT_NEAR(r.std_error, 2e-3, 1e-4);
}

TEST(EstimateExpectation, StandardErrorFormula) {
  const Coefficients c{{3.0, -1.0, 0.5, 2.0}};
  OutcomeHistogram h;
  h.num_outcomes = 4;
  h.add(0, 3);
  h.add(1, 1);
  h.add(3, 6);
  const auto r = estimate_expectation(h, c);
  const double mean = (9.0 - 1.0 + 12.0) / 10.0;
  const double m2 = (27.0 + 1.0 + 24.0) / 10.0;
  EXPECT_DOUBLE_EQ(r.estimate, mean);
  EXPECT_DOUBLE_EQ(r.second_moment, m2);
  EXPECT_DOUBLE_EQ(r.std_error, std::sqrt((m2 - mean * mean) / 10.0));
}

TEST(EstimateExpectation, SingleShotIsDefined) {
  OutcomeHistogram h;
  h.num_outcomes = 4;
  h.add(1);
  const auto r = estimate_expectation(h, Coefficients{{1.0, -3.0, 1.0, 1.0}});
  EXPECT_DOUBLE_EQ(r.estimate, -3.0);
  EXPECT_DOUBLE_EQ(r.std_error, 0.0);
  EXPECT_EQ(r.shots, 1u);
}

TEST(EstimateExpectation, OutcomeWithoutCoefficientRejected) {
  OutcomeHistogram h;
  h.num_outcomes = 8;
  h.add(6);
  EXPECT_THROW(estimate_expectation(h, Coefficients::Ones(4)), DimensionError);
  EXPECT_THROW(h.add(8), DimensionError);
  EXPECT_THROW(estimate_expectation(OutcomeHistogram{}, Coefficients::Ones(4)), ValidationError);
}

TEST(EstimateExpectation, LazyProductCoefficientsMatchDense) {
  std::mt19937_64 rng(8);
  const ProductPovm pp({sic_povm(), demo_povm(), sic_povm()});
  const Observable obs({3, {{0.7, "ZXI"}, {-0.2, "YYZ"}, {1.1, "IIX"}}});
  const CVector psi = random_ket(8, rng);
  const Probabilities p = outcome_probabilities(projector(psi), pp);
  const auto h = sample_outcomes(p, 50000, 6);
  const auto lazy = estimate_expectation(h, decompose_observable(obs, pp));
  const auto dense = estimate_expectation(h, decompose_observable(obs, pp).dense());
  EXPECT_NEAR(lazy.estimate, dense.estimate, 1e-12);
  EXPECT_NEAR(lazy.second_moment, dense.second_moment, 1e-10);
}

TEST(EstimateExpectation, LazyCoefficientsScaleBeyondDenseLimit) {
  // 4^12 outcomes are never materialized
  const int n = 12;
  const ProductPovm pp = ProductPovm::uniform(sic_povm(), n);
  const Probabilities pz = outcome_probabilities(DensityMatrix::pure(kets::zero()), sic_povm());
  const auto h = sample_outcomes(std::vector<Probabilities>(n, pz), 200000, 3);
  const auto r = estimate_expectation(h, decompose_observable(Observable::pauli(std::string(n, 'Z')), pp));
  // each factor has single-shot second moment 5
  EXPECT_LT(std::abs(r.estimate - 1.0), 5.0 * r.std_error);
  EXPECT_GT(r.second_moment, 1e5);
}

// Estimator consistency for random two-qubit instances.
TEST(EstimateExpectation, ConsistentForRandomTwoQubitInstances) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    const ProductPovm pp({testing::random_rank_one_povm(rng), testing::random_rank_one_povm(rng)});
    const CMatrix rho = testing::random_density(4, rng);
    const CMatrix o = testing::random_hermitian(4, rng);
    const Observable obs = Observable::from_matrix(o);
    const double exact = (rho * o).trace().real();
    const auto h = sample_outcomes(outcome_probabilities(rho, pp), 1000000, trial);
    const auto r = estimate_expectation(h, decompose_observable(obs, pp));
    EXPECT_LT(std::abs(r.estimate - exact), 5.0 * r.std_error) << "trial " << trial;
    EXPECT_GE(r.second_moment, r.estimate * r.estimate);
  }
}

// ---------------------------------------------------------------------------
// Bias and mitigation

TEST(Bias, ZeroForMatchingAndLinearInCoefficients) {
  const Coefficients c{{1.0, -2.0, 0.5, 3.0}};
  const Probabilities p{{0.1, 0.2, 0.3, 0.4}};
  const Probabilities q{{0.25, 0.25, 0.25, 0.25}};
  EXPECT_EQ(bias(c, p, p), 0.0);
  EXPECT_NEAR(bias(2.0 * c, p, q), 2.0 * bias(c, p, q), 1e-15);
  EXPECT_NEAR(bias(c, p, q), c.dot(p - q), 1e-15);
  EXPECT_THROW(bias(c, p, Probabilities::Ones(3)), DimensionError);
}

TEST(Bias, BoundedByOperationalDistance) {
  // |Σ c (p − q)| ≤ 2 D_OD max|c| for any state
  std::mt19937_64 rng(40);
  const Povm ideal = sic_povm();
  const Coefficients c = decompose_observable(pauli_matrix('Z'), ideal);
  for (int trial = 0; trial < 20; ++trial) {
    const Povm noisy = testing::random_rank_one_povm(rng);
    const DensityMatrix rho(testing::random_density(2, rng));
    const double b = bias(c, outcome_probabilities(rho, noisy), outcome_probabilities(rho, ideal));
    EXPECT_LE(std::abs(b), 2.0 * operational_distance(noisy, ideal) * c.cwiseAbs().maxCoeff() + 1e-12);
  }
}

TEST(Mitigation, TheoreticalPovmGivesUnmitigatedEstimate) {
  const Probabilities p = outcome_probabilities(DensityMatrix::pure(kets::plus()), sic_povm());
  const auto h = sample_outcomes(p, 10000, 1);
  const Observable x = Observable::pauli("X");
  const auto raw = estimate_expectation(h, decompose_observable(x, sic_povm()));
  const auto mit = mitigated_estimate(x, sic_povm(), h);
  EXPECT_NEAR(mit.estimate, raw.estimate, 1e-12);
  EXPECT_EQ(mit.source, CoefficientSource::kTomographic);
}

TEST(Mitigation, ExactDevicePovmRemovesBias) {
  std::mt19937_64 rng(52);
  const Povm device = reference_confusion().apply(sic_povm());
  const Observable z = Observable::pauli("Z");
  for (int trial = 0; trial < 5; ++trial) {
    const CVector psi = random_ket(2, rng);
    const double exact = (projector(psi) * pauli_matrix('Z')).trace().real();
    const Probabilities p = outcome_probabilities(DensityMatrix::pure(psi), device);
    const auto h = sample_outcomes(p, 1000000, trial);
    const auto mit = mitigated_estimate(z, device, h);
    EXPECT_LT(std::abs(mit.estimate - exact), 5.0 * mit.std_error);
    EXPECT_NEAR(expectation_from_probs(decompose_observable(pauli_matrix('Z'), device), p), exact, 1e-12);
  }
}

TEST(Mitigation, ProductTomographicPovm) {
  std::mt19937_64 rng(61);
  const Povm device = reference_confusion().apply(sic_povm());
  const ProductPovm pp = ProductPovm::uniform(device, 2);
  const CMatrix rho = testing::random_density(4, rng);
  const Observable zz = Observable::pauli("ZZ");
  const double exact = (rho * zz.dense()).trace().real();
  const auto h = sample_outcomes(outcome_probabilities(rho, pp), 1000000, 7);
  const auto mit = mitigated_estimate(zz, pp, h);
  EXPECT_LT(std::abs(mit.estimate - exact), 5.0 * mit.std_error);
}

TEST(Mitigation, TomographyReducesBiasForReadoutNoise) {
  // ML detector tomography of a confusion-degraded SIC, then exact-probability
  // biases of raw and mitigated coefficients on random states and axes.
  std::mt19937_64 rng(70);
  const Povm device = reference_confusion().apply(sic_povm());
  const auto states = stabilizer_states();
  const Povm tomo = ml_tomography(sample_counts(device, states, 100000 / 6, 11), states).povm;
  const char axes[] = {'X', 'Y', 'Z'};
  int wins = 0;
  const int cases = 50;
  for (int trial = 0; trial < cases; ++trial) {
    const DensityMatrix rho = DensityMatrix::pure(random_ket(2, rng));
    const CMatrix o = pauli_matrix(axes[trial % 3]);
    const Probabilities p_exp = outcome_probabilities(rho, device);
    const double exact = (rho.matrix() * o).trace().real();
    const double raw = expectation_from_probs(decompose_observable(o, sic_povm()), p_exp) - exact;
    const double mit = expectation_from_probs(decompose_observable(o, tomo), p_exp) - exact;
    if (std::abs(mit) < std::abs(raw)) ++wins;
  }
  EXPECT_GE(wins, 45);
}

TEST(Mitigation, InformationallyIncompleteTomoPovmRejected) {
  OutcomeHistogram h;
  h.num_outcomes = 2;
  h.add(0, 5);
  EXPECT_THROW(mitigated_estimate(Observable::pauli("X"), projective_z_povm(), h),
               InformationalIncompletenessError);
  OutcomeHistogram h2;
  h2.num_outcomes = 8;
  h2.add(0, 5);
  // Z lies in the span of the projective factor, but mitigation still needs IC
  EXPECT_THROW(mitigated_estimate(Observable::pauli("ZZ"), ProductPovm({projective_z_povm(), sic_povm()}), h2),
               InformationalIncompletenessError);
}

// ---------------------------------------------------------------------------
// Second-moment breakdown

TEST(Scatter, SicProductOnZeroZeroHasSecondMomentTwentyFive) {
  const auto t = scatter_export(Observable::pauli("ZZ"), ProductPovm::uniform(sic_povm(), 2),
                                product_ket(kets::zero(), kets::zero()));
  EXPECT_NEAR(t.second_moment, 25.0, 1e-10);
  EXPECT_NEAR(t.expectation, 1.0, 1e-12);
  EXPECT_NEAR(t.variance, 24.0, 1e-10);
  EXPECT_EQ(t.rows.size(), 16u);
}

TEST(Scatter, AlignedProjectiveProductHasNoVariance) {
  const auto t = scatter_export(Observable::pauli("ZZ"), ProductPovm::uniform(projective_z_povm(), 2),
                                product_ket(kets::zero(), kets::zero()));
  EXPECT_NEAR(t.second_moment, 1.0, 1e-12);
  EXPECT_NEAR(t.variance, 0.0, 1e-12);
  EXPECT_NEAR(t.rows.front().c2p, 1.0, 1e-12);
  EXPECT_EQ(t.rows.front().outcome, 0u);
}

TEST(Scatter, TotalsMatchEstimatorVarianceBitForBit) {
  std::mt19937_64 rng(90);
  const ProductPovm pp({sic_povm(), demo_povm(), sic_povm()});
  const Observable obs({3, {{0.5, "XZI"}, {-1.5, "ZZZ"}, {0.25, "IYY"}}});
  const CVector psi = random_ket(8, rng);
  const auto t = scatter_export(obs, pp, psi);
  const auto v = estimator_variance(decompose_observable(obs, pp).dense(),
                                    outcome_probabilities(projector(psi), pp));
  EXPECT_EQ(t.second_moment, v.second_moment);
  EXPECT_EQ(t.variance, v.variance);
  double sum = 0.0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    sum += t.rows[i].c2p;
    EXPECT_DOUBLE_EQ(t.rows[i].c2p, t.rows[i].c * t.rows[i].c * t.rows[i].p);
    if (i > 0) EXPECT_GE(t.rows[i - 1].c2p, t.rows[i].c2p);
  }
  EXPECT_NEAR(sum, t.second_moment, 1e-10);
}

TEST(Scatter, SecondMomentDominatesSquaredExpectation) {
  std::mt19937_64 rng(91);
  for (int trial = 0; trial < 20; ++trial) {
    const ProductPovm pp({testing::random_rank_one_povm(rng), testing::random_rank_one_povm(rng)});
    const auto t = scatter_export(Observable::from_matrix(testing::random_hermitian(4, rng)), pp,
                                  random_ket(4, rng));
    EXPECT_GE(t.second_moment, t.expectation * t.expectation - 1e-12);
  }
}

TEST(Scatter, SizeAndShapeErrors) {
  const ProductPovm big = ProductPovm::uniform(sic_povm(), 7);
  CVector psi = CVector::Zero(128);
  psi(0) = 1.0;
  EXPECT_THROW(scatter_export(Observable::pauli("ZZZZZZZ"), big, psi), UnsupportedSizeError);
  const ProductPovm two = ProductPovm::uniform(sic_povm(), 2);
  EXPECT_THROW(scatter_export(Observable::pauli("ZZ"), two, kets::zero()), DimensionError);
  EXPECT_THROW(scatter_export(Observable::pauli("ZZ"), two, CVector::Ones(4)), ValidationError);
}

}  // namespace
}  // namespace qpovm

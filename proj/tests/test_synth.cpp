#include <gtest/gtest.h>

#include "oracles.hpp"
#include "subsketch/synth.hpp"

using namespace subsketch;

TEST(Spectrum, Profiles) {
  const Vector poly = generate_spectrum(SpectrumSpec::polynomial(1.0), 4, 100);
  EXPECT_NEAR(poly(0), 10.0, 1e-12);
  EXPECT_NEAR(poly(3), 10.0 / 4.0, 1e-12);
  const Vector expo = generate_spectrum(SpectrumSpec::exponential(0.1), 3, 1000);
  EXPECT_NEAR(expo(2), std::sqrt(1000.0) * std::exp(-0.05 * 3), 1e-12);
  const Vector geom = generate_spectrum(SpectrumSpec::geometric(0.98), 3, 1000);
  EXPECT_NEAR(geom(0), 0.98, 1e-15);
  EXPECT_NEAR(geom(2), 0.98 * 0.98 * 0.98, 1e-15);
}

TEST(Spectrum, RejectsBadExplicitList) {
  EXPECT_THROW(generate_spectrum(SpectrumSpec::explicit_values({1, 2}), 2, 2), ArgumentError);
  EXPECT_THROW(generate_spectrum(SpectrumSpec::explicit_values({1, 0}), 2, 2), ArgumentError);
  EXPECT_THROW(generate_spectrum(SpectrumSpec::explicit_values({1}), 2, 2), ArgumentError);
}

TEST(SynthMatrix, ExplicitValuesRecovered) {
  SeededRng rng(1, 0);
  const SynthInstance inst = synth_matrix(2, 2, SpectrumSpec::explicit_values({3, 1}), rng);
  const Vector sv = oracle::jacobi_singular_values(inst.a);
  EXPECT_NEAR(sv(0), 3.0, 1e-12);
  EXPECT_NEAR(sv(1), 1.0, 1e-12);
}

TEST(SynthMatrix, EqualValuesGiveScaledOrthogonal) {
  SeededRng rng(2, 0);
  const SynthInstance inst = synth_matrix(5, 5, SpectrumSpec::explicit_values({2, 2, 2, 2, 2}), rng);
  EXPECT_LT((inst.a.transpose() * inst.a - 4.0 * DenseMatrix::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(SynthMatrix, ExponentialProfileAtExperimentScale) {
  SeededRng rng(3, 0);
  const SynthInstance inst = synth_matrix(1000, 2000, SpectrumSpec::exponential(0.1), rng);
  EXPECT_EQ(inst.a.rows(), 1000);
  EXPECT_EQ(inst.a.cols(), 2000);
  EXPECT_NEAR(inst.summary.singular_values(0), std::sqrt(1000.0) * std::exp(-0.05), 1e-12);
  EXPECT_NEAR(inst.summary.singular_values(9), std::sqrt(1000.0) * std::exp(-0.5), 1e-12);
  // Spot-check the realized top singular value.
  EXPECT_NEAR(spectral_norm(inst.a, 1e-12), inst.summary.singular_values(0), 1e-6 * inst.summary.singular_values(0));
}

TEST(SynthMatrix, SpectraAndFactorsOnTwentyShapes) {
  SeededRng rng(4, 0);
  const std::vector<SpectrumSpec> specs{SpectrumSpec::polynomial(1.0), SpectrumSpec::exponential(0.2),
                                        SpectrumSpec::geometric(0.9)};
  for (int t = 0; t < 20; ++t) {
    const Index n = 2 + static_cast<Index>(rng.below(30));
    const Index d = 2 + static_cast<Index>(rng.below(30));
    const SpectrumSpec& spec = specs[static_cast<std::size_t>(t) % specs.size()];
    const SynthInstance inst = synth_matrix(n, d, spec, rng);
    const Index rho = std::min(n, d);
    const Vector sv = oracle::jacobi_singular_values(inst.a);
    for (Index j = 0; j < rho; ++j)
      ASSERT_NEAR(sv(j), inst.summary.singular_values(j), 1e-8 * inst.summary.singular_values(j)) << n << "x" << d;
    ASSERT_LT((inst.u.transpose() * inst.u - DenseMatrix::Identity(rho, rho)).cwiseAbs().maxCoeff(), 1e-10);
    ASSERT_LT((inst.v.transpose() * inst.v - DenseMatrix::Identity(rho, rho)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(SynthMatrix, SeedReproducible) {
  SeededRng a(5, 5);
  SeededRng b(5, 5);
  const SpectrumSpec spec = SpectrumSpec::geometric(0.95);
  EXPECT_EQ((synth_matrix(6, 4, spec, a).a - synth_matrix(6, 4, spec, b).a).norm(), 0.0);
}

TEST(SynthLabels, SingleSign) {
  SeededRng rng(6, 0);
  const Vector y = synth_labels(1, rng);
  ASSERT_EQ(y.size(), 1);
  EXPECT_EQ(std::abs(y(0)), 1.0);
}

TEST(SynthLabels, BalancedAndReproducible) {
  SeededRng rng(7, 0);
  const Vector y = synth_labels(100000, rng);
  EXPECT_LT(std::abs(y.mean()), 0.01);
  EXPECT_TRUE((y.array().abs() == 1.0).all());
  SeededRng again(7, 0);
  EXPECT_EQ((synth_labels(100000, again) - y).norm(), 0.0);
}

TEST(SynthObservation, NoiselessIsLinear) {
  SeededRng rng(8, 0);
  const DenseMatrix a = sample_gaussian_matrix(10, 6, 1.0, rng);
  Vector x = sample_gaussian_vector(6, 1.0, rng);
  x /= x.norm();
  EXPECT_EQ((synth_observation(a, x, 0.0, rng) - a * x).norm(), 0.0);
}

TEST(SynthObservation, NoiseVariance) {
  SeededRng rng(9, 0);
  const Index n = 50;
  const DenseMatrix a = sample_gaussian_matrix(n, 4, 1.0, rng);
  const Vector zero = Vector::Zero(4);
  double sum = 0.0;
  double sum_sq = 0.0;
  const int draws = 10000;
  for (int t = 0; t < draws; ++t) {
    const Vector w = synth_observation(a, zero, 2.0, rng);
    sum += w.sum();
    sum_sq += w.squaredNorm();
  }
  const double count = static_cast<double>(draws) * n;
  const double mean = sum / count;
  const double var = sum_sq / count - mean * mean;
  EXPECT_NEAR(var, 2.0 / n, 0.03 * 2.0 / n);
}

TEST(SynthObservation, RejectsOutsideUnitBall) {
  SeededRng rng(10, 0);
  EXPECT_THROW(synth_observation(DenseMatrix::Identity(2, 2), Vector::Constant(2, 1.0), 1.0, rng), ArgumentError);
}

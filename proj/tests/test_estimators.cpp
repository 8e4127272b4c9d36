#include <gtest/gtest.h>

#include "oracles.hpp"
#include "subsketch/analysis.hpp"
#include "subsketch/estimators.hpp"
#include "subsketch/synth.hpp"

using namespace subsketch;

namespace {

struct Instance {
  DenseMatrix a;
  Vector y;
  SpectralSummary summary;
};

Instance make_instance(Index n, Index d, const SpectrumSpec& spec, std::uint64_t seed) {
  SeededRng rng(seed, 0);
  SynthInstance s = synth_matrix(n, d, spec, rng);
  return {s.a, synth_labels(n, rng), s.summary};
}

DenseMatrix low_rank(Index n, Index d, Index r, SeededRng& rng) {
  return sample_gaussian_matrix(n, r, 1.0, rng) * sample_gaussian_matrix(r, d, 1.0, rng);
}

EmbeddingSpec spec_of(EmbeddingKind kind, Index m, std::uint64_t seed, Index q = 0) {
  return EmbeddingSpec{kind, m, q, SeededRng(seed, 1)};
}

// Orthonormal basis of range(m) from Eigen's Householder QR, independent of the library's SVD path.
DenseMatrix householder_basis(const DenseMatrix& m) {
  Eigen::ColPivHouseholderQR<DenseMatrix> qr(m);
  return qr.householderQ() * DenseMatrix::Identity(m.rows(), qr.rank());
}

}  // namespace

TEST(ZeroOrder, ZeroAlpha) {
  SeededRng rng(1, 0);
  const DenseMatrix q = sample_haar_frame(6, 3, rng);
  EXPECT_EQ(zero_order(q, Vector::Zero(3)).norm(), 0.0);
}

TEST(ZeroOrder, IdentityFrame) {
  SeededRng rng(2, 0);
  const Vector x = sample_gaussian_vector(5, 1.0, rng);
  EXPECT_EQ((zero_order(DenseMatrix::Identity(5, 5), x) - x).norm(), 0.0);
}

TEST(ZeroOrder, MatchesExplicitSum) {
  SeededRng rng(3, 0);
  const DenseMatrix q = sample_gaussian_matrix(7, 4, 1.0, rng);
  const Vector alpha = sample_gaussian_vector(4, 1.0, rng);
  Vector expected = Vector::Zero(7);
  for (Index i = 0; i < 7; ++i)
    for (Index j = 0; j < 4; ++j) expected(i) += q(i, j) * alpha(j);
  EXPECT_LT((zero_order(q, alpha) - expected).norm(), 1e-14);
  EXPECT_THROW(zero_order(q, Vector::Zero(3)), ArgumentError);
}

TEST(FirstOrder, FixedPointAtOptimum) {
  SeededRng rng(4, 0);
  const DenseMatrix a = sample_gaussian_matrix(40, 15, 1.0, rng);
  const SmoothLoss loss = SmoothLoss::logistic(synth_labels(40, rng));
  const SolveOptions opts;
  const Reference ref = reference_solution(a, loss, 1e-2, opts);
  EXPECT_LE((first_order(a, loss, 1e-2, ref.x) - ref.x).norm(), 10.0 * opts.grad_tolerance * (1.0 + ref.x.norm()));
}

TEST(FirstOrder, QuadraticTwoByTwo) {
  DenseMatrix a(2, 2);
  a << 1, 2, 3, 4;
  Vector b(2);
  b << 1, 1;
  Vector v(2);
  v << 1, -1;
  // Av − b = (−2, −2); Aᵀ(Av − b) = (−8, −12); divided by −λ with λ = 2.
  const Vector g = first_order(a, SmoothLoss::quadratic(b), 2.0, v);
  EXPECT_DOUBLE_EQ(g(0), 4.0);
  EXPECT_DOUBLE_EQ(g(1), 6.0);
}

TEST(FirstOrder, GradientStepIdentity) {
  SeededRng rng(5, 0);
  const DenseMatrix a = sample_gaussian_matrix(30, 12, 1.0, rng);
  const SmoothLoss loss = SmoothLoss::relu(synth_labels(30, rng));
  const double lambda = 0.3;
  const Vector v = sample_gaussian_vector(12, 1.0, rng);
  const Vector grad_f = a.transpose() * loss.gradient(a * v) + lambda * v;
  EXPECT_LT((first_order(a, loss, lambda, v) - (v - grad_f / lambda)).norm(), 1e-12);
}

TEST(RecoverAdaptive, ExactRecoveryWhenSketchCoversRange) {
  SeededRng rng(6, 0);
  const DenseMatrix a = low_rank(40, 60, 5, rng);
  const SmoothLoss loss = SmoothLoss::logistic(synth_labels(40, rng));
  const Reference ref = reference_solution(a, loss, 1e-3);
  for (EmbeddingKind kind : {EmbeddingKind::AdaptiveGaussian, EmbeddingKind::AdaptiveSRHT}) {
    const RecoveryReport rep = recover_adaptive(a, loss, 1e-3, spec_of(kind, 10, 7), ref);
    EXPECT_TRUE(rep.converged);
    EXPECT_LE(rep.rel_err_x1, 1e-6);
    EXPECT_LE(rep.rel_err_x0, 1e-6);
    EXPECT_LE(rep.residual_norm, 1e-8 * a.norm());
    EXPECT_TRUE(rep.condition_ok);
  }
}

TEST(RecoverAdaptive, RejectsObliviousSpec) {
  const DenseMatrix a = DenseMatrix::Identity(3, 3);
  const SmoothLoss loss = SmoothLoss::quadratic(Vector::Ones(3));
  const Reference ref = reference_solution(a, loss, 1.0);
  EXPECT_THROW(recover_adaptive(a, loss, 1.0, spec_of(EmbeddingKind::ObliviousGaussian, 2, 1), ref), ArgumentError);
}

TEST(RecoverAdaptive, QuadraticMatchesClosedFormPipeline) {
  SeededRng rng(8, 0);
  const DenseMatrix a = sample_gaussian_matrix(30, 50, 1.0, rng);
  const Vector b = sample_gaussian_vector(30, 1.0, rng);
  const double lambda = 0.5;
  const SmoothLoss loss = SmoothLoss::quadratic(b);
  const Reference ref = reference_solution(a, loss, lambda);
  const EmbeddingSpec spec = spec_of(EmbeddingKind::AdaptiveGaussian, 8, 9);
  const RecoveryReport rep = recover_adaptive(a, loss, lambda, spec, ref);

  // Pipeline by hand: S = AᵀS̃, any orthonormal basis Q of range(S), ridge in α, then the dual map.
  const DenseMatrix s_tilde = draw_adaptive_base(30, spec);
  const DenseMatrix q = householder_basis(a.transpose() * s_tilde);
  const Vector alpha = oracle::ridge(a * q, b, lambda);
  const Vector x0 = q * alpha;
  const Vector x1 = -a.transpose() * (a * x0 - b) / lambda;
  EXPECT_LT((rep.x0 - x0).norm(), 1e-9 * x0.norm());
  EXPECT_LT((rep.x1 - x1).norm(), 1e-9 * x1.norm());
}

TEST(RecoverAdaptive, BeatsObliviousBaselineOnExponentialDecay) {
  // Reduced-size version of the logistic exponential-decay comparison.
  const Instance inst = make_instance(200, 400, SpectrumSpec::exponential(0.1), 10);
  const SmoothLoss loss = SmoothLoss::logistic(inst.y);
  const double lambda = 1e-4;
  const Reference ref = reference_solution(inst.a, loss, lambda);
  double adaptive = 0.0;
  double oblivious = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    adaptive += recover_adaptive(inst.a, loss, lambda, spec_of(EmbeddingKind::AdaptiveGaussian, 64, seed), ref).rel_err_x1;
    oblivious += recover_oblivious_dagger(inst.a, loss, lambda, 64, SeededRng(seed, 2), ref).rel_err_x1;
  }
  EXPECT_LT(adaptive, oblivious);
}

TEST(RecoverIterative, SingleStepMatchesAdaptive) {
  const Instance inst = make_instance(60, 90, SpectrumSpec::exponential(0.2), 11);
  const SmoothLoss loss = SmoothLoss::logistic(inst.y);
  const Reference ref = reference_solution(inst.a, loss, 1e-3);
  const EmbeddingSpec spec = spec_of(EmbeddingKind::AdaptiveGaussian, 12, 3);
  const auto iter = recover_iterative(inst.a, loss, 1e-3, spec, 1, ref);
  const RecoveryReport one = recover_adaptive(inst.a, loss, 1e-3, spec, ref);
  ASSERT_EQ(iter.size(), 1u);
  EXPECT_LT((iter[0].x1 - one.x1).norm(), 1e-10 * one.x1.norm());
  EXPECT_THROW(recover_iterative(inst.a, loss, 1e-3, spec, 0, ref), ArgumentError);
}

TEST(RecoverIterative, ContractsUnderResidualCondition) {
  const Instance inst = make_instance(100, 150, SpectrumSpec::exponential(0.3), 12);
  const SmoothLoss loss = SmoothLoss::logistic(inst.y);
  const Index m = 20;
  const double rk = spectral_residual(inst.summary, static_cast<double>(m / 2));
  const double mu = loss.smoothness();
  const double lambda = 1.01 * 2.0 * mu * std::pow(26.0 * rk, 2);
  const Reference ref = reference_solution(inst.a, loss, lambda);
  const auto reports = recover_iterative(inst.a, loss, lambda, spec_of(EmbeddingKind::AdaptiveGaussian, m, 4), 5, ref);
  ASSERT_GE(reports.size(), 1u);
  const double factor = std::sqrt(mu * std::pow(26.0 * rk, 2) / (2.0 * lambda));
  double previous = 1.0;  // x̂₀ = 0 has relative error one
  for (const RecoveryReport& rep : reports) {
    if (previous < 1e-10) break;
    EXPECT_LE(rep.rel_err_x1, factor * previous + 1e-12);
    previous = rep.rel_err_x1;
  }
}

TEST(RecoverIterative, FullRankSketchHitsFloorAfterOneStep) {
  SeededRng rng(13, 0);
  const DenseMatrix a = sample_gaussian_matrix(30, 10, 1.0, rng);
  const SmoothLoss loss = SmoothLoss::logistic(synth_labels(30, rng));
  const Reference ref = reference_solution(a, loss, 1e-2);
  const auto reports = recover_iterative(a, loss, 1e-2, spec_of(EmbeddingKind::ObliviousGaussian, 10, 5), 2, ref);
  ASSERT_GE(reports.size(), 1u);
  EXPECT_LT(reports[0].rel_err_x1, 1e-10);
}

TEST(RecoverOblivious, HeavyRegularizationLimit) {
  SeededRng rng(14, 0);
  const DenseMatrix a = sample_gaussian_matrix(30, 20, 1.0, rng);
  const SmoothLoss loss = SmoothLoss::logistic(synth_labels(30, rng));
  const double lambda = 1e8;
  const Reference ref = reference_solution(a, loss, lambda);
  const RecoveryReport rep = recover_oblivious_dagger(a, loss, lambda, 5, SeededRng(1, 1), ref);
  const Vector limit = -a.transpose() * loss.gradient(Vector::Zero(30)) / lambda;
  EXPECT_LT((rep.x1 - limit).norm(), 1e-6 * limit.norm());
}

TEST(RecoverOblivious, SquareOrthogonalFrameRecovers) {
  SeededRng rng(15, 0);
  const DenseMatrix a = sample_gaussian_matrix(40, 8, 1.0, rng);
  const SmoothLoss loss = SmoothLoss::logistic(synth_labels(40, rng));
  const Reference ref = reference_solution(a, loss, 1e-2);
  // An orthogonal square Q leaves the regularizer unchanged, so the unwhitened path is exact.
  const DenseMatrix q = sample_haar_frame(8, 8, rng);
  const RecoveryReport rep = recover_with_frame(a, q, a * q, loss, 1e-2, ref, {}, false);
  EXPECT_LE(rep.rel_err_x1, 1e-6);
  EXPECT_LE(rep.rel_err_x0, 1e-6);
  // A Gaussian square Q reparametrizes the regularizer and generally does not.
  const RecoveryReport gaussian = recover_oblivious_dagger(a, loss, 1e-2, 8, SeededRng(2, 2), ref);
  EXPECT_TRUE(gaussian.converged);
  EXPECT_GT(gaussian.rel_err_x0, 1e-3);
}

TEST(RecoverNystrom, FullSubsampleRecovers) {
  SeededRng rng(16, 0);
  const DenseMatrix a = sample_gaussian_matrix(20, 50, 1.0, rng);
  const SmoothLoss loss = SmoothLoss::relu(synth_labels(20, rng));
  const Reference ref = reference_solution(a, loss, 1e-3);
  const RecoveryReport rep = recover_nystrom(a, loss, 1e-3, 20, SeededRng(3, 3), ref);
  EXPECT_LE(rep.rel_err_x1, 1e-6);
}

TEST(RecoverNystrom, ColumnsAreDistinct) {
  SeededRng rng(17, 0);
  const DenseMatrix s = build_column_subsample(30, 30, rng);
  EXPECT_LT((s.transpose() * s - DenseMatrix::Identity(30, 30)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(RecoverNystrom, GaussianAheadOnExponentialDecay) {
  const Instance inst = make_instance(150, 300, SpectrumSpec::exponential(0.05), 18);
  const SmoothLoss loss = SmoothLoss::logistic(inst.y);
  const Reference ref = reference_solution(inst.a, loss, 1e-4);
  double gaussian = 0.0;
  double nystrom = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    gaussian += recover_adaptive(inst.a, loss, 1e-4, spec_of(EmbeddingKind::AdaptiveGaussian, 24, seed), ref).rel_err_x1;
    nystrom += recover_nystrom(inst.a, loss, 1e-4, 24, SeededRng(seed, 4), ref).rel_err_x1;
  }
  EXPECT_LT(gaussian, nystrom);
}

TEST(EstimatorInvariants, CertificateAndDominanceOnRandomRuns) {
  int certified = 0;
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const Instance inst = make_instance(60, 80, SpectrumSpec::exponential(0.25), 100 + seed);
    for (const SmoothLoss& loss : {SmoothLoss::logistic(inst.y), SmoothLoss::relu(inst.y), SmoothLoss::quadratic(inst.y)}) {
      for (double lambda : {1e-3, 1e-1, 10.0}) {
        const Reference ref = reference_solution(inst.a, loss, lambda);
        for (Index m : {4, 12, 24}) {
          const RecoveryReport rep =
              recover_adaptive(inst.a, loss, lambda, spec_of(EmbeddingKind::AdaptiveGaussian, m, seed), ref);
          ASSERT_TRUE(rep.converged);
          if (!rep.condition_ok) continue;
          ++certified;
          EXPECT_LE(rep.rel_err_x1, rep.bound_rhs + 1e-9);
          EXPECT_LE(rep.rel_err_x1, rep.rel_err_x0 + 1e-9);
        }
      }
    }
  }
  EXPECT_GT(certified, 20);
}

TEST(EstimatorInvariants, WhitenedAndRawSketchAgree) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SeededRng rng(200 + seed, 0);
    const DenseMatrix a = sample_gaussian_matrix(40, 60, 1.0, rng);
    const SmoothLoss loss = SmoothLoss::logistic(synth_labels(40, rng));
    const double lambda = 1e-2;
    const DenseMatrix s = sample_gaussian_matrix(60, 7, 1.0, rng);
    const DenseMatrix q = whiten(s);
    const SolveResult whitened = solve_sketched(a * q, loss, lambda);
    const SolveResult raw = solve_sketched_unwhitened(a, s, loss, lambda);
    const Vector x0_w = q * whitened.minimizer;
    const Vector x0_r = s * raw.minimizer;
    EXPECT_LT((x0_w - x0_r).norm(), 1e-6 * x0_w.norm());
    EXPECT_LT((first_order(a, loss, lambda, x0_w) - first_order(a, loss, lambda, x0_r)).norm(),
              1e-6 * first_order(a, loss, lambda, x0_w).norm());
    EXPECT_LT((s * unwhiten_coefficients(s, whitened.minimizer) - x0_w).norm(), 1e-10 * x0_w.norm());
  }
}

TEST(EstimatorInvariants, ObliviousZeroOrderFloor) {
  const Index n = 30;
  const Index d = 40;
  const Index m = 10;
  SeededRng rng(300, 0);
  const DenseMatrix a = sample_gaussian_matrix(n, d, 1.0, rng);
  const SmoothLoss loss = SmoothLoss::quadratic(sample_gaussian_vector(n, 1.0, rng));
  const Reference ref = reference_solution(a, loss, 1e-2);
  RecoveryOptions opts;
  opts.compute_residual = false;
  for (EmbeddingKind kind : {EmbeddingKind::ObliviousGaussian, EmbeddingKind::ObliviousSRHT}) {
    std::vector<double> samples;
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
      const RecoveryReport rep = recover_sketched(a, loss, 1e-2, spec_of(kind, m, seed), ref, opts);
      samples.push_back(rep.rel_err_x0 * rep.rel_err_x0);
    }
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= 500.0;
    double var = 0.0;
    for (double v : samples) var += (v - mean) * (v - mean);
    const double se = std::sqrt(var / 499.0 / 500.0);
    EXPECT_GE(mean, (1.0 - static_cast<double>(m) / d) - 3.0 * se) << to_string(kind);
  }
}

TEST(RecoverNonSmooth, RoutesShareDualObjective) {
  const Instance inst = make_instance(80, 120, SpectrumSpec::geometric(0.9), 19);
  SeededRng rng(20, 0);
  const NonSmoothLoss loss = NonSmoothLoss::l1(sample_gaussian_vector(80, 1.0, rng));
  const Reference ref = nonsmooth_reference(inst.a, loss, 0.05);
  const EmbeddingSpec spec = spec_of(EmbeddingKind::AdaptiveGaussian, 16, 6);
  const NonSmoothReport plain = recover_nonsmooth(inst.a, loss, 0.05, spec, DualRoute::PlainSketchedDual, ref);
  const NonSmoothReport restricted = recover_nonsmooth(inst.a, loss, 0.05, spec, DualRoute::RestrictedDual, ref);
  EXPECT_NEAR(plain.route_objective, restricted.route_objective, 1e-6);
  EXPECT_NEAR(restricted.plain_objective, plain.plain_objective, 1e-12);
}

TEST(RecoverNonSmooth, RestrictedBeatsArbitrarySubgradient) {
  // Reduced-size version of the geometric-decay comparison.
  const Instance inst = make_instance(200, 400, SpectrumSpec::geometric(0.98), 21);
  const double lambda = 0.01;
  SeededRng rng(22, 0);
  for (const NonSmoothLoss& loss : {NonSmoothLoss::l1(sample_gaussian_vector(200, 1.0, rng)),
                                    NonSmoothLoss::hinge(synth_labels(200, rng))}) {
    const Reference ref = nonsmooth_reference(inst.a, loss, lambda);
    double ours = 0.0;
    double arbitrary = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const NonSmoothReport rep = recover_nonsmooth(inst.a, loss, lambda, spec_of(EmbeddingKind::AdaptiveGaussian, 64, seed),
                                                    DualRoute::RestrictedDual, ref);
      ours += rep.error_x1;
      arbitrary += rep.error_arbitrary;
      EXPECT_LE(rep.error_x1, rep.report.bound_rhs);
    }
    EXPECT_LT(ours, arbitrary) << to_string(loss.kind());
  }
}

TEST(RecoverNonSmooth, FullyDeterminedPartitionNeedsNoSolve) {
  SeededRng rng(23, 0);
  const DenseMatrix a = sample_gaussian_matrix(20, 30, 1.0, rng);
  const NonSmoothLoss loss = NonSmoothLoss::l1(sample_gaussian_vector(20, 1.0, rng) + Vector::Constant(20, 0.1));
  const double lambda = 1e6;
  const Reference ref = nonsmooth_reference(a, loss, lambda);
  const NonSmoothReport rep = recover_nonsmooth(a, loss, lambda, spec_of(EmbeddingKind::AdaptiveGaussian, 4, 7),
                                                DualRoute::RestrictedDual, ref);
  EXPECT_EQ(rep.free_count, 0);
  const Vector w = a * rep.report.x0;
  Vector signs(20);
  for (Index i = 0; i < 20; ++i) signs(i) = w(i) > loss.target()(i) ? 1.0 : -1.0;
  EXPECT_LT((rep.report.x1 + a.transpose() * signs / lambda).norm(), 1e-15 * a.norm());
}

TEST(RecoverNonSmooth, DeterministicBoundHoldsForEveryLoss) {
  const Instance inst = make_instance(60, 90, SpectrumSpec::geometric(0.9), 24);
  SeededRng rng(25, 0);
  for (const NonSmoothLoss& loss : {NonSmoothLoss::l1(sample_gaussian_vector(60, 1.0, rng)),
                                    NonSmoothLoss::linf(sample_gaussian_vector(60, 1.0, rng)),
                                    NonSmoothLoss::hinge(synth_labels(60, rng))}) {
    const Reference ref = nonsmooth_reference(inst.a, loss, 0.05);
    for (Index m : {4, 16, 32}) {
      for (DualRoute route : {DualRoute::PlainSketchedDual, DualRoute::RestrictedDual}) {
        const NonSmoothReport rep =
            recover_nonsmooth(inst.a, loss, 0.05, spec_of(EmbeddingKind::AdaptiveGaussian, m, 8), route, ref);
        EXPECT_LE(rep.error_x1, rep.report.bound_rhs) << to_string(loss.kind()) << " m=" << m;
      }
    }
  }
}

#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "subsketch/numkit.hpp"

using namespace subsketch;

namespace {

double max_abs(const DenseMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST(ThinSvd, DiagonalMatrix) {
  DenseMatrix m(2, 2);
  m << 3, 0, 0, 1;
  const ThinSvd svd = thin_svd(m);
  ASSERT_EQ(svd.rank(), 2);
  EXPECT_NEAR(svd.singular_values(0), 3.0, 1e-14);
  EXPECT_NEAR(svd.singular_values(1), 1.0, 1e-14);
  EXPECT_LT(max_abs(svd.u.cwiseAbs() - DenseMatrix::Identity(2, 2)), 1e-14);
  EXPECT_LT(max_abs(svd.vt.cwiseAbs() - DenseMatrix::Identity(2, 2)), 1e-14);
}

TEST(ThinSvd, ZeroMatrixHasRankZero) {
  const ThinSvd svd = thin_svd(DenseMatrix::Zero(2, 2));
  EXPECT_EQ(svd.rank(), 0);
  EXPECT_EQ(svd.u.rows(), 2);
  EXPECT_EQ(svd.u.cols(), 0);
  EXPECT_EQ(svd.vt.rows(), 0);
  EXPECT_EQ(svd.vt.cols(), 2);
}

TEST(ThinSvd, GaussianMatchesJacobiOracle) {
  SeededRng rng(11, 0);
  const DenseMatrix m = sample_gaussian_matrix(20, 7, 1.0, rng);
  const ThinSvd svd = thin_svd(m);
  const Vector oracle_sv = oracle::jacobi_singular_values(m);
  ASSERT_EQ(svd.rank(), 7);
  const double s1 = svd.singular_values(0);
  EXPECT_LE(max_abs(svd.reconstruct() - m), 1e-8 * s1);
  EXPECT_LE((svd.singular_values - oracle_sv).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ThinSvd, RejectsBadInput) {
  EXPECT_THROW(thin_svd(DenseMatrix(0, 3)), ArgumentError);
  DenseMatrix m = DenseMatrix::Ones(2, 2);
  m(0, 1) = std::nan("");
  EXPECT_THROW(thin_svd(m), ArgumentError);
  EXPECT_THROW(thin_svd(DenseMatrix::Ones(2, 2), 1.0), ArgumentError);
}

TEST(ThinSvd, RankToleranceCut) {
  DenseMatrix m = DenseMatrix::Zero(3, 3);
  m(0, 0) = 1.0;
  m(1, 1) = 1e-6;
  m(2, 2) = 1e-12;
  EXPECT_EQ(thin_svd(m).rank(), 2);
  EXPECT_EQ(thin_svd(m, 1e-3).rank(), 1);
  EXPECT_EQ(thin_svd(m, 0.0).rank(), 3);
}

TEST(ThinSvd, InvariantsOnHundredShapes) {
  SeededRng rng(2024, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const Index p = 1 + static_cast<Index>(rng.below(40));
    const Index q = 1 + static_cast<Index>(rng.below(40));
    const DenseMatrix m = sample_gaussian_matrix(p, q, 1.0, rng);
    const ThinSvd svd = thin_svd(m);
    const Index r = svd.rank();
    const double s1 = svd.singular_values(0);
    ASSERT_LE(max_abs(svd.reconstruct() - m), 1e-8 * s1) << p << "x" << q;
    ASSERT_LE(max_abs(svd.u.transpose() * svd.u - DenseMatrix::Identity(r, r)), 1e-10);
    ASSERT_LE(max_abs(svd.vt * svd.vt.transpose() - DenseMatrix::Identity(r, r)), 1e-10);
    for (Index j = 0; j < r; ++j) {
      ASSERT_GT(svd.singular_values(j), svd.rank_tolerance * s1);
      if (j) {
        ASSERT_LE(svd.singular_values(j), svd.singular_values(j - 1));
      }
    }
  }
}

TEST(SpectralNorm, Diagonal) {
  DenseMatrix m = DenseMatrix::Zero(3, 3);
  m.diagonal() << 5, 2, 1;
  EXPECT_NEAR(spectral_norm(m, 1e-7), 5.0, 5e-7);
}

TEST(SpectralNorm, Identity) { EXPECT_NEAR(spectral_norm(DenseMatrix::Identity(4, 4)), 1.0, 1e-12); }

TEST(SpectralNorm, MatchesSvdOnRandomMatrix) {
  SeededRng rng(3, 3);
  const DenseMatrix m = sample_gaussian_matrix(30, 10, 1.0, rng);
  const double tol = 1e-10;
  const double s1 = oracle::jacobi_singular_values(m)(0);
  EXPECT_NEAR(spectral_norm(m, tol), s1, 1e-4 * s1);
  EXPECT_NEAR(spectral_norm(m, 1e-14, 100000), s1, 1e-9 * s1);
}

TEST(SpectralNorm, CapExceededCarriesLastIterate) {
  DenseMatrix m = DenseMatrix::Zero(2, 2);
  m.diagonal() << 1.0, 0.999999;
  try {
    spectral_norm(m, 1e-15, 3);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.iterations(), 3u);
    EXPECT_GT(e.last_value(), 0.99);
  }
}

TEST(SpectralNorm, BoundedByFrobeniusWithEqualityForRankOne) {
  SeededRng rng(5, 0);
  for (int t = 0; t < 20; ++t) {
    const DenseMatrix m = sample_gaussian_matrix(8, 6, 1.0, rng);
    EXPECT_LE(spectral_norm(m), m.norm() * (1.0 + 1e-12));
    const DenseMatrix outer = sample_gaussian_vector(8, 1.0, rng) * sample_gaussian_vector(6, 1.0, rng).transpose();
    EXPECT_NEAR(spectral_norm(outer, 1e-12), outer.norm(), 1e-9 * outer.norm());
    EXPECT_LT(spectral_norm(m), m.norm() * (1.0 - 1e-6));
  }
}

TEST(SeededRng, SameSeedSameDraw) {
  SeededRng a(99, 4);
  SeededRng b(99, 4);
  EXPECT_EQ(sample_gaussian_matrix(1, 1, 1.0, a)(0, 0), sample_gaussian_matrix(1, 1, 1.0, b)(0, 0));
}

TEST(SeededRng, FrozenFirstDraws) {
  // Values frozen from this implementation (mt19937_64 + splitmix keying).
  SeededRng rng(0, 0);
  const std::uint64_t first = rng.next_u64();
  SeededRng again(0, 0);
  EXPECT_EQ(again.next_u64(), first);
  std::mt19937_64 engine(hash64(0, 0));
  EXPECT_EQ(engine(), first);
}

TEST(SeededRng, StreamsDiffer) {
  SeededRng a(7, 1);
  SeededRng b(7, 2);
  const DenseMatrix ma = sample_gaussian_matrix(4, 4, 1.0, a);
  const DenseMatrix mb = sample_gaussian_matrix(4, 4, 1.0, b);
  EXPECT_GT(max_abs(ma - mb), 0.0);
}

TEST(SeededRng, GaussianMoments) {
  SeededRng rng(123, 0);
  const DenseMatrix m = sample_gaussian_matrix(1000, 1000, 0.25, rng);
  const double mean = m.mean();
  const double var = (m.array() - mean).square().sum() / static_cast<double>(m.size() - 1);
  EXPECT_LT(std::abs(mean), 3e-3);
  EXPECT_LT(std::abs(var - 0.25), 0.02 * 0.25);
}

TEST(SeededRng, UniformAndBelow) {
  SeededRng rng(1, 1);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 50000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ++counts[rng.below(5)];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
  EXPECT_THROW(rng.below(0), ArgumentError);
}

TEST(HaarFrame, Orthonormal) {
  SeededRng rng(8, 0);
  const DenseMatrix q = sample_haar_frame(2, 2, rng);
  EXPECT_LT(max_abs(q.transpose() * q - DenseMatrix::Identity(2, 2)), 1e-12);
}

TEST(HaarFrame, Reproducible) {
  SeededRng a(8, 5);
  SeededRng b(8, 5);
  EXPECT_EQ(max_abs(sample_haar_frame(5, 2, a) - sample_haar_frame(5, 2, b)), 0.0);
}

TEST(HaarFrame, RejectsWideFrame) {
  SeededRng rng(0, 0);
  EXPECT_THROW(sample_haar_frame(2, 3, rng), ArgumentError);
}

TEST(HaarFrame, ProjectorMeanIsScaledIdentity) {
  SeededRng rng(77, 0);
  DenseMatrix acc = DenseMatrix::Zero(6, 6);
  for (int t = 0; t < 2000; ++t) {
    const DenseMatrix q = sample_haar_frame(6, 2, rng);
    acc += q * q.transpose();
  }
  acc /= 2000.0;
  EXPECT_LT(max_abs(acc - (2.0 / 6.0) * DenseMatrix::Identity(6, 6)), 0.02);
}

TEST(ProjectOntoRange, Identity) {
  SeededRng rng(1, 2);
  const DenseMatrix m = sample_gaussian_matrix(4, 3, 1.0, rng);
  EXPECT_LT(max_abs(project_onto_range(DenseMatrix::Identity(4, 4), m) - m), 1e-15);
}

TEST(ProjectOntoRange, CoordinateAxis) {
  DenseMatrix q = DenseMatrix::Zero(3, 1);
  q(0, 0) = 1.0;
  DenseMatrix m(3, 1);
  m << 1, 2, 3;
  const DenseMatrix p = project_onto_range(q, m);
  EXPECT_DOUBLE_EQ(p(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(p(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(p(2, 0), 0.0);
}

TEST(ProjectOntoRange, ResidualOrthogonalIdempotentSelfAdjoint) {
  SeededRng rng(4, 4);
  const DenseMatrix q = sample_haar_frame(12, 4, rng);
  const DenseMatrix m = sample_gaussian_matrix(12, 5, 1.0, rng);
  const DenseMatrix pm = project_onto_range(q, m);
  EXPECT_LE((q.transpose() * (m - pm)).norm(), 1e-10);
  EXPECT_LE(max_abs(project_onto_range(q, pm) - pm), 1e-12);
  const Vector x = sample_gaussian_vector(12, 1.0, rng);
  const Vector y = sample_gaussian_vector(12, 1.0, rng);
  const double lhs = Vector(project_onto_range(q, x)).dot(y);
  const double rhs = x.dot(Vector(project_onto_range(q, y)));
  EXPECT_NEAR(lhs, rhs, 1e-10);
}

TEST(ProjectOntoRange, DimensionMismatch) {
  EXPECT_THROW(project_onto_range(DenseMatrix::Identity(3, 3), DenseMatrix::Ones(2, 2)), ArgumentError);
}

TEST(DenseText, RoundTripsExactly) {
  SeededRng rng(6, 6);
  const DenseMatrix m = sample_gaussian_matrix(4, 3, 1.0, rng);
  std::stringstream ss;
  write_dense_matrix(ss, m);
  const std::string first_line = ss.str().substr(0, ss.str().find('\n'));
  EXPECT_EQ(first_line, "4 3");
  const DenseMatrix back = read_dense_matrix(ss);
  EXPECT_EQ(max_abs(back - m), 0.0);
}

TEST(DenseText, RejectsTruncatedInput) {
  std::stringstream ss("2 2\n1 2\n3\n");
  EXPECT_THROW(read_dense_matrix(ss), ArgumentError);
}

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>

#include "subsketch/errors.hpp"

namespace subsketch {

using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kDefaultRankTolerance = 1e-10;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash64(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (b + 0x632be59bd9b4e019ULL + (a << 6) + (a >> 2)));
}

inline std::uint64_t hash64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return hash64(hash64(a, b), c);
}

/// mt19937_64 keyed by (seed, stream_id). The engine is bit-exact on every
/// conforming standard library; the variate transforms below are written out
/// because std:: distributions are implementation-defined.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed = 0, std::uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id), engine_(hash64(seed, stream_id)) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  SeededRng substream(std::uint64_t tag) const { return SeededRng(seed_, hash64(stream_id_, tag)); }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Uniform integer in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound) {
    require(bound > 0, "below: bound must be positive");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % bound;
  }

  double rademacher() { return (engine_() >> 63) ? 1.0 : -1.0; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct ThinSvd {
  DenseMatrix u;   // p×r
  Vector singular_values;
  DenseMatrix vt;  // r×q
  double rank_tolerance = kDefaultRankTolerance;

  Index rank() const { return singular_values.size(); }
  DenseMatrix reconstruct() const { return u * singular_values.asDiagonal() * vt; }
};

inline bool all_finite(const DenseMatrix& m) { return m.allFinite(); }

inline ThinSvd thin_svd(const DenseMatrix& m, double rank_tolerance = kDefaultRankTolerance) {
  require(m.rows() > 0 && m.cols() > 0, "thin_svd: empty matrix");
  require(m.allFinite(), "thin_svd: non-finite entries");
  require(rank_tolerance >= 0.0 && rank_tolerance < 1.0, "thin_svd: rank_tolerance outside [0, 1)");

  Eigen::BDCSVD<DenseMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    throw ConvergenceError("thin_svd: SVD iteration did not converge", 0,
                           std::numeric_limits<double>::quiet_NaN());
  }
  const Vector& sigma = svd.singularValues();
  const double top = sigma.size() > 0 ? sigma(0) : 0.0;
  Index r = 0;
  if (top > 0.0) {
    while (r < sigma.size() && sigma(r) > rank_tolerance * top) ++r;
  }
  ThinSvd out;
  out.rank_tolerance = rank_tolerance;
  out.u = svd.matrixU().leftCols(r);
  out.singular_values = sigma.head(r);
  out.vt = svd.matrixV().leftCols(r).transpose();
  return out;
}

struct SpectralNormOptions {
  double tol = 1e-10;
  Index max_iters = 10000;
  std::uint64_t seed = 0x5eedULL;
  std::uint64_t stream_id = 0;
};

/// Power iteration on MᵀM; stops once successive Rayleigh quotients agree to tol.
inline double spectral_norm(const DenseMatrix& m, const SpectralNormOptions& opts = {}) {
  require(opts.tol > 0.0, "spectral_norm: tol must be positive");
  require(m.allFinite(), "spectral_norm: non-finite entries");
  if (m.size() == 0) return 0.0;

  SeededRng rng(opts.seed, opts.stream_id);
  Vector v(m.cols());
  for (Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
  v.normalize();

  double previous = -1.0;
  for (Index it = 0; it < opts.max_iters; ++it) {
    const Vector mv = m * v;
    const double rayleigh = mv.squaredNorm();
    if (rayleigh == 0.0) return 0.0;
    if (previous >= 0.0 && std::abs(rayleigh - previous) < opts.tol * rayleigh) return std::sqrt(rayleigh);
    previous = rayleigh;
    v = m.transpose() * mv;
    v /= v.norm();
  }
  throw ConvergenceError("spectral_norm: Rayleigh quotient did not stabilize", opts.max_iters,
                         std::sqrt(std::max(previous, 0.0)));
}

inline double spectral_norm(const DenseMatrix& m, double tol, Index max_iters = 10000) {
  SpectralNormOptions opts;
  opts.tol = tol;
  opts.max_iters = max_iters;
  return spectral_norm(m, opts);
}

/// spectral_norm for residual matrices: a roundoff-level residual has no spectral gap to
/// converge on, so hitting the cap is accepted when the last iterate is below 1e-8·reference.
inline double residual_spectral_norm(const DenseMatrix& m, double reference, double tol = 1e-12) {
  SpectralNormOptions opts;
  opts.tol = tol;
  try {
    return spectral_norm(m, opts);
  } catch (const ConvergenceError& e) {
    if (e.last_value() <= 1e-8 * reference) return e.last_value();
    throw;
  }
}

/// Entries filled in row-major order so the draw sequence is layout independent.
inline DenseMatrix sample_gaussian_matrix(Index rows, Index cols, double variance, SeededRng& rng) {
  require(variance > 0.0, "sample_gaussian_matrix: variance must be positive");
  require(rows >= 0 && cols >= 0, "sample_gaussian_matrix: negative shape");
  const double scale = std::sqrt(variance);
  DenseMatrix out(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) out(i, j) = scale * rng.normal();
  return out;
}

inline Vector sample_gaussian_vector(Index size, double variance, SeededRng& rng) {
  return sample_gaussian_matrix(size, 1, variance, rng).col(0);
}

inline DenseMatrix sample_haar_frame(Index p, Index r, SeededRng& rng) {
  require(r <= p, "sample_haar_frame: r exceeds p");
  require(r >= 0, "sample_haar_frame: negative r");
  const DenseMatrix g = sample_gaussian_matrix(p, r, 1.0, rng);
  Eigen::HouseholderQR<DenseMatrix> qr(g);
  DenseMatrix q = qr.householderQ() * DenseMatrix::Identity(p, r);
  const DenseMatrix& packed = qr.matrixQR();
  for (Index j = 0; j < r; ++j) {
    if (packed(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

inline DenseMatrix project_onto_range(const DenseMatrix& q, const DenseMatrix& m) {
  require(q.rows() == m.rows(), "project_onto_range: row counts differ");
  if (q.cols() == 0) return DenseMatrix::Zero(m.rows(), m.cols());
  return q * (q.transpose() * m);
}

inline DenseMatrix orthonormal_basis(const DenseMatrix& m, double rank_tolerance = kDefaultRankTolerance) {
  if (m.size() == 0) return DenseMatrix(m.rows(), 0);
  return thin_svd(m, rank_tolerance).u;
}

inline void write_dense_matrix(std::ostream& os, const DenseMatrix& m) {
  os << m.rows() << ' ' << m.cols() << '\n';
  std::ostringstream line;
  line << std::setprecision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    line.str("");
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) line << ' ';
      line << m(i, j);
    }
    os << line.str() << '\n';
  }
}

inline DenseMatrix read_dense_matrix(std::istream& is) {
  long long rows = -1;
  long long cols = -1;
  if (!(is >> rows >> cols) || rows < 0 || cols < 0) throw ArgumentError("read_dense_matrix: bad header");
  DenseMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) {
      std::string token;
      if (!(is >> token)) throw ArgumentError("read_dense_matrix: truncated data");
      std::size_t used = 0;
      m(i, j) = std::stod(token, &used);
      if (used != token.size()) throw ArgumentError("read_dense_matrix: bad entry '" + token + "'");
    }
  if (!m.allFinite()) throw ArgumentError("read_dense_matrix: non-finite entry");
  return m;
}

}  // namespace subsketch

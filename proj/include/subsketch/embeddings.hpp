#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "subsketch/numkit.hpp"

namespace subsketch {

enum class EmbeddingKind { ObliviousGaussian, ObliviousSRHT, ColumnSubsample, AdaptiveGaussian, AdaptiveSRHT };

inline bool is_adaptive(EmbeddingKind kind) {
  return kind == EmbeddingKind::AdaptiveGaussian || kind == EmbeddingKind::AdaptiveSRHT ||
         kind == EmbeddingKind::ColumnSubsample;
}

inline std::string to_string(EmbeddingKind kind) {
  switch (kind) {
    case EmbeddingKind::ObliviousGaussian: return "gaussian";
    case EmbeddingKind::ObliviousSRHT: return "srht";
    case EmbeddingKind::ColumnSubsample: return "nystrom";
    case EmbeddingKind::AdaptiveGaussian: return "adaptive-gaussian";
    case EmbeddingKind::AdaptiveSRHT: return "adaptive-srht";
  }
  return "unknown";
}

struct EmbeddingSpec {
  EmbeddingKind kind = EmbeddingKind::AdaptiveGaussian;
  Index m = 1;
  Index q = 0;  // power iterations, adaptive kinds only
  SeededRng rng{};

  void validate() const {
    require(m >= 1, "EmbeddingSpec: m must be at least 1");
    require(q >= 0, "EmbeddingSpec: q must be nonnegative");
    require(q == 0 || is_adaptive(kind), "EmbeddingSpec: power q only applies to adaptive kinds");
  }
};

struct Sketch {
  DenseMatrix s;     // d×m
  DenseMatrix q_s;   // d×r, orthonormal columns spanning range(s)
  DenseMatrix a_qs;  // n×r
  EmbeddingSpec spec;

  Index rank() const { return q_s.cols(); }
};

inline Index next_power_of_two(Index p) {
  Index out = 1;
  while (out < p) out <<= 1;
  return out;
}

/// Orthonormal Walsh–Hadamard transform in place; size must be a power of two.
inline void fwht(double* x, Index size) {
  const double scale = 1.0 / std::sqrt(2.0);
  for (Index half = 1; half < size; half <<= 1) {
    for (Index start = 0; start < size; start += 2 * half) {
      for (Index i = start; i < start + half; ++i) {
        const double a = x[i];
        const double b = x[i + half];
        x[i] = (a + b) * scale;
        x[i + half] = (a - b) * scale;
      }
    }
  }
}

inline void fwht(Vector& x) {
  require(x.size() == next_power_of_two(x.size()), "fwht: length must be a power of two");
  fwht(x.data(), x.size());
}

/// Draws m distinct indices from [0, p) by a partial Fisher–Yates shuffle.
inline std::vector<Index> sample_without_replacement(Index p, Index m, SeededRng& rng) {
  require(m <= p, "sample_without_replacement: m exceeds population");
  std::vector<Index> pool(static_cast<std::size_t>(p));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < m; ++i) {
    const Index j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(p - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(m));
  return pool;
}

/// Returns M·S with S = √(p̃/m)·D·H·R acting on the zero-padded columns of M.
inline DenseMatrix apply_srht(const DenseMatrix& m_in, Index m, SeededRng& rng) {
  const Index p = m_in.cols();
  const Index padded = next_power_of_two(std::max<Index>(p, 1));
  require(m >= 1 && m <= padded, "apply_srht: m must lie in [1, padded width]");

  Vector signs(padded);
  for (Index i = 0; i < padded; ++i) signs(i) = rng.rademacher();
  const std::vector<Index> picked = sample_without_replacement(padded, m, rng);

  // Each row of M becomes a contiguous column of the work buffer.
  DenseMatrix work = DenseMatrix::Zero(padded, m_in.rows());
  work.topRows(p) = m_in.transpose();
  work = signs.asDiagonal() * work;
  for (Index c = 0; c < work.cols(); ++c) fwht(work.col(c).data(), padded);

  const double scale = std::sqrt(static_cast<double>(padded) / static_cast<double>(m));
  DenseMatrix out(m_in.rows(), m);
  for (Index j = 0; j < m; ++j) out.col(j) = scale * work.row(picked[static_cast<std::size_t>(j)]).transpose();
  return out;
}

inline DenseMatrix materialize_srht(Index p, Index m, SeededRng& rng) {
  return apply_srht(DenseMatrix::Identity(p, p), m, rng);
}

inline DenseMatrix build_oblivious_gaussian(Index d, const EmbeddingSpec& spec) {
  spec.validate();
  SeededRng rng = spec.rng;
  return sample_gaussian_matrix(d, spec.m, 1.0 / static_cast<double>(spec.m), rng);
}

inline DenseMatrix build_oblivious_srht(Index d, const EmbeddingSpec& spec) {
  spec.validate();
  SeededRng rng = spec.rng;
  return materialize_srht(d, spec.m, rng);
}

inline DenseMatrix build_column_subsample(Index n, Index m, SeededRng& rng) {
  require(m <= n, "build_column_subsample: m exceeds n");
  const std::vector<Index> picked = sample_without_replacement(n, m, rng);
  DenseMatrix out = DenseMatrix::Zero(n, m);
  for (Index j = 0; j < m; ++j) out(picked[static_cast<std::size_t>(j)], j) = 1.0;
  return out;
}

/// The oblivious n×m factor S̃ of an adaptive spec, materialized.
inline DenseMatrix draw_adaptive_base(Index n, const EmbeddingSpec& spec) {
  spec.validate();
  SeededRng rng = spec.rng;
  switch (spec.kind) {
    case EmbeddingKind::AdaptiveGaussian:
      return sample_gaussian_matrix(n, spec.m, 1.0 / static_cast<double>(spec.m), rng);
    case EmbeddingKind::AdaptiveSRHT: return materialize_srht(n, spec.m, rng);
    case EmbeddingKind::ColumnSubsample: return build_column_subsample(n, spec.m, rng);
    default: throw ArgumentError("draw_adaptive_base: spec is not adaptive");
  }
}

/// (AᵀA)^q Aᵀ S̃ by alternating products; AᵀA is never formed.
inline DenseMatrix power_refine(const DenseMatrix& a, DenseMatrix s, Index q) {
  for (Index i = 0; i < q; ++i) {
    const DenseMatrix as = a * s;
    s.noalias() = a.transpose() * as;
  }
  return s;
}

inline DenseMatrix build_adaptive_from_base(const DenseMatrix& a, const DenseMatrix& s_tilde, Index q) {
  require(s_tilde.rows() == a.rows(), "build_adaptive_from_base: S̃ must have n rows");
  DenseMatrix s = a.transpose() * s_tilde;
  return power_refine(a, std::move(s), q);
}

inline DenseMatrix build_adaptive(const DenseMatrix& a, const EmbeddingSpec& spec) {
  spec.validate();
  require(is_adaptive(spec.kind), "build_adaptive: spec is not adaptive");
  SeededRng rng = spec.rng;
  DenseMatrix s;
  switch (spec.kind) {
    case EmbeddingKind::AdaptiveGaussian:
      s = a.transpose() * sample_gaussian_matrix(a.rows(), spec.m, 1.0 / static_cast<double>(spec.m), rng);
      break;
    case EmbeddingKind::AdaptiveSRHT: s = apply_srht(a.transpose(), spec.m, rng); break;
    default: {
      const std::vector<Index> picked = sample_without_replacement(a.rows(), spec.m, rng);
      s.resize(a.cols(), spec.m);
      for (Index j = 0; j < spec.m; ++j) s.col(j) = a.row(picked[static_cast<std::size_t>(j)]).transpose();
    }
  }
  return power_refine(a, std::move(s), spec.q);
}

/// Polar factor Q_S = U_S V_Sᵀ of S. A rank-deficient S yields the d×r basis U_S,
/// which parametrizes the same sketched program with a unique minimizer.
inline DenseMatrix whiten(const DenseMatrix& s, double rank_tolerance = kDefaultRankTolerance) {
  if (s.size() == 0 || s.isZero(0.0)) throw DegenerateSketch("whiten: sketch is zero");
  const ThinSvd svd = thin_svd(s, rank_tolerance);
  if (svd.rank() < s.cols()) return svd.u;
  return svd.u * svd.vt;
}

inline Sketch assemble_sketch(const DenseMatrix& a, DenseMatrix s, const EmbeddingSpec& spec,
                              double rank_tolerance = kDefaultRankTolerance) {
  Sketch out;
  out.q_s = whiten(s, rank_tolerance);
  out.a_qs = a * out.q_s;
  out.s = std::move(s);
  out.spec = spec;
  return out;
}

inline Sketch make_sketch(const DenseMatrix& a, const EmbeddingSpec& spec,
                          double rank_tolerance = kDefaultRankTolerance) {
  spec.validate();
  DenseMatrix s;
  switch (spec.kind) {
    case EmbeddingKind::ObliviousGaussian: s = build_oblivious_gaussian(a.cols(), spec); break;
    case EmbeddingKind::ObliviousSRHT: s = build_oblivious_srht(a.cols(), spec); break;
    default: s = build_adaptive(a, spec);
  }
  return assemble_sketch(a, std::move(s), spec, rank_tolerance);
}

/// ‖(I − Q Qᵀ) Aᵀ‖₂.
inline double projection_residual_norm(const DenseMatrix& a, const DenseMatrix& q_s, double tol = 1e-12) {
  DenseMatrix residual = a.transpose();
  if (q_s.cols() > 0) {
    require(q_s.rows() == a.cols(), "projection_residual_norm: dimension mismatch");
    const DenseMatrix coeffs = q_s.transpose() * residual;
    residual.noalias() -= q_s * coeffs;
  }
  return residual_spectral_norm(residual, a.norm(), tol);
}

}  // namespace subsketch

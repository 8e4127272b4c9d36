#pragma once

#include "subsketch/numkit.hpp"

namespace subsketch {

/// Nonzero singular values σ₁ ≥ … ≥ σ_ρ of an n×d matrix.
struct SpectralSummary {
  Vector singular_values;
  Index n = 0;
  Index d = 0;

  Index rank() const { return singular_values.size(); }

  // σ_j with the convention σ_j = 0 beyond the rank; j is 1-based.
  double sigma(Index j) const { return j >= 1 && j <= rank() ? singular_values(j - 1) : 0.0; }

  static SpectralSummary of(const DenseMatrix& a, double rank_tolerance = kDefaultRankTolerance) {
    SpectralSummary s;
    s.n = a.rows();
    s.d = a.cols();
    s.singular_values = thin_svd(a, rank_tolerance).singular_values;
    return s;
  }

  void validate() const {
    for (Index i = 0; i < rank(); ++i) {
      require(singular_values(i) > 0.0, "SpectralSummary: singular values must be positive");
      require(i == 0 || singular_values(i) <= singular_values(i - 1), "SpectralSummary: singular values must be nonincreasing");
    }
  }
};

}  // namespace subsketch

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "subsketch/embeddings.hpp"
#include "subsketch/estimators.hpp"
#include "subsketch/losses.hpp"
#include "subsketch/solvers.hpp"

namespace subsketch {

struct GramMatrix {
  DenseMatrix k;
  double psd_tolerance = 1e-10;

  Index n() const { return k.rows(); }
};

inline GramMatrix make_gram(DenseMatrix k, double psd_tolerance = 1e-10) {
  require(k.rows() == k.cols(), "gram: matrix must be square");
  GramMatrix g;
  g.k = 0.5 * (k + k.transpose());
  g.psd_tolerance = psd_tolerance;
  return g;
}

inline GramMatrix gram_from_features(const DenseMatrix& a) {
  require(a.size() > 0, "gram_from_features: empty matrix");
  return make_gram(a * a.transpose());
}

inline GramMatrix gram_gaussian_kernel(const DenseMatrix& x, double gamma) {
  require(gamma > 0.0, "gram_gaussian_kernel: gamma must be positive");
  const Index n = x.rows();
  DenseMatrix k(n, n);
  for (Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Index j = i + 1; j < n; ++j) {
      const double v = std::exp(-gamma * (x.row(i) - x.row(j)).squaredNorm());
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  GramMatrix g;
  g.k = std::move(k);
  return g;
}

/// K_h with K = K_h K_hᵀ from the eigendecomposition; eigenvalues below the PSD tolerance are clamped to 0.
inline DenseMatrix gram_square_root(const GramMatrix& gram) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(gram.k);
  if (eig.info() != Eigen::Success) throw ConvergenceError("gram_square_root: eigendecomposition failed", 0, 0.0);
  Vector values = eig.eigenvalues();
  const double top = std::max(values.maxCoeff(), 0.0);
  require(values.minCoeff() >= -gram.psd_tolerance * top, "gram_square_root: matrix is not positive semidefinite");
  for (Index i = 0; i < values.size(); ++i) values(i) = values(i) > gram.psd_tolerance * top ? std::sqrt(values(i)) : 0.0;
  return eig.eigenvectors() * values.asDiagonal();
}

struct KernelSolution {
  Vector alpha;          // α*_K of f(KS̃α) + (λ/2)αᵀS̃ᵀKS̃α
  Vector alpha_dagger;   // whitened coordinates
  Vector image;          // KS̃α*_K
  SolveResult solve;
};

/// Touches only K, S̃ and the loss: the sketch K_hᵀS̃ is whitened and the
/// coefficients mapped back by the whitening change of variables.
inline KernelSolution solve_sketched_kernel(const GramMatrix& gram, const DenseMatrix& s_tilde, const SmoothLoss& loss,
                                            double lambda, const SolveOptions& opts = {}) {
  require(lambda > 0.0, "solve_sketched_kernel: lambda must be positive");
  require(s_tilde.rows() == gram.n(), "solve_sketched_kernel: S̃ must have n rows");
  const DenseMatrix k_h = gram_square_root(gram);
  const DenseMatrix s = k_h.transpose() * s_tilde;
  const DenseMatrix q = whiten(s);
  const DenseMatrix factor = k_h * q;
  KernelSolution out;
  out.solve = solve_sketched(factor, loss, lambda, opts);
  out.alpha_dagger = out.solve.minimizer;
  out.alpha = unwhiten_coefficients(s, out.alpha_dagger);
  out.image = factor * out.alpha_dagger;
  return out;
}

inline Vector kernel_zero_order(const DenseMatrix& s_tilde, const Vector& alpha) { return s_tilde * alpha; }

/// ŵ¹ = −(1/λ)∇f(KS̃α).
inline Vector kernel_first_order(const GramMatrix& gram, const DenseMatrix& s_tilde, const Vector& alpha,
                                 const SmoothLoss& loss, double lambda) {
  require(lambda > 0.0, "kernel_first_order: lambda must be positive");
  return -loss.gradient(gram.k * (s_tilde * alpha)) / lambda;
}

inline double rkhs_distance(const GramMatrix& gram, const Vector& w, const Vector& v) {
  const Vector diff = w - v;
  return std::sqrt(std::max(diff.dot(gram.k * diff), 0.0));
}

/// ψ(x) = √(2/D)·cos(Wx + u), W ~ N(0, 2γI), u ~ U[0, 2π).
inline DenseMatrix rff_features(const DenseMatrix& x, Index feature_count, double gamma, SeededRng& rng) {
  require(feature_count >= 1, "rff_features: feature count must be positive");
  require(gamma > 0.0, "rff_features: gamma must be positive");
  const DenseMatrix w = sample_gaussian_matrix(feature_count, x.cols(), 2.0 * gamma, rng);
  Vector phase(feature_count);
  for (Index j = 0; j < feature_count; ++j) phase(j) = 2.0 * std::numbers::pi * rng.uniform();
  DenseMatrix out = x * w.transpose();
  out.rowwise() += phase.transpose();
  return std::sqrt(2.0 / static_cast<double>(feature_count)) * out.array().cos().matrix();
}

}  // namespace subsketch

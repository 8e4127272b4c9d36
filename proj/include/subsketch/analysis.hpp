#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "subsketch/embeddings.hpp"
#include "subsketch/estimators.hpp"
#include "subsketch/spectrum.hpp"
#include "subsketch/synth.hpp"

namespace subsketch {

/// R_δ = σ_{k+1} + √(Σ_{j>k} σ_j² / k), k = ⌊δ⌋.
inline double spectral_residual(const SpectralSummary& summary, double delta) {
  const Index k = static_cast<Index>(std::floor(delta));
  require(k >= 1, "spectral_residual: floor(delta) must be at least 1");
  double tail = 0.0;
  for (Index j = summary.rank(); j > k; --j) tail += summary.sigma(j) * summary.sigma(j);
  return summary.sigma(k + 1) + std::sqrt(tail / static_cast<double>(k));
}

/// Σ_j σ_j²/(c + σ_j²) divided by σ₁²/(c + σ₁²).
inline double effective_dimension(const SpectralSummary& summary, double c) {
  require(c > 0.0, "effective_dimension: c must be positive");
  if (summary.rank() == 0) return 0.0;
  double trace = 0.0;
  for (Index j = summary.rank(); j >= 1; --j) {
    const double s2 = summary.sigma(j) * summary.sigma(j);
    trace += s2 / (c + s2);
  }
  const double top = summary.sigma(1) * summary.sigma(1);
  return trace / (top / (c + top));
}

/// Smallest k ≥ 1 with σ²k/n ≥ σ²_{k+1}.
inline Index statistical_dimension(const SpectralSummary& summary, double noise_variance, Index n) {
  require(noise_variance > 0.0, "statistical_dimension: noise variance must be positive");
  require(n >= 1, "statistical_dimension: n must be positive");
  const double level = noise_variance / static_cast<double>(n);
  for (Index k = 1;; ++k) {
    const double next = summary.sigma(k + 1);
    if (level * static_cast<double>(k) >= next * next) return k;
  }
}

struct ConditionNumbers {
  double kappa = 1.0;
  double kappa_dagger = 1.0;
};

/// Quadratic-loss condition numbers of the full program and of the whitened sketched program.
inline ConditionNumbers condition_numbers(const DenseMatrix& a, const DenseMatrix& q_s, double lambda) {
  require(lambda > 0.0, "condition_numbers: lambda must be positive");
  auto extreme_eigs = [](const DenseMatrix& gram) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(gram, Eigen::EigenvaluesOnly);
    const Vector& ev = eig.eigenvalues();
    return std::pair<double, double>{std::max(ev(ev.size() - 1), 0.0), std::max(ev(0), 0.0)};
  };
  ConditionNumbers out;
  const auto [top, bottom] = extreme_eigs(a.transpose() * a);
  out.kappa = (lambda + top) / (lambda + (a.cols() > a.rows() ? 0.0 : bottom));
  if (q_s.cols() > 0) {
    const DenseMatrix aq = a * q_s;
    const auto [top_s, bottom_s] = extreme_eigs(aq.transpose() * aq);
    out.kappa_dagger = (lambda + top_s) / (lambda + (q_s.cols() > a.rows() ? 0.0 : bottom_s));
  }
  return out;
}

struct RiskEstimate {
  double mc_risk = 0.0;
  double analytic_limit = 0.0;
  double variance_term = 0.0;
  double residual = 0.0;  // ‖P_{AS}^⊥ A‖₂
  Index sketch_rank = 0;
};

/// Monte-Carlo prediction risk of x̂⁰ for b = A x_pl + w, maximized over a fixed set of unit
/// directions: the top three right singular vectors of A, the top right singular vector of
/// P_{AS}^⊥A, and five random unit vectors. Noise draws are shared across directions.
inline RiskEstimate risk_zero_order(const DenseMatrix& a, const EmbeddingSpec& spec, double noise_variance,
                                    double lambda, Index trials, SeededRng& rng) {
  require(trials >= 1, "risk_zero_order: trials must be positive");
  require(noise_variance > 0.0, "risk_zero_order: noise variance must be positive");
  const Index n = a.rows();
  const Sketch sketch = make_sketch(a, spec);
  const DenseMatrix& b_mat = sketch.a_qs;

  RiskEstimate out;
  const DenseMatrix basis = orthonormal_basis(b_mat);
  out.sketch_rank = basis.cols();
  const DenseMatrix resid = a - project_onto_range(basis, a);
  out.residual = residual_spectral_norm(resid, a.norm());
  out.variance_term = noise_variance * static_cast<double>(out.sketch_rank) / static_cast<double>(n);
  out.analytic_limit = out.variance_term + out.residual * out.residual;

  // A x̂⁰ = M b with M = B (BᵀB + λI)⁻¹ Bᵀ.
  DenseMatrix gram = b_mat.transpose() * b_mat;
  gram.diagonal().array() += lambda;
  const DenseMatrix m_op = b_mat * Eigen::LLT<DenseMatrix>(gram).solve(b_mat.transpose());

  std::vector<Vector> directions;
  const ThinSvd svd_a = thin_svd(a);
  for (Index j = 0; j < std::min<Index>(3, svd_a.rank()); ++j) directions.push_back(svd_a.vt.row(j).transpose());
  const ThinSvd svd_r = thin_svd(resid, 0.0);
  if (svd_r.rank() > 0) directions.push_back(svd_r.vt.row(0).transpose());
  for (int j = 0; j < 5; ++j) {
    Vector v = sample_gaussian_vector(a.cols(), 1.0, rng);
    directions.push_back(v / v.norm());
  }

  std::vector<Vector> bias;
  for (const Vector& x : directions) {
    const Vector ax = a * x;
    bias.push_back(m_op * ax - ax);
  }
  std::vector<double> totals(directions.size(), 0.0);
  const double noise_sd = std::sqrt(noise_variance / static_cast<double>(n));
  for (Index t = 0; t < trials; ++t) {
    const Vector noise = noise_sd * sample_gaussian_vector(n, 1.0, rng);
    const Vector mw = m_op * noise;
    for (std::size_t k = 0; k < directions.size(); ++k) totals[k] += (bias[k] + mw).squaredNorm();
  }
  out.mc_risk = *std::max_element(totals.begin(), totals.end()) / static_cast<double>(trials);
  return out;
}

/// Whether ‖P_{AS}^⊥A‖₂² ≤ σ²_{d_s+1}/2.
inline bool statistical_event_holds(const SpectralSummary& summary, Index d_s, double residual) {
  const double s = summary.sigma(d_s + 1);
  return residual * residual <= 0.5 * s * s;
}

struct LowerBoundCheck {
  double mean = 0.0;
  double standard_error = 0.0;
  double bound = 0.0;
  bool pass = false;
};

inline LowerBoundCheck one_sided_check(const std::vector<double>& samples, double bound) {
  LowerBoundCheck out;
  const double count = static_cast<double>(samples.size());
  for (double s : samples) out.mean += s;
  out.mean /= count;
  double var = 0.0;
  for (double s : samples) var += (s - out.mean) * (s - out.mean);
  var /= std::max(count - 1.0, 1.0);
  out.standard_error = std::sqrt(var / count);
  out.bound = bound;
  out.pass = out.mean >= bound - 3.0 * out.standard_error;
  return out;
}

/// Quadratic loss with b = u₁ (so x* ∝ v₁), oblivious Gaussian sketches; compares the mean
/// of rel_err_x1² with (1 − m/d)³σ₁⁴/(σ₁² + 2λ/γ)².
inline LowerBoundCheck aligned_lower_bound_check(const DenseMatrix& a, double lambda, double gamma, Index m, Index trials,
                                               SeededRng& rng) {
  const ThinSvd svd = thin_svd(a);
  const Vector b = svd.u.col(0);
  const SmoothLoss loss = SmoothLoss::quadratic(b);
  const Reference ref = reference_solution(a, loss, lambda);
  const double d = static_cast<double>(a.cols());
  const double s1 = svd.singular_values(0);
  const double bound = std::pow(1.0 - static_cast<double>(m) / d, 3.0) * std::pow(s1, 4.0) /
                       std::pow(s1 * s1 + 2.0 * lambda / gamma, 2.0);
  std::vector<double> samples;
  RecoveryOptions opts;
  opts.compute_residual = false;
  for (Index t = 0; t < trials; ++t) {
    EmbeddingSpec spec{EmbeddingKind::ObliviousGaussian, m, 0, SeededRng(rng.seed(), hash64(rng.stream_id(), t))};
    const RecoveryReport rep = recover_sketched(a, loss, lambda, spec, ref, opts);
    samples.push_back(rep.rel_err_x1 * rep.rel_err_x1);
  }
  return one_sided_check(samples, bound);
}

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least squares on (log m, log error).
inline SlopeFit loglog_slope_fit(const std::vector<double>& ms, const std::vector<double>& errors) {
  require(ms.size() == errors.size() && ms.size() >= 3, "loglog_slope_fit: need at least three points");
  const std::size_t k = ms.size();
  std::vector<double> x(k);
  std::vector<double> y(k);
  for (std::size_t i = 0; i < k; ++i) {
    require(ms[i] > 0.0 && errors[i] > 0.0, "loglog_slope_fit: inputs must be positive");
    x[i] = std::log(ms[i]);
    y[i] = std::log(errors[i]);
  }
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  require(sxx > 0.0, "loglog_slope_fit: sketch sizes must not all coincide");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

}  // namespace subsketch

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "subsketch/analysis.hpp"
#include "subsketch/estimators.hpp"
#include "subsketch/harness/experiments.hpp"
#include "subsketch/kernelize.hpp"
#include "subsketch/synth.hpp"

using namespace subsketch;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

// ---------------------------------------------------------------------------
// Oracles

/// R_k from a known spectrum: σ_{k+1} + √(Σ_{j>k} σ_j² / k).
double spectral_residual_oracle(const Vector& sigma, Index k) {
  double tail = 0.0;
  for (Index j = k; j < sigma.size(); ++j) tail += sigma(j) * sigma(j);
  const double next = k < sigma.size() ? sigma(k) : 0.0;
  return next + std::sqrt(tail / static_cast<double>(k));
}

/// ‖(I − QQᵀ)Aᵀ‖₂ through the eigenvalues of the smaller Gram matrix.
double residual_oracle(const DenseMatrix& a, const DenseMatrix& q) {
  const DenseMatrix r = a.transpose() - q * (q.transpose() * a.transpose());
  const DenseMatrix gram = r.rows() <= r.cols() ? DenseMatrix(r * r.transpose()) : DenseMatrix(r.transpose() * r);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(eig.eigenvalues().maxCoeff(), 0.0));
}

/// Orthonormal basis of range(M) from a full-pivot QR, independent of the SVD path.
DenseMatrix basis_oracle(const DenseMatrix& m) {
  Eigen::ColPivHouseholderQR<DenseMatrix> qr(m);
  qr.setThreshold(1e-10);
  return qr.householderQ() * DenseMatrix::Identity(m.rows(), qr.rank());
}

double smoothness_of(const SmoothLoss& loss) {
  switch (loss.kind()) {
    case SmoothKind::Quadratic: return 1.0;
    case SmoothKind::Logistic: return 0.25 / static_cast<double>(loss.n());
    case SmoothKind::ReluType: return 1.0 / static_cast<double>(loss.n());
  }
  return 0.0;
}

Vector exp_spectrum(Index n, Index rho, double nu) {
  Vector s(rho);
  for (Index j = 0; j < rho; ++j) s(j) = std::sqrt(static_cast<double>(n)) * std::exp(-0.5 * nu * static_cast<double>(j + 1));
  return s;
}

struct SmoothInstance {
  DenseMatrix a;
  std::vector<SmoothLoss> losses;  // quadratic, logistic, relu
};

SmoothInstance smooth_instance(Index n, Index d, const SpectrumSpec& spec, std::uint64_t seed) {
  SeededRng rng(seed, 0xacce97ULL);
  SmoothInstance out;
  out.a = synth_matrix(n, d, spec, rng).a;
  Vector x_pl = sample_gaussian_vector(d, 1.0, rng);
  x_pl /= x_pl.norm();
  out.losses.push_back(SmoothLoss::quadratic(synth_observation(out.a, x_pl, 1.0, rng)));
  const Vector y = synth_labels(n, rng);
  out.losses.push_back(SmoothLoss::logistic(y));
  out.losses.push_back(SmoothLoss::relu(y));
  return out;
}

SolveOptions tight() {
  SolveOptions o;
  o.grad_tolerance = 1e-12;
  o.max_iters = 500;
  return o;
}

// ---------------------------------------------------------------------------
// Criteria

constexpr Index kN1 = 200;
constexpr Index kD1 = 400;
constexpr double kNu1 = 0.2;
const std::vector<Index> kKs{8, 16, 32};

double gated_lambda(const SmoothLoss& loss, Index k) {
  const double r_k = spectral_residual_oracle(exp_spectrum(kN1, kN1, kNu1), k);
  return 2.0 * smoothness_of(loss) * (26.0 * r_k) * (26.0 * r_k) * 1.01;
}

EmbeddingSpec adaptive_gaussian(Index m, std::uint64_t seed, std::uint64_t stream) {
  return EmbeddingSpec{EmbeddingKind::AdaptiveGaussian, m, 0, SeededRng(seed, stream)};
}

Outcome first_order_certificate() {
  const auto start = std::chrono::steady_clock::now();
  int held = 0;
  int total = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SmoothInstance inst = smooth_instance(kN1, kD1, SpectrumSpec::exponential(kNu1), seed);
    for (Index k : kKs) {
      const EmbeddingSpec spec = adaptive_gaussian(2 * k, seed, 100 + static_cast<std::uint64_t>(k));
      const Sketch sketch = make_sketch(inst.a, spec);
      const double z = residual_oracle(inst.a, sketch.q_s);
      for (const SmoothLoss& loss : inst.losses) {
        const double lambda = gated_lambda(loss, k);
        const Reference ref = reference_solution(inst.a, loss, lambda, tight());
        RecoveryOptions opts;
        opts.solve = tight();
        opts.compute_residual = false;
        const RecoveryReport rep = recover_from_sketch(inst.a, sketch, loss, lambda, ref, opts);
        const double e0 = (rep.x0 - ref.x).norm() / ref.x.norm();
        const double e1 = (rep.x1 - ref.x).norm() / ref.x.norm();
        const double rhs = std::sqrt(smoothness_of(loss) / (2.0 * lambda)) * z * std::min(1.0, e0);
        ++total;
        if (rep.converged && e1 <= rhs) ++held;
        worst = std::max(worst, e1 / rhs);
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {held == total && secs < 120.0,
          std::to_string(held) + "/" + std::to_string(total) + " runs within the bound" +
              fmt(", worst ratio %.3g, %.1f s (limit 120 s)", worst, secs)};
}

Outcome residual_bound() {
  int held = 0;
  int total = 0;
  double worst = 0.0;
  const Vector sigma = exp_spectrum(kN1, kN1, kNu1);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const SmoothInstance inst = smooth_instance(kN1, kD1, SpectrumSpec::exponential(kNu1), seed);
    for (Index k : kKs) {
      const Sketch sketch = make_sketch(inst.a, adaptive_gaussian(2 * k, seed, 100 + static_cast<std::uint64_t>(k)));
      const double z = residual_oracle(inst.a, sketch.q_s);
      const double r_k = spectral_residual_oracle(sigma, k);
      ++total;
      if (z <= 26.0 * r_k) ++held;
      worst = std::max(worst, z / r_k);
    }
  }
  return {held == total, std::to_string(held) + "/" + std::to_string(total) + " sketches (50 seeds x k in {8,16,32})" +
                             fmt(", max Z/R_k %.3g (limit 26)", worst)};
}

Outcome srht_residual() {
  const Index n = 1024;
  const Index d = 512;
  const Index k = 8;
  const double formula = std::ceil(19.0 * std::pow(std::sqrt(8.0) + 4.0 * std::sqrt(std::log(1024.0)), 2.0) *
                                   std::log(8.0 * 1024.0));
  const Index m = std::min<Index>(n, static_cast<Index>(formula));
  SeededRng rng(3, 0);
  const SynthInstance inst = synth_matrix(n, d, SpectrumSpec::exponential(kNu1), rng);
  const double r_k = spectral_residual_oracle(inst.summary.singular_values, k);
  int held = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Sketch sketch = make_sketch(inst.a, EmbeddingSpec{EmbeddingKind::AdaptiveSRHT, m, 0, SeededRng(seed, 3)});
    const double z = residual_oracle(inst.a, sketch.q_s);
    if (z <= 5.0 * r_k) ++held;
    worst = std::max(worst, z / r_k);
  }
  return {held >= 47, std::to_string(held) + "/50 seeds" + fmt(", m = %.0f (formula %.0f, clamped to n), max Z/R_k %.3g",
                                                             static_cast<double>(m), formula, worst)};
}

Outcome iterative_contraction() {
  int steps = 0;
  int ratio_ok = 0;
  int cumulative_ok = 0;
  int cumulative_checked = 0;
  double worst_ratio = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SmoothInstance inst = smooth_instance(kN1, kD1, SpectrumSpec::exponential(kNu1), seed);
    for (Index k : kKs) {
      const EmbeddingSpec spec = adaptive_gaussian(2 * k, seed, 100 + static_cast<std::uint64_t>(k));
      const double z = residual_oracle(inst.a, make_sketch(inst.a, spec).q_s);
      const double r_k = spectral_residual_oracle(exp_spectrum(kN1, kN1, kNu1), k);
      for (const SmoothLoss& loss : inst.losses) {
        const double mu = smoothness_of(loss);
        const double lambda = gated_lambda(loss, k);
        const Reference ref = reference_solution(inst.a, loss, lambda, tight());
        RecoveryOptions opts;
        opts.solve = tight();
        opts.compute_residual = false;
        const auto reps = recover_iterative(inst.a, loss, lambda, spec, 5, ref, opts);
        const double limit = std::sqrt(mu * (26.0 * r_k) * (26.0 * r_k) / (2.0 * lambda)) + 0.05;
        double prev = 1.0;  // x̂₀ = 0
        for (std::size_t t = 0; t < reps.size(); ++t) {
          if (prev < 1e-10) break;
          const double e = reps[t].rel_err_x1;
          ++cumulative_checked;
          if (e <= std::pow(mu * z * z / (2.0 * lambda), 0.5 * static_cast<double>(t + 1))) ++cumulative_ok;
          if (t > 0) {
            ++steps;
            if (e / prev <= limit) ++ratio_ok;
            worst_ratio = std::max(worst_ratio, e / prev);
          }
          prev = e;
        }
      }
    }
  }
  return {ratio_ok == steps && cumulative_ok == cumulative_checked,
          std::to_string(ratio_ok) + "/" + std::to_string(steps) + " step ratios, " + std::to_string(cumulative_ok) +
              "/" + std::to_string(cumulative_checked) + " cumulative bounds" +
              fmt(", worst step ratio %.3g", worst_ratio)};
}

Outcome conditioning() {
  int violations = 0;
  double worst_gap = 0.0;
  SeededRng pick(5, 0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SeededRng rng(seed, 5);
    const DenseMatrix a = sample_gaussian_matrix(80, 120, 1.0, rng) *
                          generate_spectrum(SpectrumSpec::exponential(0.05), 120, 120).asDiagonal();
    const double lambda = std::pow(10.0, -3.0 + 4.0 * pick.uniform());
    const Sketch sketch = make_sketch(a, adaptive_gaussian(20, seed, 6));
    const ConditionNumbers c = condition_numbers(a, sketch.q_s, lambda);
    // Exact singular values; d > n and m ≤ n, so the smallest eigenvalue of AᵀA is 0.
    const Vector sv = Eigen::JacobiSVD<DenseMatrix>(a).singularValues();
    const Vector sv_s = Eigen::JacobiSVD<DenseMatrix>(a * sketch.q_s).singularValues();
    const double kappa = (lambda + sv(0) * sv(0)) / lambda;
    const double kappa_dagger = (lambda + sv_s(0) * sv_s(0)) / (lambda + sv_s(sv_s.size() - 1) * sv_s(sv_s.size() - 1));
    worst_gap = std::max({worst_gap, std::abs(c.kappa - kappa) / kappa, std::abs(c.kappa_dagger - kappa_dagger) / kappa_dagger});
    if (!(kappa_dagger <= kappa) || !(c.kappa_dagger <= c.kappa)) ++violations;
  }
  return {violations == 0 && worst_gap < 1e-8,
          std::to_string(violations) + " violations over 20 instances" +
              fmt(", library vs exact eigensolve rel gap %.2g", worst_gap)};
}

Outcome whitening_equivalence() {
  double worst0 = 0.0;
  double worst1 = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SmoothInstance inst = smooth_instance(100, 150, SpectrumSpec::exponential(0.1), 40 + seed);
    const SmoothLoss& loss = inst.losses[seed % 3];
    const double lambda = 1e-2;
    const Reference ref = reference_solution(inst.a, loss, lambda, tight());
    SeededRng rng(seed, 7);
    const DenseMatrix s = inst.a.transpose() * sample_gaussian_matrix(100, 12, 1.0 / 12.0, rng);
    // Unwhitened program with regularizer (λ/2)‖Sα‖².
    const SolveResult raw = solve_sketched_unwhitened(inst.a, s, loss, lambda, tight());
    const Vector x0 = s * raw.minimizer;
    const Vector x1 = -(inst.a.transpose() * loss.gradient(inst.a * x0)) / lambda;
    // Rescaled program on the whitened frame.
    const DenseMatrix q = whiten(s);
    const SolveResult white = solve_sketched(inst.a * q, loss, lambda, tight());
    const Vector x0d = q * white.minimizer;
    const Vector x1d = -(inst.a.transpose() * loss.gradient(inst.a * x0d)) / lambda;
    worst0 = std::max(worst0, (x0 - x0d).norm() / ref.x.norm());
    worst1 = std::max(worst1, (x1 - x1d).norm() / ref.x.norm());
  }
  return {worst0 <= 1e-6 && worst1 <= 1e-6, fmt("max gap x0 %.2g, x1 %.2g over 10 instances", worst0, worst1)};
}

Outcome oblivious_floor() {
  SeededRng rng(8, 0);
  const DenseMatrix a = synth_matrix(60, 200, SpectrumSpec::exponential(0.1), rng).a;
  const Vector b = sample_gaussian_vector(60, 1.0, rng);
  const double lambda = 1e-3;
  // Closed-form reference: x* = Aᵀ(AAᵀ + λI)⁻¹b.
  DenseMatrix k = a * a.transpose();
  k.diagonal().array() += lambda;
  const Vector x_star = a.transpose() * k.ldlt().solve(b);
  std::ostringstream os;
  bool all = true;
  for (EmbeddingKind kind : {EmbeddingKind::ObliviousGaussian, EmbeddingKind::ObliviousSRHT}) {
    for (Index m : {20, 50, 100}) {
      std::vector<double> samples;
      for (std::uint64_t seed = 0; seed < 500; ++seed) {
        const Sketch sketch = make_sketch(a, EmbeddingSpec{kind, m, 0, SeededRng(seed, 8 + static_cast<std::uint64_t>(m))});
        const DenseMatrix& aq = sketch.a_qs;
        DenseMatrix g = aq.transpose() * aq;
        g.diagonal().array() += lambda;
        const Vector alpha = g.ldlt().solve(aq.transpose() * b);
        const double e0 = (sketch.q_s * alpha - x_star).norm() / x_star.norm();
        samples.push_back(e0 * e0);
      }
      const LowerBoundCheck c = one_sided_check(samples, 1.0 - static_cast<double>(m) / 200.0);
      all = all && c.pass;
      os << to_string(kind) << " m=" << m << fmt(" mean %.3f vs %.3f; ", c.mean, c.bound);
    }
  }
  return {all, os.str()};
}

Outcome aligned_lower_bound() {
  const Index n = 60;
  const Index m = 15;
  const double lambda = 1e-3;
  SeededRng rng(9, 0);
  const DenseMatrix a = synth_matrix(n, n, SpectrumSpec::exponential(0.2), rng).a;
  Eigen::JacobiSVD<DenseMatrix> svd(a, Eigen::ComputeFullU);
  const Vector b = svd.matrixU().col(0);
  const double s1 = svd.singularValues()(0);
  DenseMatrix h = a.transpose() * a;
  h.diagonal().array() += lambda;
  const Vector x_star = h.ldlt().solve(a.transpose() * b);
  std::vector<double> samples;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    SeededRng srng(seed, 9);
    const DenseMatrix q = basis_oracle(sample_gaussian_matrix(n, m, 1.0, srng));
    const DenseMatrix aq = a * q;
    DenseMatrix g = aq.transpose() * aq;
    g.diagonal().array() += lambda;
    const Vector alpha = g.ldlt().solve(aq.transpose() * b);
    const Vector x1 = -(a.transpose() * (aq * alpha - b)) / lambda;
    const double e1 = (x1 - x_star).norm() / x_star.norm();
    samples.push_back(e1 * e1);
  }
  const double bound = std::pow(1.0 - static_cast<double>(m) / static_cast<double>(n), 3.0) * std::pow(s1, 4.0) /
                       std::pow(s1 * s1 + 2.0 * lambda, 2.0);
  const LowerBoundCheck oracle = one_sided_check(samples, bound);
  SeededRng lib_rng(9, 1);
  const LowerBoundCheck lib = aligned_lower_bound_check(a, lambda, 1.0, m, 500, lib_rng);
  return {oracle.pass && lib.pass, fmt("mean %.4f vs bound %.4f (SE %.2g); library path mean %.4f", oracle.mean, bound,
                                       oracle.standard_error, lib.mean)};
}

Outcome ordering_and_slopes() {
  const auto start = std::chrono::steady_clock::now();
  const Index n = 1000;
  const Index d = 2000;
  const double lambda = 1e-4;
  const std::vector<Index> ms{32, 64, 128, 256, 512};
  const std::vector<std::pair<std::string, SpectrumSpec>> decays{{"exp", SpectrumSpec::exponential(0.1)},
                                                                 {"poly", SpectrumSpec::polynomial(1.0)}};
  bool ordering = true;
  bool slopes = true;
  std::ostringstream os;
  for (const auto& [decay_name, spec] : decays) {
    std::vector<std::vector<double>> adaptive(2, std::vector<double>(ms.size(), 0.0));
    std::vector<std::vector<double>> oblivious = adaptive;
    for (std::uint64_t trial = 0; trial < 10; ++trial) {
      SeededRng rng(42, hash64(trial, decay_name == "exp" ? 1 : 2));
      const DenseMatrix a = synth_matrix(n, d, spec, rng).a;
      const Vector y = synth_labels(n, rng);
      const std::vector<SmoothLoss> losses{SmoothLoss::logistic(y), SmoothLoss::relu(y)};
      for (std::size_t l = 0; l < losses.size(); ++l) {
        const Reference ref = reference_solution(a, losses[l], lambda);
        RecoveryOptions opts;
        opts.compute_residual = false;
        for (std::size_t j = 0; j < ms.size(); ++j) {
          const std::uint64_t stream = hash64(trial, static_cast<std::uint64_t>(j), l);
          adaptive[l][j] += recover_adaptive(a, losses[l], lambda, adaptive_gaussian(ms[j], 42, stream), ref, opts).rel_err_x1 / 10.0;
          oblivious[l][j] +=
              recover_oblivious_dagger(a, losses[l], lambda, ms[j], SeededRng(43, stream), ref, opts).rel_err_x1 / 10.0;
        }
      }
    }
    const std::vector<double> mvals(ms.begin(), ms.end());
    for (std::size_t l = 0; l < 2; ++l) {
      for (std::size_t j = 0; j < ms.size(); ++j) ordering = ordering && adaptive[l][j] < oblivious[l][j];
      const char* loss_name = l == 0 ? "logistic" : "relu";
      const double obl_slope = loglog_slope_fit(mvals, oblivious[l]).slope;
      os << decay_name << "/" << loss_name << fmt(": adaptive@512 %.2g vs oblivious@512 %.2g", adaptive[l].back(), oblivious[l].back());
      if (decay_name == "poly") {
        const double ada_slope = loglog_slope_fit(mvals, adaptive[l]).slope;
        slopes = slopes && ada_slope <= -0.7 && obl_slope >= -0.7 && obl_slope <= -0.3;
        os << fmt(", slopes adaptive %.2f oblivious %.2f", ada_slope, obl_slope);
      }
      os << "; ";
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  os << fmt("%.0f s (limit 1800 s)", secs);
  return {ordering && slopes && secs < 1800.0, os.str()};
}

Outcome nonsmooth_recovery() {
  const Index n = 1000;
  const Index d = 2000;
  const double lambda = 0.01;
  const std::vector<Index> ms{32, 64, 128, 256, 512};
  int runs = 0;
  int bound_ok = 0;
  double worst_gap = 0.0;
  bool ordering = true;
  std::ostringstream os;
  for (const char* loss_name : {"l1", "linf", "hinge"}) {
    std::vector<double> err_x1(ms.size(), 0.0);
    std::vector<double> err_arb(ms.size(), 0.0);
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
      SeededRng rng(7, hash64(trial, 0x3f));
      const DenseMatrix a = synth_matrix(n, d, SpectrumSpec::geometric(0.98), rng).a;
      const std::string name = loss_name;
      const NonSmoothLoss loss = name == "l1"     ? NonSmoothLoss::l1(sample_gaussian_vector(n, 1.0, rng))
                                 : name == "linf" ? NonSmoothLoss::linf(sample_gaussian_vector(n, 1.0, rng))
                                                  : NonSmoothLoss::hinge(synth_labels(n, rng));
      const Reference ref = nonsmooth_reference(a, loss, lambda);
      for (std::size_t j = 0; j < ms.size(); ++j) {
        const EmbeddingSpec spec = adaptive_gaussian(ms[j], 7, hash64(trial, static_cast<std::uint64_t>(j)));
        const NonSmoothReport rep = recover_nonsmooth(a, loss, lambda, spec, DualRoute::RestrictedDual, ref);
        const double bound = std::sqrt(6.0) * loss.lipschitz() / lambda * rep.report.residual_norm;
        ++runs;
        if (rep.error_x1 <= bound) ++bound_ok;
        worst_gap = std::max(worst_gap, std::abs(rep.plain_objective - rep.route_objective) /
                                            std::max(1.0, std::abs(rep.plain_objective)));
        err_x1[j] += rep.error_x1 / 20.0;
        err_arb[j] += rep.error_arbitrary / 20.0;
      }
    }
    for (std::size_t j = 1; j < ms.size(); ++j) ordering = ordering && err_x1[j] <= err_arb[j];
    os << loss_name << fmt(" m=64: %.3g vs %.3g; ", err_x1[1], err_arb[1]);
  }
  os << bound_ok << "/" << runs << " within the bound" << fmt(", max dual objective gap %.2g", worst_gap);
  return {bound_ok == runs && ordering && worst_gap <= 1e-6, os.str()};
}

Outcome kernel_equivalence() {
  double worst_x = 0.0;
  double worst_rkhs = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SmoothInstance inst = smooth_instance(80, 120, SpectrumSpec::exponential(0.2), 60 + seed);
    const SmoothLoss& loss = inst.losses[seed % 3];
    const double lambda = 1e-3;
    const Reference ref = reference_solution(inst.a, loss, lambda, tight());
    const EmbeddingSpec spec = adaptive_gaussian(16, seed, 11);
    const DenseMatrix s_tilde = draw_adaptive_base(80, spec);
    RecoveryOptions opts;
    opts.solve = tight();
    opts.compute_residual = false;
    const RecoveryReport feat =
        recover_from_sketch(inst.a, assemble_sketch(inst.a, inst.a.transpose() * s_tilde, spec), loss, lambda, ref, opts);
    const GramMatrix gram = gram_from_features(inst.a);
    const KernelSolution ker = solve_sketched_kernel(gram, s_tilde, loss, lambda, tight());
    const Vector w1 = kernel_first_order(gram, s_tilde, ker.alpha, loss, lambda);
    worst_x = std::max(worst_x, (inst.a.transpose() * w1 - feat.x1).norm() / feat.x1.norm());
    // w* from x* = Aᵀw*; RKHS norm ‖w‖²_K = wᵀKw computed directly.
    const Vector w_star = -loss.gradient(inst.a * ref.x) / lambda;
    const Vector diff = w1 - w_star;
    const double rkhs_rel = std::sqrt(diff.dot(gram.k * diff) / w_star.dot(gram.k * w_star));
    worst_rkhs = std::max(worst_rkhs, std::abs(rkhs_rel - (feat.x1 - ref.x).norm() / ref.x.norm()));
  }
  return {worst_x <= 1e-8 && worst_rkhs <= 1e-6,
          fmt("max x1 gap %.2g (limit 1e-8), max RKHS vs Euclidean gap %.2g (limit 1e-6)", worst_x, worst_rkhs)};
}

Outcome risk_decomposition() {
  const Index n = 200;
  const Index d = 400;
  const double noise = 1.0;
  const double nu = 0.2;
  SeededRng rng(12, 0);
  const SynthInstance inst = synth_matrix(n, d, SpectrumSpec::exponential(nu), rng);
  const Vector& sigma = inst.summary.singular_values;
  // d_s = min{k ≥ 1 : σ²k/n ≥ σ²_{k+1}} by direct scan.
  Index d_s = 1;
  while (!(noise * static_cast<double>(d_s) / static_cast<double>(n) >=
           (d_s < sigma.size() ? sigma(d_s) * sigma(d_s) : 0.0)))
    ++d_s;
  const Index m = 4 * d_s;
  int within = 0;
  int events = 0;
  double worst = 0.0;
  double smallest = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const EmbeddingSpec spec{EmbeddingKind::ObliviousGaussian, m, 0, SeededRng(seed, 12)};
    SeededRng noise_rng(seed, 13);
    const RiskEstimate est = risk_zero_order(inst.a, spec, noise, 1e-8, 500, noise_rng);
    // Residual of A off range(AS), recomputed from the same sketch.
    const Sketch sketch = make_sketch(inst.a, spec);
    const DenseMatrix basis = basis_oracle(sketch.a_qs);
    const Vector sv = Eigen::JacobiSVD<DenseMatrix>(sketch.a_qs).singularValues();
    smallest = std::min(smallest, sv(sv.size() - 1) * sv(sv.size() - 1));
    const DenseMatrix resid = inst.a - basis * (basis.transpose() * inst.a);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(resid * resid.transpose(), Eigen::EigenvaluesOnly);
    const double resid_sq = std::max(eig.eigenvalues().maxCoeff(), 0.0);
    const double limit = noise * static_cast<double>(basis.cols()) / static_cast<double>(n) + resid_sq;
    const double gap = std::abs(est.mc_risk - limit) / limit;
    worst = std::max(worst, gap);
    if (gap <= 0.05) ++within;
    const double s_next = d_s < sigma.size() ? sigma(d_s) : 0.0;
    if (resid_sq <= 0.5 * s_next * s_next) ++events;
  }
  return {within == 50 && events >= 45, "d_s = " + std::to_string(d_s) + ", m = " + std::to_string(m) + ", " +
                                            std::to_string(within) + "/50 draws within 5%" +
                                            fmt(" (worst %.3f), event held in %.0f/50, smallest squared singular value of AS %.2g vs lambda 1e-8",
                                                worst, events, smallest)};
}

Outcome loss_numerics() {
  SeededRng rng(13, 0);
  const Index n = 12;
  const Vector y = synth_labels(n, rng);
  const std::vector<SmoothLoss> smooth{SmoothLoss::quadratic(sample_gaussian_vector(n, 1.0, rng)),
                                       SmoothLoss::logistic(y), SmoothLoss::relu(y)};
  double worst_grad = 0.0;
  double worst_fy = 0.0;
  int smooth_violations = 0;
  for (const SmoothLoss& loss : smooth) {
    for (int t = 0; t < 100; ++t) {
      Vector w = sample_gaussian_vector(n, 4.0, rng);
      if (loss.kind() == SmoothKind::ReluType)
        for (Index i = 0; i < n; ++i)
          if (std::abs(w(i)) < 1e-3) w(i) = 1e-3;  // keep the difference stencil off the kink
      const Vector g = loss.gradient(w);
      Vector fd(n);
      const double h = 1e-6;
      for (Index i = 0; i < n; ++i) {
        Vector up = w;
        Vector down = w;
        up(i) += h;
        down(i) -= h;
        fd(i) = (loss.value(up) - loss.value(down)) / (2.0 * h);
      }
      worst_grad = std::max(worst_grad, (fd - g).norm() / std::max(g.norm(), 1e-12));
      worst_fy = std::max(worst_fy, std::abs(loss.value(w) + loss.conjugate_value(g) - w.dot(g)) /
                                        std::max(1.0, std::abs(w.dot(g))));
    }
    for (int t = 0; t < 1000; ++t) {
      const Vector u = sample_gaussian_vector(n, 4.0, rng);
      const Vector v = sample_gaussian_vector(n, 4.0, rng);
      if ((loss.gradient(u) - loss.gradient(v)).norm() > smoothness_of(loss) * (u - v).norm() * (1.0 + 1e-12))
        ++smooth_violations;
    }
  }
  const std::vector<NonSmoothLoss> nonsmooth{NonSmoothLoss::l1(sample_gaussian_vector(n, 1.0, rng)),
                                             NonSmoothLoss::linf(sample_gaussian_vector(n, 1.0, rng)),
                                             NonSmoothLoss::hinge(y)};
  int lipschitz_violations = 0;
  for (const NonSmoothLoss& loss : nonsmooth) {
    const double big_l = loss.kind() == NonSmoothKind::Linf ? 1.0 : std::sqrt(static_cast<double>(n));
    for (int t = 0; t < 100; ++t) {
      const Vector w = sample_gaussian_vector(n, 4.0, rng);
      const Vector g = loss.arbitrary_subgradient(w);
      worst_fy = std::max(worst_fy, std::abs(loss.value(w) + loss.conjugate_value(g) - w.dot(g)) /
                                        std::max(1.0, std::abs(w.dot(g))));
    }
    for (int t = 0; t < 1000; ++t) {
      const Vector u = sample_gaussian_vector(n, 4.0, rng);
      const Vector v = sample_gaussian_vector(n, 4.0, rng);
      if (std::abs(loss.value(u) - loss.value(v)) > big_l * (u - v).norm() * (1.0 + 1e-12)) ++lipschitz_violations;
    }
  }
  return {worst_grad <= 1e-5 && worst_fy <= 1e-8 && smooth_violations == 0 && lipschitz_violations == 0,
          fmt("gradient vs differences %.2g, Fenchel-Young %.2g, smoothness violations %.0f, Lipschitz violations %.0f",
              worst_grad, worst_fy, smooth_violations, lipschitz_violations)};
}

Outcome infrastructure() {
  std::ostringstream os;
  bool ok = true;
  // SRHT orthogonality, padded widths included.
  double srht_err = 0.0;
  for (auto [p, m] : std::vector<std::pair<Index, Index>>{{8, 4}, {8, 8}, {100, 16}, {1000, 64}}) {
    SeededRng rng(14, static_cast<std::uint64_t>(p));
    const DenseMatrix s = materialize_srht(p, m, rng);
    // Rows beyond p hit the zero padding; rebuild the padded operator to test SᵀS.
    const Index padded = next_power_of_two(p);
    SeededRng again(14, static_cast<std::uint64_t>(p));
    const DenseMatrix full = apply_srht(DenseMatrix::Identity(padded, padded), m, again);
    srht_err = std::max(srht_err, (full.transpose() * full - static_cast<double>(padded) / static_cast<double>(m) *
                                                                  DenseMatrix::Identity(m, m)).cwiseAbs().maxCoeff());
    if (p == padded) srht_err = std::max(srht_err, (s - full).cwiseAbs().maxCoeff());
  }
  ok = ok && srht_err <= 1e-10;
  os << fmt("SRHT %.2g", srht_err);

  // Whitening: orthonormal columns, same range as S, QᵀS symmetric positive semidefinite.
  double white_err = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SeededRng rng(15, seed);
    const DenseMatrix s = sample_gaussian_matrix(30, 6, 1.0, rng);
    const DenseMatrix q = whiten(s);
    const DenseMatrix qts = q.transpose() * s;
    white_err = std::max({white_err, (q.transpose() * q - DenseMatrix::Identity(6, 6)).cwiseAbs().maxCoeff(),
                          (q * qts - s).cwiseAbs().maxCoeff(), (qts - qts.transpose()).cwiseAbs().maxCoeff()});
    Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(0.5 * (qts + qts.transpose()), Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-10) white_err = std::max(white_err, 1.0);
  }
  ok = ok && white_err <= 1e-10;
  os << fmt(", whitening %.2g", white_err);

  // Determinism of the record stream.
  const harness::ExperimentConfig cfg = harness::parse_config(
      {"sweep", "--n", "40", "--d", "60", "--m", "4,8,16", "--trials", "2", "--seed", "99", "--loss", "relu"});
  const auto first = harness::collect_records(cfg);
  const auto second = harness::collect_records(cfg);
  bool same = first.size() == second.size() && !first.empty();
  for (std::size_t i = 0; same && i < first.size(); ++i) {
    harness::RunRecord a = first[i];
    harness::RunRecord b = second[i];
    a.runtime_ms.reset();
    b.runtime_ms.reset();
    same = harness::to_csv_row(a) == harness::to_csv_row(b);
  }
  ok = ok && same;
  os << (same ? ", records identical" : ", records differ");

  // thin_svd reconstruction.
  double svd_err = 0.0;
  SeededRng rng(16, 0);
  for (int t = 0; t < 100; ++t) {
    const Index rows = 1 + static_cast<Index>(rng.below(40));
    const Index cols = 1 + static_cast<Index>(rng.below(40));
    const DenseMatrix m = sample_gaussian_matrix(rows, cols, 1.0, rng);
    const ThinSvd svd = thin_svd(m);
    svd_err = std::max(svd_err, (svd.reconstruct() - m).cwiseAbs().maxCoeff() / svd.singular_values(0));
  }
  ok = ok && svd_err <= 1e-8;
  os << fmt(", thin_svd %.2g", svd_err);
  return {ok, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"first-order bound, exponential decay, 3 losses", first_order_certificate},
      {"Gaussian residual within 26 R_k", residual_bound},
      {"SRHT residual within 5 R_k", srht_residual},
      {"iterative contraction", iterative_contraction},
      {"sketched conditioning no worse", conditioning},
      {"whitened and raw sketched programs agree", whitening_equivalence},
      {"oblivious zero-order floor", oblivious_floor},
      {"aligned first-order lower bound", aligned_lower_bound},
      {"adaptive beats oblivious, scaling slopes", ordering_and_slopes},
      {"non-smooth bound, ordering, dual agreement", nonsmooth_recovery},
      {"kernel pipeline equivalence", kernel_equivalence},
      {"risk decomposition and statistical event", risk_decomposition},
      {"loss-layer numerics", loss_numerics},
      {"infrastructure", infrastructure},
  };
  std::set<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.insert(static_cast<std::size_t>(std::stoul(argv[i])));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected.empty() && !selected.count(i + 1)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "criterion " << (i + 1) << ' ' << (out.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << ": "
              << out.detail << fmt(" [%.1f s]", secs) << std::endl;
    if (!out.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "subsketch/embeddings.hpp"
#include "subsketch/losses.hpp"
#include "subsketch/solvers.hpp"

namespace subsketch {

/// x* together with a tag naming the solve that produced it.
struct Reference {
  Vector x;
  std::string provenance;
};

inline std::string solve_provenance(const std::string& method, const SolveOptions& opts, const SolveResult& r) {
  std::ostringstream os;
  os << method << ":tol=" << opts.grad_tolerance << ":iters=" << r.iterations << ":grad=" << r.grad_norm;
  return os.str();
}

inline Reference reference_solution(const DenseMatrix& a, const SmoothLoss& loss, double lambda,
                                    const SolveOptions& opts = {}) {
  const SolveResult r = solve_primal_reference(a, loss, lambda, opts);
  if (!r.converged) throw ConvergenceError("reference solve did not converge", static_cast<std::size_t>(r.iterations), r.grad_norm);
  return {r.minimizer, solve_provenance("newton-primal", opts, r)};
}

struct RecoveryReport {
  Vector alpha;
  Vector x0;
  Vector x1;
  double rel_err_x0 = 0.0;
  double rel_err_x1 = 0.0;
  double residual_norm = std::nan("");
  double bound_rhs = std::nan("");
  bool condition_ok = false;
  double objective = 0.0;
  bool converged = false;
  double runtime_ms = 0.0;
  std::uint64_t seed = 0;
  Index rank = 0;
  std::string reference;
};

struct RecoveryOptions {
  SolveOptions solve{};
  bool compute_residual = true;
};

inline double relative_error(const Vector& x, const Vector& x_star) {
  const double denom = x_star.norm();
  return denom > 0.0 ? (x - x_star).norm() / denom : (x - x_star).norm();
}

inline Vector zero_order(const DenseMatrix& q_s, const Vector& alpha) {
  require(q_s.cols() == alpha.size(), "zero_order: dimension mismatch");
  return q_s * alpha;
}

/// G_λ(v) = −(1/λ)Aᵀ∇f(Av).
inline Vector first_order(const DenseMatrix& a, const SmoothLoss& loss, double lambda, const Vector& v) {
  require(lambda > 0.0, "first_order: lambda must be positive");
  require(a.cols() == v.size(), "first_order: dimension mismatch");
  return -(a.transpose() * loss.gradient(a * v)) / lambda;
}

inline double first_order_bound(double mu, double lambda, double residual, double rel_err_x0) {
  return std::sqrt(mu / (2.0 * lambda)) * residual * std::min(1.0, rel_err_x0);
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

}  // namespace detail

/// Solves the rescaled sketched program on A·Q and applies both recovery maps.
inline RecoveryReport recover_with_frame(const DenseMatrix& a, const DenseMatrix& q, const DenseMatrix& a_q,
                                         const SmoothLoss& loss, double lambda, const Reference& ref,
                                         const RecoveryOptions& opts, bool orthonormal_frame) {
  RecoveryReport rep;
  const SolveResult sol = solve_sketched(a_q, loss, lambda, opts.solve);
  rep.alpha = sol.minimizer;
  rep.objective = sol.objective;
  rep.converged = sol.converged;
  rep.rank = q.cols();
  rep.x0 = zero_order(q, rep.alpha);
  rep.x1 = -(a.transpose() * loss.gradient(a_q * rep.alpha)) / lambda;
  rep.rel_err_x0 = relative_error(rep.x0, ref.x);
  rep.rel_err_x1 = relative_error(rep.x1, ref.x);
  rep.reference = ref.provenance;
  if (opts.compute_residual) {
    const DenseMatrix basis = orthonormal_frame ? q : orthonormal_basis(q);
    rep.residual_norm = projection_residual_norm(a, basis);
    const double mu = loss.smoothness();
    rep.bound_rhs = first_order_bound(mu, lambda, rep.residual_norm, rep.rel_err_x0);
    rep.condition_ok = lambda >= 2.0 * mu * rep.residual_norm * rep.residual_norm;
  }
  return rep;
}

inline RecoveryReport recover_from_sketch(const DenseMatrix& a, const Sketch& sketch, const SmoothLoss& loss,
                                          double lambda, const Reference& ref, const RecoveryOptions& opts = {}) {
  RecoveryReport rep = recover_with_frame(a, sketch.q_s, sketch.a_qs, loss, lambda, ref, opts, true);
  rep.seed = sketch.spec.rng.seed();
  return rep;
}

/// Adaptive sketch, whitening, sketched solve, x̂⁰ and x̂¹ with the first-order bound fields.
inline RecoveryReport recover_adaptive(const DenseMatrix& a, const SmoothLoss& loss, double lambda,
                                       const EmbeddingSpec& spec, const Reference& ref,
                                       const RecoveryOptions& opts = {}) {
  require(is_adaptive(spec.kind), "recover_adaptive: spec must be adaptive");
  const auto start = detail::Clock::now();
  const Sketch sketch = make_sketch(a, spec);
  RecoveryReport rep = recover_from_sketch(a, sketch, loss, lambda, ref, opts);
  rep.runtime_ms = detail::elapsed_ms(start);
  return rep;
}

/// Any embedding kind; oblivious kinds are whitened like adaptive ones.
inline RecoveryReport recover_sketched(const DenseMatrix& a, const SmoothLoss& loss, double lambda,
                                       const EmbeddingSpec& spec, const Reference& ref,
                                       const RecoveryOptions& opts = {}) {
  const auto start = detail::Clock::now();
  const Sketch sketch = make_sketch(a, spec);
  RecoveryReport rep = recover_from_sketch(a, sketch, loss, lambda, ref, opts);
  rep.runtime_ms = detail::elapsed_ms(start);
  return rep;
}

inline RecoveryReport recover_nystrom(const DenseMatrix& a, const SmoothLoss& loss, double lambda, Index m,
                                      const SeededRng& rng, const Reference& ref, const RecoveryOptions& opts = {}) {
  EmbeddingSpec spec{EmbeddingKind::ColumnSubsample, m, 0, rng};
  return recover_adaptive(a, loss, lambda, spec, ref, opts);
}

/// Unwhitened Gaussian Q with N(0, 1/m) entries: x̂¹† = −(1/λ)Aᵀ∇f(AQα†).
inline RecoveryReport recover_oblivious_dagger(const DenseMatrix& a, const SmoothLoss& loss, double lambda, Index m,
                                               const SeededRng& rng, const Reference& ref,
                                               const RecoveryOptions& opts = {}) {
  const auto start = detail::Clock::now();
  SeededRng local = rng;
  const DenseMatrix q = sample_gaussian_matrix(a.cols(), m, 1.0 / static_cast<double>(m), local);
  const DenseMatrix a_q = a * q;
  RecoveryReport rep = recover_with_frame(a, q, a_q, loss, lambda, ref, opts, false);
  rep.seed = rng.seed();
  rep.runtime_ms = detail::elapsed_ms(start);
  return rep;
}

/// Iterative refinement: one sketch, T shifted solves; entry t−1 reports x̂_t.
inline std::vector<RecoveryReport> recover_iterative(const DenseMatrix& a, const SmoothLoss& loss, double lambda,
                                                     const EmbeddingSpec& spec, Index iterations,
                                                     const Reference& ref, const RecoveryOptions& opts = {}) {
  require(iterations >= 1, "recover_iterative: T must be at least 1");
  const auto start = detail::Clock::now();
  const Sketch sketch = make_sketch(a, spec);
  const double residual = opts.compute_residual ? projection_residual_norm(a, sketch.q_s) : std::nan("");
  const double mu = loss.smoothness();

  std::vector<RecoveryReport> out;
  Vector x_prev = Vector::Zero(a.cols());
  for (Index t = 1; t <= iterations; ++t) {
    const Vector shift_image = a * x_prev;
    const Vector shift_coords = sketch.q_s.transpose() * x_prev;
    const SolveResult sol = solve_sketched_shifted(sketch.a_qs, shift_image, shift_coords, loss, lambda, opts.solve);
    RecoveryReport rep;
    rep.alpha = sol.minimizer;
    rep.objective = sol.objective;
    rep.converged = sol.converged;
    rep.rank = sketch.rank();
    rep.seed = spec.rng.seed();
    rep.reference = ref.provenance;
    rep.x0 = sketch.q_s * rep.alpha + x_prev;
    rep.x1 = -(a.transpose() * loss.gradient(sketch.a_qs * rep.alpha + shift_image)) / lambda;
    rep.rel_err_x0 = relative_error(rep.x0, ref.x);
    rep.rel_err_x1 = relative_error(rep.x1, ref.x);
    rep.residual_norm = residual;
    if (opts.compute_residual) {
      rep.condition_ok = lambda >= 2.0 * mu * residual * residual;
      rep.bound_rhs = std::pow(mu * residual * residual / (2.0 * lambda), 0.5 * static_cast<double>(t));
    }
    rep.runtime_ms = detail::elapsed_ms(start);
    x_prev = rep.x1;
    const bool stop = rep.rel_err_x1 < 1e-12 || !sol.converged;
    out.push_back(std::move(rep));
    if (stop) break;
  }
  return out;
}

/// Maps a whitened solution α† of f(AQ_Sα) + (λ/2)‖α‖² to α* of f(ASα) + (λ/2)‖Sα‖²: α* = V Σ⁻¹ Vᵀ α†.
inline Vector unwhiten_coefficients(const DenseMatrix& s, const Vector& alpha_dagger,
                                    double rank_tolerance = kDefaultRankTolerance) {
  const ThinSvd svd = thin_svd(s, rank_tolerance);
  const DenseMatrix v = svd.vt.transpose();
  if (svd.rank() < s.cols()) {
    // whiten() returned U_S, so α† already lives in the r-dimensional coordinates of U_S.
    return v * svd.singular_values.cwiseInverse().asDiagonal() * alpha_dagger;
  }
  return v * svd.singular_values.cwiseInverse().asDiagonal() * (svd.vt * alpha_dagger);
}

// ---------------------------------------------------------------------------
// Non-smooth recovery through the sketched dual.

enum class DualRoute { RestrictedDual, PlainSketchedDual };

struct NonSmoothReport {
  RecoveryReport report;
  Vector y;
  double plain_objective = 0.0;
  double route_objective = 0.0;
  Vector x_arbitrary;
  double error_x1 = 0.0;         // ‖x̂¹ − x*‖
  double error_arbitrary = 0.0;  // ‖−Aᵀg/λ − x*‖
  Index free_count = 0;
};

/// min c_Fᵀy_F + ½ y_Fᵀ H_FF y_F + (H_FX y_X)ᵀ y_F over the partition's free structure.
inline SolveResult solve_restricted_dual(const DualQuadratic& full, const SubgradientPartition& part,
                                         const SolveOptions& opts, const Vector* start = nullptr) {
  const Index n = full.linear.size();
  Vector y = Vector::Zero(n);
  for (const auto& [i, v] : part.fixed) y(i) = v;

  if (part.kind == NonSmoothKind::Linf && part.full_ball) {
    SolveResult r = solve_dual_qp(full, L1BallSet{1.0}, opts, start);
    return r;
  }

  std::vector<Index> free;
  Vector lo;
  Vector hi;
  Vector signs;
  if (part.kind == NonSmoothKind::Linf) {
    free = part.active;
    signs = Eigen::Map<const Vector>(part.signs.data(), static_cast<Index>(part.signs.size()));
  } else {
    const Index f = static_cast<Index>(part.free.size());
    lo.resize(f);
    hi.resize(f);
    for (Index k = 0; k < f; ++k) {
      free.push_back(part.free[static_cast<std::size_t>(k)].first);
      lo(k) = part.free[static_cast<std::size_t>(k)].second.lo;
      hi(k) = part.free[static_cast<std::size_t>(k)].second.hi;
    }
  }

  const Index f = static_cast<Index>(free.size());
  SolveResult result;
  if (f > 0) {
    DualQuadratic reduced;
    reduced.hessian.resize(f, f);
    reduced.linear.resize(f);
    const Vector hy = full.hessian * y;  // y holds only the fixed coordinates here
    for (Index a = 0; a < f; ++a) {
      const Index ia = free[static_cast<std::size_t>(a)];
      reduced.linear(a) = full.linear(ia) + hy(ia);
      for (Index b = 0; b < f; ++b) reduced.hessian(a, b) = full.hessian(ia, free[static_cast<std::size_t>(b)]);
    }
    FeasibleSet set = part.kind == NonSmoothKind::Linf ? FeasibleSet{SignedSimplexSet{signs, 1.0}}
                                                        : FeasibleSet{BoxSet{lo, hi}};
    Vector warm;
    if (start) {
      warm.resize(f);
      for (Index a = 0; a < f; ++a) warm(a) = (*start)(free[static_cast<std::size_t>(a)]);
    }
    const SolveResult inner = solve_dual_qp(reduced, set, opts, start ? &warm : nullptr);
    for (Index a = 0; a < f; ++a) y(free[static_cast<std::size_t>(a)]) = inner.minimizer(a);
    result = inner;
  } else {
    result.converged = true;
  }
  result.minimizer = y;
  result.objective = full.value(y);
  return result;
}

inline NonSmoothReport recover_nonsmooth_from_sketch(const DenseMatrix& a, const Sketch& sketch,
                                                     const NonSmoothLoss& loss, double lambda, DualRoute route,
                                                     const Reference& ref,
                                                     const SolveOptions& opts = default_dual_options()) {
  const auto start = detail::Clock::now();
  NonSmoothReport out;
  RecoveryReport& rep = out.report;

  const DenseMatrix factor = sketch.a_qs.transpose();  // Q_SᵀAᵀ
  const DualQuadratic dual = DualQuadratic::from_factor(factor, loss.target(), lambda);
  const SolveResult plain = solve_dual_qp(dual, conjugate_domain(loss), opts);
  out.plain_objective = plain.objective;
  rep.alpha = -(factor * plain.minimizer) / lambda;
  rep.x0 = sketch.q_s * rep.alpha;
  const Vector w = sketch.a_qs * rep.alpha;

  SolveResult chosen = plain;
  if (route == DualRoute::RestrictedDual) {
    const SubgradientPartition part = loss.subgradient_partition(w);
    out.free_count = part.kind == NonSmoothKind::Linf ? static_cast<Index>(part.active.size())
                                                       : static_cast<Index>(part.free.size());
    chosen = solve_restricted_dual(dual, part, opts, &plain.minimizer);
  }
  out.y = chosen.minimizer;
  out.route_objective = chosen.objective;
  rep.objective = chosen.objective;
  rep.converged = plain.converged && chosen.converged;
  rep.rank = sketch.rank();
  rep.seed = sketch.spec.rng.seed();
  rep.reference = ref.provenance;

  rep.x1 = -(a.transpose() * out.y) / lambda;
  out.x_arbitrary = -(a.transpose() * loss.arbitrary_subgradient(w)) / lambda;
  rep.rel_err_x0 = relative_error(rep.x0, ref.x);
  rep.rel_err_x1 = relative_error(rep.x1, ref.x);
  out.error_x1 = (rep.x1 - ref.x).norm();
  out.error_arbitrary = (out.x_arbitrary - ref.x).norm();

  rep.residual_norm = projection_residual_norm(a, sketch.q_s);
  rep.bound_rhs = std::sqrt(6.0) * loss.lipschitz() / lambda * rep.residual_norm;
  rep.condition_ok = true;
  rep.runtime_ms = detail::elapsed_ms(start);
  return out;
}

inline NonSmoothReport recover_nonsmooth(const DenseMatrix& a, const NonSmoothLoss& loss, double lambda,
                                         const EmbeddingSpec& spec, DualRoute route, const Reference& ref,
                                         const SolveOptions& opts = default_dual_options()) {
  require(is_adaptive(spec.kind), "recover_nonsmooth: spec must be adaptive");
  const Sketch sketch = make_sketch(a, spec);
  return recover_nonsmooth_from_sketch(a, sketch, loss, lambda, route, ref, opts);
}

inline Reference nonsmooth_reference(const DenseMatrix& a, const NonSmoothLoss& loss, double lambda,
                                     const SolveOptions& opts = default_dual_options()) {
  const NonSmoothReference r = solve_nonsmooth_primal_reference(a, loss, lambda, opts);
  return {r.x, solve_provenance("dual-qp", opts, r.dual)};
}

}  // namespace subsketch

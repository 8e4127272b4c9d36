#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <variant>
#include <vector>

#include "subsketch/losses.hpp"
#include "subsketch/numkit.hpp"

namespace subsketch {

enum class LineSearch { Armijo, None };
enum class Method { Newton, GradientDescent };

struct SolveOptions {
  double grad_tolerance = 1e-10;
  Index max_iters = 200;
  LineSearch line_search = LineSearch::Armijo;
  Method method = Method::Newton;
};

struct SolveResult {
  Vector minimizer;
  double objective = 0.0;
  double grad_norm = 0.0;
  Index iterations = 0;
  bool converged = false;
  std::vector<double> objective_history;  // filled by the dual solver
};

/// φ(α) = f(Bα + c) + (λ/2)(α + s)ᵀG(α + s); c, s and G are optional (zero, zero, identity).
struct SmoothProgram {
  const DenseMatrix& factor;
  const SmoothLoss& loss;
  double lambda;
  const Vector* shift_image = nullptr;
  const Vector* shift_coords = nullptr;
  const DenseMatrix* metric = nullptr;

  Vector image(const Vector& alpha) const {
    Vector w = factor * alpha;
    if (shift_image) w += *shift_image;
    return w;
  }

  Vector offset(const Vector& alpha) const { return shift_coords ? Vector(alpha + *shift_coords) : alpha; }

  Vector metric_times(const Vector& v) const { return metric ? Vector(*metric * v) : v; }

  double value(const Vector& alpha) const {
    const Vector o = offset(alpha);
    return loss.value(image(alpha)) + 0.5 * lambda * o.dot(metric_times(o));
  }

  Vector gradient(const Vector& alpha, const Vector& w) const {
    return factor.transpose() * loss.gradient(w) + lambda * metric_times(offset(alpha));
  }
};

namespace detail {

inline double armijo_step(const SmoothProgram& prog, const Vector& alpha, const Vector& direction, double slope,
                          double current, double initial_step, Vector& trial, double& trial_value) {
  double step = initial_step;
  for (int k = 0; k < 80; ++k) {
    trial = alpha + step * direction;
    trial_value = prog.value(trial);
    if (std::isfinite(trial_value) && trial_value <= current + 1e-4 * step * slope) return step;
    step *= 0.5;
  }
  return 0.0;
}

}  // namespace detail

inline SolveResult solve_smooth_program(const SmoothProgram& prog, const SolveOptions& opts,
                                        const Vector* start = nullptr) {
  require(prog.lambda > 0.0, "solve: lambda must be positive");
  require(opts.grad_tolerance > 0.0 && opts.max_iters >= 1, "solve: invalid options");
  require(prog.factor.rows() == prog.loss.n(), "solve: factor rows must equal loss dimension");
  const Index r = prog.factor.cols();

  SolveResult result;
  if (r == 0) {
    result.minimizer = Vector::Zero(0);
    result.objective = prog.value(result.minimizer);
    result.converged = true;
    return result;
  }

  Vector alpha = start ? *start : Vector::Zero(r);
  Vector w = prog.image(alpha);
  double current = prog.value(alpha);
  Vector grad = prog.gradient(alpha, w);
  const double threshold = opts.grad_tolerance * std::max(1.0, grad.norm());
  double step_guess = 1.0;

  auto newton_direction = [&](const Vector& at_w, const Vector& g) {
    const Vector h = prog.loss.hessian_diag(at_w);
    DenseMatrix hess = prog.factor.transpose() * h.asDiagonal() * prog.factor;
    if (prog.metric) hess += prog.lambda * *prog.metric;
    else hess.diagonal().array() += prog.lambda;
    Eigen::LLT<DenseMatrix> llt(hess);
    if (llt.info() == Eigen::Success) return Vector(-llt.solve(g));
    return Vector(-Eigen::LDLT<DenseMatrix>(hess).solve(g));
  };

  Index it = 0;
  bool polished = false;
  for (; it < opts.max_iters; ++it) {
    const double gnorm = grad.norm();
    if (gnorm <= threshold) {
      // One extra Newton step past the tolerance is nearly free and sharpens the minimizer.
      if (opts.method != Method::Newton || polished) break;
      polished = true;
      const Vector dir = newton_direction(w, grad);
      const Vector trial = alpha + dir;
      const Vector trial_w = prog.image(trial);
      const Vector trial_grad = prog.gradient(trial, trial_w);
      const double trial_value = prog.value(trial);
      if (trial_grad.norm() < gnorm && trial_value <= current + 1e-12 * std::abs(current)) {
        alpha = trial;
        w = trial_w;
        grad = trial_grad;
        current = trial_value;
      }
      break;
    }

    Vector direction;
    double initial = 1.0;
    if (opts.method == Method::Newton) {
      direction = newton_direction(w, grad);
    } else {
      direction = -grad;
      initial = step_guess;
    }
    double slope = grad.dot(direction);
    if (slope >= 0.0) {
      direction = -grad;
      slope = -grad.squaredNorm();
    }

    Vector trial;
    double trial_value = 0.0;
    double step = initial;
    // Predicted decrease below the objective's rounding: judge the Newton step by the gradient instead.
    const bool below_roundoff = -slope <= 1e-13 * std::abs(current);
    if (opts.method == Method::Newton && below_roundoff) {
      trial = alpha + direction;
      const Vector trial_w = prog.image(trial);
      const Vector trial_grad = prog.gradient(trial, trial_w);
      if (!(trial_grad.norm() < gnorm)) break;
      alpha = trial;
      current = prog.value(alpha);
      w = trial_w;
      grad = trial_grad;
      continue;
    }
    if (opts.line_search == LineSearch::Armijo) {
      step = detail::armijo_step(prog, alpha, direction, slope, current, initial, trial, trial_value);
      if (step == 0.0) break;  // no representable decrease left
    } else {
      trial = alpha + step * direction;
      trial_value = prog.value(trial);
    }
    if (opts.method == Method::GradientDescent) step_guess = std::min(2.0 * step, 1e12);
    alpha = trial;
    current = trial_value;
    w = prog.image(alpha);
    grad = prog.gradient(alpha, w);
  }

  result.minimizer = alpha;
  result.objective = current;
  result.grad_norm = grad.norm();
  result.iterations = it;
  result.converged = result.grad_norm <= threshold;
  return result;
}

/// min f(Ax) + (λ/2)‖x‖². When d > n the solve runs over range(Aᵀ), which contains x*.
inline SolveResult solve_primal_reference(const DenseMatrix& a, const SmoothLoss& loss, double lambda,
                                          const SolveOptions& opts = {}) {
  require(a.rows() == loss.n(), "solve_primal_reference: loss dimension mismatch");
  if (a.cols() <= a.rows()) {
    SmoothProgram prog{a, loss, lambda};
    return solve_smooth_program(prog, opts);
  }
  const DenseMatrix at = a.transpose();
  Eigen::HouseholderQR<DenseMatrix> qr(at);
  const Index n = a.rows();
  const DenseMatrix q = qr.householderQ() * DenseMatrix::Identity(a.cols(), n);
  const DenseMatrix reduced = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>().transpose();
  SmoothProgram prog{reduced, loss, lambda};
  SolveResult inner = solve_smooth_program(prog, opts);
  SolveResult out = inner;
  out.minimizer = q * inner.minimizer;
  const Vector w = a * out.minimizer;
  out.objective = loss.value(w) + 0.5 * lambda * out.minimizer.squaredNorm();
  out.grad_norm = (a.transpose() * loss.gradient(w) + lambda * out.minimizer).norm();
  return out;
}

inline SolveResult solve_sketched(const DenseMatrix& a_qs, const SmoothLoss& loss, double lambda,
                                  const SolveOptions& opts = {}) {
  SmoothProgram prog{a_qs, loss, lambda};
  return solve_smooth_program(prog, opts);
}

inline SolveResult solve_sketched_shifted(const DenseMatrix& a_qs, const Vector& shift_image,
                                          const Vector& shift_coords, const SmoothLoss& loss, double lambda,
                                          const SolveOptions& opts = {}) {
  require(shift_image.size() == a_qs.rows(), "solve_sketched_shifted: shift_image length");
  require(shift_coords.size() == a_qs.cols(), "solve_sketched_shifted: shift_coords length");
  SmoothProgram prog{a_qs, loss, lambda, &shift_image, &shift_coords};
  return solve_smooth_program(prog, opts);
}

/// min f(ASα) + (λ/2)‖Sα‖², the sketched program without whitening.
inline SolveResult solve_sketched_unwhitened(const DenseMatrix& a, const DenseMatrix& s, const SmoothLoss& loss,
                                             double lambda, const SolveOptions& opts = {}) {
  const DenseMatrix as = a * s;
  const DenseMatrix gram = s.transpose() * s;
  SmoothProgram prog{as, loss, lambda, nullptr, nullptr, &gram};
  return solve_smooth_program(prog, opts);
}

// ---------------------------------------------------------------------------
// Dual quadratic programs  min cᵀy + ½ yᵀHy  over a box, an L1 ball, or a signed simplex.

struct BoxSet {
  Vector lo;
  Vector hi;
};

struct L1BallSet {
  double radius = 1.0;
};

/// {s ⊙ u : u ≥ 0, Σu = radius}.
struct SignedSimplexSet {
  Vector signs;
  double radius = 1.0;
};

using FeasibleSet = std::variant<BoxSet, L1BallSet, SignedSimplexSet>;

inline Vector project_box(const Vector& v, const Vector& lows, const Vector& highs) {
  require(v.size() == lows.size() && v.size() == highs.size(), "project_box: length mismatch");
  require((lows.array() <= highs.array()).all(), "project_box: lows exceed highs");
  return v.cwiseMax(lows).cwiseMin(highs);
}

inline Vector project_scaled_simplex(const Vector& v, const Vector& signs, double radius) {
  require(v.size() == signs.size(), "project_scaled_simplex: length mismatch");
  require(radius > 0.0, "project_scaled_simplex: radius must be positive");
  const Index n = v.size();
  if (n == 0) return v;
  const Vector u = signs.cwiseProduct(v);
  std::vector<double> sorted(u.data(), u.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Index k = 0; k < n; ++k) {
    cumulative += sorted[static_cast<std::size_t>(k)];
    const double candidate = (cumulative - radius) / static_cast<double>(k + 1);
    if (sorted[static_cast<std::size_t>(k)] - candidate > 0.0) theta = candidate;
  }
  return signs.cwiseProduct((u.array() - theta).max(0.0).matrix());
}

inline Vector project_l1_ball(const Vector& v, double radius) {
  require(radius > 0.0, "project_l1_ball: radius must be positive");
  if (v.lpNorm<1>() <= radius) return v;
  Vector signs(v.size());
  for (Index i = 0; i < v.size(); ++i) signs(i) = v(i) >= 0.0 ? 1.0 : -1.0;
  return project_scaled_simplex(v, signs, radius);
}

inline Vector project(const FeasibleSet& set, const Vector& v) {
  return std::visit(
      [&](const auto& s) -> Vector {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BoxSet>) return project_box(v, s.lo, s.hi);
        else if constexpr (std::is_same_v<T, L1BallSet>) return project_l1_ball(v, s.radius);
        else return project_scaled_simplex(v, s.signs, s.radius);
      },
      set);
}

inline Index set_dimension(const FeasibleSet& set) {
  if (const auto* box = std::get_if<BoxSet>(&set)) return box->lo.size();
  if (const auto* simplex = std::get_if<SignedSimplexSet>(&set)) return simplex->signs.size();
  return -1;
}

struct DualQuadratic {
  DenseMatrix hessian;  // H = BᵀB/λ
  Vector linear;        // c

  double value(const Vector& y) const { return linear.dot(y) + 0.5 * y.dot(hessian * y); }
  Vector gradient(const Vector& y) const { return linear + hessian * y; }

  static DualQuadratic from_factor(const DenseMatrix& b, const Vector& linear, double lambda) {
    require(lambda > 0.0, "dual: lambda must be positive");
    require(b.cols() == linear.size(), "dual: factor columns must match the linear term");
    DualQuadratic q;
    q.hessian.noalias() = b.transpose() * b;
    q.hessian /= lambda;
    q.hessian = 0.5 * (q.hessian + q.hessian.transpose()).eval();
    q.linear = linear;
    return q;
  }
};

namespace detail {

// Free coordinates of the face containing y; `equality` receives the face's
// linear constraint row when the set is a simplex or an active L1 sphere.
inline std::vector<Index> free_face(const FeasibleSet& set, const Vector& y, const Vector& g,
                                    std::optional<Vector>& equality) {
  std::vector<Index> free;
  const Index n = y.size();
  equality.reset();
  if (const auto* box = std::get_if<BoxSet>(&set)) {
    for (Index i = 0; i < n; ++i) {
      const double eps = 1e-12 * std::max(1.0, box->hi(i) - box->lo(i));
      if (box->hi(i) - box->lo(i) <= eps) continue;
      const bool at_lo = y(i) <= box->lo(i) + eps;
      const bool at_hi = y(i) >= box->hi(i) - eps;
      if ((at_lo && g(i) > 0.0) || (at_hi && g(i) < 0.0)) continue;
      free.push_back(i);
    }
    return free;
  }
  double radius = 0.0;
  Vector signs(n);
  if (const auto* simplex = std::get_if<SignedSimplexSet>(&set)) {
    radius = simplex->radius;
    signs = simplex->signs;
  } else {
    radius = std::get<L1BallSet>(set).radius;
    if (y.lpNorm<1>() < radius * (1.0 - 1e-12)) {
      free.resize(static_cast<std::size_t>(n));
      std::iota(free.begin(), free.end(), Index{0});
      return free;
    }
    for (Index i = 0; i < n; ++i) signs(i) = y(i) >= 0.0 ? 1.0 : -1.0;
  }
  const double eps = 1e-13 * radius;
  Vector row(n);
  Index count = 0;
  for (Index i = 0; i < n; ++i) {
    if (std::abs(y(i)) > eps) {
      free.push_back(i);
      row(count++) = signs(i);
    }
  }
  equality = row.head(count);
  return free;
}

// Minimizer of gᵀd + ½dᵀ(H + εI)d on the face, with aᵀd = 0 when `equality` is set.
inline std::optional<Vector> face_newton(const DenseMatrix& hessian, const std::vector<Index>& free,
                                         const Vector& g, const std::optional<Vector>& equality) {
  const Index f = static_cast<Index>(free.size());
  if (f == 0) return std::nullopt;
  DenseMatrix k(f, f);
  Vector gf(f);
  for (Index a = 0; a < f; ++a) {
    gf(a) = g(free[static_cast<std::size_t>(a)]);
    for (Index b = 0; b < f; ++b) k(a, b) = hessian(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
  }
  const double scale = std::max(k.diagonal().maxCoeff(), std::numeric_limits<double>::min());
  double ridge = 1e-12 * scale;
  for (int attempt = 0; attempt < 6; ++attempt, ridge *= 100.0) {
    DenseMatrix kr = k;
    kr.diagonal().array() += ridge;
    Eigen::LLT<DenseMatrix> llt(kr);
    if (llt.info() != Eigen::Success) continue;
    Vector d = -llt.solve(gf);
    if (equality) {
      const Vector kinv_a = llt.solve(*equality);
      const double denom = equality->dot(kinv_a);
      if (!(denom > 0.0)) continue;
      d -= (equality->dot(d) / denom) * kinv_a;
    }
    if (!d.allFinite()) continue;
    Vector full = Vector::Zero(g.size());
    for (Index a = 0; a < f; ++a) full(free[static_cast<std::size_t>(a)]) = d(a);
    return full;
  }
  return std::nullopt;
}

}  // namespace detail

/// Projected gradient with fixed step 1/‖H‖₂, interleaved with active-face Newton
/// steps under a monotone projected line search.
inline SolveResult solve_dual_qp(const DualQuadratic& problem, const FeasibleSet& set, const SolveOptions& opts,
                                 const Vector* start = nullptr) {
  const Index n = problem.linear.size();
  require(problem.hessian.rows() == n && problem.hessian.cols() == n, "solve_dual_qp: hessian shape");
  const Index dim = set_dimension(set);
  require(dim < 0 || dim == n, "solve_dual_qp: feasible set dimension mismatch");

  SolveResult result;
  if (n == 0) {
    result.minimizer = Vector::Zero(0);
    result.converged = true;
    return result;
  }

  const double lip = n == 1 ? std::abs(problem.hessian(0, 0)) : spectral_norm(problem.hessian, 1e-6);
  const double step = lip > 0.0 ? 1.0 / (1.05 * lip) : 1.0;

  Vector y = project(set, start ? *start : Vector(Vector::Zero(n)));
  double value = problem.value(y);
  Vector g = problem.gradient(y);
  // Gradient mapping at a step no longer than 1, so a vanishing quadratic term cannot hide the linear one.
  const double pg_step = std::min(step, 1.0);
  auto pg_norm = [&](const Vector& at, const Vector& grad) {
    return (at - project(set, at - pg_step * grad)).norm() / pg_step;
  };
  const double threshold = opts.grad_tolerance * std::max(1.0, pg_norm(y, g));
  result.objective_history.push_back(value);

  Index it = 0;
  Index stalled = 0;
  double pg = pg_norm(y, g);
  for (; it < opts.max_iters; ++it) {
    if (pg <= threshold) break;
    const double before = value;

    std::optional<Vector> equality;
    const std::vector<Index> free = detail::free_face(set, y, g, equality);
    if (const auto dir = detail::face_newton(problem.hessian, free, g, equality)) {
      double t = 1.0;
      for (int k = 0; k < 40; ++k, t *= 0.5) {
        const Vector trial = project(set, y + t * *dir);
        const double trial_value = problem.value(trial);
        if (trial_value < value) {
          y = trial;
          value = trial_value;
          g = problem.gradient(y);
          break;
        }
      }
    }

    const Vector trial = project(set, y - step * g);
    const double trial_value = problem.value(trial);
    if (trial_value <= value) {
      y = trial;
      value = trial_value;
      g = problem.gradient(y);
    }
    result.objective_history.push_back(value);
    pg = pg_norm(y, g);

    if (before - value <= 1e-15 * std::max(1.0, std::abs(value))) {
      if (++stalled >= 25) break;
    } else {
      stalled = 0;
    }
  }

  result.minimizer = y;
  result.objective = value;
  result.grad_norm = pg;
  result.iterations = it;
  result.converged = pg <= threshold;
  return result;
}

inline FeasibleSet conjugate_domain(const NonSmoothLoss& loss) {
  const Index n = loss.n();
  switch (loss.kind()) {
    case NonSmoothKind::L1: return BoxSet{Vector::Constant(n, -1.0), Vector::Constant(n, 1.0)};
    case NonSmoothKind::Linf: return L1BallSet{1.0};
    case NonSmoothKind::Hinge: {
      const Vector& b = loss.target();
      return BoxSet{(-b).cwiseMin(0.0), (-b).cwiseMax(0.0)};
    }
  }
  return L1BallSet{1.0};
}

/// min f*(y) + (1/2λ)‖By‖² over `set`; f*(y) = yᵀb on dom f* for every non-smooth loss.
inline SolveResult solve_dual_projected(const NonSmoothLoss& loss, const DenseMatrix& b, const Vector& b_linear,
                                        double lambda, const FeasibleSet& set, const SolveOptions& opts = {},
                                        const Vector* start = nullptr) {
  require(b.cols() == loss.n(), "solve_dual_projected: factor must have n columns");
  const DualQuadratic problem = DualQuadratic::from_factor(b, b_linear, lambda);
  return solve_dual_qp(problem, set, opts, start);
}

struct NonSmoothReference {
  Vector x;
  Vector z;
  SolveResult dual;
};

inline SolveOptions default_dual_options() {
  SolveOptions opts;
  opts.grad_tolerance = 1e-10;
  opts.max_iters = 5000;
  return opts;
}

/// Dual route: z* = argmin zᵀb + (1/2λ)‖Aᵀz‖² over dom f*, then x* = −Aᵀz*/λ.
inline NonSmoothReference solve_nonsmooth_primal_reference(const DenseMatrix& a, const NonSmoothLoss& loss,
                                                           double lambda,
                                                           const SolveOptions& opts = default_dual_options()) {
  require(a.rows() == loss.n(), "solve_nonsmooth_primal_reference: loss dimension mismatch");
  NonSmoothReference ref;
  DualQuadratic problem;
  problem.hessian.noalias() = a * a.transpose();
  problem.hessian /= lambda;
  problem.hessian = 0.5 * (problem.hessian + problem.hessian.transpose()).eval();
  problem.linear = loss.target();
  ref.dual = solve_dual_qp(problem, conjugate_domain(loss), opts);
  ref.z = ref.dual.minimizer;
  ref.x = -(a.transpose() * ref.z) / lambda;
  return ref;
}

}  // namespace subsketch

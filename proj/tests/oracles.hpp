#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

// Independent reference computations for the test suite. None of these call into
// the library under test.
namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// One-sided Jacobi SVD: singular values in nonincreasing order.
inline Vec jacobi_singular_values(Mat a) {
  if (a.rows() < a.cols()) a.transposeInPlace();
  const Eigen::Index n = a.cols();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double alpha = a.col(p).squaredNorm();
        const double beta = a.col(q).squaredNorm();
        const double gamma = a.col(p).dot(a.col(q));
        if (std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta)) continue;
        off = std::max(off, std::abs(gamma) / std::sqrt(alpha * beta));
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        const Vec cp = a.col(p);
        a.col(p) = c * cp - s * a.col(q);
        a.col(q) = s * cp + c * a.col(q);
      }
    }
    if (off < 1e-15) break;
  }
  Vec sv(n);
  for (Eigen::Index j = 0; j < n; ++j) sv(j) = a.col(j).norm();
  std::sort(sv.data(), sv.data() + n, std::greater<double>());
  return sv;
}

/// Central difference gradient.
inline Vec numeric_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-6) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x;
    Vec xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

/// Euclidean projection onto {y : Σ|y_i| ≤ r} by bisection on the soft threshold.
inline Vec project_l1_ball_bisect(const Vec& v, double r) {
  if (v.lpNorm<1>() <= r) return v;
  double lo = 0.0;
  double hi = v.cwiseAbs().maxCoeff();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double mass = (v.cwiseAbs().array() - mid).max(0.0).sum();
    if (mass > r) lo = mid;
    else hi = mid;
  }
  const double tau = 0.5 * (lo + hi);
  Vec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out(i) = (v(i) > 0 ? 1.0 : -1.0) * std::max(std::abs(v(i)) - tau, 0.0);
  return out;
}

/// Projection onto {y : y ≥ 0, Σy = r} by bisection.
inline Vec project_simplex_bisect(const Vec& v, double r) {
  double lo = v.minCoeff() - r;
  double hi = v.maxCoeff();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double mass = (v.array() - mid).max(0.0).sum();
    if (mass > r) lo = mid;
    else hi = mid;
  }
  return (v.array() - 0.5 * (lo + hi)).max(0.0).matrix();
}

/// Closed-form ridge: argmin ½‖Ax − b‖² + (λ/2)‖x‖².
inline Vec ridge(const Mat& a, const Vec& b, double lambda) {
  Mat g = a.transpose() * a;
  g.diagonal().array() += lambda;
  return g.ldlt().solve(a.transpose() * b);
}

/// Plain gradient descent with step 1/L on a smooth strongly convex objective.
inline Vec gradient_descent(const std::function<Vec(const Vec&)>& grad, Vec x, double lipschitz, int iters) {
  for (int it = 0; it < iters; ++it) x -= grad(x) / lipschitz;
  return x;
}

/// Nesterov acceleration for μ-strongly convex, L-smooth objectives.
inline Vec accelerated_gradient(const std::function<Vec(const Vec&)>& grad, Vec x, double lipschitz, double strong,
                                int iters) {
  const double q = std::sqrt(strong / lipschitz);
  const double momentum = (1.0 - q) / (1.0 + q);
  Vec y = x;
  for (int it = 0; it < iters; ++it) {
    const Vec next = y - grad(y) / lipschitz;
    y = next + momentum * (next - x);
    x = next;
  }
  return x;
}

/// Projected gradient on a box-constrained QP ½yᵀHy + cᵀy with a long fixed iteration budget.
inline Vec box_qp(const Mat& h, const Vec& c, const Vec& lo, const Vec& hi, int iters) {
  const double step = 1.0 / Eigen::SelfAdjointEigenSolver<Mat>(h).eigenvalues().maxCoeff();
  Vec y = Vec::Zero(c.size()).cwiseMax(lo).cwiseMin(hi);
  Vec prev = y;
  for (int it = 1; it <= iters; ++it) {
    const Vec z = y + (static_cast<double>(it - 1) / (it + 2)) * (y - prev);
    prev = y;
    y = (z - step * (h * z + c)).cwiseMax(lo).cwiseMin(hi);
  }
  return y;
}

}  // namespace oracle

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "subsketch/numkit.hpp"

namespace subsketch {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class SmoothKind { Quadratic, Logistic, ReluType };
enum class NonSmoothKind { L1, Linf, Hinge };

inline std::string to_string(SmoothKind kind) {
  switch (kind) {
    case SmoothKind::Quadratic: return "quadratic";
    case SmoothKind::Logistic: return "logistic";
    case SmoothKind::ReluType: return "relu";
  }
  return "unknown";
}

inline std::string to_string(NonSmoothKind kind) {
  switch (kind) {
    case NonSmoothKind::L1: return "l1";
    case NonSmoothKind::Linf: return "linf";
    case NonSmoothKind::Hinge: return "hinge";
  }
  return "unknown";
}

namespace detail {

inline void require_finite(const Vector& w, Index n, const char* who) {
  require(w.size() == n, std::string(who) + ": length mismatch");
  require(w.allFinite(), std::string(who) + ": non-finite input");
}

inline bool is_sign_vector(const Vector& y) {
  return (y.array().abs() == 1.0).all();
}

// log(1 + e^t) without overflow.
inline double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace detail

/// Quadratic ½‖w − b‖², logistic (1/n)Σ log(1 + e^{−y_i w_i}),
/// and the ReLU-type (1/2n)Σ((w_i)₊² − 2 w_i y_i).
class SmoothLoss {
 public:
  static SmoothLoss quadratic(Vector b) { return SmoothLoss(SmoothKind::Quadratic, std::move(b)); }

  static SmoothLoss logistic(Vector y) {
    require(detail::is_sign_vector(y), "logistic loss: labels must be ±1");
    return SmoothLoss(SmoothKind::Logistic, std::move(y));
  }

  static SmoothLoss relu(Vector y) {
    require(detail::is_sign_vector(y), "relu loss: labels must be ±1");
    return SmoothLoss(SmoothKind::ReluType, std::move(y));
  }

  SmoothKind kind() const { return kind_; }
  Index n() const { return target_.size(); }
  const Vector& target() const { return target_; }

  double smoothness() const {
    switch (kind_) {
      case SmoothKind::Quadratic: return 1.0;
      case SmoothKind::Logistic: return 0.25 / static_cast<double>(n());
      case SmoothKind::ReluType: return 1.0 / static_cast<double>(n());
    }
    return 0.0;
  }

  double strong_convexity() const { return kind_ == SmoothKind::Quadratic ? 1.0 : 0.0; }

  double value(const Vector& w) const {
    detail::require_finite(w, n(), "value");
    const double inv_n = 1.0 / static_cast<double>(n());
    switch (kind_) {
      case SmoothKind::Quadratic: return 0.5 * (w - target_).squaredNorm();
      case SmoothKind::Logistic: {
        double total = 0.0;
        for (Index i = 0; i < n(); ++i) total += detail::softplus(-target_(i) * w(i));
        return total * inv_n;
      }
      case SmoothKind::ReluType: {
        double total = 0.0;
        for (Index i = 0; i < n(); ++i) {
          const double pos = std::max(w(i), 0.0);
          total += pos * pos - 2.0 * w(i) * target_(i);
        }
        return 0.5 * total * inv_n;
      }
    }
    return 0.0;
  }

  Vector gradient(const Vector& w) const {
    detail::require_finite(w, n(), "gradient");
    const double inv_n = 1.0 / static_cast<double>(n());
    Vector g(n());
    switch (kind_) {
      case SmoothKind::Quadratic: g = w - target_; break;
      case SmoothKind::Logistic:
        for (Index i = 0; i < n(); ++i) g(i) = -target_(i) * detail::sigmoid(-target_(i) * w(i)) * inv_n;
        break;
      case SmoothKind::ReluType:
        for (Index i = 0; i < n(); ++i) g(i) = (std::max(w(i), 0.0) - target_(i)) * inv_n;
        break;
    }
    return g;
  }

  Vector hessian_diag(const Vector& w) const {
    detail::require_finite(w, n(), "hessian_diag");
    const double inv_n = 1.0 / static_cast<double>(n());
    Vector h(n());
    switch (kind_) {
      case SmoothKind::Quadratic: h.setOnes(); break;
      case SmoothKind::Logistic:
        for (Index i = 0; i < n(); ++i) {
          const double s = detail::sigmoid(target_(i) * w(i));
          h(i) = s * (1.0 - s) * inv_n;
        }
        break;
      case SmoothKind::ReluType:
        for (Index i = 0; i < n(); ++i) h(i) = w(i) > 0.0 ? inv_n : 0.0;  // right derivative 0 at the kink
        break;
    }
    return h;
  }

  /// f*(z); +∞ outside the domain.
  double conjugate_value(const Vector& z) const {
    detail::require_finite(z, n(), "conjugate_value");
    const double nn = static_cast<double>(n());
    switch (kind_) {
      case SmoothKind::Quadratic: return 0.5 * z.squaredNorm() + z.dot(target_);
      case SmoothKind::Logistic: {
        double total = 0.0;
        for (Index i = 0; i < n(); ++i) {
          const double t = -nn * target_(i) * z(i);
          if (t < -1e-12 || t > 1.0 + 1e-12) return kInfinity;
          const double tc = std::clamp(t, 0.0, 1.0);
          total += detail::xlogx(tc) + detail::xlogx(1.0 - tc);
        }
        return total / nn;
      }
      case SmoothKind::ReluType: {
        double total = 0.0;
        for (Index i = 0; i < n(); ++i) {
          const double shifted = z(i) + target_(i) / nn;
          if (shifted < -1e-12) return kInfinity;
          total += 0.5 * nn * std::max(shifted, 0.0) * std::max(shifted, 0.0);
        }
        return total;
      }
    }
    return kInfinity;
  }

 private:
  SmoothLoss(SmoothKind kind, Vector target) : kind_(kind), target_(std::move(target)) {
    require(target_.size() > 0, "loss: empty target");
    require(target_.allFinite(), "loss: non-finite target");
  }

  SmoothKind kind_;
  Vector target_;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double midpoint() const { return 0.5 * (lo + hi); }
};

/// ∂f(w) split into singleton coordinates and the remaining free structure.
struct SubgradientPartition {
  NonSmoothKind kind = NonSmoothKind::L1;
  Index n = 0;
  std::vector<std::pair<Index, double>> fixed;
  std::vector<std::pair<Index, Interval>> free;  // L1, Hinge
  std::vector<Index> active;                     // Linf: convex hull of signs[i]·e_{active[i]}
  std::vector<double> signs;
  bool full_ball = false;  // Linf at a zero residual: ∂f is the whole L1 ball
  double tie_tolerance = 0.0;

  bool fully_determined() const {
    if (kind == NonSmoothKind::Linf) return !full_ball && active.size() == 1;
    return free.empty();
  }
};

inline double default_tie_tolerance(const Vector& w) {
  return 1e-7 * (1.0 + (w.size() ? w.lpNorm<Eigen::Infinity>() : 0.0));
}

/// ‖w − b‖₁, ‖w − b‖_∞, and the hinge Σ max(0, 1 − w_i b_i).
class NonSmoothLoss {
 public:
  static NonSmoothLoss l1(Vector b) { return NonSmoothLoss(NonSmoothKind::L1, std::move(b)); }
  static NonSmoothLoss linf(Vector b) { return NonSmoothLoss(NonSmoothKind::Linf, std::move(b)); }
  static NonSmoothLoss hinge(Vector b) {
    require(detail::is_sign_vector(b), "hinge loss: targets must be ±1");
    return NonSmoothLoss(NonSmoothKind::Hinge, std::move(b));
  }

  NonSmoothKind kind() const { return kind_; }
  Index n() const { return target_.size(); }
  const Vector& target() const { return target_; }

  double lipschitz() const {
    return kind_ == NonSmoothKind::Linf ? 1.0 : std::sqrt(static_cast<double>(n()));
  }

  double value(const Vector& w) const {
    detail::require_finite(w, n(), "value");
    switch (kind_) {
      case NonSmoothKind::L1: return (w - target_).lpNorm<1>();
      case NonSmoothKind::Linf: return (w - target_).lpNorm<Eigen::Infinity>();
      case NonSmoothKind::Hinge:
        return (1.0 - w.array() * target_.array()).max(0.0).sum();
    }
    return 0.0;
  }

  bool in_conjugate_domain(const Vector& z, double tie_tolerance = 1e-9) const {
    switch (kind_) {
      case NonSmoothKind::L1: return z.lpNorm<Eigen::Infinity>() <= 1.0 + tie_tolerance;
      case NonSmoothKind::Linf: return z.lpNorm<1>() <= 1.0 + tie_tolerance;
      case NonSmoothKind::Hinge: {
        const Eigen::ArrayXd bz = target_.array() * z.array();
        return (bz >= -1.0 - tie_tolerance).all() && (bz <= tie_tolerance).all();
      }
    }
    return false;
  }

  /// f*(z) = zᵀb on the domain for all three kinds; +∞ outside.
  double conjugate_value(const Vector& z, double tie_tolerance = 1e-9) const {
    detail::require_finite(z, n(), "conjugate_value");
    return in_conjugate_domain(z, tie_tolerance) ? z.dot(target_) : kInfinity;
  }

  SubgradientPartition subgradient_partition(const Vector& w, double tie_tolerance) const {
    detail::require_finite(w, n(), "subgradient_partition");
    SubgradientPartition part;
    part.kind = kind_;
    part.n = n();
    part.tie_tolerance = tie_tolerance;
    switch (kind_) {
      case NonSmoothKind::L1:
        for (Index i = 0; i < n(); ++i) {
          const double r = w(i) - target_(i);
          if (std::abs(r) > tie_tolerance) part.fixed.emplace_back(i, r > 0.0 ? 1.0 : -1.0);
          else part.free.emplace_back(i, Interval{-1.0, 1.0});
        }
        break;
      case NonSmoothKind::Hinge:
        for (Index i = 0; i < n(); ++i) {
          const double slack = 1.0 - w(i) * target_(i);
          if (slack > tie_tolerance) part.fixed.emplace_back(i, -target_(i));
          else if (slack < -tie_tolerance) part.fixed.emplace_back(i, 0.0);
          else part.free.emplace_back(i, Interval{std::min(0.0, -target_(i)), std::max(0.0, -target_(i))});
        }
        break;
      case NonSmoothKind::Linf: {
        const Vector r = w - target_;
        const double top = r.lpNorm<Eigen::Infinity>();
        if (top <= tie_tolerance) {
          part.full_ball = true;
          break;
        }
        for (Index i = 0; i < n(); ++i) {
          if (std::abs(r(i)) >= top - tie_tolerance) {
            part.active.push_back(i);
            part.signs.push_back(r(i) > 0.0 ? 1.0 : -1.0);
          } else {
            part.fixed.emplace_back(i, 0.0);
          }
        }
        break;
      }
    }
    return part;
  }

  SubgradientPartition subgradient_partition(const Vector& w) const {
    return subgradient_partition(w, default_tie_tolerance(w));
  }

  /// Deterministic selection: interval midpoints, or the first active index for L∞.
  Vector arbitrary_subgradient(const Vector& w) const {
    const SubgradientPartition part = subgradient_partition(w);
    Vector g = Vector::Zero(n());
    for (const auto& [i, v] : part.fixed) g(i) = v;
    for (const auto& [i, interval] : part.free) g(i) = interval.midpoint();
    if (kind_ == NonSmoothKind::Linf && !part.full_ball) g(part.active.front()) = part.signs.front();
    return g;
  }

 private:
  NonSmoothLoss(NonSmoothKind kind, Vector target) : kind_(kind), target_(std::move(target)) {
    require(target_.size() > 0, "loss: empty target");
    require(target_.allFinite(), "loss: non-finite target");
  }

  NonSmoothKind kind_;
  Vector target_;
};

}  // namespace subsketch

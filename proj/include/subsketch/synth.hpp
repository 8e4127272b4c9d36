#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "subsketch/numkit.hpp"
#include "subsketch/spectrum.hpp"

namespace subsketch {

enum class DecayKind { Polynomial, Exponential, Geometric, Explicit };

inline std::string to_string(DecayKind kind) {
  switch (kind) {
    case DecayKind::Polynomial: return "poly";
    case DecayKind::Exponential: return "exp";
    case DecayKind::Geometric: return "geom";
    case DecayKind::Explicit: return "explicit";
  }
  return "unknown";
}

struct SpectrumSpec {
  DecayKind kind = DecayKind::Exponential;
  double nu = 0.1;     // polynomial / exponential rate
  double ratio = 0.98; // geometric ratio
  std::vector<double> values;  // explicit σ list
  std::optional<double> scale; // √n for poly/exp, 1 otherwise

  static SpectrumSpec polynomial(double nu) { return {DecayKind::Polynomial, nu, 0.0, {}, std::nullopt}; }
  static SpectrumSpec exponential(double nu) { return {DecayKind::Exponential, nu, 0.0, {}, std::nullopt}; }
  static SpectrumSpec geometric(double ratio) { return {DecayKind::Geometric, 0.0, ratio, {}, std::nullopt}; }
  static SpectrumSpec explicit_values(std::vector<double> v) {
    return {DecayKind::Explicit, 0.0, 0.0, std::move(v), std::nullopt};
  }

  double resolved_scale(Index n) const {
    if (scale) return *scale;
    return kind == DecayKind::Polynomial || kind == DecayKind::Exponential ? std::sqrt(static_cast<double>(n)) : 1.0;
  }
};

/// σ_1..σ_ρ for the profile; j is 1-based.
inline Vector generate_spectrum(const SpectrumSpec& spec, Index rho, Index n) {
  const double scale = spec.resolved_scale(n);
  require(scale > 0.0, "spectrum: scale must be positive");
  Vector sigma(rho);
  for (Index j = 1; j <= rho; ++j) {
    const double jj = static_cast<double>(j);
    double v = 0.0;
    switch (spec.kind) {
      case DecayKind::Polynomial: v = scale * std::pow(jj, -(1.0 + spec.nu) / 2.0); break;
      case DecayKind::Exponential: v = scale * std::exp(-spec.nu * jj / 2.0); break;
      case DecayKind::Geometric: v = scale * std::pow(spec.ratio, jj); break;
      case DecayKind::Explicit:
        require(static_cast<Index>(spec.values.size()) == rho, "spectrum: explicit list must have min(n, d) entries");
        v = scale * spec.values[static_cast<std::size_t>(j - 1)];
        break;
    }
    sigma(j - 1) = v;
  }
  require(sigma.allFinite() && (sigma.array() > 0.0).all(), "spectrum: values must be finite and positive");
  for (Index j = 1; j < rho; ++j) require(sigma(j) <= sigma(j - 1), "spectrum: values must be nonincreasing");
  return sigma;
}

struct SynthInstance {
  DenseMatrix a;
  DenseMatrix u;  // n×ρ
  DenseMatrix v;  // d×ρ
  SpectralSummary summary;
};

/// A = UΣVᵀ with Haar-distributed frames.
inline SynthInstance synth_matrix(Index n, Index d, const SpectrumSpec& spec, SeededRng& rng) {
  require(n >= 1 && d >= 1, "synth_matrix: empty shape");
  const Index rho = std::min(n, d);
  SynthInstance out;
  out.summary.n = n;
  out.summary.d = d;
  out.summary.singular_values = generate_spectrum(spec, rho, n);
  out.u = sample_haar_frame(n, rho, rng);
  out.v = sample_haar_frame(d, rho, rng);
  out.a = out.u * out.summary.singular_values.asDiagonal() * out.v.transpose();
  return out;
}

inline Vector synth_labels(Index n, SeededRng& rng) {
  Vector y(n);
  for (Index i = 0; i < n; ++i) y(i) = rng.rademacher();
  return y;
}

/// b = A x_pl + w with w ~ N(0, (σ²/n) I).
inline Vector synth_observation(const DenseMatrix& a, const Vector& x_pl, double noise_variance, SeededRng& rng) {
  require(x_pl.norm() <= 1.0 + 1e-12, "synth_observation: x_pl must lie in the unit ball");
  require(noise_variance >= 0.0, "synth_observation: noise variance must be nonnegative");
  Vector b = a * x_pl;
  if (noise_variance > 0.0) b += sample_gaussian_vector(a.rows(), noise_variance / static_cast<double>(a.rows()), rng);
  return b;
}

}  // namespace subsketch

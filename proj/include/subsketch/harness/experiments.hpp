#pragma once

#include <atomic>
#include <chrono>
#include <map>
#include <mutex>
#include <cstdlib>
#include <exception>
#include <functional>
#include <iostream>
#include <optional>
#include <thread>
#include <vector>

#include "subsketch/analysis.hpp"
#include "subsketch/embeddings.hpp"
#include "subsketch/estimators.hpp"
#include "subsketch/harness/config.hpp"
#include "subsketch/harness/records.hpp"
#include "subsketch/kernelize.hpp"
#include "subsketch/losses.hpp"
#include "subsketch/synth.hpp"

namespace subsketch::harness {

/// min(hardware threads, SUBSKETCH_THREADS) with a floor of one.
inline unsigned thread_cap() {
  unsigned cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SUBSKETCH_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) cap = std::min(cap, static_cast<unsigned>(v));
  }
  return cap;
}

/// Runs fn(0..count-1) on up to thread_cap() workers; the first exception is rethrown after joining.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(thread_cap(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline constexpr std::uint64_t kInstanceStream = 0x1057a9ceULL << 32;

/// stream_id for the sketch of (trial, m_index).
inline std::uint64_t sketch_stream(std::uint64_t seed, Index trial, Index m_index) {
  return hash64(seed, static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(m_index));
}

inline EmbeddingKind embedding_kind(const std::string& name) {
  if (name == "gaussian") return EmbeddingKind::ObliviousGaussian;
  if (name == "srht") return EmbeddingKind::ObliviousSRHT;
  if (name == "nystrom") return EmbeddingKind::ColumnSubsample;
  if (name == "adaptive-srht") return EmbeddingKind::AdaptiveSRHT;
  if (name == "adaptive-gaussian") return EmbeddingKind::AdaptiveGaussian;
  throw UsageError("embedding", "no sketch kind for '" + name + "'");
}

struct TrialInstance {
  SynthInstance synth;
  std::optional<SmoothLoss> smooth;
  std::optional<NonSmoothLoss> nonsmooth;
  Reference reference;
  std::string failure;  // non-empty when the reference solve failed
};

/// Data and loss for one trial. Quadratic targets are b = A x_pl + w with a random unit x_pl.
inline TrialInstance make_trial_instance(const ExperimentConfig& cfg, const std::string& loss, Index trial,
                                         bool with_reference = true) {
  SeededRng rng(cfg.seed, hash64(kInstanceStream, static_cast<std::uint64_t>(trial)));
  TrialInstance inst;
  inst.synth = synth_matrix(cfg.n, cfg.d, cfg.spectrum(), rng);
  const DenseMatrix& a = inst.synth.a;
  if (loss == "quadratic") {
    Vector x_pl = sample_gaussian_vector(cfg.d, 1.0, rng);
    x_pl /= x_pl.norm();
    inst.smooth = SmoothLoss::quadratic(synth_observation(a, x_pl, cfg.noise, rng));
  } else if (loss == "logistic") {
    inst.smooth = SmoothLoss::logistic(synth_labels(cfg.n, rng));
  } else if (loss == "relu") {
    inst.smooth = SmoothLoss::relu(synth_labels(cfg.n, rng));
  } else if (loss == "hinge") {
    inst.nonsmooth = NonSmoothLoss::hinge(synth_labels(cfg.n, rng));
  } else if (loss == "l1") {
    inst.nonsmooth = NonSmoothLoss::l1(sample_gaussian_vector(cfg.n, 1.0, rng));
  } else if (loss == "linf") {
    inst.nonsmooth = NonSmoothLoss::linf(sample_gaussian_vector(cfg.n, 1.0, rng));
  } else {
    throw UsageError("loss", "unknown loss '" + loss + "'");
  }
  if (!with_reference) return inst;
  try {
    if (inst.smooth) {
      SolveOptions opts;
      opts.grad_tolerance = std::min(cfg.tol, 1e-10);
      opts.max_iters = std::max<Index>(cfg.max_iters, 200);
      inst.reference = reference_solution(a, *inst.smooth, cfg.lambda, opts);
    } else {
      SolveOptions opts = default_dual_options();
      opts.max_iters = std::max<Index>(opts.max_iters, cfg.max_iters);
      inst.reference = nonsmooth_reference(a, *inst.nonsmooth, cfg.lambda, opts);
    }
  } catch (const std::exception& e) {
    inst.failure = std::string("reference: ") + e.what();
  }
  return inst;
}

namespace detail {

inline RunRecord base_record(const ExperimentConfig& cfg, const std::string& experiment, const std::string& loss,
                             Index trial, Index m) {
  RunRecord r;
  r.experiment = experiment;
  r.trial = trial;
  r.seed = cfg.seed;
  r.n = cfg.n;
  r.d = cfg.d;
  r.decay = to_string(cfg.decay);
  if (cfg.decay == DecayKind::Polynomial || cfg.decay == DecayKind::Exponential) r.nu = cfg.nu;
  if (cfg.decay == DecayKind::Geometric) r.nu = cfg.ratio;
  r.loss = loss;
  r.lambda = cfg.lambda;
  r.embedding = cfg.embedding;
  r.q = cfg.q;
  r.m = m;
  return r;
}

inline RunRecord failed_record(RunRecord r, const std::string& why) {
  r.converged = false;
  r.failure = why;
  return r;
}

inline SolveOptions smooth_options(const ExperimentConfig& cfg) {
  SolveOptions o;
  o.grad_tolerance = cfg.tol;
  o.max_iters = cfg.max_iters;
  return o;
}

inline std::optional<double> opt(double v) {
  if (std::isfinite(v)) return v;
  return std::nullopt;
}

inline void fill_recovery(RunRecord& r, const RecoveryReport& rep) {
  r.rel_err_x0 = rep.rel_err_x0;
  r.rel_err_x1 = rep.rel_err_x1;
  r.residual_norm = opt(rep.residual_norm);
  r.bound_rhs = opt(rep.bound_rhs);
  if (std::isfinite(rep.residual_norm)) r.condition_ok = rep.condition_ok;
  r.objective = rep.objective;
  r.runtime_ms = rep.runtime_ms;
  r.converged = rep.converged;
  if (!rep.converged) r.failure = "sketched solve did not converge";
}

inline std::optional<double> spectral_residual_for(const SynthInstance& inst, Index m) {
  if (m / 2 < 1) return std::nullopt;
  return spectral_residual(inst.summary, static_cast<double>(m / 2));
}

inline std::vector<RunRecord> run_smooth_cell(const ExperimentConfig& cfg, const TrialInstance& inst,
                                              const std::string& experiment, const std::string& loss, Index trial,
                                              Index m_index) {
  const Index m = cfg.m[static_cast<std::size_t>(m_index)];
  RunRecord base = base_record(cfg, experiment, loss, trial, m);
  base.spectral_residual_k = spectral_residual_for(inst.synth, m);
  if (!inst.failure.empty()) return {failed_record(base, inst.failure)};
  const DenseMatrix& a = inst.synth.a;
  SeededRng rng(cfg.seed, sketch_stream(cfg.seed, trial, m_index));
  RecoveryOptions ropts;
  ropts.solve = smooth_options(cfg);
  try {
    if (experiment == "iterative") {
      const EmbeddingSpec spec{embedding_kind(cfg.embedding), m, cfg.q, rng};
      const auto reports = recover_iterative(a, *inst.smooth, cfg.lambda, spec, cfg.T, inst.reference, ropts);
      std::vector<RunRecord> rows;
      for (std::size_t t = 0; t < reports.size(); ++t) {
        RunRecord r = base;
        r.T = static_cast<Index>(t + 1);
        fill_recovery(r, reports[t]);
        rows.push_back(std::move(r));
      }
      return rows;
    }
    RunRecord r = base;
    if (cfg.embedding == "oblivious-dagger") {
      fill_recovery(r, recover_oblivious_dagger(a, *inst.smooth, cfg.lambda, m, rng, inst.reference, ropts));
    } else {
      const EmbeddingSpec spec{embedding_kind(cfg.embedding), m, cfg.q, rng};
      fill_recovery(r, recover_sketched(a, *inst.smooth, cfg.lambda, spec, inst.reference, ropts));
    }
    return {r};
  } catch (const std::exception& e) {
    return {failed_record(base, e.what())};
  }
}

inline std::vector<RunRecord> run_nonsmooth_cell(const ExperimentConfig& cfg, const TrialInstance& inst,
                                                 const std::string& loss, Index trial, Index m_index) {
  const Index m = cfg.m[static_cast<std::size_t>(m_index)];
  RunRecord r = base_record(cfg, "nonsmooth", loss, trial, m);
  r.spectral_residual_k = spectral_residual_for(inst.synth, m);
  if (!inst.failure.empty()) return {failed_record(r, inst.failure)};
  SeededRng rng(cfg.seed, sketch_stream(cfg.seed, trial, m_index));
  SolveOptions opts = default_dual_options();
  opts.max_iters = std::max<Index>(opts.max_iters, cfg.max_iters);
  try {
    const EmbeddingSpec spec{embedding_kind(cfg.embedding), m, cfg.q, rng};
    const NonSmoothReport rep = recover_nonsmooth(inst.synth.a, *inst.nonsmooth, cfg.lambda, spec,
                                                  DualRoute::RestrictedDual, inst.reference, opts);
    fill_recovery(r, rep.report);
    r.condition_ok.reset();
    const double x_norm = inst.reference.x.norm();
    r.extras["error_x1"] = rep.error_x1;
    r.extras["error_subgradient"] = rep.error_arbitrary;
    r.extras["rel_err_subgradient"] = x_norm > 0.0 ? rep.error_arbitrary / x_norm : rep.error_arbitrary;
    r.extras["dual_objective_gap"] = std::abs(rep.plain_objective - rep.route_objective);
    r.extras["free_count"] = static_cast<double>(rep.free_count);
  } catch (const std::exception& e) {
    return {failed_record(r, e.what())};
  }
  return {r};
}

inline std::vector<RunRecord> run_kernel_cell(const ExperimentConfig& cfg, const TrialInstance& inst,
                                              const GramMatrix& gram, Index trial, Index m_index) {
  const Index m = cfg.m[static_cast<std::size_t>(m_index)];
  RunRecord r = base_record(cfg, "kernel", cfg.loss, trial, m);
  r.spectral_residual_k = spectral_residual_for(inst.synth, m);
  if (!inst.failure.empty()) return {failed_record(r, inst.failure)};
  const DenseMatrix& a = inst.synth.a;
  const SmoothLoss& loss = *inst.smooth;
  SeededRng rng(cfg.seed, sketch_stream(cfg.seed, trial, m_index));
  try {
    const auto start = std::chrono::steady_clock::now();
    const EmbeddingSpec spec{EmbeddingKind::AdaptiveGaussian, m, 0, rng};
    const DenseMatrix s_tilde = draw_adaptive_base(a.rows(), spec);
    const Sketch sketch = assemble_sketch(a, a.transpose() * s_tilde, spec);
    RecoveryOptions ropts;
    ropts.solve = smooth_options(cfg);
    const RecoveryReport feat = recover_from_sketch(a, sketch, loss, cfg.lambda, inst.reference, ropts);
    fill_recovery(r, feat);

    const KernelSolution ker = solve_sketched_kernel(gram, s_tilde, loss, cfg.lambda, ropts.solve);
    const Vector w1 = kernel_first_order(gram, s_tilde, ker.alpha, loss, cfg.lambda);
    const Vector w_star = -loss.gradient(a * inst.reference.x) / cfg.lambda;
    const Vector x_from_kernel = a.transpose() * w1;
    const double w_norm = std::sqrt(std::max(w_star.dot(gram.k * w_star), 0.0));
    const double rkhs_rel = rkhs_distance(gram, w1, w_star) / w_norm;
    r.extras["equivalence_gap"] = (x_from_kernel - feat.x1).norm() / feat.x1.norm();
    r.extras["rkhs_rel_err"] = rkhs_rel;
    r.extras["rkhs_minus_euclidean"] = std::abs(rkhs_rel - feat.rel_err_x1);
    r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (!ker.solve.converged) {
      r.converged = false;
      r.failure = "kernel solve did not converge";
    }
  } catch (const std::exception& e) {
    return {failed_record(r, e.what())};
  }
  return {r};
}

inline std::vector<RunRecord> run_risk_cell(const ExperimentConfig& cfg, const TrialInstance& inst, Index trial,
                                            Index m_index) {
  const Index m = cfg.m[static_cast<std::size_t>(m_index)];
  RunRecord r = base_record(cfg, "risk", "quadratic", trial, m);
  r.spectral_residual_k = spectral_residual_for(inst.synth, m);
  SeededRng rng(cfg.seed, sketch_stream(cfg.seed, trial, m_index));
  try {
    const auto start = std::chrono::steady_clock::now();
    const EmbeddingSpec spec{embedding_kind(cfg.embedding), m, cfg.q, rng};
    SeededRng noise_rng = rng.substream(0x7015e);
    const RiskEstimate est = risk_zero_order(inst.synth.a, spec, cfg.noise, cfg.lambda, cfg.draws, noise_rng);
    const Index d_s = statistical_dimension(inst.synth.summary, cfg.noise, cfg.n);
    r.objective = est.mc_risk;
    r.bound_rhs = est.analytic_limit;
    r.residual_norm = est.residual;
    r.condition_ok = statistical_event_holds(inst.synth.summary, d_s, est.residual);
    r.extras["statistical_dimension"] = static_cast<double>(d_s);
    r.extras["variance_term"] = est.variance_term;
    r.extras["relative_gap"] = std::abs(est.mc_risk - est.analytic_limit) / est.analytic_limit;
    r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  } catch (const std::exception& e) {
    return {failed_record(r, e.what())};
  }
  return {r};
}

inline std::vector<RunRecord> run_conditioning_cell(const ExperimentConfig& cfg, const TrialInstance& inst,
                                                    Index trial, Index m_index) {
  const Index m = cfg.m[static_cast<std::size_t>(m_index)];
  RunRecord r = base_record(cfg, "conditioning", "quadratic", trial, m);
  r.spectral_residual_k = spectral_residual_for(inst.synth, m);
  SeededRng rng(cfg.seed, sketch_stream(cfg.seed, trial, m_index));
  try {
    const auto start = std::chrono::steady_clock::now();
    DenseMatrix q_s;
    if (cfg.embedding == "oblivious-dagger") {
      q_s = sample_gaussian_matrix(cfg.d, m, 1.0 / static_cast<double>(m), rng);
    } else {
      q_s = make_sketch(inst.synth.a, EmbeddingSpec{embedding_kind(cfg.embedding), m, cfg.q, rng}).q_s;
    }
    const ConditionNumbers c = condition_numbers(inst.synth.a, q_s, cfg.lambda);
    r.kappa = c.kappa;
    r.kappa_dagger = c.kappa_dagger;
    r.condition_ok = c.kappa_dagger <= c.kappa * (1.0 + 1e-9);
    r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  } catch (const std::exception& e) {
    return {failed_record(r, e.what())};
  }
  return {r};
}

}  // namespace detail

/// Rows ordered by (trial, m index, T) whatever the execution order.
inline std::vector<RunRecord> collect_records(const ExperimentConfig& cfg) {
  require(cfg.experiment != Experiment::Certify, "collect_records: certify has no record stream");
  const std::string name = to_string(cfg.experiment);
  const Index cells = static_cast<Index>(cfg.m.size());
  std::vector<RunRecord> all;
  for (Index trial = 0; trial < cfg.trials; ++trial) {
    const bool needs_reference = cfg.experiment != Experiment::Risk && cfg.experiment != Experiment::Conditioning;
    const TrialInstance inst = make_trial_instance(cfg, cfg.loss, trial, needs_reference);
    std::optional<GramMatrix> gram;
    if (cfg.experiment == Experiment::Kernel) gram = gram_from_features(inst.synth.a);
    std::vector<std::vector<RunRecord>> slots(static_cast<std::size_t>(cells));
    parallel_for(slots.size(), [&](std::size_t j) {
      const Index mi = static_cast<Index>(j);
      switch (cfg.experiment) {
        case Experiment::NonSmooth: slots[j] = detail::run_nonsmooth_cell(cfg, inst, cfg.loss, trial, mi); break;
        case Experiment::Kernel: slots[j] = detail::run_kernel_cell(cfg, inst, *gram, trial, mi); break;
        case Experiment::Risk: slots[j] = detail::run_risk_cell(cfg, inst, trial, mi); break;
        case Experiment::Conditioning: slots[j] = detail::run_conditioning_cell(cfg, inst, trial, mi); break;
        default: slots[j] = detail::run_smooth_cell(cfg, inst, name, cfg.loss, trial, mi);
      }
    });
    for (auto& s : slots)
      for (auto& r : s) all.push_back(std::move(r));
  }
  return all;
}

/// Runs the experiment and persists CSV (atomically) and the JSON summary.
inline std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
  std::vector<RunRecord> rows = collect_records(cfg);
  for (const auto& r : rows)
    if (!r.converged && log)
      *log << "warning: trial " << r.trial << " m=" << r.m << " T=" << r.T << ": " << r.failure << '\n';
  write_csv_atomically(cfg.csv_path(), rows);
  nlohmann::ordered_json summary;
  summary["experiment"] = to_string(cfg.experiment);
  summary["seed"] = cfg.seed;
  summary["trials"] = cfg.trials;
  summary["cells"] = summarize(rows);
  write_file_atomically(cfg.json_path(), summary.dump(2) + "\n");
  return rows;
}

// ---------------------------------------------------------------------------
// Certificates

struct CertificateResult {
  std::string name;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  std::vector<std::string> failures;

  bool pass() const { return failures.empty(); }
};

inline const std::vector<std::string>& certificate_names() {
  static const std::vector<std::string> names{"first-order-bound", "residual-bound", "iterative-contraction",
                                              "conditioning",      "oblivious-floor", "nonsmooth-bound"};
  return names;
}

namespace detail {

inline std::string describe(const RunRecord& r) {
  std::ostringstream os;
  os << "trial=" << r.trial << " m=" << r.m << " loss=" << r.loss;
  if (r.T) os << " t=" << r.T;
  return os.str();
}

inline constexpr double kFloor = 1e-10;

inline ExperimentConfig sub_config(const ExperimentConfig& cfg, Experiment e, const std::string& loss,
                                   const std::string& embedding) {
  ExperimentConfig c = cfg;
  c.experiment = e;
  c.loss = loss;
  c.embedding = embedding;
  if (embedding.rfind("adaptive", 0) != 0 && embedding != "nystrom") c.q = 0;
  return c;
}

}  // namespace detail

/// Rows with condition_ok = true must satisfy rel_err_x1 ≤ bound_rhs; the others are skipped.
inline CertificateResult certify_first_order_bound(const std::vector<RunRecord>& rows) {
  CertificateResult out{"first-order-bound", 0, 0, {}};
  for (const auto& r : rows) {
    if (!r.condition_ok || !*r.condition_ok || !r.bound_rhs || !r.rel_err_x1) {
      ++out.skipped;
      continue;
    }
    ++out.checked;
    if (!(*r.rel_err_x1 <= *r.bound_rhs * (1.0 + 1e-9) + detail::kFloor))
      out.failures.push_back(detail::describe(r) + " rel_err_x1=" + detail::format_double(*r.rel_err_x1) +
                             " bound=" + detail::format_double(*r.bound_rhs));
  }
  return out;
}

/// ‖P_S^⊥Aᵀ‖₂ ≤ 26·R_{m/2}(A) for adaptive Gaussian rows.
inline CertificateResult certify_residual_bound(const std::vector<RunRecord>& rows) {
  CertificateResult out{"residual-bound", 0, 0, {}};
  for (const auto& r : rows) {
    if (r.embedding != "adaptive-gaussian" || !r.residual_norm || !r.spectral_residual_k) {
      ++out.skipped;
      continue;
    }
    ++out.checked;
    if (!(*r.residual_norm <= 26.0 * *r.spectral_residual_k + detail::kFloor))
      out.failures.push_back(detail::describe(r) + " residual=" + detail::format_double(*r.residual_norm) +
                             " 26R_k=" + detail::format_double(26.0 * *r.spectral_residual_k));
  }
  return out;
}

/// Cumulative contraction rel_err_t ≤ (μZ²/2λ)^{t/2} on condition-gated iterative rows.
inline CertificateResult certify_iterative_contraction(const std::vector<RunRecord>& rows) {
  CertificateResult out = certify_first_order_bound(rows);
  out.name = "iterative-contraction";
  return out;
}

inline CertificateResult certify_conditioning(const std::vector<RunRecord>& rows) {
  CertificateResult out{"conditioning", 0, 0, {}};
  for (const auto& r : rows) {
    if (!r.kappa || !r.kappa_dagger) {
      ++out.skipped;
      continue;
    }
    ++out.checked;
    if (!(*r.kappa_dagger <= *r.kappa * (1.0 + 1e-9)))
      out.failures.push_back(detail::describe(r) + " kappa_dagger=" + detail::format_double(*r.kappa_dagger) +
                             " kappa=" + detail::format_double(*r.kappa));
  }
  return out;
}

/// Per m < d: mean rel_err_x0² ≥ (1 − m/d) − 3·SE over the trials.
inline CertificateResult certify_oblivious_floor(const std::vector<RunRecord>& rows) {
  CertificateResult out{"oblivious-floor", 0, 0, {}};
  std::map<std::pair<std::string, Index>, std::vector<double>> cells;
  std::map<std::pair<std::string, Index>, Index> dims;
  for (const auto& r : rows) {
    if (!r.rel_err_x0 || r.m >= r.d) {
      ++out.skipped;
      continue;
    }
    cells[{r.embedding, r.m}].push_back(*r.rel_err_x0 * *r.rel_err_x0);
    dims[{r.embedding, r.m}] = r.d;
  }
  for (const auto& [key, samples] : cells) {
    if (samples.size() < 2) {
      out.skipped += samples.size();
      continue;
    }
    ++out.checked;
    const double bound = 1.0 - static_cast<double>(key.second) / static_cast<double>(dims[key]);
    const LowerBoundCheck c = one_sided_check(samples, bound);
    if (!c.pass)
      out.failures.push_back("embedding=" + key.first + " m=" + std::to_string(key.second) +
                             " mean=" + detail::format_double(c.mean) + " bound=" + detail::format_double(bound) +
                             " se=" + detail::format_double(c.standard_error));
  }
  return out;
}

/// ‖x̂¹ − x*‖ ≤ √6·(L/λ)·‖P_S^⊥Aᵀ‖₂ on non-smooth rows.
inline CertificateResult certify_nonsmooth_bound(const std::vector<RunRecord>& rows) {
  CertificateResult out{"nonsmooth-bound", 0, 0, {}};
  for (const auto& r : rows) {
    const auto it = r.extras.find("error_x1");
    if (it == r.extras.end() || !r.bound_rhs) {
      ++out.skipped;
      continue;
    }
    ++out.checked;
    if (!(it->second <= *r.bound_rhs * (1.0 + 1e-9) + detail::kFloor))
      out.failures.push_back(detail::describe(r) + " error=" + detail::format_double(it->second) +
                             " bound=" + detail::format_double(*r.bound_rhs));
  }
  return out;
}

/// Runs the named certificates ("all" or a comma list) on instances drawn from the config.
inline std::vector<CertificateResult> run_certificates(const ExperimentConfig& cfg) {
  std::vector<std::string> wanted;
  if (cfg.suite == "all") {
    wanted = certificate_names();
  } else {
    for (const auto& name : detail::split(cfg.suite, ',')) {
      detail::require_choice("suite", name, certificate_names());
      wanted.push_back(name);
    }
  }
  auto wants = [&](const char* name) { return std::find(wanted.begin(), wanted.end(), name) != wanted.end(); };
  const std::string adaptive = cfg.embedding.rfind("adaptive", 0) == 0 ? cfg.embedding : "adaptive-gaussian";

  std::vector<CertificateResult> results;
  if (wants("first-order-bound") || wants("residual-bound")) {
    std::vector<RunRecord> rows;
    for (const auto& loss : smooth_loss_names()) {
      auto part = collect_records(detail::sub_config(cfg, Experiment::Sweep, loss, adaptive));
      rows.insert(rows.end(), part.begin(), part.end());
    }
    if (wants("first-order-bound")) results.push_back(certify_first_order_bound(rows));
    if (wants("residual-bound")) results.push_back(certify_residual_bound(rows));
  }
  if (wants("iterative-contraction")) {
    const std::string loss = cfg.smooth_loss() ? cfg.loss : "logistic";
    results.push_back(certify_iterative_contraction(collect_records(detail::sub_config(cfg, Experiment::Iterative, loss, adaptive))));
  }
  if (wants("conditioning")) {
    results.push_back(
        certify_conditioning(collect_records(detail::sub_config(cfg, Experiment::Conditioning, "quadratic", adaptive))));
  }
  if (wants("oblivious-floor")) {
    std::vector<RunRecord> rows;
    for (const char* emb : {"gaussian", "srht"}) {
      auto part = collect_records(detail::sub_config(cfg, Experiment::Sweep, "quadratic", emb));
      rows.insert(rows.end(), part.begin(), part.end());
    }
    results.push_back(certify_oblivious_floor(rows));
  }
  if (wants("nonsmooth-bound")) {
    std::vector<RunRecord> rows;
    for (const auto& loss : nonsmooth_loss_names()) {
      auto part = collect_records(detail::sub_config(cfg, Experiment::NonSmooth, loss, adaptive));
      rows.insert(rows.end(), part.begin(), part.end());
    }
    results.push_back(certify_nonsmooth_bound(rows));
  }
  return results;
}

/// Prints one line per certificate and per failure; returns the process exit status.
inline int certify(const ExperimentConfig& cfg, std::ostream& os) {
  const auto results = run_certificates(cfg);
  int status = 0;
  for (const auto& r : results) {
    os << "certificate=" << r.name << " status=" << (r.pass() ? "PASS" : "FAIL") << " checked=" << r.checked
       << " skipped=" << r.skipped << " failures=" << r.failures.size() << '\n';
    for (const auto& f : r.failures) os << "failure certificate=" << r.name << ' ' << f << '\n';
    if (!r.pass()) status = 1;
  }
  return status;
}

}  // namespace subsketch::harness

#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "subsketch/errors.hpp"
#include "subsketch/numkit.hpp"
#include "subsketch/synth.hpp"

namespace subsketch::harness {

class UsageError : public ArgumentError {
 public:
  UsageError(std::string key, const std::string& what) : ArgumentError(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

enum class Experiment { Recover, Sweep, Iterative, NonSmooth, Kernel, Risk, Certify, Conditioning };

inline std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::Recover: return "recover";
    case Experiment::Sweep: return "sweep";
    case Experiment::Iterative: return "iterative";
    case Experiment::NonSmooth: return "nonsmooth";
    case Experiment::Kernel: return "kernel";
    case Experiment::Risk: return "risk";
    case Experiment::Certify: return "certify";
    case Experiment::Conditioning: return "conditioning";
  }
  return "unknown";
}

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"recover", "sweep",  "iterative", "nonsmooth",
                                              "kernel",  "risk",   "certify",   "conditioning"};
  return names;
}

inline const std::vector<std::string>& smooth_loss_names() {
  static const std::vector<std::string> names{"quadratic", "logistic", "relu"};
  return names;
}

inline const std::vector<std::string>& nonsmooth_loss_names() {
  static const std::vector<std::string> names{"l1", "linf", "hinge"};
  return names;
}

inline const std::vector<std::string>& embedding_names() {
  static const std::vector<std::string> names{"gaussian",          "srht",          "nystrom",
                                              "adaptive-gaussian", "adaptive-srht", "oblivious-dagger"};
  return names;
}

struct ExperimentConfig {
  Experiment experiment = Experiment::Sweep;
  Index n = 0;
  Index d = 0;
  DecayKind decay = DecayKind::Exponential;
  double nu = 0.1;
  double ratio = 0.98;
  std::vector<double> values;  // explicit spectrum
  std::string loss = "logistic";
  double lambda = 1e-4;
  std::string embedding = "adaptive-gaussian";
  std::vector<Index> m{8, 16, 32, 64, 128, 256, 512};
  Index q = 0;
  Index T = 5;
  Index trials = 10;
  std::uint64_t seed = 42;
  double tol = 1e-10;
  Index max_iters = 200;
  std::string out_path;
  double noise = 1.0;  // σ² for quadratic targets and the risk experiment
  Index draws = 500;   // noise draws per risk cell
  std::string suite = "all";

  std::vector<std::string> provenance;  // "key=value (source)" lines

  SpectrumSpec spectrum() const {
    switch (decay) {
      case DecayKind::Polynomial: return SpectrumSpec::polynomial(nu);
      case DecayKind::Exponential: return SpectrumSpec::exponential(nu);
      case DecayKind::Geometric: return SpectrumSpec::geometric(ratio);
      case DecayKind::Explicit: return SpectrumSpec::explicit_values(values);
    }
    return SpectrumSpec::exponential(nu);
  }

  bool smooth_loss() const {
    for (const auto& s : smooth_loss_names())
      if (s == loss) return true;
    return false;
  }

  std::string csv_path() const { return out_path.empty() ? "subsketch_" + to_string(experiment) + ".csv" : out_path; }

  std::string json_path() const {
    const std::string csv = csv_path();
    if (csv.size() > 4 && csv.compare(csv.size() - 4, 4, ".csv") == 0) return csv.substr(0, csv.size() - 4) + ".json";
    return csv + ".json";
  }
};

namespace detail {

inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{"experiment", "n",     "d",     "decay", "nu",        "ratio",
                                             "values",     "loss",  "lambda", "embedding", "m",   "q",
                                             "T",          "trials", "seed",  "tol",   "max-iters", "out",
                                             "noise",      "draws", "suite"};
  return keys;
}

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline double to_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw UsageError(key, "--" + key + ": expected a number, got '" + text + "'");
  }
}

inline long long to_integer(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw UsageError(key, "--" + key + ": expected an integer, got '" + text + "'");
  }
}

inline std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

inline void require_choice(const std::string& key, const std::string& value, const std::vector<std::string>& choices) {
  for (const auto& c : choices)
    if (c == value) return;
  std::string list;
  for (const auto& c : choices) list += (list.empty() ? "" : "|") + c;
  throw UsageError(key, "--" + key + ": invalid value '" + value + "' (expected " + list + ")");
}

}  // namespace detail

/// "8,16,32" or "a,b,...,c" (geometric when c is reachable by the ratio b/a, arithmetic otherwise).
inline std::vector<Index> parse_m_list(const std::string& text) {
  const std::string key = "m";
  const auto parts = detail::split(text, ',');
  if (parts.empty()) throw UsageError(key, "--m: empty list");
  std::vector<Index> out;
  const auto ellipsis = std::find(parts.begin(), parts.end(), "...");
  if (ellipsis != parts.end()) {
    if (parts.size() != 4 || ellipsis != parts.begin() + 2)
      throw UsageError(key, "--m: range form is 'a,b,...,c'");
    const Index a = detail::to_integer(key, parts[0]);
    const Index b = detail::to_integer(key, parts[1]);
    const Index c = detail::to_integer(key, parts[3]);
    if (a < 1 || b <= a || c < b) throw UsageError(key, "--m: range must satisfy 1 <= a < b <= c");
    if (b % a == 0) {
      std::vector<Index> geo;
      for (Index v = a; v <= c; v *= b / a) geo.push_back(v);
      if (geo.back() == c) return geo;
    }
    if ((c - a) % (b - a) != 0) throw UsageError(key, "--m: range end is not reached by the progression");
    for (Index v = a; v <= c; v += b - a) out.push_back(v);
    return out;
  }
  for (const auto& p : parts) out.push_back(detail::to_integer(key, p));
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] < 1) throw UsageError(key, "--m: sketch sizes must be positive");
    if (i > 0 && out[i] <= out[i - 1]) throw UsageError(key, "--m: list must be sorted ascending without repeats");
  }
  return out;
}

/// `key = value` lines, `#` comments. Keys are the long flag names.
inline std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("config", "--config: cannot open '" + path + "'");
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config", path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const auto& keys = detail::config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw UsageError(key, path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    out[key] = detail::trim(line.substr(eq + 1));
  }
  return out;
}

/// Resolves flags over file keys over per-experiment defaults.
inline ExperimentConfig resolve_config(const std::map<std::string, std::string>& flags,
                                       const std::map<std::string, std::string>& file) {
  std::map<std::string, std::string> merged = file;
  ExperimentConfig cfg;
  for (const auto& [key, value] : flags) {
    const auto it = file.find(key);
    if (it != file.end() && it->second != value)
      cfg.provenance.push_back(key + "=" + value + " (flag overrides file value '" + it->second + "')");
    else
      cfg.provenance.push_back(key + "=" + value + " (flag)");
    merged[key] = value;
  }
  for (const auto& [key, value] : file)
    if (!flags.count(key)) cfg.provenance.push_back(key + "=" + value + " (file)");

  auto has = [&](const char* k) { return merged.count(k) > 0; };
  auto get = [&](const char* k) { return merged.at(k); };

  if (!has("experiment")) throw UsageError("experiment", "missing subcommand");
  detail::require_choice("experiment", get("experiment"), experiment_names());
  for (std::size_t i = 0; i < experiment_names().size(); ++i)
    if (experiment_names()[i] == get("experiment")) cfg.experiment = static_cast<Experiment>(i);

  // Per-experiment defaults; every one is overridable.
  switch (cfg.experiment) {
    case Experiment::NonSmooth:
      cfg.loss = "l1";
      cfg.lambda = 0.01;
      cfg.decay = DecayKind::Geometric;
      cfg.m = {32, 64, 128, 256, 512};
      cfg.trials = 20;
      cfg.max_iters = 5000;
      break;
    case Experiment::Risk:
      cfg.loss = "quadratic";
      cfg.lambda = 1e-8;
      cfg.embedding = "gaussian";
      break;
    case Experiment::Conditioning: cfg.loss = "quadratic"; break;
    case Experiment::Iterative: cfg.m = {8, 16, 32}; break;
    default: break;
  }

  if (!has("n")) throw UsageError("n", "missing required option --n");
  cfg.n = detail::to_integer("n", get("n"));
  if (cfg.n < 1) throw UsageError("n", "--n: must be positive");
  cfg.d = has("d") ? detail::to_integer("d", get("d")) : cfg.n;
  if (cfg.d < 1) throw UsageError("d", "--d: must be positive");

  if (has("decay")) {
    detail::require_choice("decay", get("decay"), {"poly", "exp", "geom", "explicit"});
    const std::string v = get("decay");
    cfg.decay = v == "poly" ? DecayKind::Polynomial
                : v == "exp" ? DecayKind::Exponential
                : v == "geom" ? DecayKind::Geometric
                              : DecayKind::Explicit;
  }
  if (has("nu")) cfg.nu = detail::to_double("nu", get("nu"));
  if (cfg.nu <= 0.0) throw UsageError("nu", "--nu: must be positive");
  if (has("ratio")) cfg.ratio = detail::to_double("ratio", get("ratio"));
  if (cfg.ratio <= 0.0 || cfg.ratio >= 1.0) throw UsageError("ratio", "--ratio: must lie in (0, 1)");
  if (has("values"))
    for (const auto& p : detail::split(get("values"), ',')) cfg.values.push_back(detail::to_double("values", p));
  if (cfg.decay == DecayKind::Explicit &&
      static_cast<Index>(cfg.values.size()) != std::min(cfg.n, cfg.d))
    throw UsageError("values", "--values: explicit decay needs min(n, d) singular values");

  if (has("loss")) cfg.loss = get("loss");
  if (cfg.experiment == Experiment::NonSmooth) {
    detail::require_choice("loss", cfg.loss, nonsmooth_loss_names());
  } else if (cfg.experiment == Experiment::Risk || cfg.experiment == Experiment::Conditioning) {
    detail::require_choice("loss", cfg.loss, {"quadratic"});
  } else {
    detail::require_choice("loss", cfg.loss, smooth_loss_names());
  }

  if (has("lambda")) cfg.lambda = detail::to_double("lambda", get("lambda"));
  if (cfg.lambda <= 0.0) throw UsageError("lambda", "--lambda: must be positive");
  if (has("embedding")) cfg.embedding = get("embedding");
  detail::require_choice("embedding", cfg.embedding, embedding_names());
  if ((cfg.experiment == Experiment::NonSmooth || cfg.experiment == Experiment::Kernel) &&
      cfg.embedding != "adaptive-gaussian" && cfg.embedding != "adaptive-srht" && cfg.embedding != "nystrom")
    throw UsageError("embedding", "--embedding: " + to_string(cfg.experiment) + " needs an adaptive embedding");
  if (cfg.experiment == Experiment::Kernel && cfg.embedding != "adaptive-gaussian")
    throw UsageError("embedding", "--embedding: kernel experiments share a Gaussian S̃ (adaptive-gaussian)");
  if (cfg.experiment == Experiment::Iterative && cfg.embedding == "oblivious-dagger")
    throw UsageError("embedding", "--embedding: iterative needs an orthonormal frame");

  if (has("m")) cfg.m = parse_m_list(get("m"));
  if (has("q")) cfg.q = detail::to_integer("q", get("q"));
  if (cfg.q < 0) throw UsageError("q", "--q: must be nonnegative");
  if (cfg.q > 0 && cfg.embedding.rfind("adaptive", 0) != 0 && cfg.embedding != "nystrom")
    throw UsageError("q", "--q: power iterations need an adaptive embedding");
  if (has("T")) cfg.T = detail::to_integer("T", get("T"));
  if (cfg.T < 1) throw UsageError("T", "--T: must be at least 1");
  if (has("trials")) cfg.trials = detail::to_integer("trials", get("trials"));
  if (cfg.trials < 1) throw UsageError("trials", "--trials: must be at least 1");
  if (has("seed")) {
    const long long s = detail::to_integer("seed", get("seed"));
    if (s < 0) throw UsageError("seed", "--seed: must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  if (has("tol")) cfg.tol = detail::to_double("tol", get("tol"));
  if (cfg.tol <= 0.0) throw UsageError("tol", "--tol: must be positive");
  if (has("max-iters")) cfg.max_iters = detail::to_integer("max-iters", get("max-iters"));
  if (cfg.max_iters < 1) throw UsageError("max-iters", "--max-iters: must be positive");
  if (has("out")) cfg.out_path = get("out");
  if (has("noise")) cfg.noise = detail::to_double("noise", get("noise"));
  if (cfg.noise < 0.0) throw UsageError("noise", "--noise: must be nonnegative");
  if (has("draws")) cfg.draws = detail::to_integer("draws", get("draws"));
  if (cfg.draws < 1) throw UsageError("draws", "--draws: must be positive");
  if (has("suite")) cfg.suite = get("suite");
  return cfg;
}

/// argv[1] is the subcommand; remaining arguments are long flags.
inline ExperimentConfig parse_config(int argc, const char* const* argv) {
  CLI::App app{"subsketch experiments"};
  std::string experiment;
  app.add_option("experiment", experiment, "recover|sweep|iterative|nonsmooth|kernel|risk|certify|conditioning");
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::string config_path;
  app.add_option("--config", config_path, "key = value file; flags take precedence");
  for (const auto& key : detail::config_keys()) {
    if (key == "experiment") continue;
    options[key] = app.add_option("--" + key, values[key]);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    throw UsageError("argv", e.what());
  }
  std::map<std::string, std::string> flags;
  if (!experiment.empty()) flags["experiment"] = experiment;
  for (const auto& [key, opt] : options)
    if (opt->count() > 0) flags[key] = values[key];
  const auto file = config_path.empty() ? std::map<std::string, std::string>{} : read_config_file(config_path);
  return resolve_config(flags, file);
}

inline ExperimentConfig parse_config(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"subsketch"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return parse_config(static_cast<int>(argv.size()), argv.data());
}

}  // namespace subsketch::harness

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <unistd.h>

#include "json.hpp"
#include "subsketch/errors.hpp"
#include "subsketch/numkit.hpp"

namespace subsketch::harness {

inline constexpr const char* kCsvHeader =
    "experiment,trial,seed,n,d,decay,nu,loss,lambda,embedding,q,m,T,rel_err_x0,rel_err_x1,residual_norm,"
    "spectral_residual_k,bound_rhs,condition_ok,kappa,kappa_dagger,objective,runtime_ms";

struct RunRecord {
  std::string experiment;
  Index trial = 0;
  std::uint64_t seed = 0;
  Index n = 0;
  Index d = 0;
  std::string decay;
  std::optional<double> nu;  // decay parameter: ν for poly/exp, the ratio for geom
  std::string loss;
  double lambda = 0.0;
  std::string embedding;
  Index q = 0;
  Index m = 0;
  Index T = 0;
  std::optional<double> rel_err_x0;
  std::optional<double> rel_err_x1;
  std::optional<double> residual_norm;
  std::optional<double> spectral_residual_k;
  std::optional<double> bound_rhs;
  std::optional<bool> condition_ok;
  std::optional<double> kappa;
  std::optional<double> kappa_dagger;
  std::optional<double> objective;
  std::optional<double> runtime_ms;

  // Not persisted in the CSV; feeds the JSON summary.
  bool converged = true;
  std::string failure;
  std::map<std::string, double> extras;
};

namespace detail {

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::string field(const std::optional<double>& v) { return v && std::isfinite(*v) ? format_double(*v) : ""; }

inline std::optional<double> parse_optional(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw ArgumentError("csv: bad number '" + s + "'");
  return v;
}

}  // namespace detail

inline std::string to_csv_row(const RunRecord& r) {
  using detail::field;
  std::ostringstream os;
  os << r.experiment << ',' << r.trial << ',' << r.seed << ',' << r.n << ',' << r.d << ',' << r.decay << ','
     << field(r.nu) << ',' << r.loss << ',' << detail::format_double(r.lambda) << ',' << r.embedding << ',' << r.q
     << ',' << r.m << ',' << r.T << ',' << field(r.rel_err_x0) << ',' << field(r.rel_err_x1) << ','
     << field(r.residual_norm) << ',' << field(r.spectral_residual_k) << ',' << field(r.bound_rhs) << ','
     << (r.condition_ok ? (*r.condition_ok ? "true" : "false") : "") << ',' << field(r.kappa) << ','
     << field(r.kappa_dagger) << ',' << field(r.objective) << ',' << field(r.runtime_ms);
  return os.str();
}

inline RunRecord parse_csv_row(const std::string& line) {
  std::vector<std::string> f;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    f.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (f.size() != 23) throw ArgumentError("csv: expected 23 fields, got " + std::to_string(f.size()));
  RunRecord r;
  r.experiment = f[0];
  r.trial = std::stoll(f[1]);
  r.seed = std::stoull(f[2]);
  r.n = std::stoll(f[3]);
  r.d = std::stoll(f[4]);
  r.decay = f[5];
  r.nu = detail::parse_optional(f[6]);
  r.loss = f[7];
  r.lambda = std::stod(f[8]);
  r.embedding = f[9];
  r.q = std::stoll(f[10]);
  r.m = std::stoll(f[11]);
  r.T = std::stoll(f[12]);
  r.rel_err_x0 = detail::parse_optional(f[13]);
  r.rel_err_x1 = detail::parse_optional(f[14]);
  r.residual_norm = detail::parse_optional(f[15]);
  r.spectral_residual_k = detail::parse_optional(f[16]);
  r.bound_rhs = detail::parse_optional(f[17]);
  if (f[18] == "true") r.condition_ok = true;
  else if (f[18] == "false") r.condition_ok = false;
  else if (!f[18].empty()) throw ArgumentError("csv: bad condition_ok '" + f[18] + "'");
  r.kappa = detail::parse_optional(f[19]);
  r.kappa_dagger = detail::parse_optional(f[20]);
  r.objective = detail::parse_optional(f[21]);
  r.runtime_ms = detail::parse_optional(f[22]);
  return r;
}

inline void write_csv(std::ostream& os, const std::vector<RunRecord>& rows) {
  os << kCsvHeader << '\n';
  for (const auto& r : rows) os << to_csv_row(r) << '\n';
}

inline std::vector<RunRecord> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw ArgumentError("csv: header mismatch");
  std::vector<RunRecord> rows;
  while (std::getline(is, line))
    if (!line.empty()) rows.push_back(parse_csv_row(line));
  return rows;
}

/// Writes to a sibling temp file and renames it over the target.
inline void write_file_atomically(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ArgumentError("cannot open '" + tmp.string() + "' for writing");
    out << contents;
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw ArgumentError("write to '" + tmp.string() + "' failed");
    }
  }
  fs::rename(tmp, target);
}

inline void write_csv_atomically(const std::string& path, const std::vector<RunRecord>& rows) {
  std::ostringstream os;
  write_csv(os, rows);
  write_file_atomically(path, os.str());
}

struct CellStats {
  std::size_t count = 0;
  double mean = 0.0;
  double two_std = 0.0;
};

inline CellStats cell_stats(const std::vector<double>& xs) {
  CellStats s;
  s.count = xs.size();
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double var = 0.0;
    for (double x : xs) var += (x - s.mean) * (x - s.mean);
    s.two_std = 2.0 * std::sqrt(var / static_cast<double>(xs.size() - 1));
  }
  return s;
}

/// Means and twice the standard deviations per (experiment, loss, decay, embedding, m, T) cell.
inline nlohmann::ordered_json summarize(const std::vector<RunRecord>& rows) {
  using Key = std::tuple<std::string, std::string, std::string, std::string, Index, Index>;
  std::map<Key, std::vector<const RunRecord*>> cells;
  for (const auto& r : rows) cells[{r.experiment, r.loss, r.decay, r.embedding, r.m, r.T}].push_back(&r);

  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& [key, members] : cells) {
    nlohmann::ordered_json cell;
    cell["experiment"] = std::get<0>(key);
    cell["loss"] = std::get<1>(key);
    cell["decay"] = std::get<2>(key);
    cell["embedding"] = std::get<3>(key);
    cell["m"] = std::get<4>(key);
    cell["T"] = std::get<5>(key);
    cell["rows"] = members.size();
    std::size_t failed = 0;
    nlohmann::ordered_json failures = nlohmann::ordered_json::array();
    for (const auto* r : members)
      if (!r->converged) {
        ++failed;
        failures.push_back({{"trial", r->trial}, {"reason", r->failure}});
      }
    cell["failed"] = failed;
    if (failed) cell["failures"] = failures;

    std::map<std::string, std::vector<double>> series;
    auto add = [&](const char* name, const std::optional<double>& v) {
      if (v && std::isfinite(*v)) series[name].push_back(*v);
    };
    for (const auto* r : members) {
      add("rel_err_x0", r->rel_err_x0);
      add("rel_err_x1", r->rel_err_x1);
      add("residual_norm", r->residual_norm);
      add("spectral_residual_k", r->spectral_residual_k);
      add("bound_rhs", r->bound_rhs);
      add("kappa", r->kappa);
      add("kappa_dagger", r->kappa_dagger);
      add("objective", r->objective);
      for (const auto& [name, v] : r->extras)
        if (std::isfinite(v)) series[name].push_back(v);
    }
    nlohmann::ordered_json stats;
    for (const auto& [name, xs] : series) {
      const CellStats s = cell_stats(xs);
      stats[name] = {{"mean", s.mean}, {"two_std", s.two_std}, {"count", s.count}};
    }
    cell["stats"] = stats;
    out.push_back(cell);
  }
  return out;
}

}  // namespace subsketch::harness

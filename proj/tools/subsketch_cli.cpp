#include <iostream>

#include "subsketch/harness/config.hpp"
#include "subsketch/harness/experiments.hpp"

int main(int argc, char** argv) {
  using namespace subsketch::harness;
  ExperimentConfig cfg;
  try {
    cfg = parse_config(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error [" << e.key() << "]: " << e.what() << '\n'
              << "usage: subsketch <recover|sweep|iterative|nonsmooth|kernel|risk|certify|conditioning> --n N [flags]\n";
    return 2;
  }
  for (const auto& line : cfg.provenance) std::cerr << "config: " << line << '\n';
  try {
    if (cfg.experiment == Experiment::Certify) return certify(cfg, std::cout);
    const auto rows = run_experiment(cfg, &std::cerr);
    std::cout << "wrote " << rows.size() << " rows to " << cfg.csv_path() << " and summary to " << cfg.json_path()
              << '\n';
  } catch (const UsageError& e) {
    std::cerr << "usage error [" << e.key() << "]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

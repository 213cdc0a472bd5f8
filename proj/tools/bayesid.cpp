#include "bayesid/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace bayesid;
using namespace bayesid::experiment;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitSchema = 2;
constexpr int kExitNumerical = 3;

struct Loaded {
  ParseResult parsed;
  bool readable = true;
};

Loaded load(const std::string& path, const std::vector<std::string>& seed_overrides) {
  Loaded l;
  std::string text;
  try {
    text = read_text(path);
  } catch (const std::exception& e) {
    l.readable = false;
    l.parsed.diagnostics.push_back(std::string("config: ") + e.what());
    return l;
  }
  l.parsed = parse_config_text(text);
  if (!l.parsed.diagnostics.empty() || seed_overrides.empty()) return l;
  json doc = l.parsed.config.source;
  try {
    for (const auto& s : seed_overrides) apply_seed_override(doc, s);
  } catch (const InvalidArgument& e) {
    l.parsed.diagnostics.push_back(std::string("--seed-override: ") + e.what());
    return l;
  }
  l.parsed = parse_config(doc);
  return l;
}

void print_diagnostics(const std::vector<std::string>& d) {
  for (const auto& line : d) std::cerr << "  " << line << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian identification of uncertain diffusion coefficients"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> seed_overrides;
  std::optional<std::string> out_dir;
  unsigned threads = 0;

  auto* run = app.add_subcommand("run", "run an experiment and write its result tables");
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  run->add_option("--seed-override", seed_overrides, "override a seed, e.g. --seed-override noise=7")
      ->type_name("KEY=VALUE");
  run->add_option("--out", out_dir, "output directory (default: $BAYESID_OUTPUT_ROOT/<config stem>)");
  run->add_option("--threads", threads, "worker threads for forward solves")->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "check a config and list every problem found");
  validate->add_option("config", config_path, "experiment config (JSON)")->required();
  validate->add_option("--seed-override", seed_overrides, "override a seed before checking")->type_name("KEY=VALUE");

  std::string dir_a, dir_b;
  std::optional<std::string> compare_out;
  auto* compare = app.add_subcommand("compare", "side-by-side update errors of two result directories");
  compare->add_option("dirA", dir_a, "first result directory")->required();
  compare->add_option("dirB", dir_b, "second result directory")->required();
  compare->add_option("--out", compare_out, "also write the table to this CSV file");

  CLI11_PARSE(app, argc, argv);

  if (*validate) {
    const auto l = load(config_path, seed_overrides);
    if (l.parsed.diagnostics.empty()) {
      std::cout << config_path << ": ok (" << config_hash(l.parsed.config.source) << ")\n";
      return kExitOk;
    }
    std::cerr << config_path << ": " << l.parsed.diagnostics.size() << " problem(s)\n";
    print_diagnostics(l.parsed.diagnostics);
    return l.readable ? kExitSchema : kExitError;
  }

  if (*run) {
    auto l = load(config_path, seed_overrides);
    if (!l.parsed.diagnostics.empty()) {
      std::cerr << config_path << ": schema violation\n";
      print_diagnostics(l.parsed.diagnostics);
      return l.readable ? kExitSchema : kExitError;
    }
    auto& cfg = l.parsed.config;
    if (threads > 0) cfg.threads = threads;
    const auto dir = resolve_output_dir(cfg, config_path, out_dir);
    try {
      const auto r = run_experiment(cfg, dir);
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << "wrote " << r.files.size() << " artifacts to " << r.out_dir.string() << " (config " << r.config_hash
                << ")\n";
      return kExitOk;
    } catch (const StageError& e) {
      std::cerr << e.what() << "\n";
      return kExitNumerical;
    } catch (const NumericalError& e) {
      std::cerr << "numerical failure in stage 'output': " << e.what() << "\n";
      return kExitNumerical;
    } catch (const InvalidArgument& e) {
      std::cerr << "invalid configuration: " << e.what() << "\n";
      return kExitSchema;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitError;
    }
  }

  try {
    const auto t = compare_runs(dir_a, dir_b);
    std::cout << t.str();
    if (compare_out) write_text(*compare_out, t.str());
    return kExitOk;
  } catch (const InvalidArgument& e) {
    std::cerr << e.what() << "\n";
    return kExitSchema;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}

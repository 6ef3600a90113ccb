// Command-line front end: data generation, single runs, experiment grids,
// group-size sweeps and report export.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "disco/errors.hpp"
#include "disco/experiment.hpp"

namespace fs = std::filesystem;
using namespace disco;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

struct Common {
  std::string spec;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> method;
  std::optional<std::string> variant;
};

fs::path out_dir(const Common& c) {
  if (const char* env = std::getenv("DISCO_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return c.out;
}

// Loads the spec and applies --seed / --method / --variant.
ExperimentSpec load(const Common& c) {
  ExperimentSpec spec = load_experiment_spec(c.spec);
  if (c.seed) spec.seeds = {*c.seed};
  if (c.method) spec.methods = {MethodSpec::parse(*c.method)};
  if (c.variant) {
    const WeightVariant v = parse_variant(*c.variant);
    spec.train.scaling.variant = v;
    for (MethodSpec& m : spec.methods) {
      if (m.variant) m.variant = v;
    }
  }
  return spec;
}

void add_common(CLI::App* cmd, Common& c, bool overrides) {
  cmd->add_option("--spec", c.spec, "experiment spec (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "output directory (DISCO_OUT_DIR takes precedence)");
  cmd->add_option("--seed", c.seed, "run only this seed");
  if (overrides) {
    cmd->add_option("--method", c.method, "run only this method (naive, dr_grpo, disco, domain_only, diff_only)");
    cmd->add_option("--variant", c.variant, "domain-weight variant (v1, v2, v3)");
  }
}

int gen_data(const Common& c) {
  const ExperimentSpec spec = load(c);
  const TrainConfig config = spec.cell_config(spec.methods.front(), spec.settings.front(), spec.seeds.front());
  const EnvData data = training_data(config);
  const fs::path dir = out_dir(c) / spec.name / "data";
  fs::create_directories(dir);
  std::ofstream train(dir / "train.jsonl");
  write_dataset(train, data.train);
  std::ofstream eval(dir / "eval.jsonl");
  write_dataset(eval, data.eval);

  nlohmann::json mix;
  mix["label"] = config.resolved_mixture().label;
  mix["seed"] = config.seed;
  for (const auto& [domain, n] : config.resolved_mixture().counts()) mix["counts"][domain] = n;
  std::ofstream(dir / "mixture.json") << mix.dump(2) << '\n';
  std::cout << "wrote " << data.train.size() << " train and " << data.eval.size() << " eval prompts to "
            << dir.string() << '\n';
  return 0;
}

int train(const Common& c) {
  const ExperimentSpec spec = load(c);
  const MethodSpec& method = spec.methods.front();
  const MixtureSpec& setting = spec.settings.front();
  const std::uint64_t seed = spec.seeds.front();
  Policy policy;
  RunReport report = run_training(spec.cell_config(method, setting, seed), &policy);
  report.summary.method = method.label;
  const fs::path dir = run_directory(out_dir(c) / spec.name / "train", method.label, setting.label, seed);
  write_run_artifacts(dir, report);
  std::ofstream f(dir / "policy.json");
  write_policy(f, policy);
  const Checkpoint& last = report.final_checkpoint();
  std::cout << method.label << ' ' << setting.label << " seed " << seed << ": avg " << last.average;
  for (const auto& [domain, acc] : last.accuracy) std::cout << ' ' << domain << '=' << acc;
  std::cout << "\nartifacts in " << dir.string() << '\n';
  return 0;
}

int experiment(const Common& c) {
  const ExperimentSpec spec = load(c);
  const ExperimentResult result = run_experiment(spec);
  write_experiment_artifacts(out_dir(c), spec, result);
  std::ifstream md(out_dir(c) / spec.name / "comparison.md");
  std::cout << md.rdbuf();
  for (const PairedComparison& pc : result.tests) {
    std::cout << pc.method_a << " vs " << pc.method_b << ": ";
    if (pc.result) {
      std::cout << "t=" << pc.result->t << " p=" << pc.result->p_one_tailed << " (n=" << pc.n << ")\n";
    } else {
      std::cout << pc.note << '\n';
    }
  }
  return 0;
}

int sweep_g(const Common& c, const std::vector<std::size_t>& sizes) {
  ExperimentSpec spec = load(c);
  if (!sizes.empty()) spec.group_sizes = sizes;
  const auto entries = run_group_size_sweep(spec);
  write_sweep_artifacts(out_dir(c), spec, entries);
  std::ifstream summary(out_dir(c) / spec.name / "sweep_g" / "sweep_g_summary.csv");
  std::cout << summary.rdbuf();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Domain- and difficulty-aware reward scaling for group-relative policy optimization"};
  app.require_subcommand(1);

  Common common;
  std::vector<std::size_t> sizes;
  std::string run_dir;
  std::string format = "csv";
  std::string report_out;

  auto* gen = app.add_subcommand("gen-data", "write the train/eval split and mixture of a spec");
  add_common(gen, common, false);
  auto* tr = app.add_subcommand("train", "train one (method, setting, seed) cell");
  add_common(tr, common, true);
  auto* ex = app.add_subcommand("experiment", "run every cell of a spec and compare methods");
  add_common(ex, common, true);
  auto* sw = app.add_subcommand("sweep-g", "run the grid once per group size");
  add_common(sw, common, true);
  sw->add_option("--group-sizes", sizes, "override the spec's group sizes");
  auto* rep = app.add_subcommand("report", "re-export a run's report");
  rep->add_option("--run", run_dir, "run directory holding report.json")->required();
  rep->add_option("--format", format, "csv or json");
  rep->add_option("--out", report_out, "destination directory (default: the run directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*gen) return gen_data(common);
    if (*tr) return train(common);
    if (*ex) return experiment(common);
    if (*sw) return sweep_g(common, sizes);
    if (*rep) {
      const ReportFormat f = parse_report_format(format);
      fs::path dest = report_out.empty() ? fs::path(run_dir) : fs::path(report_out);
      if (const char* env = std::getenv("DISCO_OUT_DIR"); env != nullptr && *env != '\0') dest = env;
      export_report(run_dir, f, dest);
      std::cout << "exported " << format << " report to " << dest.string() << '\n';
      return 0;
    }
  } catch (const ConfigParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const InvalidConfig& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const InvalidSpec& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kUsageError;
}

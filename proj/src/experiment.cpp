#include "disco/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "disco/errors.hpp"

namespace disco {

using nlohmann::json;

MethodSpec MethodSpec::parse(const std::string& label) {
  MethodSpec spec;
  spec.label = label;
  const auto colon = label.find(':');
  spec.method = parse_method(label.substr(0, colon));
  if (colon != std::string::npos) spec.variant = parse_variant(label.substr(colon + 1));
  return spec;
}

TrainConfig ExperimentSpec::cell_config(const MethodSpec& method, const MixtureSpec& setting,
                                        std::uint64_t seed) const {
  TrainConfig config = train;
  config.with_method(method.method);
  if (aggregation) config.objective.aggregation = *aggregation;
  if (method.variant) config.scaling.variant = *method.variant;
  config.mixture = setting;
  config.seed = seed;
  return config;
}

namespace {

std::size_t line_at(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

// Reads fields out of a parsed spec, reporting the source line of the field
// (or of its parent object when the field is missing).
class SpecReader {
 public:
  explicit SpecReader(const std::string& text) : text_(text) {}

  std::size_t line_of(const std::string& key) const {
    const auto pos = text_.find("\"" + key + "\"");
    return pos == std::string::npos ? 1 : line_at(text_, pos);
  }

  [[noreturn]] void fail(const std::string& key, const std::string& reason) const {
    throw ConfigParseError(line_of(key), reason);
  }

  const json& require(const json& obj, const std::string& key, const std::string& parent) const {
    if (!obj.is_object() || !obj.contains(key)) {
      throw ConfigParseError(parent.empty() ? 1 : line_of(parent),
                             "missing required field '" + path(parent, key) + "'");
    }
    return obj.at(key);
  }

  template <typename T>
  T get(const json& obj, const std::string& key, const std::string& parent) const {
    return convert<T>(require(obj, key, parent), key, parent);
  }

  template <typename T>
  T get_or(const json& obj, const std::string& key, const std::string& parent, T fallback) const {
    if (!obj.contains(key)) return fallback;
    return convert<T>(obj.at(key), key, parent);
  }

  template <typename T>
  T convert(const json& value, const std::string& key, const std::string& parent) const {
    try {
      if constexpr (std::is_unsigned_v<T>) {
        if (value.is_number_integer() && value.get<long long>() < 0) throw std::domain_error("negative");
        if (!value.is_number_integer()) throw std::domain_error("not an integer");
      }
      if constexpr (std::is_floating_point_v<T>) {
        if (!value.is_number()) throw std::domain_error("not a number");
      }
      return value.get<T>();
    } catch (const std::exception&) {
      fail(key, "field '" + path(parent, key) + "' has the wrong type");
    }
  }

  static std::string path(const std::string& parent, const std::string& key) {
    return parent.empty() ? key : parent + "." + key;
  }

 private:
  const std::string& text_;
};

EnvSpec parse_env(const SpecReader& rd, const json& j) {
  EnvSpec env;
  env.seed = rd.get_or<std::uint64_t>(j, "seed", "env", 17);
  const json& domains = rd.require(j, "domains", "env");
  if (!domains.is_array() || domains.empty()) rd.fail("domains", "field 'env.domains' must be a non-empty array");
  for (const json& d : domains) {
    DomainSpec spec;
    spec.name = rd.get<std::string>(d, "name", "domains");
    spec.prompt_count = rd.get<std::size_t>(d, "prompts", "domains");
    spec.vocab = rd.get<std::uint32_t>(d, "vocab", "domains");
    spec.length = rd.get<std::size_t>(d, "length", "domains");
    spec.contexts = rd.get_or<std::size_t>(d, "contexts", "domains", 0);
    env.domains.push_back(std::move(spec));
  }
  try {
    env.validate();
  } catch (const InvalidSpec& e) {
    rd.fail("env", e.what());
  }
  return env;
}

MixtureSpec parse_mixture(const SpecReader& rd, const json& j, const std::vector<std::string>& domains) {
  const auto total = rd.get_or<std::size_t>(j, "total", "mixture", 4000);
  try {
    if (j.contains("proportions")) {
      const json& props = j.at("proportions");
      if (!props.is_object()) rd.fail("proportions", "field 'mixture.proportions' must be an object");
      MixtureSpec spec;
      spec.total = total;
      spec.label = rd.get_or<std::string>(j, "label", "mixture", "custom");
      for (const auto& d : domains) {
        if (props.contains(d)) spec.proportions.emplace_back(d, rd.convert<double>(props.at(d), d, "proportions"));
      }
      for (const auto& [key, value] : props.items()) {
        if (std::find(domains.begin(), domains.end(), key) == domains.end()) {
          rd.fail(key, "mixture domain '" + key + "' is not an env domain");
        }
      }
      spec.validate();
      return spec;
    }
    return MixtureSpec::preset(rd.get_or<std::string>(j, "preset", "mixture", "balanced"), domains, total);
  } catch (const InvalidSpec& e) {
    rd.fail("mixture", e.what());
  }
}

PolicyInit parse_init(const SpecReader& rd, const json& j) {
  const auto kind = rd.get_or<std::string>(j, "kind", "init", "seeded_gaussian");
  if (kind == "uniform") return PolicyInit::uniform();
  if (kind == "seeded_gaussian") return PolicyInit::seeded_gaussian(rd.get_or<double>(j, "sigma", "init", 1.0));
  rd.fail("kind", "unknown init kind '" + kind + "'");
}

}  // namespace

ExperimentSpec parse_experiment_spec(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigParseError(line_at(text, e.byte == 0 ? 0 : e.byte - 1), e.what());
  }
  SpecReader rd(text);
  if (!root.is_object()) throw ConfigParseError(1, "top level must be a JSON object");

  ExperimentSpec spec;
  spec.schema_version = rd.get<int>(root, "schema_version", "");
  if (spec.schema_version != 1) {
    rd.fail("schema_version", "unsupported schema_version " + std::to_string(spec.schema_version));
  }
  spec.name = rd.get<std::string>(root, "name", "");
  if (spec.name.empty() || spec.name.find('/') != std::string::npos) {
    rd.fail("name", "field 'name' must be a non-empty path component");
  }

  const json& train = rd.require(root, "train", "");
  if (!train.is_object()) rd.fail("train", "field 'train' must be an object");
  TrainConfig& tc = spec.train;
  tc.group_size = rd.get<std::size_t>(train, "group_size", "train");
  tc.batch_size = rd.get<std::size_t>(train, "batch_size", "train");
  tc.learning_rate = rd.get<double>(train, "learning_rate", "train");
  tc.epochs = rd.get_or<std::size_t>(train, "epochs", "train", 1);
  tc.inner_steps = rd.get_or<std::size_t>(train, "inner_steps", "train", 1);
  tc.eval_every = rd.get_or<std::size_t>(train, "eval_every", "train", 0);
  tc.scaling.eps_prime = rd.get_or<double>(train, "eps_prime", "train", 1e-6);
  tc.objective.clip_eps = rd.get_or<double>(train, "clip_eps", "train", 0.2);
  tc.objective.kl_beta = rd.get_or<double>(train, "kl_beta", "train", 1e-3);
  try {
    tc.scaling.variant = parse_variant(rd.get_or<std::string>(train, "variant", "train", "v1"));
    const auto agg = rd.get_or<std::string>(train, "aggregation", "train", "auto");
    if (agg != "auto") spec.aggregation = parse_aggregation(agg);
  } catch (const InvalidConfig& e) {
    rd.fail("train", e.what());
  }
  if (train.contains("init")) tc.init = parse_init(rd, train.at("init"));
  tc.env = train.contains("env") ? parse_env(rd, train.at("env")) : EnvSpec::default_four_domain();
  const auto domains = tc.env.domain_names();
  tc.mixture = parse_mixture(rd, rd.require(train, "mixture", "train"), domains);
  try {
    tc.validate();
  } catch (const InvalidConfig& e) {
    rd.fail("train", e.what());
  }

  const json& methods = rd.require(root, "methods", "");
  if (!methods.is_array() || methods.empty()) rd.fail("methods", "field 'methods' must be a non-empty array");
  std::set<std::string> seen_methods;
  for (const json& m : methods) {
    const auto label = rd.convert<std::string>(m, "methods", "");
    try {
      spec.methods.push_back(MethodSpec::parse(label));
    } catch (const InvalidConfig& e) {
      rd.fail("methods", e.what());
    }
    if (!seen_methods.insert(label).second) rd.fail("methods", "duplicate method '" + label + "'");
  }

  const json& seeds = rd.require(root, "seeds", "");
  if (!seeds.is_array() || seeds.empty()) rd.fail("seeds", "field 'seeds' must be a non-empty array");
  std::set<std::uint64_t> seen_seeds;
  for (const json& s : seeds) {
    const auto seed = rd.convert<std::uint64_t>(s, "seeds", "");
    if (!seen_seeds.insert(seed).second) rd.fail("seeds", "seeds must be distinct");
    spec.seeds.push_back(seed);
  }

  if (root.contains("settings")) {
    const json& settings = root.at("settings");
    if (!settings.is_array() || settings.empty()) rd.fail("settings", "field 'settings' must be a non-empty array");
    for (const json& s : settings) {
      const auto name = rd.convert<std::string>(s, "settings", "");
      try {
        spec.settings.push_back(MixtureSpec::preset(name, domains, tc.mixture.total));
      } catch (const InvalidSpec& e) {
        rd.fail("settings", e.what());
      }
    }
  } else {
    spec.settings.push_back(tc.mixture);
  }

  if (root.contains("group_sizes")) {
    spec.group_sizes = rd.get<std::vector<std::size_t>>(root, "group_sizes", "");
    if (spec.group_sizes.empty()) rd.fail("group_sizes", "field 'group_sizes' must be non-empty");
    for (auto g : spec.group_sizes) {
      if (g < 2) rd.fail("group_sizes", "group sizes must be >= 2");
    }
  }
  return spec;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigParseError(0, "cannot read spec file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment_spec(buf.str());
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  ExperimentResult result;
  for (const MethodSpec& method : spec.methods) {
    for (const MixtureSpec& setting : spec.settings) {
      for (std::uint64_t seed : spec.seeds) {
        RunReport report = run_training(spec.cell_config(method, setting, seed));
        report.summary.method = method.label;
        result.cells.push_back({method.label, setting.label, seed, std::move(report)});
      }
    }
  }
  result.table = build_comparison_table(spec, result.cells);
  result.tests = pairwise_t_tests(spec, result.cells);
  return result;
}

namespace {

std::vector<double> ordered_finals(const ExperimentSpec& spec, const std::vector<Cell>& cells,
                                   const std::string& method) {
  std::vector<double> out;
  for (const MixtureSpec& setting : spec.settings) {
    for (std::uint64_t seed : spec.seeds) {
      for (const Cell& c : cells) {
        if (c.method == method && c.setting == setting.label && c.seed == seed) {
          out.push_back(c.report.final_checkpoint().average);
        }
      }
    }
  }
  return out;
}

}  // namespace

std::vector<double> final_averages(const ExperimentResult& result, const std::string& method) {
  std::vector<double> out;
  for (const Cell& c : result.cells) {
    if (c.method == method) out.push_back(c.report.final_checkpoint().average);
  }
  return out;
}

ComparisonTable build_comparison_table(const ExperimentSpec& spec, const std::vector<Cell>& cells) {
  ComparisonTable table;
  for (const MixtureSpec& s : spec.settings) table.columns.push_back(s.label);
  for (const MethodSpec& m : spec.methods) {
    ComparisonRow row;
    row.method = m.label;
    for (const MixtureSpec& s : spec.settings) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const Cell& c : cells) {
        if (c.method == m.label && c.setting == s.label) {
          sum += c.report.final_checkpoint().average;
          ++n;
        }
      }
      row.cells.push_back(n ? sum / static_cast<double>(n) : 0.0);
    }
    double total = 0.0;
    for (double x : row.cells) total += x;
    row.average = row.cells.empty() ? 0.0 : total / static_cast<double>(row.cells.size());
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<PairedComparison> pairwise_t_tests(const ExperimentSpec& spec, const std::vector<Cell>& cells) {
  std::vector<PairedComparison> tests;
  for (std::size_t i = 0; i < spec.methods.size(); ++i) {
    for (std::size_t j = i + 1; j < spec.methods.size(); ++j) {
      PairedComparison pc;
      pc.method_a = spec.methods[i].label;
      pc.method_b = spec.methods[j].label;
      const auto a = ordered_finals(spec, cells, pc.method_a);
      const auto b = ordered_finals(spec, cells, pc.method_b);
      pc.n = a.size();
      try {
        pc.result = paired_t_test(a, b);
      } catch (const DegenerateVariance&) {
        pc.note = "degenerate variance";
      } catch (const InvalidConfig&) {
        pc.note = "fewer than two paired cells";
      }
      tests.push_back(std::move(pc));
    }
  }
  return tests;
}

std::filesystem::path run_directory(const std::filesystem::path& root, const std::string& method,
                                    const std::string& setting, std::uint64_t seed) {
  std::string m = method;
  std::replace(m.begin(), m.end(), ':', '_');
  return root / m / setting / ("seed_" + std::to_string(seed));
}

namespace {

std::string fixed2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return buf;
}

}  // namespace

void write_experiment_artifacts(const std::filesystem::path& out, const ExperimentSpec& spec,
                                const ExperimentResult& result) {
  const auto root = out / spec.name;
  std::filesystem::create_directories(root);
  for (const Cell& c : result.cells) {
    write_run_artifacts(run_directory(root / "runs", c.method, c.setting, c.seed), c.report);
  }

  const ComparisonTable& table = result.table;
  {
    std::ofstream f(root / "comparison.csv");
    f << "method";
    for (const auto& col : table.columns) f << ',' << col;
    f << ",avg\n";
    for (const auto& row : table.rows) {
      f << row.method;
      for (double x : row.cells) f << ',' << format_double(x);
      f << ',' << format_double(row.average) << '\n';
    }
  }
  {
    std::ofstream f(root / "comparison.md");
    f << "| Method |";
    for (const auto& col : table.columns) f << ' ' << col << " |";
    f << " Avg. |\n|---|";
    for (std::size_t i = 0; i < table.columns.size(); ++i) f << "---:|";
    f << "---:|\n";
    for (const auto& row : table.rows) {
      f << "| " << row.method << " |";
      for (double x : row.cells) f << ' ' << fixed2(x) << " |";
      f << ' ' << fixed2(row.average) << " |\n";
    }
  }
  {
    std::ofstream f(root / "ttests.csv");
    f << "method_a,method_b,n,t,p_one_tailed,note\n";
    for (const auto& pc : result.tests) {
      f << pc.method_a << ',' << pc.method_b << ',' << pc.n << ',';
      if (pc.result) {
        f << format_double(pc.result->t) << ',' << format_double(pc.result->p_one_tailed) << ',';
      } else {
        f << ",,";
      }
      f << pc.note << '\n';
    }
  }
}

std::vector<SweepEntry> run_group_size_sweep(const ExperimentSpec& spec) {
  std::vector<SweepEntry> entries;
  for (std::size_t g : spec.group_sizes) {
    for (const MethodSpec& method : spec.methods) {
      for (const MixtureSpec& setting : spec.settings) {
        for (std::uint64_t seed : spec.seeds) {
          TrainConfig config = spec.cell_config(method, setting, seed);
          config.group_size = g;
          RunReport report = run_training(config);
          report.summary.method = method.label;
          entries.push_back({g, {method.label, setting.label, seed, std::move(report)}});
        }
      }
    }
  }
  return entries;
}

void write_sweep_artifacts(const std::filesystem::path& out, const ExperimentSpec& spec,
                           const std::vector<SweepEntry>& entries) {
  const auto root = out / spec.name / "sweep_g";
  std::filesystem::create_directories(root);
  for (const SweepEntry& e : entries) {
    write_run_artifacts(run_directory(root / ("G" + std::to_string(e.group_size)), e.cell.method,
                                      e.cell.setting, e.cell.seed),
                        e.cell.report);
  }
  {
    std::ofstream f(root / "sweep_g.csv");
    f << "method,group_size,setting,seed,final_average\n";
    for (const SweepEntry& e : entries) {
      f << e.cell.method << ',' << e.group_size << ',' << e.cell.setting << ',' << e.cell.seed << ','
        << format_double(e.cell.report.final_checkpoint().average) << '\n';
    }
  }
  {
    std::ofstream f(root / "sweep_g_summary.csv");
    f << "method,group_size,setting,mean_final_average\n";
    for (const MethodSpec& m : spec.methods) {
      for (std::size_t g : spec.group_sizes) {
        for (const MixtureSpec& s : spec.settings) {
          double sum = 0.0;
          std::size_t n = 0;
          for (const SweepEntry& e : entries) {
            if (e.group_size == g && e.cell.method == m.label && e.cell.setting == s.label) {
              sum += e.cell.report.final_checkpoint().average;
              ++n;
            }
          }
          f << m.label << ',' << g << ',' << s.label << ',' << format_double(n ? sum / static_cast<double>(n) : 0.0)
            << '\n';
        }
      }
    }
  }
}

ReportFormat parse_report_format(const std::string& name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  throw InvalidConfig("unknown report format '" + name + "' (expected csv or json)");
}

void export_report(const std::filesystem::path& run_dir, ReportFormat format,
                   const std::filesystem::path& dest) {
  std::ifstream in(run_dir / "report.json");
  if (!in) throw MissingReport(run_dir.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(std::string("malformed report: ") + e.what());
  }
  const RunReport report = report_from_json(j);
  std::filesystem::create_directories(dest);
  if (format == ReportFormat::json) {
    std::ofstream f(dest / "report.json");
    f << report_to_json(report).dump(2) << '\n';
  } else {
    std::ofstream curve(dest / "reward_curve.csv");
    write_reward_curve_csv(curve, report);
    std::ofstream table(dest / "eval_table.csv");
    write_eval_table_csv(table, report);
  }
}

}  // namespace disco

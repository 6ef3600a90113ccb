#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "disco/report.hpp"
#include "disco/trainer.hpp"

namespace disco {

/// A method row in a comparison: "disco", "naive", or "disco:v3" to pin a
/// domain-weight variant.
struct MethodSpec {
  std::string label;
  Method method = Method::naive;
  std::optional<WeightVariant> variant;

  static MethodSpec parse(const std::string& label);
};

/// A grid of (method x setting x seed) training runs sharing one base config.
struct ExperimentSpec {
  int schema_version = 1;
  std::string name;
  TrainConfig train;
  std::optional<Aggregation> aggregation;  // unset: each method's default
  std::vector<MethodSpec> methods;
  std::vector<std::uint64_t> seeds;
  std::vector<MixtureSpec> settings;  // comparison-table columns
  std::vector<std::size_t> group_sizes{2, 4, 8, 16};

  /// Config of one cell of the grid.
  TrainConfig cell_config(const MethodSpec& method, const MixtureSpec& setting, std::uint64_t seed) const;
};

/// Throws ConfigParseError(line, reason) for syntax or schema problems.
ExperimentSpec parse_experiment_spec(const std::string& text);
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

struct Cell {
  std::string method;
  std::string setting;
  std::uint64_t seed = 0;
  RunReport report;
};

struct ComparisonRow {
  std::string method;
  std::vector<double> cells;  // mean over seeds of the final average accuracy, per setting
  double average = 0.0;       // mean of `cells`
};

struct ComparisonTable {
  std::vector<std::string> columns;
  std::vector<ComparisonRow> rows;
};

struct PairedComparison {
  std::string method_a;
  std::string method_b;
  std::size_t n = 0;
  std::optional<TTestResult> result;  // empty when the test is degenerate
  std::string note;
};

struct ExperimentResult {
  std::vector<Cell> cells;
  ComparisonTable table;
  std::vector<PairedComparison> tests;
};

/// Runs every (method, setting, seed) cell in that order.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Final average accuracy of each cell, ordered by (setting, seed).
std::vector<double> final_averages(const ExperimentResult& result, const std::string& method);

ComparisonTable build_comparison_table(const ExperimentSpec& spec, const std::vector<Cell>& cells);
std::vector<PairedComparison> pairwise_t_tests(const ExperimentSpec& spec, const std::vector<Cell>& cells);

std::filesystem::path run_directory(const std::filesystem::path& root, const std::string& method,
                                    const std::string& setting, std::uint64_t seed);

/// Per-run artifacts under <out>/<name>/runs/ plus comparison.csv,
/// comparison.md and ttests.csv under <out>/<name>/.
void write_experiment_artifacts(const std::filesystem::path& out, const ExperimentSpec& spec,
                                const ExperimentResult& result);

struct SweepEntry {
  std::size_t group_size = 0;
  Cell cell;
};

/// Every cell of the grid once per entry of spec.group_sizes.
std::vector<SweepEntry> run_group_size_sweep(const ExperimentSpec& spec);
void write_sweep_artifacts(const std::filesystem::path& out, const ExperimentSpec& spec,
                           const std::vector<SweepEntry>& entries);

enum class ReportFormat { csv, json };
ReportFormat parse_report_format(const std::string& name);

/// Re-serializes <run_dir>/report.json into `dest`. Throws MissingReport.
void export_report(const std::filesystem::path& run_dir, ReportFormat format,
                   const std::filesystem::path& dest);

}  // namespace disco

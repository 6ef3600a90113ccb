#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "disco/trainer.hpp"

namespace disco {

nlohmann::json report_to_json(const RunReport& report);
/// Throws Error on a malformed document.
RunReport report_from_json(const nlohmann::json& j);

/// Columns: batch,mean_reward
void write_reward_curve_csv(std::ostream& out, const RunReport& report);
/// Columns: checkpoint,domain,accuracy (one row per checkpoint and domain)
void write_eval_table_csv(std::ostream& out, const RunReport& report);

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);

/// Writes report.json, reward_curve.csv, eval_table.csv and timing.json into `dir`.
void write_run_artifacts(const std::filesystem::path& dir, const RunReport& report);

}  // namespace disco

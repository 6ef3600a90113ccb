#include "disco/report.hpp"

#include <charconv>
#include <fstream>
#include <ostream>

#include "disco/errors.hpp"

namespace disco {

std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, end);
}

nlohmann::json report_to_json(const RunReport& report) {
  nlohmann::json table = nlohmann::json::array();
  for (const Checkpoint& cp : report.eval_table) {
    table.push_back({{"batch", cp.batch}, {"accuracy", cp.accuracy}, {"average", cp.average}});
  }
  const RunSummary& s = report.summary;
  return {
      {"reward_curve", report.reward_curve},
      {"eval_table", std::move(table)},
      {"final_summary",
       {{"method", s.method},
        {"variant", s.variant},
        {"mixture", s.mixture},
        {"seed", s.seed},
        {"group_size", s.group_size}}},
  };
}

RunReport report_from_json(const nlohmann::json& j) {
  try {
    RunReport report;
    report.reward_curve = j.at("reward_curve").get<std::vector<double>>();
    for (const auto& cp : j.at("eval_table")) {
      Checkpoint c;
      c.batch = cp.at("batch").get<std::size_t>();
      c.accuracy = cp.at("accuracy").get<std::map<std::string, double>>();
      c.average = cp.at("average").get<double>();
      report.eval_table.push_back(std::move(c));
    }
    const auto& s = j.at("final_summary");
    report.summary.method = s.at("method").get<std::string>();
    report.summary.variant = s.at("variant").get<std::string>();
    report.summary.mixture = s.at("mixture").get<std::string>();
    report.summary.seed = s.at("seed").get<std::uint64_t>();
    report.summary.group_size = s.at("group_size").get<std::size_t>();
    if (report.eval_table.empty()) throw Error("report has no checkpoints");
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed report: ") + e.what());
  }
}

void write_reward_curve_csv(std::ostream& out, const RunReport& report) {
  out << "batch,mean_reward\n";
  for (std::size_t b = 0; b < report.reward_curve.size(); ++b) {
    out << b << ',' << format_double(report.reward_curve[b]) << '\n';
  }
}

void write_eval_table_csv(std::ostream& out, const RunReport& report) {
  out << "checkpoint,domain,accuracy\n";
  for (const Checkpoint& cp : report.eval_table) {
    for (const auto& [domain, acc] : cp.accuracy) {
      out << cp.batch << ',' << domain << ',' << format_double(acc) << '\n';
    }
  }
}

void write_run_artifacts(const std::filesystem::path& dir, const RunReport& report) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "report.json");
    f << report_to_json(report).dump(2) << '\n';
  }
  {
    std::ofstream f(dir / "reward_curve.csv");
    write_reward_curve_csv(f, report);
  }
  {
    std::ofstream f(dir / "eval_table.csv");
    write_eval_table_csv(f, report);
  }
  {
    std::ofstream f(dir / "timing.json");
    f << nlohmann::json{{"wall_clock_seconds", report.wall_clock_seconds}}.dump() << '\n';
  }
}

}  // namespace disco

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rwr/cost.hpp"
#include "rwr/dataset.hpp"
#include "rwr/error.hpp"
#include "rwr/harness/config.hpp"
#include "rwr/losses.hpp"
#include "rwr/serialize.hpp"

namespace rwr::harness {

/// Mean and sample standard deviation (0 for a single value).
struct Aggregate {
  double mean = 0.0;
  double std = 0.0;

  friend bool operator==(const Aggregate&, const Aggregate&) = default;
};

inline Aggregate aggregate(std::span<const double> v) {
  if (v.empty()) return {};
  const auto [m, s] = rwr::detail::mean_and_sample_std(v);
  return {m, v.size() > 1 ? s : 0.0};
}

struct SeedRecord {
  std::size_t repeat = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const SeedRecord&, const SeedRecord&) = default;
};

struct RunReport {
  std::string dataset;
  std::string method;
  CostMode mode = CostMode::FixedCost;
  double level = 0.0;  // c or gamma
  std::vector<LossReport> repeats;
  std::vector<SeedRecord> seed_ledger;
  // Hyperparameters chosen in each repeat (k, sigma, conformal threshold).
  std::vector<nlohmann::json> selections;
  Aggregate rwr;
  Aggregate machine;
  Aggregate rejection;
  std::string config_echo;
  std::size_t dropped_rows = 0;
  double wall_clock_seconds = 0.0;

  void recompute_aggregates() {
    std::vector<double> a, b, c;
    for (const auto& r : repeats) {
      a.push_back(r.rwr_loss);
      b.push_back(r.machine_loss);
      c.push_back(r.rejection_rate);
    }
    rwr = aggregate(a);
    machine = aggregate(b);
    rejection = aggregate(c);
  }

  bool aggregates_consistent(double tol = 1e-12) const {
    RunReport copy = *this;
    copy.recompute_aggregates();
    auto close = [tol](const Aggregate& x, const Aggregate& y) {
      return std::abs(x.mean - y.mean) <= tol && std::abs(x.std - y.std) <= tol;
    };
    return close(copy.rwr, rwr) && close(copy.machine, machine) && close(copy.rejection, rejection);
  }

  /// Equality ignoring wall-clock time.
  bool same_results(const RunReport& o) const {
    RunReport a = *this;
    a.wall_clock_seconds = o.wall_clock_seconds;
    return a == o;
  }

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

namespace detail {

inline nlohmann::json aggregate_json(const Aggregate& a) { return {{"mean", a.mean}, {"std", a.std}}; }

inline Aggregate aggregate_from_json(const nlohmann::json& j) {
  return {j.at("mean").get<double>(), j.at("std").get<double>()};
}

}  // namespace detail

inline nlohmann::json to_json(const RunReport& r) {
  nlohmann::json reps = nlohmann::json::array(), seeds = nlohmann::json::array();
  for (const auto& l : r.repeats) reps.push_back(json::to_json(l));
  for (const auto& s : r.seed_ledger) seeds.push_back({{"repeat", s.repeat}, {"seed", s.seed}});
  return {{"dataset", r.dataset},
          {"method", r.method},
          {"mode", std::string(to_string(r.mode))},
          {"c_or_gamma", r.level},
          {"repeats", reps},
          {"seed_ledger", seeds},
          {"selections", r.selections},
          {"rwr_loss", detail::aggregate_json(r.rwr)},
          {"machine_loss", detail::aggregate_json(r.machine)},
          {"rejection_rate", detail::aggregate_json(r.rejection)},
          {"config", r.config_echo},
          {"dropped_rows", r.dropped_rows},
          {"wall_clock_seconds", r.wall_clock_seconds}};
}

inline RunReport run_report_from_json(const nlohmann::json& j) {
  RunReport r;
  r.dataset = j.at("dataset").get<std::string>();
  r.method = j.at("method").get<std::string>();
  const auto mode = j.at("mode").get<std::string>();
  require(mode == "cost" || mode == "budget", ErrorKind::ParseError, "unknown mode '" + mode + "'");
  r.mode = mode == "cost" ? CostMode::FixedCost : CostMode::FixedBudget;
  r.level = j.at("c_or_gamma").get<double>();
  for (const auto& l : j.at("repeats")) r.repeats.push_back(json::loss_report_from_json(l));
  for (const auto& s : j.at("seed_ledger"))
    r.seed_ledger.push_back({s.at("repeat").get<std::size_t>(), s.at("seed").get<std::uint64_t>()});
  for (const auto& s : j.at("selections")) r.selections.push_back(s);
  r.rwr = detail::aggregate_from_json(j.at("rwr_loss"));
  r.machine = detail::aggregate_from_json(j.at("machine_loss"));
  r.rejection = detail::aggregate_from_json(j.at("rejection_rate"));
  r.config_echo = j.at("config").get<std::string>();
  r.dropped_rows = j.at("dropped_rows").get<std::size_t>();
  r.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
  return r;
}

inline constexpr const char* kCsvHeader =
    "dataset,c_or_gamma,method,rwr_mean,rwr_std,rej_mean,rej_std,machine_mean,machine_std";

inline std::string to_csv(const std::vector<RunReport>& reports) {
  using detail::exact;
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : reports)
    out += r.dataset + "," + exact(r.level) + "," + r.method + "," + exact(r.rwr.mean) + "," + exact(r.rwr.std) +
           "," + exact(r.rejection.mean) + "," + exact(r.rejection.std) + "," + exact(r.machine.mean) + "," +
           exact(r.machine.std) + "\n";
  return out;
}

inline std::string to_json_text(const std::vector<RunReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  return nlohmann::json{{"reports", arr}}.dump(2) + "\n";
}

inline std::vector<RunReport> reports_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("report JSON: ") + e.what());
  }
  std::vector<RunReport> out;
  try {
    for (const auto& r : j.at("reports")) out.push_back(run_report_from_json(r));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("report JSON: ") + e.what());
  }
  return out;
}

inline std::vector<RunReport> load_reports(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return reports_from_json_text(buf.str());
}

/// Writes report.json or report.csv under output_dir through a temporary
/// file and rename, so readers never see a partial file. Returns the path.
inline std::filesystem::path emit_report(const std::vector<RunReport>& reports, ReportFormat format,
                                         const std::filesystem::path& output_dir) {
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create '" + output_dir.string() + "': " + ec.message());
  const auto path = output_dir / (format == ReportFormat::Json ? "report.json" : "report.csv");
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write '" + tmp.string() + "'");
    out << (format == ReportFormat::Json ? to_json_text(reports) : to_csv(reports));
    if (!out) throw Error(ErrorKind::IoError, "write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot move into '" + path.string() + "': " + ec.message());
  return path;
}

inline std::filesystem::path emit_report(const RunReport& report, ReportFormat format,
                                         const std::filesystem::path& output_dir) {
  return emit_report(std::vector<RunReport>{report}, format, output_dir);
}

}  // namespace rwr::harness

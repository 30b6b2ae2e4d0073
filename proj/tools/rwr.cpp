// rwr: regression-with-rejection experiments from the command line.
//
//   rwr fit            --data FILE --target-col y --regressor knn --out DIR
//   rwr calibrate      --data FILE --rejector kernel --cost 2 --out DIR
//   rwr bench          --mode cost --cost 0.5,1,2 --repeats 10 --format csv --out DIR
//   rwr verify-theory  [--seed N] [--out DIR]
//   rwr report         --in DIR/report.json --format csv --out DIR
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rwr/error.hpp"
#include "rwr/harness/cli.hpp"
#include "rwr/harness/experiment.hpp"
#include "rwr/harness/report.hpp"
#include "rwr/serialize.hpp"
#include "rwr/verify.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kVerification = 3;

int exit_code_for(rwr::ErrorKind kind) {
  switch (kind) {
    case rwr::ErrorKind::InvalidArgument:
    case rwr::ErrorKind::UnsupportedTask:
      return kUsage;
    default:
      return kData;
  }
}

void write_json(const std::filesystem::path& dir, const std::string& name, const nlohmann::json& j) {
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw rwr::Error(rwr::ErrorKind::IoError, "cannot write '" + path.string() + "'");
  out << j.dump(2) << "\n";
  std::cout << path.string() << "\n";
}

/// First repeat of the configured pipeline, used by fit and calibrate.
rwr::harness::RepeatOutcome single_run(rwr::harness::ExperimentConfig cfg) {
  cfg.repeats = 1;
  cfg.validate();
  const auto src = rwr::harness::ExperimentSource::load(cfg);
  return rwr::harness::run_repeat(cfg, src, 0);
}

int cmd_fit(const rwr::harness::ExperimentConfig& cfg) {
  const auto out = single_run(cfg);
  write_json(cfg.output_dir, "model.json",
             {{"regressor", rwr::json::to_json(*out.regressor)},
              {"scaling", rwr::json::to_json(out.scaling)},
              {"selection", out.selection},
              {"train_mse", out.train_mse},
              {"test_mse", out.test_mse},
              {"config", rwr::harness::to_ini(cfg)}});
  return kOk;
}

int cmd_calibrate(const rwr::harness::ExperimentConfig& cfg) {
  const auto out = single_run(cfg);
  write_json(cfg.output_dir, "pipeline.json",
             {{"regressor", rwr::json::to_json(*out.regressor)},
              {"rejector", rwr::json::to_json(*out.rejector)},
              {"scaling", rwr::json::to_json(out.scaling)},
              {"selection", out.selection},
              {"test", rwr::json::to_json(out.test)},
              {"config", rwr::harness::to_ini(cfg)}});
  return kOk;
}

int cmd_bench(const std::vector<rwr::harness::ExperimentConfig>& cfgs) {
  std::vector<rwr::harness::RunReport> reports;
  for (const auto& cfg : cfgs) {
    reports.push_back(rwr::harness::run_experiment(cfg));
    const auto& r = reports.back();
    std::cerr << r.dataset << " " << to_string(r.mode) << "=" << r.level << " " << r.method << ": rwr "
              << r.rwr.mean << " +/- " << r.rwr.std << ", rejection " << r.rejection.mean << ", machine "
              << r.machine.mean << "\n";
  }
  const auto path = rwr::harness::emit_report(reports, cfgs.front().format, cfgs.front().output_dir);
  std::cout << path.string() << "\n";
  return kOk;
}

int cmd_verify(std::uint64_t seed, const std::string& out_dir) {
  const auto rep = rwr::verify::run_theory_suite(seed);
  const auto j = rep.to_json();
  if (out_dir.empty())
    std::cout << j.dump(2) << "\n";
  else
    write_json(out_dir, "theory.json", j);
  for (const auto& p : rep.properties)
    std::cerr << (p.passed ? "PASS " : "FAIL ") << p.name << " (margin " << p.margin << ")\n";
  return rep.all_passed() ? kOk : kVerification;
}

int cmd_report(const std::string& in, rwr::harness::ReportFormat format, const std::string& out_dir) {
  const auto reports = rwr::harness::load_reports(in);
  for (const auto& r : reports)
    if (!r.aggregates_consistent())
      throw rwr::Error(rwr::ErrorKind::ParseError, "stored aggregates disagree with the per-repeat losses");
  std::cout << rwr::harness::emit_report(reports, format, out_dir).string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regression with rejection: fit, calibrate, benchmark and verify"};
  app.require_subcommand(1);

  rwr::harness::ExperimentConfig fit_cfg, cal_cfg, bench_cfg;
  rwr::harness::LevelLists fit_levels, cal_levels, bench_levels;
  auto* fit = app.add_subcommand("fit", "Fit a regressor on the training split and save it");
  rwr::harness::bind_experiment_options(*fit, fit_cfg, fit_levels);
  auto* cal = app.add_subcommand("calibrate", "Fit a regressor and rejector and save the pipeline");
  rwr::harness::bind_experiment_options(*cal, cal_cfg, cal_levels);
  auto* bench = app.add_subcommand("bench", "Repeated fixed-cost or fixed-budget experiment");
  rwr::harness::bind_experiment_options(*bench, bench_cfg, bench_levels);

  std::uint64_t verify_seed = 20240601;
  std::string verify_out;
  auto* verify = app.add_subcommand("verify-theory", "Check the theoretical guarantees numerically");
  verify->add_option("--seed", verify_seed, "Seed for the randomized checks")->capture_default_str();
  verify->add_option("--out", verify_out, "Directory for theory.json (stdout if omitted)");

  std::string report_in, report_out = "out";
  rwr::harness::ReportFormat report_format = rwr::harness::ReportFormat::Csv;
  auto* report = app.add_subcommand("report", "Convert a saved JSON report to a table");
  report->add_option("--in", report_in, "report.json written by bench")->required()->check(CLI::ExistingFile);
  report->add_option<rwr::harness::ReportFormat, int>("--format", report_format, "json | csv")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, rwr::harness::ReportFormat>{{"json", rwr::harness::ReportFormat::Json},
                                                            {"csv", rwr::harness::ReportFormat::Csv}},
          CLI::ignore_case));
  report->add_option("--out", report_out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*fit) return cmd_fit(rwr::harness::expand_levels(fit_cfg, fit_levels).front());
    if (*cal) return cmd_calibrate(rwr::harness::expand_levels(cal_cfg, cal_levels).front());
    if (*bench) return cmd_bench(rwr::harness::expand_levels(bench_cfg, bench_levels));
    if (*verify) return cmd_verify(verify_seed, verify_out);
    if (*report) return cmd_report(report_in, report_format, report_out);
  } catch (const rwr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}

// rpldoe: Taguchi experiment driver for RPL/Trickle power studies.
//
// Exit codes: 0 success, 1 verification failure, 2 usage or input error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rpldoe/error.hpp"
#include "rpldoe/harness/fixture.hpp"
#include "rpldoe/harness/report.hpp"
#include "rpldoe/harness/spec.hpp"
#include "rpldoe/taguchi/design.hpp"
#include "rpldoe/taguchi/io.hpp"

#ifndef RPLDOE_WITH_NETSIM
#define RPLDOE_WITH_NETSIM 1
#endif
#if RPLDOE_WITH_NETSIM
#include "rpldoe/harness/runner.hpp"
#endif

namespace fs = std::filesystem;
using namespace rpldoe;

namespace {

constexpr int kOk = 0;
constexpr int kVerifyFailed = 1;
constexpr int kUsage = 2;

struct Args {
  std::string spec_path;
  std::string seeds;
  int jobs = 1;
  bool paper_scale = false;
  std::string anova_space;
  std::string snr_metric;
  std::string out;
  std::string input;
  std::string format = "all";
  std::string array;
  bool verbose = false;
};

harness::ExperimentSpec load_spec(const Args& a) {
  if (a.spec_path.empty()) throw Error(ErrorKind::kInvalidInput, "--spec is required");
  auto spec = harness::parse_spec_file(a.spec_path);
  if (!a.seeds.empty()) spec.seeds = harness::parse_seed_list(a.seeds);
  if (!a.anova_space.empty()) spec.anova_space = taguchi::parse_anova_space(a.anova_space);
  if (!a.snr_metric.empty()) spec.snr_metric = taguchi::parse_snr_metric(a.snr_metric);
  if (a.paper_scale) spec.base.duration_ms = harness::kPaperScaleDurationMs;
  harness::validate(spec);
  return spec;
}

int cmd_design(const Args& a) {
  const auto spec = load_spec(a);
  const auto dm = harness::expand_design(spec);
  if (a.out.empty()) {
    taguchi::write_design_csv(std::cout, dm);
  } else {
    std::ofstream os(a.out);
    if (!os) throw Error(ErrorKind::kIo, "cannot write " + a.out);
    taguchi::write_design_csv(os, dm);
  }
  std::cerr << dm.array_name << ": " << dm.run_count() << " runs, min_runs "
            << taguchi::min_runs(spec.plain_factors()) << '\n';
  return kOk;
}

int cmd_verify_oa(const Args& a) {
  taguchi::OrthogonalArray oa;
  std::vector<std::size_t> cols;
  if (!a.spec_path.empty()) {
    const auto spec = load_spec(a);
    const auto dm = harness::expand_design(spec);
    oa = taguchi::as_array(dm);
    for (std::size_t i = 0; i < dm.factor_count(); ++i) cols.push_back(i);
  } else {
    const auto catalog = taguchi::standard_catalog();
    auto found = taguchi::find_array(catalog, a.array.empty() ? "L27" : a.array);
    if (!found) throw Error(ErrorKind::kInvalidInput, "unknown array '" + a.array + "'");
    oa = *found;
    for (std::size_t i = 0; i < oa.columns(); ++i) cols.push_back(i);
  }
  const auto rep = taguchi::verify_orthogonality(oa, cols);
  std::cout << oa.name << ": " << rep.pairs.size() << " column pairs, " << oa.runs() << " runs\n";
  for (const auto& f : rep.failures) std::cout << "  " << f << '\n';
  std::cout << (rep.passed ? "PASS" : "FAIL") << '\n';
  return rep.passed ? kOk : kVerifyFailed;
}

int cmd_verify_paper(const Args& a) {
  const auto v = harness::fixture::verify_paper();
  harness::fixture::write_verification(std::cout, v, a.verbose);
  return v.passed() ? kOk : kVerifyFailed;
}

int cmd_analyze(const Args& a) {
  if (a.input.empty()) throw Error(ErrorKind::kInvalidInput, "--input is required");
  std::ifstream in(a.input);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + a.input);
  std::vector<taguchi::Factor> known;
  harness::AnalysisOptions opt;
  if (!a.spec_path.empty()) {
    const auto spec = load_spec(a);
    known = spec.plain_factors();
    opt.space = spec.anova_space;
    opt.metric = spec.snr_metric;
    opt.alpha = spec.alpha;
  }
  if (!a.anova_space.empty()) opt.space = taguchi::parse_anova_space(a.anova_space);
  if (!a.snr_metric.empty()) opt.metric = taguchi::parse_snr_metric(a.snr_metric);
  const auto data = taguchi::read_response_csv(in, known);
  auto report = harness::analyze(data.design, data.responses, opt);
  harness::write_text_report(std::cout, report);
  if (!a.out.empty())
    for (const auto& f : harness::export_report(report, harness::parse_export_format(a.format), a.out))
      std::cerr << "wrote " << f.string() << '\n';
  return kOk;
}

int cmd_report(const Args& a) {
  if (a.input.empty() || a.out.empty())
    throw Error(ErrorKind::kInvalidInput, "--input and --out are required");
  std::ifstream in(a.input);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + a.input);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, a.input + ": " + e.what());
  }
  const auto report = harness::report_from_json(j);
  for (const auto& f : harness::export_report(report, harness::parse_export_format(a.format), a.out))
    std::cerr << "wrote " << f.string() << '\n';
  return kOk;
}

int cmd_run(const Args& a) {
#if RPLDOE_WITH_NETSIM
  const auto spec = load_spec(a);
  const fs::path out = a.out.empty() ? fs::path("rpldoe-out") : fs::path(a.out);
  harness::RunOptions opt;
  opt.jobs = a.jobs;
  opt.log = out / "runs.jsonl";
  opt.on_record = [](const harness::RunRecord& r, bool reused) {
    std::cerr << "seed " << r.batch_seed << " point " << (r.point + 1)
              << (reused ? " (resumed)" : "") << ": "
              << (r.ok() ? taguchi::fixed(r.mean, 4) + " mW" : "FAILED " + r.error) << '\n';
  };
  const auto outcome = harness::run_experiment(spec, opt);
  std::cout << "simulated " << outcome.simulated << " points, reused " << outcome.reused << "\n\n";
  std::cout << taguchi::pad("seed", 8);
  for (const auto& f : spec.factors) std::cout << taguchi::lpad(f.factor.label + " F", 10);
  std::cout << "   top\n";
  int status = kOk;
  for (std::size_t b = 0; b < outcome.batches.size(); ++b) {
    const auto seed = spec.seeds[b];
    std::cout << taguchi::pad(std::to_string(seed), 8);
    try {
      auto report = harness::analyze(outcome.batches[b], spec);
      std::string top;
      double best = -1.0;
      for (const auto& row : report.anova.factors) {
        std::cout << taguchi::lpad(taguchi::fmt_f(row.f_value), 10);
        if (row.f_value && *row.f_value > best) {
          best = *row.f_value;
          top = row.label;
        }
      }
      std::cout << "   " << top << '\n';
      harness::export_report(report, harness::ExportFormat::kAll, out / ("seed_" + std::to_string(seed)));
    } catch (const Error& e) {
      std::cout << "  " << e.what() << '\n';
      status = kVerifyFailed;
    }
  }
  return status;
#else
  (void)a;
  std::cerr << "rpldoe: built without the simulator; 'run' is unavailable\n";
  return kUsage;
#endif
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Taguchi design-of-experiments harness for RPL/Trickle power"};
  app.require_subcommand(1);
  Args a;

  auto add_spec = [&](CLI::App* c) { c->add_option("--spec", a.spec_path, "experiment spec file"); };
  auto* design = app.add_subcommand("design", "print the design matrix as CSV");
  add_spec(design);
  design->add_option("--out", a.out, "write CSV to this file");

  auto* run = app.add_subcommand("run", "simulate every design point and analyze each seed batch");
  add_spec(run);
  run->add_option("--seed", a.seeds, "seed list, e.g. 1,2,7-9");
  run->add_option("--jobs", a.jobs, "parallel design points")->check(CLI::PositiveNumber);
  run->add_flag("--paper-scale", a.paper_scale, "600 s per simulation");
  run->add_option("--anova-space", a.anova_space, "raw or snr")->check(CLI::IsMember({"raw", "snr"}));
  run->add_option("--snr-metric", a.snr_metric)->check(CLI::IsMember({"smaller", "larger", "nominal"}));
  run->add_option("--out", a.out, "output directory (resume log lives here)");

  auto* analyze = app.add_subcommand("analyze", "ANOVA and SNR response table of a response CSV");
  add_spec(analyze);
  analyze->add_option("--input", a.input, "CSV: factor columns then y_1..y_r")->required();
  analyze->add_option("--anova-space", a.anova_space)->check(CLI::IsMember({"raw", "snr"}));
  analyze->add_option("--snr-metric", a.snr_metric)->check(CLI::IsMember({"smaller", "larger", "nominal"}));
  analyze->add_option("--out", a.out, "export directory");
  analyze->add_option("--format", a.format)->check(CLI::IsMember({"csv", "json", "text", "all"}));

  auto* report = app.add_subcommand("report", "export tables from a report.json");
  report->add_option("--input", a.input, "report.json")->required();
  report->add_option("--out", a.out, "export directory")->required();
  report->add_option("--format", a.format)->check(CLI::IsMember({"csv", "json", "text", "all"}));

  auto* vpaper = app.add_subcommand("verify-paper", "check the embedded fixture against the reference tables");
  vpaper->add_flag("--verbose,-v", a.verbose, "list every cell");

  auto* voa = app.add_subcommand("verify-oa", "pairwise balance of a design or catalog array");
  add_spec(voa);
  voa->add_option("--array", a.array, "catalog array name (default L27)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*design) return cmd_design(a);
    if (*run) return cmd_run(a);
    if (*analyze) return cmd_analyze(a);
    if (*report) return cmd_report(a);
    if (*vpaper) return cmd_verify_paper(a);
    if (*voa) return cmd_verify_oa(a);
  } catch (const Error& e) {
    std::cerr << "rpldoe: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "rpldoe: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

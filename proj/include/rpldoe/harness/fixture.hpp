#pragma once

// Reference five-factor power experiment, shipped as a regression oracle:
// the 27-point layout, the measured overall power per point and the ANOVA
// and SNR response tables computed from it.

#include <array>
#include <chrono>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "rpldoe/harness/report.hpp"
#include "rpldoe/taguchi/anova.hpp"
#include "rpldoe/taguchi/design.hpp"

namespace rpldoe::harness::fixture {

inline std::vector<taguchi::Factor> factors() {
  return {
      {"A", "Network Size (NS)", {20, 30, 40}},
      {"B", "Mobility Speed (MS)", {5, 15, 25}},
      {"C", "DIO_MIN_INTERVAL (MIN)", {8, 12, 16}},
      {"D", "DIO_DOUBLING (DOUBLING)", {4, 8, 12}},
      {"E", "REDUNDANCY_CONSTANT (RC)", {6, 10, 14}},
  };
}

// clang-format off
inline constexpr std::array<std::array<double, 5>, 27> kLayout = {{
    {20,  5,  8,  4,  6}, {20,  5,  8,  4, 10}, {20,  5,  8,  4, 14},
    {20, 15, 12,  8,  6}, {20, 15, 12,  8, 10}, {20, 15, 12,  8, 14},
    {20, 25, 16, 12,  6}, {20, 25, 16, 12, 10}, {20, 25, 16, 12, 14},
    {30,  5, 12, 12,  6}, {30,  5, 12, 12, 10}, {30,  5, 12, 12, 14},
    {30, 15, 16,  4,  6}, {30, 15, 16,  4, 10}, {30, 15, 16,  4, 14},
    {30, 25,  8,  8,  6}, {30, 25,  8,  8, 10}, {30, 25,  8,  8, 14},
    {40,  5, 16,  8,  6}, {40,  5, 16,  8, 10}, {40,  5, 16,  8, 14},
    {40, 15,  8, 12,  6}, {40, 15,  8, 12, 10}, {40, 15,  8, 12, 14},
    {40, 25, 12,  4,  6}, {40, 25, 12,  4, 10}, {40, 25, 12,  4, 14},
}};

// Overall average power, mW.
inline constexpr std::array<double, 27> kPower = {
    4.17,  4.929, 5.69,  1.243, 1.254, 1.264, 1.187, 1.187, 1.187,
    1.407, 1.424, 1.433, 1.243, 1.237, 1.237, 2.16,  2.59,  2.663,
    1.285, 1.285, 1.285, 2.625, 2.944, 2.905, 1.682, 1.742, 1.771,
};
// clang-format on

struct AnovaTarget {
  const char* label;
  double seq_ss;
  double adj_ms;
  double f_value;
  double p_value;
};

inline constexpr std::array<AnovaTarget, 5> kAnova = {{
    {"A", 2.6184, 1.3092, 20.36, 0.000},
    {"B", 3.4758, 1.7379, 27.02, 0.000},
    {"C", 25.5925, 12.7962, 198.96, 0.000},
    {"D", 4.8743, 2.4371, 37.89, 0.000},
    {"E", 0.3392, 0.1696, 2.64, 0.102},
}};
inline constexpr double kErrorSs = 1.0290;
inline constexpr double kErrorMs = 0.0643;
inline constexpr int kErrorDf = 16;
inline constexpr double kTotalSs = 37.9292;
inline constexpr int kTotalDf = 26;

struct ResponseTarget {
  const char* label;
  std::array<double, 3> level_means;
  double delta;
  int rank;
};

// The tabulated DOUBLING level-1 cell reads -6.085, a digit transposition:
// the group mean is -6.805 and the tabulated delta 2.818 = -3.987 - (-6.805).
inline constexpr std::array<ResponseTarget, 5> kResponse = {{
    {"A", {-5.746, -4.245, -5.318}, 1.501, 4},
    {"B", {-6.339, -4.278, -4.692}, 2.062, 3},
    {"C", {-10.205, -3.261, -1.843}, 8.362, 1},
    {"D", {-6.805, -3.987, -4.517}, 2.818, 2},
    {"E", {-4.711, -5.208, -5.390}, 0.679, 5},
}};
inline constexpr double kPrintedDoublingLevel1 = -6.085;

inline constexpr double kSsTol = 0.01;
inline constexpr double kMsTol = 0.005;
inline constexpr double kFTol = 0.5;
inline constexpr double kFTolRc = 0.05;
inline constexpr double kPTol = 0.005;
inline constexpr double kLevelMeanTol = 0.005;
inline constexpr double kDeltaTol = 0.01;

inline taguchi::DesignMatrix design() {
  std::vector<std::vector<double>> rows;
  for (const auto& r : kLayout) rows.emplace_back(r.begin(), r.end());
  return taguchi::design_from_rows(factors(), rows);
}

inline taguchi::ResponseMatrix responses() {
  taguchi::ResponseMatrix y;
  for (double v : kPower) y.rows.push_back({v});
  return y;
}

struct Check {
  std::string table;  // "anova" | "response"
  std::string cell;   // e.g. "C.seq_ss", "D.level1"
  double expected = 0.0;
  double actual = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct Verification {
  std::vector<Check> checks;
  double seconds = 0.0;

  bool passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return !checks.empty();
  }
  std::vector<Check> failures() const {
    std::vector<Check> out;
    for (const auto& c : checks)
      if (!c.passed) out.push_back(c);
    return out;
  }
  std::vector<Check> table_checks(const std::string& table) const {
    std::vector<Check> out;
    for (const auto& c : checks)
      if (c.table == table) out.push_back(c);
    return out;
  }
};

namespace detail {
inline void near(Verification& v, const std::string& table, const std::string& cell, double expected,
                 double actual, double tol) {
  v.checks.push_back({table, cell, expected, actual, tol, std::isfinite(actual) && std::fabs(actual - expected) <= tol});
}
inline void exact(Verification& v, const std::string& table, const std::string& cell, double expected,
                  double actual) {
  v.checks.push_back({table, cell, expected, actual, 0.0, actual == expected});
}
}  // namespace detail

/// Diffs a raw-space ANOVA and an SNR response table against the targets.
inline Verification compare(const taguchi::AnovaTable& anova, const taguchi::ResponseTable& rt) {
  Verification v;
  for (const auto& t : kAnova) {
    const auto& row = anova.row(t.label);
    const std::string l = t.label;
    detail::near(v, "anova", l + ".seq_ss", t.seq_ss, row.seq_ss, kSsTol);
    detail::near(v, "anova", l + ".adj_ms", t.adj_ms, row.adj_ms, kMsTol);
    const double f = row.f_value.value_or(NAN);
    detail::near(v, "anova", l + ".f_value", t.f_value, f, l == "E" ? kFTolRc : kFTol);
    const double p = row.p_value.value_or(NAN);
    if (t.p_value == 0.0) {
      // A zero target is a printed 0.000, so the check is on the rounded text.
      v.checks.push_back({"anova", l + ".p_value", 0.0, p, 0.0005, taguchi::fmt_p(row.p_value) == "0.000"});
    } else {
      detail::near(v, "anova", l + ".p_value", t.p_value, p, kPTol);
    }
  }
  detail::near(v, "anova", "Error.seq_ss", kErrorSs, anova.error_ss, kSsTol);
  detail::near(v, "anova", "Error.adj_ms", kErrorMs, anova.error_ms, kMsTol);
  detail::exact(v, "anova", "Error.df", kErrorDf, anova.error_df);
  detail::near(v, "anova", "Total.seq_ss", kTotalSs, anova.total_ss, kSsTol);
  detail::exact(v, "anova", "Total.df", kTotalDf, anova.total_df);

  for (const auto& t : kResponse) {
    const auto& row = rt.row(t.label);
    const std::string l = t.label;
    for (std::size_t i = 0; i < 3; ++i)
      detail::near(v, "response", l + ".level" + std::to_string(i + 1), t.level_means[i],
                   i < row.level_means.size() ? row.level_means[i] : NAN, kLevelMeanTol);
    detail::near(v, "response", l + ".delta", t.delta, row.delta, kDeltaTol);
    detail::exact(v, "response", l + ".rank", t.rank, row.rank);
  }
  return v;
}

/// Raw-space ANOVA plus SNR response table of `y` on the fixture layout,
/// diffed against the reference tables.
inline Verification verify(const taguchi::ResponseMatrix& y) {
  const auto start = std::chrono::steady_clock::now();
  const auto dm = design();
  const auto report = analyze(dm, y, {taguchi::AnovaSpace::kRaw, taguchi::SnrMetric::kSmallerBetter, 0.05});
  auto v = compare(report.anova, report.response_table);
  v.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return v;
}

inline Verification verify_paper() { return verify(responses()); }

inline void write_verification(std::ostream& os, const Verification& v, bool verbose = false) {
  for (const auto& c : v.checks) {
    if (c.passed && !verbose) continue;
    os << (c.passed ? "  ok    " : "  FAIL  ") << taguchi::pad(c.table, 9) << taguchi::pad(c.cell, 16)
       << "expected " << taguchi::exact(c.expected) << "  got " << taguchi::fixed(c.actual, 6)
       << "  tol " << taguchi::exact(c.tolerance) << '\n';
  }
  const auto fails = v.failures().size();
  os << (v.passed() ? "PASS" : "FAIL") << ": " << (v.checks.size() - fails) << "/" << v.checks.size()
     << " cells within tolerance\n";
}

}  // namespace rpldoe::harness::fixture

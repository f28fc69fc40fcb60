#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rpldoe/error.hpp"

namespace rpldoe::taguchi {

/// A controllable input of the experiment with its ordered level values.
/// Level index 1 refers to levels[0].
struct Factor {
  std::string label;
  std::string name;
  std::vector<double> levels;

  std::size_t level_count() const { return levels.size(); }

  bool operator==(const Factor&) const = default;
};

inline void validate(const Factor& f) {
  if (f.label.empty()) throw Error(ErrorKind::kInvalidDesign, "factor without label");
  if (f.levels.size() < 2)
    throw Error(ErrorKind::kInvalidDesign, "factor " + f.label + " needs at least 2 levels");
  std::set<double> seen(f.levels.begin(), f.levels.end());
  if (seen.size() != f.levels.size())
    throw Error(ErrorKind::kInvalidDesign, "factor " + f.label + " has repeated level values");
}

struct OrthogonalArray {
  std::string name;
  int levels = 3;  // level arity shared by every column
  std::vector<std::vector<int>> cells;  // runs x columns, entries 1..levels

  std::size_t runs() const { return cells.size(); }
  std::size_t columns() const { return cells.empty() ? 0 : cells.front().size(); }
  int at(std::size_t run, std::size_t column) const { return cells[run][column]; }

  bool operator==(const OrthogonalArray&) const = default;
};

inline OrthogonalArray l9() {
  return {"L9", 3,
          {
              {1, 1, 1, 1},
              {1, 2, 2, 2},
              {1, 3, 3, 3},
              {2, 1, 2, 3},
              {2, 2, 3, 1},
              {2, 3, 1, 2},
              {3, 1, 3, 2},
              {3, 2, 1, 3},
              {3, 3, 2, 1},
          }};
}

/// Standard 13-column L27 (3^13 fractional design in 27 runs).
inline OrthogonalArray l27() {
  return {"L27", 3,
          {
              {1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1},
              {1, 1, 1, 1, 2, 2, 2, 2, 2, 2, 2, 2, 2},
              {1, 1, 1, 1, 3, 3, 3, 3, 3, 3, 3, 3, 3},
              {1, 2, 2, 2, 1, 1, 1, 2, 2, 2, 3, 3, 3},
              {1, 2, 2, 2, 2, 2, 2, 3, 3, 3, 1, 1, 1},
              {1, 2, 2, 2, 3, 3, 3, 1, 1, 1, 2, 2, 2},
              {1, 3, 3, 3, 1, 1, 1, 3, 3, 3, 2, 2, 2},
              {1, 3, 3, 3, 2, 2, 2, 1, 1, 1, 3, 3, 3},
              {1, 3, 3, 3, 3, 3, 3, 2, 2, 2, 1, 1, 1},
              {2, 1, 2, 3, 1, 2, 3, 1, 2, 3, 1, 2, 3},
              {2, 1, 2, 3, 2, 3, 1, 2, 3, 1, 2, 3, 1},
              {2, 1, 2, 3, 3, 1, 2, 3, 1, 2, 3, 1, 2},
              {2, 2, 3, 1, 1, 2, 3, 2, 3, 1, 3, 1, 2},
              {2, 2, 3, 1, 2, 3, 1, 3, 1, 2, 1, 2, 3},
              {2, 2, 3, 1, 3, 1, 2, 1, 2, 3, 2, 3, 1},
              {2, 3, 1, 2, 1, 2, 3, 3, 1, 2, 2, 3, 1},
              {2, 3, 1, 2, 2, 3, 1, 1, 2, 3, 3, 1, 2},
              {2, 3, 1, 2, 3, 1, 2, 2, 3, 1, 1, 2, 3},
              {3, 1, 3, 2, 1, 3, 2, 1, 3, 2, 1, 3, 2},
              {3, 1, 3, 2, 2, 1, 3, 2, 1, 3, 2, 1, 3},
              {3, 1, 3, 2, 3, 2, 1, 3, 2, 1, 3, 2, 1},
              {3, 2, 1, 3, 1, 3, 2, 2, 1, 3, 3, 2, 1},
              {3, 2, 1, 3, 2, 1, 3, 3, 2, 1, 1, 3, 2},
              {3, 2, 1, 3, 3, 2, 1, 1, 3, 2, 2, 1, 3},
              {3, 3, 2, 1, 1, 3, 2, 3, 2, 1, 2, 1, 3},
              {3, 3, 2, 1, 2, 1, 3, 1, 3, 2, 3, 2, 1},
              {3, 3, 2, 1, 3, 2, 1, 2, 1, 3, 1, 3, 2},
          }};
}

inline std::vector<OrthogonalArray> standard_catalog() { return {l9(), l27()}; }

inline std::optional<OrthogonalArray> find_array(std::span<const OrthogonalArray> catalog,
                                                 const std::string& name) {
  for (const auto& oa : catalog)
    if (oa.name == name) return oa;
  return std::nullopt;
}

/// Minimum number of runs needed to estimate every main effect:
/// one for the mean plus one per degree of freedom.
inline std::size_t min_runs(std::span<const Factor> factors) {
  if (factors.empty()) throw Error(ErrorKind::kInvalidDesign, "no factors");
  std::size_t n = 1;
  for (const auto& f : factors) {
    if (f.level_count() < 2)
      throw Error(ErrorKind::kInvalidDesign, "factor " + f.label + " needs at least 2 levels");
    n += f.level_count() - 1;
  }
  return n;
}

/// Smallest array in the catalog whose arity matches the factors and which
/// has enough runs and columns.
inline OrthogonalArray select_array(std::span<const Factor> factors,
                                    std::span<const OrthogonalArray> catalog) {
  if (catalog.empty()) throw Error(ErrorKind::kInvalidInput, "empty array catalog");
  const std::size_t needed = min_runs(factors);
  const OrthogonalArray* best = nullptr;
  for (const auto& oa : catalog) {
    bool arity_ok = std::all_of(factors.begin(), factors.end(), [&](const Factor& f) {
      return f.level_count() == static_cast<std::size_t>(oa.levels);
    });
    if (!arity_ok || oa.runs() < needed || oa.columns() < factors.size()) continue;
    if (!best || oa.runs() < best->runs() ||
        (oa.runs() == best->runs() && oa.columns() < best->columns()))
      best = &oa;
  }
  if (!best)
    throw Error(ErrorKind::kNoFeasibleArray,
                std::to_string(factors.size()) + " factors need " + std::to_string(needed) +
                    " runs; no catalog array of matching arity is large enough");
  return *best;
}

struct BalanceReport {
  struct ColumnCount {
    std::size_t column;
    std::vector<std::size_t> level_counts;  // index level-1
  };
  struct PairCount {
    std::size_t first;
    std::size_t second;
    std::vector<std::vector<std::size_t>> joint;  // [level_i-1][level_j-1]
  };

  std::vector<ColumnCount> columns;
  std::vector<PairCount> pairs;
  std::size_t expected_level_count = 0;
  std::size_t expected_pair_count = 0;
  bool passed = false;
  std::vector<std::string> failures;
};

inline BalanceReport verify_orthogonality(const OrthogonalArray& oa,
                                          std::span<const std::size_t> used_columns) {
  for (auto c : used_columns)
    if (c >= oa.columns())
      throw Error(ErrorKind::kInvalidInput, "column " + std::to_string(c + 1) + " out of range");

  const auto L = static_cast<std::size_t>(oa.levels);
  BalanceReport report;
  report.expected_level_count = oa.runs() / L;
  report.expected_pair_count = oa.runs() / (L * L);
  report.passed = oa.runs() % L == 0;

  for (auto c : used_columns) {
    BalanceReport::ColumnCount cc{c, std::vector<std::size_t>(L, 0)};
    for (std::size_t r = 0; r < oa.runs(); ++r) {
      int v = oa.at(r, c);
      if (v < 1 || v > oa.levels) {
        report.failures.push_back("column " + std::to_string(c + 1) + " has level " +
                                  std::to_string(v) + " outside 1.." + std::to_string(oa.levels));
        report.passed = false;
        continue;
      }
      ++cc.level_counts[static_cast<std::size_t>(v - 1)];
    }
    for (std::size_t l = 0; l < L; ++l) {
      if (cc.level_counts[l] != report.expected_level_count) {
        report.passed = false;
        report.failures.push_back("column " + std::to_string(c + 1) + " level " +
                                  std::to_string(l + 1) + " appears " +
                                  std::to_string(cc.level_counts[l]) + "x, expected " +
                                  std::to_string(report.expected_level_count));
      }
    }
    report.columns.push_back(std::move(cc));
  }

  const bool pairs_divisible = oa.runs() % (L * L) == 0;
  for (std::size_t i = 0; i < used_columns.size(); ++i) {
    for (std::size_t j = i + 1; j < used_columns.size(); ++j) {
      const auto ci = used_columns[i], cj = used_columns[j];
      BalanceReport::PairCount pc{ci, cj, std::vector(L, std::vector<std::size_t>(L, 0))};
      for (std::size_t r = 0; r < oa.runs(); ++r) {
        int a = oa.at(r, ci), b = oa.at(r, cj);
        if (a >= 1 && a <= oa.levels && b >= 1 && b <= oa.levels)
          ++pc.joint[static_cast<std::size_t>(a - 1)][static_cast<std::size_t>(b - 1)];
      }
      for (std::size_t a = 0; a < L; ++a) {
        for (std::size_t b = 0; b < L; ++b) {
          if (!pairs_divisible || pc.joint[a][b] != report.expected_pair_count) {
            report.passed = false;
            report.failures.push_back("columns (" + std::to_string(ci + 1) + "," +
                                      std::to_string(cj + 1) + ") pair (" + std::to_string(a + 1) +
                                      "," + std::to_string(b + 1) + ") appears " +
                                      std::to_string(pc.joint[a][b]) + "x");
          }
        }
      }
      report.pairs.push_back(std::move(pc));
    }
  }
  return report;
}

/// One materialized run of the experiment.
struct DesignPoint {
  std::size_t run = 0;                 // 0-based row index
  std::vector<int> level_index;        // 1-based, per factor
  std::vector<double> values;          // level value, per factor

  bool operator==(const DesignPoint&) const = default;
};

struct DesignMatrix {
  std::vector<Factor> factors;
  std::vector<std::size_t> assignment;  // factor i -> array column
  std::string array_name;
  std::vector<DesignPoint> points;

  std::size_t run_count() const { return points.size(); }
  std::size_t factor_count() const { return factors.size(); }

  std::size_t factor_index(const std::string& label) const {
    for (std::size_t i = 0; i < factors.size(); ++i)
      if (factors[i].label == label) return i;
    throw Error(ErrorKind::kUnknownFactor, label);
  }

  bool operator==(const DesignMatrix&) const = default;
};

/// Materializes array rows through the factor -> column assignment. With no
/// explicit assignment factor i goes to column i.
inline DesignMatrix make_design(std::vector<Factor> factors, const OrthogonalArray& oa,
                                std::vector<std::size_t> assignment = {}) {
  if (factors.empty()) throw Error(ErrorKind::kInvalidDesign, "no factors");
  for (const auto& f : factors) validate(f);
  if (assignment.empty()) {
    assignment.resize(factors.size());
    for (std::size_t i = 0; i < factors.size(); ++i) assignment[i] = i;
  }
  if (assignment.size() != factors.size())
    throw Error(ErrorKind::kInvalidDesign, "assignment size does not match factor count");
  std::set<std::size_t> distinct(assignment.begin(), assignment.end());
  if (distinct.size() != assignment.size())
    throw Error(ErrorKind::kInvalidDesign, "two factors assigned to the same column");
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (assignment[i] >= oa.columns())
      throw Error(ErrorKind::kInvalidDesign, "column out of range for " + oa.name);
    if (factors[i].level_count() != static_cast<std::size_t>(oa.levels))
      throw Error(ErrorKind::kInvalidDesign,
                  "factor " + factors[i].label + " has " + std::to_string(factors[i].level_count()) +
                      " levels but " + oa.name + " is a " + std::to_string(oa.levels) +
                      "-level array");
  }

  DesignMatrix dm;
  dm.array_name = oa.name;
  dm.assignment = assignment;
  dm.points.reserve(oa.runs());
  for (std::size_t r = 0; r < oa.runs(); ++r) {
    DesignPoint p;
    p.run = r;
    for (std::size_t i = 0; i < factors.size(); ++i) {
      int li = oa.at(r, assignment[i]);
      p.level_index.push_back(li);
      p.values.push_back(factors[i].levels[static_cast<std::size_t>(li - 1)]);
    }
    dm.points.push_back(std::move(p));
  }
  dm.factors = std::move(factors);
  return dm;
}

/// Builds a design from explicit level values per row (e.g. read from CSV).
/// Level order follows each factor's declared levels.
inline DesignMatrix design_from_rows(std::vector<Factor> factors,
                                     const std::vector<std::vector<double>>& rows) {
  if (factors.empty()) throw Error(ErrorKind::kInvalidDesign, "no factors");
  DesignMatrix dm;
  dm.array_name = "custom";
  for (std::size_t i = 0; i < factors.size(); ++i) dm.assignment.push_back(i);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != factors.size())
      throw Error(ErrorKind::kInvalidInput, "row " + std::to_string(r + 1) + " has " +
                                                std::to_string(rows[r].size()) + " factor values");
    DesignPoint p;
    p.run = r;
    for (std::size_t i = 0; i < factors.size(); ++i) {
      const auto& lv = factors[i].levels;
      auto it = std::find(lv.begin(), lv.end(), rows[r][i]);
      if (it == lv.end())
        throw Error(ErrorKind::kInvalidInput,
                    "row " + std::to_string(r + 1) + ": value not a level of " + factors[i].label);
      p.level_index.push_back(static_cast<int>(it - lv.begin()) + 1);
      p.values.push_back(rows[r][i]);
    }
    dm.points.push_back(std::move(p));
  }
  dm.factors = std::move(factors);
  return dm;
}

/// Treats the materialized design as an array (level indices only) so the
/// balance check can run on any layout, including one read from a file.
inline OrthogonalArray as_array(const DesignMatrix& dm) {
  OrthogonalArray oa;
  oa.name = dm.array_name;
  oa.levels = dm.factors.empty() ? 0 : static_cast<int>(dm.factors.front().level_count());
  for (const auto& p : dm.points) oa.cells.push_back(p.level_index);
  return oa;
}

}  // namespace rpldoe::taguchi

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rpldoe/error.hpp"
#include "rpldoe/taguchi/design.hpp"
#include "rpldoe/taguchi/fdist.hpp"
#include "rpldoe/taguchi/snr.hpp"

namespace rpldoe::taguchi {

/// Responses per design point: rows[i] holds the r repeated observations of
/// point i.
struct ResponseMatrix {
  std::vector<std::vector<double>> rows;

  std::size_t repetitions() const { return rows.empty() ? 0 : rows.front().size(); }

  void validate() const {
    if (rows.empty()) throw Error(ErrorKind::kInvalidInput, "empty response matrix");
    const auto r = rows.front().size();
    if (r < 1) throw Error(ErrorKind::kInvalidInput, "need at least one repetition");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != r)
        throw Error(ErrorKind::kInvalidInput,
                    "point " + std::to_string(i + 1) + " has a different repetition count");
      for (double y : rows[i])
        if (!(y > 0.0) || !std::isfinite(y))
          throw Error(ErrorKind::kDomain, "point " + std::to_string(i + 1) + " has response <= 0");
    }
  }

  std::vector<double> means() const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows)
      out.push_back(std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size()));
    return out;
  }

  bool operator==(const ResponseMatrix&) const = default;
};

inline std::vector<double> snr_vector(const ResponseMatrix& y, SnrMetric metric) {
  std::vector<double> out;
  out.reserve(y.rows.size());
  for (const auto& row : y.rows) out.push_back(snr(metric, row));
  return out;
}

enum class AnovaSpace { kRaw, kSnr };

inline std::string_view to_string(AnovaSpace s) { return s == AnovaSpace::kRaw ? "raw" : "snr"; }

inline AnovaSpace parse_anova_space(std::string_view s) {
  if (s == "raw") return AnovaSpace::kRaw;
  if (s == "snr") return AnovaSpace::kSnr;
  throw Error(ErrorKind::kInvalidInput, "unknown ANOVA space '" + std::string(s) + "'");
}

inline double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double total_sum_squares(std::span<const double> values) {
  if (values.size() < 2) throw Error(ErrorKind::kInvalidInput, "need at least 2 values");
  const double m = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return ss;
}

namespace detail {

inline void require_aligned(const DesignMatrix& design, std::span<const double> values) {
  if (values.size() != design.run_count())
    throw Error(ErrorKind::kInvalidInput, std::to_string(values.size()) + " values for " +
                                              std::to_string(design.run_count()) + " design points");
}

struct LevelGroups {
  std::vector<std::size_t> count;
  std::vector<double> sum;
};

inline LevelGroups group_by_level(const DesignMatrix& design, std::span<const double> values,
                                  std::size_t factor) {
  const auto L = design.factors[factor].level_count();
  LevelGroups g{std::vector<std::size_t>(L, 0), std::vector<double>(L, 0.0)};
  for (std::size_t i = 0; i < design.run_count(); ++i) {
    const auto l = static_cast<std::size_t>(design.points[i].level_index[factor] - 1);
    ++g.count[l];
    g.sum[l] += values[i];
  }
  return g;
}

}  // namespace detail

/// Between-level sum of squares of one factor, each level weighted by its
/// point count.
inline double factor_sum_squares(const DesignMatrix& design, std::span<const double> values,
                                 std::size_t factor) {
  detail::require_aligned(design, values);
  if (factor >= design.factor_count())
    throw Error(ErrorKind::kUnknownFactor, "factor index " + std::to_string(factor));
  if (values.empty()) throw Error(ErrorKind::kInvalidInput, "no values");
  const double grand = mean_of(values);
  const auto g = detail::group_by_level(design, values, factor);
  double ss = 0.0;
  for (std::size_t l = 0; l < g.count.size(); ++l) {
    if (g.count[l] == 0) continue;
    const double m = g.sum[l] / static_cast<double>(g.count[l]);
    ss += static_cast<double>(g.count[l]) * (m - grand) * (m - grand);
  }
  return ss;
}

inline double factor_sum_squares(const DesignMatrix& design, std::span<const double> values,
                                 const std::string& label) {
  return factor_sum_squares(design, values, design.factor_index(label));
}

inline double error_sum_squares(double ss_total, std::span<const double> factor_ss) {
  const double explained = std::accumulate(factor_ss.begin(), factor_ss.end(), 0.0);
  const double diff = ss_total - explained;
  const double tol = 1e-9 * std::max(1.0, std::fabs(ss_total));
  if (diff < -tol)
    throw Error(ErrorKind::kInconsistentDecomposition,
                "factor sums of squares exceed the total by " + std::to_string(-diff));
  return std::fabs(diff) <= tol ? 0.0 : diff;
}

inline double percent_contribution(double factor_ss, double ss_total) {
  if (ss_total == 0.0) throw Error(ErrorKind::kUndefinedContribution, "total sum of squares is 0");
  return 100.0 * factor_ss / ss_total;
}

/// Mean-square ratio. Returns +inf when the error term is exactly zero but
/// the factor explains something.
inline double f_value(double factor_ss, double factor_df, double error_ss, double error_df) {
  if (error_df <= 0.0) throw Error(ErrorKind::kNoErrorDf, "saturated design has no error term");
  if (factor_df < 1.0) throw Error(ErrorKind::kInvalidInput, "factor df must be >= 1");
  if (error_ss < 0.0) throw Error(ErrorKind::kInvalidInput, "negative error sum of squares");
  if (error_ss == 0.0) {
    if (factor_ss == 0.0) throw Error(ErrorKind::kZeroVariance, "0/0 mean-square ratio");
    return std::numeric_limits<double>::infinity();
  }
  return (factor_ss / factor_df) / (error_ss / error_df);
}

struct AnovaRow {
  std::string label;
  std::string name;
  int df = 0;
  double seq_ss = 0.0;
  double adj_ms = 0.0;
  std::optional<double> f_value;
  std::optional<double> p_value;
  double percent_contribution = 0.0;

  bool operator==(const AnovaRow&) const = default;
};

struct AnovaTable {
  AnovaSpace space = AnovaSpace::kRaw;
  std::vector<AnovaRow> factors;
  int error_df = 0;
  double error_ss = 0.0;
  double error_ms = 0.0;
  double error_percent = 0.0;
  int total_df = 0;
  double total_ss = 0.0;
  bool zero_variance = false;  // every response equal, no F or P
  bool saturated = false;      // error_df == 0, no F or P

  const AnovaRow& row(const std::string& label) const {
    for (const auto& r : factors)
      if (r.label == label) return r;
    throw Error(ErrorKind::kUnknownFactor, label);
  }

  bool operator==(const AnovaTable&) const = default;
};

/// Fixed-effects main-effects ANOVA over a balanced design. Rows are ordered
/// by factor label.
inline AnovaTable anova(const DesignMatrix& design, std::span<const double> values,
                        AnovaSpace space = AnovaSpace::kRaw) {
  detail::require_aligned(design, values);
  AnovaTable t;
  t.space = space;
  t.total_ss = total_sum_squares(values);
  t.total_df = static_cast<int>(values.size()) - 1;

  std::vector<double> ss;
  int df_sum = 0;
  for (std::size_t j = 0; j < design.factor_count(); ++j) {
    AnovaRow row;
    row.label = design.factors[j].label;
    row.name = design.factors[j].name;
    row.df = static_cast<int>(design.factors[j].level_count()) - 1;
    row.seq_ss = factor_sum_squares(design, values, j);
    row.adj_ms = row.seq_ss / row.df;
    df_sum += row.df;
    ss.push_back(row.seq_ss);
    t.factors.push_back(std::move(row));
  }
  t.error_df = t.total_df - df_sum;
  if (t.error_df < 0)
    throw Error(ErrorKind::kInvalidDesign, "more factor degrees of freedom than runs allow");
  t.saturated = t.error_df == 0;
  t.zero_variance = std::adjacent_find(values.begin(), values.end(), std::not_equal_to<>()) ==
                    values.end();
  if (t.zero_variance) {
    // The grand mean of equal values can round, leaving ~1e-30 sums.
    t.total_ss = 0.0;
    for (auto& row : t.factors) row.seq_ss = row.adj_ms = 0.0;
  }
  t.error_ss = t.zero_variance ? 0.0 : error_sum_squares(t.total_ss, ss);
  t.error_ms = t.error_df > 0 ? t.error_ss / t.error_df : 0.0;

  if (!t.zero_variance) {
    t.error_percent = percent_contribution(t.error_ss, t.total_ss);
    for (auto& row : t.factors) {
      row.percent_contribution = percent_contribution(row.seq_ss, t.total_ss);
      if (!t.saturated && !(t.error_ss == 0.0 && row.seq_ss == 0.0)) {
        row.f_value = f_value(row.seq_ss, row.df, t.error_ss, t.error_df);
        row.p_value = f_p_value(*row.f_value, row.df, t.error_df);
      }
    }
  }
  std::stable_sort(t.factors.begin(), t.factors.end(),
                   [](const AnovaRow& a, const AnovaRow& b) { return a.label < b.label; });
  return t;
}

struct ResponseRow {
  std::string label;
  std::string name;
  std::vector<double> level_means;
  double delta = 0.0;
  int rank = 0;
  bool tied = false;

  bool operator==(const ResponseRow&) const = default;
};

struct ResponseTable {
  std::vector<ResponseRow> factors;  // design order

  const ResponseRow& row(const std::string& label) const {
    for (const auto& r : factors)
      if (r.label == label) return r;
    throw Error(ErrorKind::kUnknownFactor, label);
  }

  bool any_ties() const {
    return std::any_of(factors.begin(), factors.end(), [](const ResponseRow& r) { return r.tied; });
  }

  bool operator==(const ResponseTable&) const = default;
};

/// Level means of the SNR per factor and the max-min spread; rank 1 goes to
/// the largest spread. Ties fall back to label order and are flagged.
inline ResponseTable response_table(const DesignMatrix& design, std::span<const double> snr) {
  detail::require_aligned(design, snr);
  ResponseTable t;
  for (std::size_t j = 0; j < design.factor_count(); ++j) {
    ResponseRow row;
    row.label = design.factors[j].label;
    row.name = design.factors[j].name;
    const auto g = detail::group_by_level(design, snr, j);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t l = 0; l < g.count.size(); ++l) {
      double m = g.count[l] ? g.sum[l] / static_cast<double>(g.count[l])
                            : std::numeric_limits<double>::quiet_NaN();
      row.level_means.push_back(m);
      if (g.count[l]) {
        lo = std::min(lo, m);
        hi = std::max(hi, m);
      }
    }
    row.delta = hi >= lo ? hi - lo : 0.0;
    t.factors.push_back(std::move(row));
  }

  auto same = [](double a, double b) {
    return std::fabs(a - b) <= 1e-12 * std::max({1.0, std::fabs(a), std::fabs(b)});
  };
  std::vector<std::size_t> order(t.factors.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = t.factors[a];
    const auto& rb = t.factors[b];
    if (!same(ra.delta, rb.delta)) return ra.delta > rb.delta;
    return ra.label < rb.label;
  });
  for (std::size_t i = 0; i < order.size(); ++i) t.factors[order[i]].rank = static_cast<int>(i) + 1;
  for (std::size_t a = 0; a < t.factors.size(); ++a)
    for (std::size_t b = 0; b < t.factors.size(); ++b)
      if (a != b && same(t.factors[a].delta, t.factors[b].delta)) t.factors[a].tied = true;
  return t;
}

struct MainEffect {
  std::string label;
  std::vector<double> level_values;
  std::vector<std::size_t> counts;
  std::vector<double> mean;      // response
  std::vector<double> mean_snr;  // empty when no SNR was supplied

  bool operator==(const MainEffect&) const = default;
};

struct Interaction {
  std::string first;
  std::string second;
  std::vector<double> first_levels;
  std::vector<double> second_levels;
  // [level of first][level of second]; nullopt where no point matches both
  std::vector<std::vector<std::optional<double>>> mean;
  std::vector<std::vector<std::size_t>> counts;

  bool operator==(const Interaction&) const = default;
};

struct EffectsData {
  std::vector<MainEffect> main;
  std::vector<Interaction> interactions;  // every pair i < j in design order

  const MainEffect& main_effect(const std::string& label) const {
    for (const auto& m : main)
      if (m.label == label) return m;
    throw Error(ErrorKind::kUnknownFactor, label);
  }

  const Interaction& interaction(const std::string& a, const std::string& b) const {
    for (const auto& x : interactions)
      if (x.first == a && x.second == b) return x;
    throw Error(ErrorKind::kUnknownFactor, a + "x" + b);
  }

  bool operator==(const EffectsData&) const = default;
};

inline EffectsData effects(const DesignMatrix& design, std::span<const double> values,
                           std::span<const double> snr = {}) {
  detail::require_aligned(design, values);
  if (!snr.empty()) detail::require_aligned(design, snr);
  EffectsData e;
  const auto n = design.factor_count();
  for (std::size_t j = 0; j < n; ++j) {
    MainEffect m;
    m.label = design.factors[j].label;
    m.level_values = design.factors[j].levels;
    const auto g = detail::group_by_level(design, values, j);
    m.counts = g.count;
    for (std::size_t l = 0; l < g.count.size(); ++l)
      m.mean.push_back(g.count[l] ? g.sum[l] / static_cast<double>(g.count[l])
                                  : std::numeric_limits<double>::quiet_NaN());
    if (!snr.empty()) {
      const auto gs = detail::group_by_level(design, snr, j);
      for (std::size_t l = 0; l < gs.count.size(); ++l)
        m.mean_snr.push_back(gs.count[l] ? gs.sum[l] / static_cast<double>(gs.count[l])
                                         : std::numeric_limits<double>::quiet_NaN());
    }
    e.main.push_back(std::move(m));
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      Interaction x;
      x.first = design.factors[a].label;
      x.second = design.factors[b].label;
      x.first_levels = design.factors[a].levels;
      x.second_levels = design.factors[b].levels;
      const auto La = x.first_levels.size(), Lb = x.second_levels.size();
      std::vector sums(La, std::vector<double>(Lb, 0.0));
      x.counts.assign(La, std::vector<std::size_t>(Lb, 0));
      for (std::size_t i = 0; i < design.run_count(); ++i) {
        const auto la = static_cast<std::size_t>(design.points[i].level_index[a] - 1);
        const auto lb = static_cast<std::size_t>(design.points[i].level_index[b] - 1);
        sums[la][lb] += values[i];
        ++x.counts[la][lb];
      }
      x.mean.assign(La, std::vector<std::optional<double>>(Lb));
      for (std::size_t i = 0; i < La; ++i)
        for (std::size_t j = 0; j < Lb; ++j)
          if (x.counts[i][j]) x.mean[i][j] = sums[i][j] / static_cast<double>(x.counts[i][j]);
      e.interactions.push_back(std::move(x));
    }
  }
  return e;
}

}  // namespace rpldoe::taguchi

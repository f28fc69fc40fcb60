#pragma once

// CSV and plain-text serialization of designs, responses and analysis tables.
// Numeric precision: 4 decimals for SS and MS, 2 for F, 3 for P.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <optional>
#include <ostream>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rpldoe/error.hpp"
#include "rpldoe/taguchi/anova.hpp"
#include "rpldoe/taguchi/design.hpp"

namespace rpldoe::taguchi {

inline std::string fixed(double v, int decimals) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s(buf);
  // Avoid "-0.000" for tiny negatives.
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

/// Shortest decimal form that round-trips (used for level values and raw
/// responses, where fixed precision would lose data).
inline std::string exact(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string fmt_ss(double v) { return fixed(v, 4); }
inline std::string fmt_f(const std::optional<double>& v) { return v ? fixed(*v, 2) : ""; }
inline std::string fmt_p(const std::optional<double>& v) { return v ? fixed(*v, 3) : ""; }

namespace csv {

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    auto b = f.find_first_not_of(" \t");
    auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? "" : f.substr(b, e - b + 1);
  }
  return out;
}

inline std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline double to_double(const std::string& s, std::size_t line) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::kParse, "line " + std::to_string(line) + ": '" + s + "' is not a number");
  }
}

}  // namespace csv

/// A design plus its response matrix, as exchanged through CSV.
struct ResponseData {
  DesignMatrix design;
  ResponseMatrix responses;
};

inline void write_response_csv(std::ostream& os, const DesignMatrix& design,
                               const ResponseMatrix& y) {
  for (const auto& f : design.factors) os << csv::quote(f.label) << ',';
  const auto r = y.repetitions();
  for (std::size_t k = 0; k < r; ++k) os << "y_" << (k + 1) << (k + 1 < r ? "," : "");
  os << '\n';
  for (std::size_t i = 0; i < design.run_count(); ++i) {
    for (double v : design.points[i].values) os << exact(v) << ',';
    for (std::size_t k = 0; k < r; ++k) os << exact(y.rows[i][k]) << (k + 1 < r ? "," : "");
    os << '\n';
  }
}

inline void write_design_csv(std::ostream& os, const DesignMatrix& design) {
  os << "run";
  for (const auto& f : design.factors) os << ',' << csv::quote(f.label);
  os << '\n';
  for (const auto& p : design.points) {
    os << (p.run + 1);
    for (double v : p.values) os << ',' << exact(v);
    os << '\n';
  }
}

/// Reads "labels..., y_1..y_r" CSV. When `known` carries factors for the
/// labels, their level order is used; otherwise levels are the distinct
/// values of the column in ascending order.
inline ResponseData read_response_csv(std::istream& is, const std::vector<Factor>& known = {}) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    header = csv::split_line(line);
    break;
  }
  if (header.empty()) throw Error(ErrorKind::kParse, "missing header row");

  static const std::regex kResponse(R"(y_?\d+)", std::regex::icase);
  std::size_t first_y = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (std::regex_match(header[c], kResponse)) {
      first_y = c;
      break;
    }
  }
  if (first_y == 0) throw Error(ErrorKind::kParse, "header has no factor columns");
  if (first_y == header.size()) throw Error(ErrorKind::kParse, "header has no y_1..y_r columns");
  for (std::size_t c = first_y; c < header.size(); ++c)
    if (!std::regex_match(header[c], kResponse))
      throw Error(ErrorKind::kParse, "factor column '" + header[c] + "' after response columns");

  std::vector<std::vector<double>> levels_rows;
  ResponseMatrix y;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    auto fields = csv::split_line(line);
    if (fields.size() != header.size())
      throw Error(ErrorKind::kParse, "line " + std::to_string(lineno) + " has " +
                                         std::to_string(fields.size()) + " fields, expected " +
                                         std::to_string(header.size()));
    std::vector<double> lv, obs;
    for (std::size_t c = 0; c < first_y; ++c) lv.push_back(csv::to_double(fields[c], lineno));
    for (std::size_t c = first_y; c < fields.size(); ++c)
      obs.push_back(csv::to_double(fields[c], lineno));
    levels_rows.push_back(std::move(lv));
    y.rows.push_back(std::move(obs));
  }
  if (levels_rows.empty()) throw Error(ErrorKind::kParse, "no data rows");

  std::vector<Factor> factors;
  for (std::size_t c = 0; c < first_y; ++c) {
    auto it = std::find_if(known.begin(), known.end(),
                           [&](const Factor& f) { return f.label == header[c]; });
    if (it != known.end()) {
      factors.push_back(*it);
      continue;
    }
    std::set<double> distinct;
    for (const auto& row : levels_rows) distinct.insert(row[c]);
    factors.push_back({header[c], header[c], {distinct.begin(), distinct.end()}});
  }
  ResponseData out{design_from_rows(std::move(factors), levels_rows), std::move(y)};
  out.responses.validate();
  return out;
}

inline void write_anova_csv(std::ostream& os, const AnovaTable& t) {
  os << "source,df,seq_ss,adj_ms,f_value,p_value,percent_contribution\n";
  for (const auto& r : t.factors)
    os << csv::quote(r.label) << ',' << r.df << ',' << fmt_ss(r.seq_ss) << ',' << fmt_ss(r.adj_ms)
       << ',' << fmt_f(r.f_value) << ',' << fmt_p(r.p_value) << ','
       << fixed(r.percent_contribution, 2) << '\n';
  os << "Error," << t.error_df << ',' << fmt_ss(t.error_ss) << ','
     << (t.error_df > 0 ? fmt_ss(t.error_ms) : "") << ",,," << fixed(t.error_percent, 2) << '\n';
  os << "Total," << t.total_df << ',' << fmt_ss(t.total_ss) << ",,,,"
     << (t.zero_variance ? "" : "100.00") << '\n';
}

inline void write_response_table_csv(std::ostream& os, const ResponseTable& t) {
  std::size_t L = 0;
  for (const auto& r : t.factors) L = std::max(L, r.level_means.size());
  os << "factor";
  for (std::size_t l = 0; l < L; ++l) os << ",level_" << (l + 1);
  os << ",delta,rank,tied\n";
  for (const auto& r : t.factors) {
    os << csv::quote(r.label);
    for (std::size_t l = 0; l < L; ++l)
      os << ',' << (l < r.level_means.size() ? fixed(r.level_means[l], 3) : "");
    os << ',' << fixed(r.delta, 3) << ',' << r.rank << ',' << (r.tied ? "yes" : "no") << '\n';
  }
}

inline void write_main_effects_csv(std::ostream& os, const EffectsData& e) {
  os << "factor,level,mean,mean_snr\n";
  for (const auto& m : e.main)
    for (std::size_t l = 0; l < m.level_values.size(); ++l)
      os << csv::quote(m.label) << ',' << exact(m.level_values[l]) << ',' << fixed(m.mean[l], 4)
         << ',' << (l < m.mean_snr.size() ? fixed(m.mean_snr[l], 4) : "") << '\n';
}

inline void write_interactions_csv(std::ostream& os, const EffectsData& e) {
  os << "factor_i,level_i,factor_j,level_j,mean\n";
  for (const auto& x : e.interactions)
    for (std::size_t a = 0; a < x.first_levels.size(); ++a)
      for (std::size_t b = 0; b < x.second_levels.size(); ++b)
        os << csv::quote(x.first) << ',' << exact(x.first_levels[a]) << ','
           << csv::quote(x.second) << ',' << exact(x.second_levels[b]) << ','
           << (x.mean[a][b] ? fixed(*x.mean[a][b], 4) : "") << '\n';
}

inline std::string pad(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}
inline std::string lpad(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
}

inline void write_anova_text(std::ostream& os, const AnovaTable& t) {
  os << "Analysis of variance (" << to_string(t.space) << " responses)\n";
  os << pad("Source", 8) << lpad("DF", 4) << lpad("Seq SS", 12) << lpad("Adj MS", 12)
     << lpad("F-Value", 10) << lpad("P-Value", 9) << lpad("Contrib%", 10) << '\n';
  for (const auto& r : t.factors)
    os << pad(r.label, 8) << lpad(std::to_string(r.df), 4) << lpad(fmt_ss(r.seq_ss), 12)
       << lpad(fmt_ss(r.adj_ms), 12) << lpad(fmt_f(r.f_value), 10) << lpad(fmt_p(r.p_value), 9)
       << lpad(fixed(r.percent_contribution, 2), 10) << '\n';
  os << pad("Error", 8) << lpad(std::to_string(t.error_df), 4) << lpad(fmt_ss(t.error_ss), 12)
     << lpad(t.error_df > 0 ? fmt_ss(t.error_ms) : "", 12) << lpad("", 19)
     << lpad(fixed(t.error_percent, 2), 10) << '\n';
  os << pad("Total", 8) << lpad(std::to_string(t.total_df), 4) << lpad(fmt_ss(t.total_ss), 12)
     << '\n';
  if (t.zero_variance) os << "note: all responses are equal (zero variance); no F-tests\n";
  if (t.saturated) os << "note: saturated design (no error degrees of freedom); no F-tests\n";
}

inline void write_response_table_text(std::ostream& os, const ResponseTable& t) {
  std::size_t L = 0;
  for (const auto& r : t.factors) L = std::max(L, r.level_means.size());
  os << "Response table for signal-to-noise ratios (dB)\n";
  os << pad("Level", 8);
  for (const auto& r : t.factors) os << lpad(r.label, 10);
  os << '\n';
  for (std::size_t l = 0; l < L; ++l) {
    os << pad(std::to_string(l + 1), 8);
    for (const auto& r : t.factors)
      os << lpad(l < r.level_means.size() ? fixed(r.level_means[l], 3) : "", 10);
    os << '\n';
  }
  os << pad("Delta", 8);
  for (const auto& r : t.factors) os << lpad(fixed(r.delta, 3), 10);
  os << '\n' << pad("Rank", 8);
  for (const auto& r : t.factors) os << lpad(std::to_string(r.rank) + (r.tied ? "*" : ""), 10);
  os << '\n';
  if (t.any_ties()) os << "* tied delta; rank broken by factor label order\n";
}

}  // namespace rpldoe::taguchi

#pragma once

#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rpldoe/error.hpp"
#include "rpldoe/harness/spec.hpp"
#include "rpldoe/taguchi/anova.hpp"
#include "rpldoe/taguchi/io.hpp"

namespace rpldoe::harness {

using nlohmann::json;

/// One executed design point: every repetition's response plus the derived
/// mean and SNR.
struct RunRecord {
  std::size_t point = 0;
  std::uint64_t batch_seed = 0;
  std::vector<double> factor_values;
  std::vector<std::uint64_t> repetition_seeds;
  std::vector<double> responses;  // mW, one per repetition
  double mean = 0.0;
  double snr = 0.0;
  std::string error;  // non-empty when a repetition failed

  bool ok() const { return error.empty(); }
  bool operator==(const RunRecord&) const = default;
};

/// P <= alpha means the level means differ significantly.
inline bool is_significant(double p_value, double alpha) { return p_value <= alpha; }

struct Verdict {
  std::string label;
  std::string name;
  std::optional<double> p_value;
  bool significant = false;

  bool operator==(const Verdict&) const = default;
};

struct Provenance {
  std::vector<std::uint64_t> seeds;
  std::string config_hash;
  std::string tool_version = kToolVersion;
  std::string generated_at;  // excluded from determinism comparisons

  bool operator==(const Provenance&) const = default;
};

struct Report {
  taguchi::DesignMatrix design;
  taguchi::ResponseMatrix responses;
  std::vector<double> response;  // mean of the repetitions per point
  std::vector<double> snr;
  taguchi::SnrMetric snr_metric = taguchi::SnrMetric::kSmallerBetter;
  taguchi::AnovaTable anova;
  taguchi::ResponseTable response_table;
  taguchi::EffectsData effects;
  double alpha = 0.05;
  bool zero_variance = false;
  std::vector<Verdict> verdicts;
  Provenance provenance;

  bool operator==(const Report&) const = default;
};

struct AnalysisOptions {
  taguchi::AnovaSpace space = taguchi::AnovaSpace::kRaw;
  taguchi::SnrMetric metric = taguchi::SnrMetric::kSmallerBetter;
  double alpha = 0.05;
};

inline std::string utc_timestamp() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

/// SNR per point, ANOVA in the requested space, response table on SNR,
/// main effects in both spaces and raw interactions, verdicts at alpha.
inline Report analyze(const taguchi::DesignMatrix& design, const taguchi::ResponseMatrix& y,
                      const AnalysisOptions& opt = {}) {
  y.validate();
  if (y.rows.size() != design.run_count())
    throw Error(ErrorKind::kInvalidInput, std::to_string(y.rows.size()) + " response rows for " +
                                              std::to_string(design.run_count()) + " points");
  Report r;
  r.design = design;
  r.responses = y;
  r.response = y.means();
  r.snr = taguchi::snr_vector(y, opt.metric);
  r.snr_metric = opt.metric;
  r.alpha = opt.alpha;
  const auto& anova_input = opt.space == taguchi::AnovaSpace::kRaw ? r.response : r.snr;
  r.anova = taguchi::anova(design, anova_input, opt.space);
  r.response_table = taguchi::response_table(design, r.snr);
  r.effects = taguchi::effects(design, r.response, r.snr);
  r.zero_variance = r.anova.zero_variance;
  if (!r.zero_variance) {
    for (const auto& row : r.anova.factors) {
      Verdict v{row.label, row.name, row.p_value, false};
      if (row.p_value) v.significant = is_significant(*row.p_value, opt.alpha);
      r.verdicts.push_back(v);
    }
  }
  r.provenance.generated_at = utc_timestamp();
  return r;
}

/// Analysis of one seed batch of executed records. Every record must be
/// complete; gaps are reported by label.
inline Report analyze(const std::vector<RunRecord>& records, const ExperimentSpec& spec,
                      std::optional<taguchi::AnovaSpace> space = std::nullopt) {
  auto design = expand_design(spec);
  if (records.size() != design.run_count())
    throw Error(ErrorKind::kInvalidInput, std::to_string(records.size()) + " records for " +
                                              std::to_string(design.run_count()) + " points");
  std::string gaps;
  taguchi::ResponseMatrix y;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].point != i)
      throw Error(ErrorKind::kInvalidInput, "records are not in design order");
    if (!records[i].ok()) gaps += " " + std::to_string(i + 1);
    y.rows.push_back(records[i].responses);
  }
  if (!gaps.empty()) throw Error(ErrorKind::kInvalidInput, "missing design points:" + gaps);
  auto r = analyze(design, y, {space.value_or(spec.anova_space), spec.snr_metric, spec.alpha});
  r.provenance.seeds = {records.front().batch_seed};
  r.provenance.config_hash = hex(spec_hash(spec));
  return r;
}

inline void write_text_report(std::ostream& os, const Report& r) {
  using taguchi::fixed;
  os << "Design: " << r.design.array_name << ", " << r.design.run_count() << " runs, "
     << r.design.factor_count() << " factors, r = " << r.responses.repetitions() << '\n';
  for (const auto& f : r.design.factors) {
    os << "  " << f.label << "  " << f.name << ":";
    for (double v : f.levels) os << ' ' << taguchi::exact(v);
    os << '\n';
  }
  os << '\n' << taguchi::pad("Run", 5);
  for (const auto& f : r.design.factors) os << taguchi::lpad(f.label, 8);
  os << taguchi::lpad("Response", 11) << taguchi::lpad("SNR(dB)", 10) << '\n';
  for (std::size_t i = 0; i < r.design.run_count(); ++i) {
    os << taguchi::pad(std::to_string(i + 1), 5);
    for (double v : r.design.points[i].values) os << taguchi::lpad(taguchi::exact(v), 8);
    os << taguchi::lpad(fixed(r.response[i], 4), 11) << taguchi::lpad(fixed(r.snr[i], 3), 10)
       << '\n';
  }
  os << '\n';
  taguchi::write_anova_text(os, r.anova);
  os << '\n';
  taguchi::write_response_table_text(os, r.response_table);
  os << '\n';
  if (r.zero_variance) {
    os << "Significance: not assessed (zero variance)\n";
  } else {
    os << "Significance at alpha = " << fixed(r.alpha, 3) << '\n';
    for (const auto& v : r.verdicts) {
      os << "  " << taguchi::pad(v.label, 4);
      if (!v.p_value) {
        os << "no test\n";
        continue;
      }
      os << "P = " << fixed(*v.p_value, 3) << (v.significant ? "  significant\n" : "  not significant\n");
    }
  }
  os << "\nProvenance: seeds";
  for (auto s : r.provenance.seeds) os << ' ' << s;
  os << ", config " << (r.provenance.config_hash.empty() ? "-" : r.provenance.config_hash)
     << ", version " << r.provenance.tool_version << '\n';
}

// ---- structured record ------------------------------------------------------

namespace detail {

inline json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
inline std::optional<double> opt_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}
inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
inline double num_from(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}
inline json nums(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}
inline std::vector<double> nums_from(const json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(num_from(x));
  return v;
}

}  // namespace detail

inline json to_json(const Report& r) {
  using detail::nums;
  using detail::opt;
  json j;
  json factors = json::array();
  for (const auto& f : r.design.factors)
    factors.push_back({{"label", f.label}, {"name", f.name}, {"levels", f.levels}});
  json points = json::array();
  for (const auto& p : r.design.points) points.push_back(p.level_index);
  j["design"] = {{"array", r.design.array_name},
                 {"assignment", r.design.assignment},
                 {"factors", factors},
                 {"levels", points}};
  j["responses"] = r.responses.rows;
  j["response"] = nums(r.response);
  j["snr"] = nums(r.snr);
  j["snr_metric"] = std::string(taguchi::to_string(r.snr_metric));

  json arows = json::array();
  for (const auto& row : r.anova.factors)
    arows.push_back({{"label", row.label},
                     {"name", row.name},
                     {"df", row.df},
                     {"seq_ss", row.seq_ss},
                     {"adj_ms", row.adj_ms},
                     {"f_value", opt(row.f_value)},
                     {"p_value", opt(row.p_value)},
                     {"percent_contribution", row.percent_contribution}});
  j["anova"] = {{"space", std::string(taguchi::to_string(r.anova.space))},
                {"factors", arows},
                {"error", {{"df", r.anova.error_df}, {"ss", r.anova.error_ss}, {"ms", r.anova.error_ms},
                           {"percent", r.anova.error_percent}}},
                {"total", {{"df", r.anova.total_df}, {"ss", r.anova.total_ss}}},
                {"zero_variance", r.anova.zero_variance},
                {"saturated", r.anova.saturated}};

  json rrows = json::array();
  for (const auto& row : r.response_table.factors)
    rrows.push_back({{"label", row.label},
                     {"name", row.name},
                     {"level_means", nums(row.level_means)},
                     {"delta", row.delta},
                     {"rank", row.rank},
                     {"tied", row.tied}});
  j["response_table"] = rrows;

  json mains = json::array();
  for (const auto& m : r.effects.main)
    mains.push_back({{"label", m.label},
                     {"levels", m.level_values},
                     {"counts", m.counts},
                     {"mean", nums(m.mean)},
                     {"mean_snr", nums(m.mean_snr)}});
  json inter = json::array();
  for (const auto& x : r.effects.interactions) {
    json cells = json::array();
    for (const auto& row : x.mean) {
      json jr = json::array();
      for (const auto& c : row) jr.push_back(opt(c));
      cells.push_back(jr);
    }
    inter.push_back({{"first", x.first},
                     {"second", x.second},
                     {"first_levels", x.first_levels},
                     {"second_levels", x.second_levels},
                     {"counts", x.counts},
                     {"mean", cells}});
  }
  j["effects"] = {{"main", mains}, {"interactions", inter}};
  j["alpha"] = r.alpha;
  j["zero_variance"] = r.zero_variance;
  json verdicts = json::array();
  for (const auto& v : r.verdicts)
    verdicts.push_back({{"label", v.label},
                        {"name", v.name},
                        {"p_value", opt(v.p_value)},
                        {"significant", v.significant}});
  j["verdicts"] = verdicts;
  j["provenance"] = {{"seeds", r.provenance.seeds},
                     {"config_hash", r.provenance.config_hash},
                     {"tool_version", r.provenance.tool_version},
                     {"generated_at", r.provenance.generated_at}};
  return j;
}

inline Report report_from_json(const json& j) {
  using detail::nums_from;
  using detail::opt_from;
  Report r;
  const auto& d = j.at("design");
  r.design.array_name = d.at("array").get<std::string>();
  r.design.assignment = d.at("assignment").get<std::vector<std::size_t>>();
  for (const auto& f : d.at("factors"))
    r.design.factors.push_back({f.at("label").get<std::string>(), f.at("name").get<std::string>(),
                                f.at("levels").get<std::vector<double>>()});
  std::size_t run = 0;
  for (const auto& li : d.at("levels")) {
    taguchi::DesignPoint p;
    p.run = run++;
    p.level_index = li.get<std::vector<int>>();
    for (std::size_t i = 0; i < p.level_index.size(); ++i)
      p.values.push_back(r.design.factors[i].levels[static_cast<std::size_t>(p.level_index[i] - 1)]);
    r.design.points.push_back(std::move(p));
  }
  r.responses.rows = j.at("responses").get<std::vector<std::vector<double>>>();
  r.response = nums_from(j.at("response"));
  r.snr = nums_from(j.at("snr"));
  r.snr_metric = taguchi::parse_snr_metric(j.at("snr_metric").get<std::string>());

  const auto& a = j.at("anova");
  r.anova.space = taguchi::parse_anova_space(a.at("space").get<std::string>());
  for (const auto& row : a.at("factors")) {
    taguchi::AnovaRow ar;
    ar.label = row.at("label").get<std::string>();
    ar.name = row.at("name").get<std::string>();
    ar.df = row.at("df").get<int>();
    ar.seq_ss = row.at("seq_ss").get<double>();
    ar.adj_ms = row.at("adj_ms").get<double>();
    ar.f_value = opt_from(row.at("f_value"));
    ar.p_value = opt_from(row.at("p_value"));
    ar.percent_contribution = row.at("percent_contribution").get<double>();
    r.anova.factors.push_back(std::move(ar));
  }
  r.anova.error_df = a.at("error").at("df").get<int>();
  r.anova.error_ss = a.at("error").at("ss").get<double>();
  r.anova.error_ms = a.at("error").at("ms").get<double>();
  r.anova.error_percent = a.at("error").at("percent").get<double>();
  r.anova.total_df = a.at("total").at("df").get<int>();
  r.anova.total_ss = a.at("total").at("ss").get<double>();
  r.anova.zero_variance = a.at("zero_variance").get<bool>();
  r.anova.saturated = a.at("saturated").get<bool>();

  for (const auto& row : j.at("response_table")) {
    taguchi::ResponseRow rr;
    rr.label = row.at("label").get<std::string>();
    rr.name = row.at("name").get<std::string>();
    rr.level_means = nums_from(row.at("level_means"));
    rr.delta = row.at("delta").get<double>();
    rr.rank = row.at("rank").get<int>();
    rr.tied = row.at("tied").get<bool>();
    r.response_table.factors.push_back(std::move(rr));
  }
  for (const auto& m : j.at("effects").at("main")) {
    taguchi::MainEffect me;
    me.label = m.at("label").get<std::string>();
    me.level_values = m.at("levels").get<std::vector<double>>();
    me.counts = m.at("counts").get<std::vector<std::size_t>>();
    me.mean = nums_from(m.at("mean"));
    me.mean_snr = nums_from(m.at("mean_snr"));
    r.effects.main.push_back(std::move(me));
  }
  for (const auto& x : j.at("effects").at("interactions")) {
    taguchi::Interaction in;
    in.first = x.at("first").get<std::string>();
    in.second = x.at("second").get<std::string>();
    in.first_levels = x.at("first_levels").get<std::vector<double>>();
    in.second_levels = x.at("second_levels").get<std::vector<double>>();
    in.counts = x.at("counts").get<std::vector<std::vector<std::size_t>>>();
    for (const auto& row : x.at("mean")) {
      std::vector<std::optional<double>> cells;
      for (const auto& c : row) cells.push_back(opt_from(c));
      in.mean.push_back(std::move(cells));
    }
    r.effects.interactions.push_back(std::move(in));
  }
  r.alpha = j.at("alpha").get<double>();
  r.zero_variance = j.at("zero_variance").get<bool>();
  for (const auto& v : j.at("verdicts"))
    r.verdicts.push_back({v.at("label").get<std::string>(), v.at("name").get<std::string>(),
                          opt_from(v.at("p_value")), v.at("significant").get<bool>()});
  const auto& p = j.at("provenance");
  r.provenance.seeds = p.at("seeds").get<std::vector<std::uint64_t>>();
  r.provenance.config_hash = p.at("config_hash").get<std::string>();
  r.provenance.tool_version = p.at("tool_version").get<std::string>();
  r.provenance.generated_at = p.at("generated_at").get<std::string>();
  return r;
}

enum class ExportFormat { kCsv, kJson, kText, kAll };

inline ExportFormat parse_export_format(const std::string& s) {
  if (s == "csv") return ExportFormat::kCsv;
  if (s == "json") return ExportFormat::kJson;
  if (s == "text") return ExportFormat::kText;
  if (s == "all") return ExportFormat::kAll;
  throw Error(ErrorKind::kInvalidInput, "unknown export format '" + s + "'");
}

namespace detail {
template <typename Writer>
std::filesystem::path write_file(const std::filesystem::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  writer(out);
  out.flush();
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
  return path;
}
}  // namespace detail

/// Writes the report tables under `dir`. Returns the files written.
inline std::vector<std::filesystem::path> export_report(const Report& r, ExportFormat format,
                                                        const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> files;
  const bool all = format == ExportFormat::kAll;
  if (all || format == ExportFormat::kCsv) {
    files.push_back(detail::write_file(dir / "anova.csv", [&](std::ostream& os) {
      taguchi::write_anova_csv(os, r.anova);
    }));
    files.push_back(detail::write_file(dir / "response_table.csv", [&](std::ostream& os) {
      taguchi::write_response_table_csv(os, r.response_table);
    }));
    files.push_back(detail::write_file(dir / "main_effects.csv", [&](std::ostream& os) {
      taguchi::write_main_effects_csv(os, r.effects);
    }));
    files.push_back(detail::write_file(dir / "interactions.csv", [&](std::ostream& os) {
      taguchi::write_interactions_csv(os, r.effects);
    }));
    files.push_back(detail::write_file(dir / "responses.csv", [&](std::ostream& os) {
      taguchi::write_response_csv(os, r.design, r.responses);
    }));
  }
  if (all || format == ExportFormat::kJson)
    files.push_back(detail::write_file(dir / "report.json", [&](std::ostream& os) {
      os << to_json(r).dump(2) << '\n';
    }));
  if (all || format == ExportFormat::kText)
    files.push_back(detail::write_file(dir / "report.txt", [&](std::ostream& os) {
      write_text_report(os, r);
    }));
  return files;
}

}  // namespace rpldoe::harness

#pragma once

// Experiment specification: a line-oriented `key = value` file.
//
//   array = auto | L9 | L27        (default auto)
//   columns = 1, 2, 3, 4, 5        (optional 1-based factor -> column map)
//   repetitions = 3
//   seeds = 1, 2, 3, 4, 5
//   anova_space = raw | snr
//   snr_metric = smaller | larger | nominal
//   alpha = 0.05
//   budget = 10000                 (cap on repetitions * runs * seeds)
//   sim.<parameter> = value        (base simulation settings, see SimSettings)
//   power.<parameter> = value
//   factor.<LABEL>.name = text
//   factor.<LABEL>.parameter = <sim parameter the factor drives>
//   factor.<LABEL>.levels = v1, v2, v3
//
// '#' starts a comment. Unknown keys are rejected.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rpldoe/error.hpp"
#include "rpldoe/taguchi/anova.hpp"
#include "rpldoe/taguchi/design.hpp"
#include "rpldoe/taguchi/snr.hpp"

namespace rpldoe::harness {

inline constexpr const char* kToolVersion = "0.3.0";
inline constexpr double kPaperScaleDurationMs = 600000.0;

/// Base simulation settings as plain numbers, so the harness can describe a
/// run without depending on the simulator.
struct SimSettings {
  double node_count = 20;
  double area_width_m = 100;
  double area_height_m = 100;
  double duration_ms = 120000;
  double mobility_speed_mps = 0;
  double dio_interval_min = 8;
  double dio_interval_doublings = 8;
  double redundancy_constant = 10;
  double radio_range_m = 50;
  double mobility_step_ms = 100;
  double parent_timeout_imax = 3;
  double cpu_mw = 1.8;
  double lpm_mw = 0.0545;
  double listen_mw = 60.0;
  double tx_mw = 57.6;
  double dio_airtime_us = 3200;
  double dio_cpu_cost_us = 1000;
  double idle_listen_fraction = 0.02;

  bool operator==(const SimSettings&) const = default;
};

struct SettingField {
  const char* key;
  double SimSettings::*member;
  bool integral;
};

inline const std::vector<SettingField>& setting_fields() {
  static const std::vector<SettingField> fields = {
      {"sim.node_count", &SimSettings::node_count, true},
      {"sim.area_width_m", &SimSettings::area_width_m, false},
      {"sim.area_height_m", &SimSettings::area_height_m, false},
      {"sim.duration_ms", &SimSettings::duration_ms, true},
      {"sim.mobility_speed_mps", &SimSettings::mobility_speed_mps, false},
      {"sim.dio_interval_min", &SimSettings::dio_interval_min, true},
      {"sim.dio_interval_doublings", &SimSettings::dio_interval_doublings, true},
      {"sim.redundancy_constant", &SimSettings::redundancy_constant, true},
      {"sim.radio_range_m", &SimSettings::radio_range_m, false},
      {"sim.mobility_step_ms", &SimSettings::mobility_step_ms, true},
      {"sim.parent_timeout_imax", &SimSettings::parent_timeout_imax, true},
      {"power.cpu_mw", &SimSettings::cpu_mw, false},
      {"power.lpm_mw", &SimSettings::lpm_mw, false},
      {"power.listen_mw", &SimSettings::listen_mw, false},
      {"power.tx_mw", &SimSettings::tx_mw, false},
      {"power.dio_airtime_us", &SimSettings::dio_airtime_us, true},
      {"power.dio_cpu_cost_us", &SimSettings::dio_cpu_cost_us, true},
      {"power.idle_listen_fraction", &SimSettings::idle_listen_fraction, false},
  };
  return fields;
}

inline const SettingField* find_setting(const std::string& key) {
  for (const auto& f : setting_fields())
    if (key == f.key) return &f;
  return nullptr;
}

/// A factor plus the simulation parameter its levels are written to.
struct BoundFactor {
  taguchi::Factor factor;
  std::string parameter;  // "sim.node_count" etc.

  bool operator==(const BoundFactor&) const = default;
};

struct ExperimentSpec {
  std::vector<BoundFactor> factors;
  std::string array = "auto";
  std::vector<std::size_t> columns;  // 0-based; empty = factor i on column i
  int repetitions = 3;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  SimSettings base;
  taguchi::AnovaSpace anova_space = taguchi::AnovaSpace::kRaw;
  taguchi::SnrMetric snr_metric = taguchi::SnrMetric::kSmallerBetter;
  double alpha = 0.05;
  std::size_t budget = 10000;

  std::vector<taguchi::Factor> plain_factors() const {
    std::vector<taguchi::Factor> out;
    for (const auto& b : factors) out.push_back(b.factor);
    return out;
  }

  bool operator==(const ExperimentSpec&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_number(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::kParse, where + ": '" + s + "' is not a number");
  }
}

inline std::uint64_t parse_seed(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    auto v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::kParse, where + ": '" + s + "' is not a seed");
  }
}

}  // namespace detail

inline std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const auto& item : detail::split_list(text)) {
    // "a-b" expands to an inclusive range.
    if (auto dash = item.find('-'); dash != std::string::npos && dash > 0) {
      auto lo = detail::parse_seed(detail::trim(item.substr(0, dash)), "seeds");
      auto hi = detail::parse_seed(detail::trim(item.substr(dash + 1)), "seeds");
      if (hi < lo) throw Error(ErrorKind::kParse, "seeds: empty range " + item);
      if (hi - lo >= 1000000) throw Error(ErrorKind::kParse, "seeds: range " + item + " is too long");
      for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      seeds.push_back(detail::parse_seed(item, "seeds"));
    }
  }
  if (seeds.empty()) throw Error(ErrorKind::kParse, "seeds: empty list");
  return seeds;
}

/// Checks the cross-field rules and resolves the array choice. Called by
/// parse_spec; exposed for specs built in code.
inline taguchi::OrthogonalArray resolve_array(const ExperimentSpec& spec) {
  const auto catalog = taguchi::standard_catalog();
  const auto factors = spec.plain_factors();
  if (spec.array == "auto") return taguchi::select_array(factors, catalog);
  auto oa = taguchi::find_array(catalog, spec.array);
  if (!oa) throw Error(ErrorKind::kParse, "unknown array '" + spec.array + "'");
  for (const auto& f : factors)
    if (f.level_count() != static_cast<std::size_t>(oa->levels))
      throw Error(ErrorKind::kParse, "arity mismatch: factor " + f.label + " has " +
                                         std::to_string(f.level_count()) + " levels but " +
                                         oa->name + " needs " + std::to_string(oa->levels));
  if (oa->columns() < factors.size())
    throw Error(ErrorKind::kParse, oa->name + " has only " + std::to_string(oa->columns()) +
                                       " columns for " + std::to_string(factors.size()) +
                                       " factors");
  return *oa;
}

inline void validate(const ExperimentSpec& spec) {
  if (spec.factors.empty()) throw Error(ErrorKind::kParse, "no factors declared");
  if (spec.repetitions < 1) throw Error(ErrorKind::kParse, "repetitions must be >= 1");
  if (spec.seeds.empty()) throw Error(ErrorKind::kParse, "seed list is empty");
  if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) throw Error(ErrorKind::kParse, "alpha must be in (0,1)");
  for (const auto& b : spec.factors) {
    taguchi::validate(b.factor);
    const auto* field = find_setting(b.parameter);
    if (!field)
      throw Error(ErrorKind::kParse,
                  "factor " + b.factor.label + " drives unknown parameter '" + b.parameter + "'");
    if (field->integral)
      for (double v : b.factor.levels)
        if (v != std::floor(v))
          throw Error(ErrorKind::kParse, "factor " + b.factor.label + ": " + b.parameter +
                                             " needs integer levels");
  }
  if (spec.anova_space == taguchi::AnovaSpace::kSnr && spec.repetitions < 2 &&
      spec.snr_metric == taguchi::SnrMetric::kNominalBest)
    throw Error(ErrorKind::kParse, "nominal-best SNR needs repetitions >= 2");
  const auto oa = resolve_array(spec);
  if (!spec.columns.empty() && spec.columns.size() != spec.factors.size())
    throw Error(ErrorKind::kParse, "columns lists " + std::to_string(spec.columns.size()) +
                                       " entries for " + std::to_string(spec.factors.size()) +
                                       " factors");
  const auto sims = static_cast<std::size_t>(spec.repetitions) * oa.runs() * spec.seeds.size();
  if (sims > spec.budget)
    throw Error(ErrorKind::kParse, std::to_string(sims) + " simulations exceed budget " +
                                       std::to_string(spec.budget));
}

inline ExperimentSpec parse_spec(std::istream& is, const std::string& source = "<spec>") {
  ExperimentSpec spec;
  struct PendingFactor {
    std::optional<std::string> name;
    std::optional<std::string> parameter;
    std::optional<std::vector<double>> levels;
  };
  std::map<std::string, PendingFactor> pending;
  std::vector<std::string> order;
  std::map<std::string, int> seen;

  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::kParse, where + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (seen[key]++) throw Error(ErrorKind::kParse, where + ": duplicate key '" + key + "'");

    if (key == "array") {
      spec.array = value;
    } else if (key == "columns") {
      spec.columns.clear();
      for (const auto& c : detail::split_list(value)) {
        double v = detail::parse_number(c, where);
        if (v < 1 || v != std::floor(v)) throw Error(ErrorKind::kParse, where + ": bad column " + c);
        spec.columns.push_back(static_cast<std::size_t>(v) - 1);
      }
    } else if (key == "repetitions") {
      double v = detail::parse_number(value, where);
      if (v < 1 || v != std::floor(v))
        throw Error(ErrorKind::kParse, where + ": repetitions must be an integer >= 1");
      spec.repetitions = static_cast<int>(v);
    } else if (key == "seeds") {
      spec.seeds = parse_seed_list(value);
    } else if (key == "anova_space") {
      try {
        spec.anova_space = taguchi::parse_anova_space(value);
      } catch (const Error& e) {
        throw Error(ErrorKind::kParse, where + ": " + e.what());
      }
    } else if (key == "snr_metric") {
      try {
        spec.snr_metric = taguchi::parse_snr_metric(value);
      } catch (const Error& e) {
        throw Error(ErrorKind::kParse, where + ": " + e.what());
      }
    } else if (key == "alpha") {
      spec.alpha = detail::parse_number(value, where);
    } else if (key == "budget") {
      spec.budget = static_cast<std::size_t>(detail::parse_number(value, where));
    } else if (const auto* field = find_setting(key)) {
      spec.base.*(field->member) = detail::parse_number(value, where);
    } else if (key.rfind("factor.", 0) == 0) {
      const auto dot = key.find('.', 7);
      if (dot == std::string::npos) throw Error(ErrorKind::kParse, where + ": bad key '" + key + "'");
      const std::string label = key.substr(7, dot - 7);
      const std::string prop = key.substr(dot + 1);
      if (label.empty()) throw Error(ErrorKind::kParse, where + ": empty factor label");
      if (!pending.count(label)) order.push_back(label);
      auto& pf = pending[label];
      if (prop == "name") {
        pf.name = value;
      } else if (prop == "parameter") {
        pf.parameter = value.rfind("sim.", 0) == 0 || value.rfind("power.", 0) == 0 ? value
                                                                                     : "sim." + value;
      } else if (prop == "levels") {
        std::vector<double> lv;
        for (const auto& item : detail::split_list(value)) lv.push_back(detail::parse_number(item, where));
        pf.levels = std::move(lv);
      } else {
        throw Error(ErrorKind::kParse, where + ": unknown key '" + key + "'");
      }
    } else {
      throw Error(ErrorKind::kParse, where + ": unknown key '" + key + "'");
    }
  }

  for (const auto& label : order) {
    const auto& pf = pending[label];
    if (!pf.levels || pf.levels->empty())
      throw Error(ErrorKind::kParse, source + ": factor " + label + " has no levels");
    if (!pf.parameter)
      throw Error(ErrorKind::kParse, source + ": factor " + label + " has no parameter");
    spec.factors.push_back({{label, pf.name.value_or(label), *pf.levels}, *pf.parameter});
  }
  validate(spec);
  return spec;
}

inline ExperimentSpec parse_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open spec " + path);
  return parse_spec(in, path);
}

/// Materializes the design named by the spec.
inline taguchi::DesignMatrix expand_design(const ExperimentSpec& spec) {
  const auto oa = resolve_array(spec);
  return taguchi::make_design(spec.plain_factors(), oa, spec.columns);
}

/// Base settings with one design point's factor levels written in.
inline SimSettings settings_for(const ExperimentSpec& spec, const taguchi::DesignPoint& point) {
  SimSettings s = spec.base;
  for (std::size_t i = 0; i < spec.factors.size(); ++i)
    s.*(find_setting(spec.factors[i].parameter)->member) = point.values[i];
  return s;
}

/// Canonical text of the settings, the input of the resume hash.
inline std::string canonical(const SimSettings& s) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& f : setting_fields()) os << f.key << '=' << s.*(f.member) << ';';
  return os.str();
}

inline std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t spec_hash(const ExperimentSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  os << canonical(spec.base) << "|array=" << spec.array << "|r=" << spec.repetitions;
  for (const auto& b : spec.factors) {
    os << "|" << b.factor.label << ":" << b.parameter;
    for (double v : b.factor.levels) os << "," << v;
  }
  for (auto c : spec.columns) os << "|c" << c;
  return fnv1a(os.str());
}

}  // namespace rpldoe::harness

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "rpldoe/error.hpp"
#include "rpldoe/harness/report.hpp"
#include "rpldoe/harness/spec.hpp"
#include "rpldoe/netsim/simulator.hpp"
#include "rpldoe/random.hpp"

namespace rpldoe::harness {

inline netsim::SimConfig to_sim_config(const SimSettings& s, std::uint64_t seed) {
  using std::chrono::milliseconds;
  netsim::SimConfig c;
  c.node_count = static_cast<int>(s.node_count);
  c.area = {s.area_width_m, s.area_height_m};
  c.duration = milliseconds{static_cast<std::int64_t>(s.duration_ms)};
  c.mobility_speed = s.mobility_speed_mps;
  c.trickle.i_min_exp = static_cast<int>(s.dio_interval_min);
  c.trickle.doublings = static_cast<int>(s.dio_interval_doublings);
  c.trickle.k = static_cast<std::uint32_t>(s.redundancy_constant);
  c.radio_range = s.radio_range_m;
  c.seed = seed;
  c.mobility_update_step = milliseconds{static_cast<std::int64_t>(s.mobility_step_ms)};
  c.parent_timeout_imax = static_cast<int>(s.parent_timeout_imax);
  c.power.cpu_active_mw = s.cpu_mw;
  c.power.lpm_mw = s.lpm_mw;
  c.power.listen_mw = s.listen_mw;
  c.power.tx_mw = s.tx_mw;
  c.power.dio_airtime = netsim::Micros{static_cast<std::int64_t>(s.dio_airtime_us)};
  c.power.dio_cpu_cost = netsim::Micros{static_cast<std::int64_t>(s.dio_cpu_cost_us)};
  c.power.idle_listen_fraction = s.idle_listen_fraction;
  return c;
}

// Repetition k of every design point in a batch shares one seed, so points
// are compared under common random numbers.
inline std::uint64_t repetition_seed(std::uint64_t batch_seed, int repetition) {
  return derive_seed(batch_seed, std::uint64_t{0x7265}, repetition);
}

/// Resume key of one design point: its full settings, batch seed and r.
inline std::string point_key(const SimSettings& s, std::uint64_t batch_seed, int repetitions) {
  return hex(fnv1a(canonical(s) + "|seed=" + std::to_string(batch_seed) +
                   "|r=" + std::to_string(repetitions)));
}

struct RunOptions {
  int jobs = 1;
  /// JSON-lines log of finished points; existing entries with a matching
  /// key are reused instead of simulated.
  std::optional<std::filesystem::path> log;
  /// Stop after simulating this many new points (interruption testing).
  std::optional<std::size_t> max_new_points;
  std::function<void(const RunRecord&, bool reused)> on_record;
};

struct RunOutcome {
  std::vector<std::vector<RunRecord>> batches;  // one per seed, design order
  std::size_t simulated = 0;
  std::size_t reused = 0;
  bool complete = true;

  std::size_t failures() const {
    std::size_t n = 0;
    for (const auto& b : batches)
      for (const auto& r : b)
        if (!r.ok()) ++n;
    return n;
  }
};

inline nlohmann::json to_json(const RunRecord& r, const std::string& key) {
  return {{"key", key},
          {"point", r.point},
          {"batch_seed", r.batch_seed},
          {"factor_values", r.factor_values},
          {"repetition_seeds", r.repetition_seeds},
          {"responses", r.responses},
          {"mean", r.mean},
          {"snr", r.snr},
          {"error", r.error}};
}

inline RunRecord record_from_json(const nlohmann::json& j) {
  RunRecord r;
  r.point = j.at("point").get<std::size_t>();
  r.batch_seed = j.at("batch_seed").get<std::uint64_t>();
  r.factor_values = j.at("factor_values").get<std::vector<double>>();
  r.repetition_seeds = j.at("repetition_seeds").get<std::vector<std::uint64_t>>();
  r.responses = j.at("responses").get<std::vector<double>>();
  r.mean = j.at("mean").get<double>();
  r.snr = j.at("snr").get<double>();
  r.error = j.at("error").get<std::string>();
  return r;
}

/// Reads a resume log. Truncated trailing lines (an interrupted write) are
/// skipped; failed points are not reused.
inline std::map<std::string, RunRecord> load_log(const std::filesystem::path& path) {
  std::map<std::string, RunRecord> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("key")) continue;
    auto rec = record_from_json(j);
    if (rec.ok()) out[j.at("key").get<std::string>()] = std::move(rec);
  }
  return out;
}

/// Simulates one design point r times. A failing repetition marks the
/// record instead of aborting the experiment.
inline RunRecord run_point(const ExperimentSpec& spec, const taguchi::DesignPoint& point,
                           std::uint64_t batch_seed) {
  RunRecord rec;
  rec.point = point.run;
  rec.batch_seed = batch_seed;
  rec.factor_values = point.values;
  const auto settings = settings_for(spec, point);
  try {
    for (int k = 0; k < spec.repetitions; ++k) {
      const auto seed = repetition_seed(batch_seed, k);
      rec.repetition_seeds.push_back(seed);
      rec.responses.push_back(netsim::run(to_sim_config(settings, seed)).response_mw);
    }
    double sum = 0.0;
    for (double v : rec.responses) sum += v;
    rec.mean = sum / static_cast<double>(rec.responses.size());
    rec.snr = taguchi::snr(spec.snr_metric, rec.responses);
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

/// Runs every design point of every seed batch. Points execute on up to
/// `jobs` threads; each simulation is single-threaded and results land in
/// design order regardless of completion order.
inline RunOutcome run_experiment(const ExperimentSpec& spec, const RunOptions& opt = {}) {
  validate(spec);
  const auto design = expand_design(spec);
  const std::size_t n_points = design.run_count();

  std::map<std::string, RunRecord> cached;
  std::ofstream log;
  if (opt.log) {
    cached = load_log(*opt.log);
    if (opt.log->has_parent_path()) std::filesystem::create_directories(opt.log->parent_path());
    log.open(*opt.log, std::ios::app);
    if (!log) throw Error(ErrorKind::kIo, "cannot open run log " + opt.log->string());
  }

  struct Task {
    std::size_t batch;
    std::size_t point;
    std::string key;
  };
  RunOutcome out;
  out.batches.assign(spec.seeds.size(), std::vector<RunRecord>(n_points));
  std::vector<std::vector<bool>> filled(spec.seeds.size(), std::vector<bool>(n_points, false));
  std::vector<Task> tasks;
  for (std::size_t b = 0; b < spec.seeds.size(); ++b) {
    for (std::size_t i = 0; i < n_points; ++i) {
      auto key = point_key(settings_for(spec, design.points[i]), spec.seeds[b], spec.repetitions);
      if (auto it = cached.find(key); it != cached.end() && it->second.point == i) {
        out.batches[b][i] = it->second;
        filled[b][i] = true;
        ++out.reused;
        if (opt.on_record) opt.on_record(it->second, true);
        continue;
      }
      tasks.push_back({b, i, std::move(key)});
    }
  }
  if (opt.max_new_points && tasks.size() > *opt.max_new_points) {
    tasks.resize(*opt.max_new_points);
    out.complete = false;
  }

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      const auto& task = tasks[t];
      auto rec = run_point(spec, design.points[task.point], spec.seeds[task.batch]);
      std::lock_guard lock(mu);
      if (log.is_open()) log << to_json(rec, task.key).dump() << '\n' << std::flush;
      if (opt.on_record) opt.on_record(rec, false);
      out.batches[task.batch][task.point] = std::move(rec);
      filled[task.batch][task.point] = true;
      ++out.simulated;
    }
  };
  const int jobs = std::max(1, opt.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (std::size_t b = 0; b < filled.size(); ++b)
    for (std::size_t i = 0; i < n_points; ++i)
      if (!filled[b][i]) {
        out.batches[b][i].point = i;
        out.batches[b][i].batch_seed = spec.seeds[b];
        out.batches[b][i].factor_values = design.points[i].values;
        out.batches[b][i].error = "not run";
      }
  return out;
}

}  // namespace rpldoe::harness

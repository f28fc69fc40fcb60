// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fdist_oracle.hpp"
#include "netsim_oracle.hpp"
#include "trickle_oracle.hpp"
#include "rpldoe/harness/fixture.hpp"
#include "rpldoe/harness/report.hpp"
#include "rpldoe/harness/runner.hpp"
#include "rpldoe/harness/spec.hpp"
#include "rpldoe/netsim/simulator.hpp"
#include "rpldoe/taguchi/fdist.hpp"

using namespace rpldoe;
using namespace rpldoe::harness;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool passed = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      detail << " [" << what << "]";
    }
  }
};

int failures = 0;

void report(int id, const std::string& title, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = Clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.passed = false;
    o.detail << " [exception: " << e.what() << "]";
  }
  if (!o.passed) ++failures;
  std::printf("%s %d %s (%.2fs)%s\n", o.passed ? "PASS" : "FAIL", id, title.c_str(), seconds_since(t0),
              o.detail.str().c_str());
  std::fflush(stdout);
}

std::string describe_failures(const std::vector<fixture::Check>& checks) {
  std::ostringstream os;
  for (const auto& c : checks)
    if (!c.passed) os << c.cell << "=" << c.actual << " ";
  return os.str();
}

ExperimentSpec paper_spec() { return parse_spec_file(RPLDOE_PAPER_SPEC); }

SimSettings level_two(const ExperimentSpec& spec) {
  SimSettings s = spec.base;
  for (const auto& f : spec.factors) {
    const auto* field = find_setting(f.parameter);
    s.*(field->member) = f.factor.levels[1];
  }
  return s;
}

// Every run that passes through here is checked for state-time conservation.
struct Conservation {
  std::size_t runs = 0;
  std::size_t violations = 0;

  void check(const netsim::SimConfig& c, const netsim::SimResult& r) {
    ++runs;
    bool ok = true;
    auto sums = [](const netsim::PowerBreakdown& p) { return p.cpu_mw + p.lpm_mw + p.listen_mw + p.tx_mw; };
    auto close = [](double a, double b) { return std::fabs(a - b) <= 1e-9 * std::max(std::fabs(a), std::fabs(b)); };
    for (const auto& n : r.nodes) {
      ok = ok && n.times.total() == c.duration && n.times.cpu.count() >= 0 && n.times.lpm.count() >= 0;
      ok = ok && close(n.power.overall_mw, sums(n.power));
    }
    ok = ok && close(r.network_mean.overall_mw, sums(r.network_mean));
    if (!ok) ++violations;
  }
};

Conservation conservation;

netsim::SimResult simulate(const netsim::SimConfig& c) {
  auto r = netsim::Simulator(c).run();
  conservation.check(c, r);
  return r;
}

std::vector<netsim::Vec2> positions(const netsim::SimResult& r) {
  std::vector<netsim::Vec2> p;
  for (const auto& n : r.nodes) p.push_back(n.position);
  return p;
}

}  // namespace

int main() {
  report(1, "golden ANOVA on the embedded response column", [](Outcome& o) {
    const auto v = fixture::verify_paper();
    const auto anova = v.table_checks("anova");
    o.require(anova.size() == 25, "anova check count");
    o.require(std::all_of(anova.begin(), anova.end(), [](const auto& c) { return c.passed; }),
              "cells: " + describe_failures(anova));
    o.require(v.seconds < 1.0, "runtime " + std::to_string(v.seconds) + " s");
    const auto rep = analyze(fixture::design(), fixture::responses());
    o.detail << " C.F=" << rep.anova.row("C").f_value.value_or(NAN);
  });

  report(2, "golden SNR response table with ranks", [](Outcome& o) {
    const auto v = fixture::verify_paper();
    const auto resp = v.table_checks("response");
    o.require(resp.size() == 25, "response check count");
    o.require(std::all_of(resp.begin(), resp.end(), [](const auto& c) { return c.passed; }),
              "cells: " + describe_failures(resp));
    const auto rt = analyze(fixture::design(), fixture::responses()).response_table;
    o.require(std::fabs(rt.row("A").level_means[0] - -5.746) <= fixture::kLevelMeanTol, "NS level 1");
    o.require(std::fabs(rt.row("C").level_means[0] - -10.205) <= fixture::kLevelMeanTol, "MIN level 1");
    o.require(std::fabs(rt.row("C").level_means[2] - -1.843) <= fixture::kLevelMeanTol, "MIN level 3");
    o.require(std::fabs(rt.row("C").delta - 8.362) <= fixture::kDeltaTol, "MIN delta");
    const std::vector<std::pair<const char*, int>> ranks = {{"C", 1}, {"D", 2}, {"B", 3}, {"A", 4}, {"E", 5}};
    for (const auto& [label, rank] : ranks) o.require(rt.row(label).rank == rank, std::string("rank ") + label);
  });

  report(3, "design expansion, pairwise balance and array selection", [](Outcome& o) {
    const auto spec = paper_spec();
    const auto dm = expand_design(spec);
    o.require(dm.run_count() == 27, "row count");
    for (std::size_t r = 0; r < dm.run_count() && r < 27; ++r)
      for (std::size_t i = 0; i < 5; ++i)
        o.require(dm.points[r].values[i] == fixture::kLayout[r][i],
                  "row " + std::to_string(r + 1) + " factor " + std::to_string(i));
    const auto oa = resolve_array(spec);
    std::vector<std::size_t> cols = spec.columns;
    if (cols.empty()) {
      cols.resize(spec.factors.size());
      std::iota(cols.begin(), cols.end(), 0);
    }
    const auto rep = taguchi::verify_orthogonality(oa, cols);
    o.require(rep.passed && rep.pairs.size() == 10, "pairwise balance");
    const auto factors = spec.plain_factors();
    o.require(taguchi::min_runs(factors) == 11, "min_runs");
    o.require(taguchi::select_array(factors, taguchi::standard_catalog()).name == "L27", "selected array");
    o.require(oa.name == "L27", "resolved array");
  });

  report(4, "Trickle interval sequence, t window and k suppression", [](Outcome& o) {
    trickle::TrickleTimer t(trickle::TrickleParams{8, 4, 3});
    Rng rng(2024);
    t.start_interval(trickle::Micros{0}, rng);
    std::vector<std::int64_t> seen;
    for (int i = 0; i < 8; ++i) {
      seen.push_back(std::chrono::duration_cast<std::chrono::milliseconds>(t.interval()).count());
      t.end_interval(t.interval_end(), rng);
    }
    o.require(seen == std::vector<std::int64_t>{256, 512, 1024, 2048, 4096, 4096, 4096, 4096}, "sequence");

    trickle::TrickleTimer s(trickle::TrickleParams{8, 4, 3});
    s.start_interval(trickle::Micros{0}, rng);
    int outside = 0;
    for (int i = 0; i < 10000; ++i) {
      if (s.t() < s.interval() / 2 || s.t() >= s.interval()) ++outside;
      if (i % 5 == 4) {
        s.reset(s.interval_end(), rng);
      } else {
        s.end_interval(s.interval_end(), rng);
      }
    }
    o.require(outside == 0, std::to_string(outside) + " t samples outside [I/2, I)");

    int over = 0;
    for (std::uint64_t seed = 1; seed <= 500; ++seed)
      for (int n : oracle::aligned_transmissions(trickle::TrickleParams{8, 4, 2}, 3, 10, seed))
        if (n > 2) ++over;
    o.require(over == 0, std::to_string(over) + " intervals above k");
  });

  report(5, "simulator trends over five seed batches", [](Outcome& o) {
    const auto t0 = Clock::now();
    const auto spec = paper_spec();
    o.require(spec.seeds.size() == 5, "five seed batches");

    // (a) static connected 20-node networks at MIN = 12 rank every node.
    int connected = 0;
    int converged = 0;
    auto static_net = level_two(spec);
    static_net.node_count = 20;
    static_net.mobility_speed_mps = 0;
    for (auto batch : spec.seeds)
      for (int k = 0; k < spec.repetitions; ++k) {
        const auto cfg = to_sim_config(static_net, repetition_seed(batch, k));
        const auto r = simulate(cfg);
        if (!oracle::connected(positions(r), cfg.radio_range)) continue;
        ++connected;
        if (r.final_ranked == cfg.node_count) ++converged;
      }
    o.require(connected > 0 && converged == connected,
              "(a) " + std::to_string(converged) + "/" + std::to_string(connected) + " converged");

    // (b) mean power is non-increasing in MIN with the other factors at level 2.
    const auto& min_factor = spec.factors[2];
    int monotone = 0;
    for (auto batch : spec.seeds) {
      std::vector<double> mean;
      for (double level : min_factor.factor.levels) {
        auto s = level_two(spec);
        s.dio_interval_min = level;
        double sum = 0;
        for (int k = 0; k < spec.repetitions; ++k) sum += simulate(to_sim_config(s, repetition_seed(batch, k))).response_mw;
        mean.push_back(sum / spec.repetitions);
      }
      if (mean[0] >= mean[1] && mean[1] >= mean[2]) ++monotone;
    }
    o.require(monotone >= 4, "(b) monotone in " + std::to_string(monotone) + "/5");

    // (c) the full design ranks MIN first by F.
    RunOptions opt;
    opt.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    const auto out = run_experiment(spec, opt);
    o.require(out.complete && out.failures() == 0, "(c) experiment incomplete");
    int leading = 0;
    for (const auto& batch : out.batches) {
      const auto rep = analyze(batch, spec);
      const auto best = std::max_element(rep.anova.factors.begin(), rep.anova.factors.end(),
                                         [](const auto& a, const auto& b) {
                                           return a.f_value.value_or(-1) < b.f_value.value_or(-1);
                                         });
      if (best != rep.anova.factors.end() && best->label == "C") ++leading;
    }
    o.require(leading >= 4, "(c) MIN first in " + std::to_string(leading) + "/5");
    const double secs = seconds_since(t0);
    o.require(secs <= 600.0, "runtime " + std::to_string(secs) + " s");
    o.detail << " a=" << converged << "/" << connected << " b=" << monotone << "/5 c=" << leading << "/5";
  });

  report(6, "conservation, byte-identical reruns, analysis without the simulator", [](Outcome& o) {
    const auto spec = paper_spec();
    const auto dm = expand_design(spec);
    for (auto batch : spec.seeds)
      for (const auto& p : dm.points)
        for (int k = 0; k < spec.repetitions; ++k) simulate(to_sim_config(settings_for(spec, p), repetition_seed(batch, k)));
    o.require(conservation.violations == 0,
              std::to_string(conservation.violations) + "/" + std::to_string(conservation.runs) + " runs not conserved");

    auto traced = [&](std::uint64_t seed) {
      std::ostringstream trace;
      const auto cfg = to_sim_config(settings_for(spec, dm.points[13]), seed);
      netsim::Simulator sim(cfg, &trace);
      sim.run();
      return trace.str();
    };
    const auto first = traced(7);
    o.require(!first.empty() && first == traced(7), "trace differs between identical runs");

    auto small = spec;
    small.seeds = {spec.seeds.front()};
    auto json_of = [&] {
      auto rep = analyze(run_experiment(small).batches.front(), small);
      rep.provenance.generated_at.clear();
      return to_json(rep).dump();
    };
    o.require(json_of() == json_of(), "report JSON differs between identical runs");

    const int rc = std::system(RPLDOE_NOSIM_TOOL " verify-paper > /dev/null");
    o.require(rc == 0, "simulator-free verify-paper exit " + std::to_string(rc));
    o.detail << " runs=" << conservation.runs;
  });

  report(7, "F tail against the quadrature oracle on the 50-case grid", [](Outcome& o) {
    const auto grid = oracle::f_grid();
    o.require(grid.size() == 50, "grid size");
    double worst = 0;
    for (const auto& c : grid)
      worst = std::max(worst, std::fabs(taguchi::f_p_value(c.f, c.df1, c.df2) - oracle::f_upper_tail(c.f, c.df1, c.df2)));
    o.require(worst <= 1e-6, "max deviation " + std::to_string(worst));
    o.detail << " max_dev=" << worst;
  });

  return failures == 0 ? 0 : 1;
}

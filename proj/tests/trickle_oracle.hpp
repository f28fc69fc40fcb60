#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "rpldoe/random.hpp"
#include "rpldoe/trickle/trickle.hpp"

namespace oracle {

using rpldoe::trickle::Micros;
using rpldoe::trickle::TrickleParams;
using rpldoe::trickle::TrickleTimer;

// Runs `nodes` timers with identical parameters and aligned intervals over
// one zero-latency broadcast medium: every transmission is heard at once by
// every other node. Returns the transmission count of each interval.
inline std::vector<int> aligned_transmissions(const TrickleParams& p, int nodes, int intervals,
                                              std::uint64_t seed) {
  std::vector<TrickleTimer> timers(static_cast<std::size_t>(nodes), TrickleTimer(p));
  std::vector<rpldoe::Rng> rng;
  for (int i = 0; i < nodes; ++i) rng.emplace_back(rpldoe::derive_seed(seed, i));
  Micros now{0};
  for (int i = 0; i < nodes; ++i) timers[static_cast<std::size_t>(i)].start_interval(now, rng[static_cast<std::size_t>(i)]);

  std::vector<int> per_interval;
  for (int k = 0; k < intervals; ++k) {
    std::vector<std::size_t> order(static_cast<std::size_t>(nodes));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return timers[a].fire_time() < timers[b].fire_time();
    });
    int tx = 0;
    for (auto i : order) {
      if (!timers[i].fire(timers[i].fire_time())) continue;
      ++tx;
      for (std::size_t j = 0; j < timers.size(); ++j)
        if (j != i) timers[j].on_consistent(timers[i].fire_time());
    }
    per_interval.push_back(tx);
    now = timers.front().interval_end();
    for (std::size_t i = 0; i < timers.size(); ++i) timers[i].end_interval(now, rng[i]);
  }
  return per_interval;
}

}  // namespace oracle

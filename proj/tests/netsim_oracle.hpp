#pragma once

#include <deque>
#include <limits>
#include <vector>

#include "rpldoe/netsim/mobility.hpp"

namespace oracle {

// Hop distance from node 0 in the unit-disk graph; -1 when disconnected.
inline std::vector<int> hop_distance(const std::vector<rpldoe::netsim::Vec2>& pos, double range) {
  std::vector<int> hops(pos.size(), -1);
  if (pos.empty()) return hops;
  std::deque<std::size_t> q{0};
  hops[0] = 0;
  while (!q.empty()) {
    const auto u = q.front();
    q.pop_front();
    for (std::size_t v = 0; v < pos.size(); ++v)
      if (hops[v] < 0 && rpldoe::netsim::distance(pos[u], pos[v]) <= range) {
        hops[v] = hops[u] + 1;
        q.push_back(v);
      }
  }
  return hops;
}

inline bool connected(const std::vector<rpldoe::netsim::Vec2>& pos, double range) {
  for (int h : hop_distance(pos, range))
    if (h < 0) return false;
  return true;
}

}  // namespace oracle

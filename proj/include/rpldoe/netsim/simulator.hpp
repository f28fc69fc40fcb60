#pragma once

#include <algorithm>
#include <chrono>
#include <climits>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

#include "rpldoe/error.hpp"
#include "rpldoe/netsim/mobility.hpp"
#include "rpldoe/netsim/power.hpp"
#include "rpldoe/random.hpp"
#include "rpldoe/trickle/trickle.hpp"

namespace rpldoe::netsim {

using trickle::Millis;
using trickle::TrickleParams;
using trickle::TrickleTimer;

inline constexpr int kUnreachable = INT_MAX;
inline constexpr int kNoParent = -1;
inline constexpr int kRootId = 0;

struct SimConfig {
  int node_count = 20;
  Area area{};
  Micros duration = std::chrono::milliseconds{120000};
  double mobility_speed = 0.0;  // m/s
  TrickleParams trickle{};
  double radio_range = 50.0;    // m
  std::uint64_t seed = 1;
  PowerModel power{};
  Micros mobility_update_step = std::chrono::milliseconds{100};
  /// A node that has not heard its parent for this many I_max detaches.
  int parent_timeout_imax = 3;
  /// Re-check rank acyclicity after every topology change (slow; tests).
  bool check_invariants = false;

  bool operator==(const SimConfig&) const = default;
};

inline void validate(const SimConfig& c) {
  if (c.node_count < 2) throw Error(ErrorKind::kConfiguration, "node_count must be >= 2");
  if (c.duration.count() <= 0) throw Error(ErrorKind::kConfiguration, "duration must be > 0");
  if (!(c.radio_range > 0.0)) throw Error(ErrorKind::kConfiguration, "radio_range must be > 0");
  if (!(c.area.width > 0.0) || !(c.area.height > 0.0))
    throw Error(ErrorKind::kConfiguration, "area must be non-empty");
  if (c.mobility_speed < 0.0) throw Error(ErrorKind::kConfiguration, "mobility speed must be >= 0");
  if (c.mobility_update_step.count() <= 0)
    throw Error(ErrorKind::kConfiguration, "mobility_update_step must be > 0");
  if (c.parent_timeout_imax < 1)
    throw Error(ErrorKind::kConfiguration, "parent_timeout_imax must be >= 1");
  trickle::validate(c.trickle);
  (void)trickle::i_max_of(c.trickle);
  validate(c.power);
}

struct DioMessage {
  int sender = 0;
  int sender_rank = kUnreachable;
  std::uint32_t dodag_version = 0;
  Micros timestamp{0};
};

/// Busy periods are accumulated as disjoint segments, so the state times of
/// a node can never exceed the simulated duration.
struct BusyAccumulator {
  Micros cpu{0};
  Micros listen{0};
  Micros tx{0};
  Micros busy_until{0};

  void add(Micros& bucket, Micros begin, Micros end, Micros horizon) {
    begin = std::max(begin, busy_until);
    end = std::min(end, horizon);
    if (end <= begin) return;
    bucket += end - begin;
    busy_until = end;
  }
  Micros busy() const { return cpu + listen + tx; }
};

struct NodeState {
  int id = 0;
  Waypoint motion;
  int rank = kUnreachable;
  int parent = kNoParent;
  std::uint32_t dodag_version = 0;
  TrickleTimer timer;
  Micros parent_heard{0};
  std::uint64_t parent_epoch = 0;  // bumped on every parent change
  BusyAccumulator busy;

  NodeState(int node_id, const TrickleParams& params) : id(node_id), timer(params) {}

  bool is_root() const { return id == kRootId; }
  bool ranked() const { return rank != kUnreachable; }
};

enum class Classification { kConsistent, kInconsistent };

struct ReceiveOutcome {
  Classification classification = Classification::kConsistent;
  bool parent_changed = false;
};

/// Applies the hop-count rank rule to a received DIO. Updates rank/parent
/// but not the Trickle timer; the caller resets it on an inconsistent
/// outcome and counts a consistent one.
inline ReceiveOutcome on_dio_received(NodeState& node, const DioMessage& msg, Micros now) {
  ReceiveOutcome out;
  if (msg.sender_rank == kUnreachable || msg.sender == node.id) return out;
  if (node.is_root()) {
    out.classification = msg.dodag_version == node.dodag_version ? Classification::kConsistent
                                                                 : Classification::kInconsistent;
    return out;
  }
  const long long offered = static_cast<long long>(msg.sender_rank) + 1;
  if (!node.ranked() || offered < node.rank) {
    node.parent = msg.sender;
    node.rank = static_cast<int>(offered);
    node.dodag_version = msg.dodag_version;
    node.parent_heard = now;
    ++node.parent_epoch;
    out.classification = Classification::kInconsistent;
    out.parent_changed = true;
    return out;
  }
  if (msg.dodag_version != node.dodag_version) {
    out.classification = Classification::kInconsistent;
    return out;
  }
  if (msg.sender == node.parent) {
    node.parent_heard = now;
    if (offered != node.rank) {
      // Parent advertises a worse rank than the one we adopted: follow it.
      node.rank = static_cast<int>(offered);
      out.classification = Classification::kInconsistent;
      return out;
    }
  }
  out.classification = Classification::kConsistent;
  return out;
}

struct DioCounters {
  std::uint64_t sent = 0;
  std::uint64_t suppressed = 0;
  std::uint64_t received = 0;
  std::uint64_t opportunities = 0;

  bool operator==(const DioCounters&) const = default;
};

struct NodeResult {
  int id = 0;
  StateTimes times;
  PowerBreakdown power;
  int rank = kUnreachable;
  int parent = kNoParent;
  Vec2 position;
  DioCounters dio;

  bool operator==(const NodeResult&) const = default;
};

struct SimResult {
  std::vector<NodeResult> nodes;
  PowerBreakdown network_mean;
  double response_mw = 0.0;  // network mean overall power
  std::optional<Micros> time_all_ranked;
  int final_ranked = 0;
  int final_depth = 0;  // largest finite rank at the end
  DioCounters dio;
  std::uint64_t resets = 0;
  std::uint64_t parent_changes = 0;
  std::uint64_t detachments = 0;

  bool operator==(const SimResult&) const = default;
};

/// Checks that every ranked node reaches the root through parents whose
/// ranks strictly decrease. Returns an empty string when the DODAG is sound.
inline std::string check_dodag(const std::vector<NodeState>& nodes) {
  const auto n = static_cast<int>(nodes.size());
  for (const auto& node : nodes) {
    if (node.is_root()) {
      if (node.rank != 0 || node.parent != kNoParent) return "root lost rank 0";
      continue;
    }
    if (!node.ranked()) {
      if (node.parent != kNoParent) return "unranked node " + std::to_string(node.id) + " has parent";
      continue;
    }
    int cur = node.id;
    int steps = 0;
    while (cur != kRootId) {
      const auto& c = nodes[static_cast<std::size_t>(cur)];
      if (c.parent == kNoParent) return "node " + std::to_string(cur) + " ranked without parent";
      const auto& p = nodes[static_cast<std::size_t>(c.parent)];
      if (!(p.rank < c.rank))
        return "rank does not decrease from " + std::to_string(cur) + " to " +
               std::to_string(c.parent);
      cur = c.parent;
      if (++steps > n) return "parent cycle through node " + std::to_string(node.id);
    }
  }
  return {};
}

class Simulator {
 public:
  explicit Simulator(SimConfig config, std::ostream* trace = nullptr)
      : config_(std::move(config)), trace_(trace) {
    validate(config_);
    airtime_ = config_.power.dio_airtime;
    const Micros imax = trickle::i_max_of(config_.trickle);
    // Saturate: a timeout beyond the horizon never fires anyway.
    if (imax <= config_.duration) parent_timeout_ = imax * config_.parent_timeout_imax;
  }

  SimResult run() {
    setup();
    while (!queue_.empty()) {
      const Event ev = queue_.top();
      if (ev.time >= config_.duration) break;
      queue_.pop();
      now_ = ev.time;
      dispatch(ev);
    }
    return finish();
  }

  const std::vector<NodeState>& nodes() const { return nodes_; }

 private:
  enum class EventClass : int { kMobility = 0, kDelivery, kParentTimeout, kTrickleFire, kIntervalEnd };

  struct Event {
    Micros time;
    EventClass cls;
    int node;
    std::uint64_t seq;
    std::uint64_t tag;  // timer generation, parent epoch or message index

    bool operator>(const Event& o) const {
      if (time != o.time) return time > o.time;
      if (cls != o.cls) return cls > o.cls;
      if (node != o.node) return node > o.node;
      return seq > o.seq;
    }
  };

  void push(Micros t, EventClass cls, int node, std::uint64_t tag) {
    queue_.push(Event{t, cls, node, seq_++, tag});
  }

  void setup() {
    nodes_.clear();
    trickle_rng_.clear();
    mobility_rng_.clear();
    messages_.clear();
    counters_.assign(static_cast<std::size_t>(config_.node_count), DioCounters{});
    for (int i = 0; i < config_.node_count; ++i) {
      trickle_rng_.emplace_back(derive_seed(config_.seed, static_cast<std::uint64_t>(i), 1));
      mobility_rng_.emplace_back(derive_seed(config_.seed, static_cast<std::uint64_t>(i), 2));
      NodeState node(i, config_.trickle);
      auto& mrng = mobility_rng_.back();
      if (i == kRootId) {
        node.motion.position = node.motion.target = config_.area.center();
        node.rank = 0;
      } else {
        node.motion.position = uniform_point(config_.area, mrng);
        node.motion.target = uniform_point(config_.area, mrng);
      }
      nodes_.push_back(std::move(node));
    }
    ranked_count_ = 1;
    auto& root = nodes_[kRootId];
    reset_timer(root);
    if (config_.mobility_speed > 0.0) push(config_.mobility_update_step, EventClass::kMobility, -1, 0);
  }

  void dispatch(const Event& ev) {
    switch (ev.cls) {
      case EventClass::kMobility: move_all(); break;
      case EventClass::kDelivery: deliver(ev.node, messages_[ev.tag]); break;
      case EventClass::kParentTimeout: parent_timeout(ev.node, ev.tag); break;
      case EventClass::kTrickleFire: trickle_fire(ev.node, ev.tag); break;
      case EventClass::kIntervalEnd: interval_end(ev.node, ev.tag); break;
    }
  }

  void schedule_timer(NodeState& node) {
    push(node.timer.fire_time(), EventClass::kTrickleFire, node.id, node.timer.generation());
    push(node.timer.interval_end(), EventClass::kIntervalEnd, node.id, node.timer.generation());
  }

  void reset_timer(NodeState& node) {
    node.timer.reset(now_, rng_for(node));
    ++resets_;
    log(node.id, "reset", "I=" + std::to_string(node.timer.interval().count()));
    schedule_timer(node);
  }

  Rng& rng_for(const NodeState& node) { return trickle_rng_[static_cast<std::size_t>(node.id)]; }

  void move_all() {
    for (auto& node : nodes_) {
      if (node.is_root()) continue;
      mobility_step(node.motion, config_.mobility_speed, config_.mobility_update_step,
                    config_.area, mobility_rng_[static_cast<std::size_t>(node.id)]);
    }
    push(now_ + config_.mobility_update_step, EventClass::kMobility, -1, 0);
  }

  void trickle_fire(int id, std::uint64_t generation) {
    auto& node = nodes_[static_cast<std::size_t>(id)];
    if (generation != node.timer.generation() || !node.ranked()) return;
    auto& cnt = counters_[static_cast<std::size_t>(id)];
    if (!node.timer.pending_tx()) return;
    ++cnt.opportunities;
    if (!node.timer.fire(now_)) {
      ++cnt.suppressed;
      log(id, "suppress", "c=" + std::to_string(node.timer.counter()));
      return;
    }
    ++cnt.sent;
    log(id, "transmit", "rank=" + std::to_string(node.rank));
    node.busy.add(node.busy.tx, now_, now_ + airtime_, config_.duration);
    const auto msg_index = messages_.size();
    messages_.push_back(DioMessage{id, node.rank, node.dodag_version, now_});
    const double range = config_.radio_range;
    for (const auto& other : nodes_) {
      if (other.id == id) continue;
      if (distance(other.motion.position, node.motion.position) <= range)
        push(now_ + airtime_, EventClass::kDelivery, other.id, msg_index);
    }
  }

  void interval_end(int id, std::uint64_t generation) {
    auto& node = nodes_[static_cast<std::size_t>(id)];
    if (generation != node.timer.generation() || !node.ranked()) return;
    node.timer.end_interval(now_, rng_for(node));
    schedule_timer(node);
  }

  void deliver(int id, const DioMessage& msg) {
    auto& node = nodes_[static_cast<std::size_t>(id)];
    const auto& sender = nodes_[static_cast<std::size_t>(msg.sender)];
    // The sender detached while the frame was in the air; its poison supersedes it.
    if (sender.rank > msg.sender_rank) return;
    ++counters_[static_cast<std::size_t>(id)].received;
    node.busy.add(node.busy.listen, now_ - airtime_, now_, config_.duration);
    node.busy.add(node.busy.cpu, now_, now_ + config_.power.dio_cpu_cost, config_.duration);

    const bool was_ranked = node.ranked();
    const auto outcome = on_dio_received(node, msg, now_);
    if (outcome.classification == Classification::kConsistent) {
      if (node.timer.active()) node.timer.on_consistent(now_);
      return;
    }
    if (outcome.parent_changed) {
      ++parent_changes_;
      log(id, was_ranked ? "reparent" : "join",
          "parent=" + std::to_string(node.parent) + " rank=" + std::to_string(node.rank));
      if (!was_ranked) note_ranked();
      schedule_parent_timeout(node);
    }
    reset_timer(node);
    if (config_.check_invariants) verify();
  }

  void schedule_parent_timeout(NodeState& node) {
    if (!parent_timeout_) return;
    push(node.parent_heard + *parent_timeout_, EventClass::kParentTimeout, node.id,
         node.parent_epoch);
  }

  void parent_timeout(int id, std::uint64_t epoch) {
    auto& node = nodes_[static_cast<std::size_t>(id)];
    if (epoch != node.parent_epoch || node.parent == kNoParent) return;
    const Micros deadline = node.parent_heard + *parent_timeout_;
    if (now_ < deadline) {
      push(deadline, EventClass::kParentTimeout, id, epoch);
      return;
    }
    detach(node);
    if (config_.check_invariants) verify();
  }

  // Detaching poisons the subtree: descendants lose their route at once.
  void detach(NodeState& node) {
    std::vector<int> stack{node.id};
    while (!stack.empty()) {
      auto& n = nodes_[static_cast<std::size_t>(stack.back())];
      stack.pop_back();
      if (!n.ranked() || n.is_root()) continue;
      n.rank = kUnreachable;
      n.parent = kNoParent;
      ++n.parent_epoch;
      n.timer.stop(now_);
      --ranked_count_;
      ++detachments_;
      log(n.id, "detach", "");
      for (const auto& child : nodes_)
        if (child.parent == n.id) stack.push_back(child.id);
    }
  }

  void note_ranked() {
    ++ranked_count_;
    if (ranked_count_ == config_.node_count && !time_all_ranked_) time_all_ranked_ = now_;
  }

  void verify() const {
    if (auto msg = check_dodag(nodes_); !msg.empty()) throw Error(ErrorKind::kInvariant, msg);
  }

  void log(int node, std::string_view event, const std::string& detail) {
    if (!trace_) return;
    *trace_ << (static_cast<double>(now_.count()) / 1000.0) << ',' << node << ',' << event << ','
            << detail << '\n';
  }

  SimResult finish() {
    SimResult r;
    const auto n = nodes_.size();
    const double dn = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& node = nodes_[i];
      NodeResult nr;
      nr.id = node.id;
      const Micros busy = node.busy.busy();
      if (busy > config_.duration) throw Error(ErrorKind::kAccounting, "busy time exceeds duration");
      const Micros idle = config_.duration - busy;
      const auto idle_listen = Micros{static_cast<std::int64_t>(
          std::llround(config_.power.idle_listen_fraction * static_cast<double>(idle.count())))};
      nr.times.cpu = node.busy.cpu;
      nr.times.tx = node.busy.tx;
      nr.times.listen = node.busy.listen + idle_listen;
      nr.times.lpm = idle - idle_listen;
      nr.power = account_power(nr.times, config_.duration, config_.power);
      nr.rank = node.rank;
      nr.parent = node.parent;
      nr.position = node.motion.position;
      nr.dio = counters_[i];

      r.network_mean.cpu_mw += nr.power.cpu_mw / dn;
      r.network_mean.lpm_mw += nr.power.lpm_mw / dn;
      r.network_mean.listen_mw += nr.power.listen_mw / dn;
      r.network_mean.tx_mw += nr.power.tx_mw / dn;
      r.dio.sent += nr.dio.sent;
      r.dio.suppressed += nr.dio.suppressed;
      r.dio.received += nr.dio.received;
      r.dio.opportunities += nr.dio.opportunities;
      if (node.ranked()) {
        ++r.final_ranked;
        r.final_depth = std::max(r.final_depth, node.rank);
      }
      r.nodes.push_back(nr);
    }
    r.network_mean.overall_mw = r.network_mean.cpu_mw + r.network_mean.lpm_mw +
                                r.network_mean.listen_mw + r.network_mean.tx_mw;
    r.response_mw = r.network_mean.overall_mw;
    r.time_all_ranked = time_all_ranked_;
    r.resets = resets_;
    r.parent_changes = parent_changes_;
    r.detachments = detachments_;
    return r;
  }

  SimConfig config_;
  std::ostream* trace_;
  Micros airtime_{0};
  std::optional<Micros> parent_timeout_;
  Micros now_{0};
  std::vector<NodeState> nodes_;
  std::vector<Rng> trickle_rng_;
  std::vector<Rng> mobility_rng_;
  std::vector<DioMessage> messages_;
  std::vector<DioCounters> counters_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  std::uint64_t seq_ = 0;
  int ranked_count_ = 0;
  std::optional<Micros> time_all_ranked_;
  std::uint64_t resets_ = 0;
  std::uint64_t parent_changes_ = 0;
  std::uint64_t detachments_ = 0;
};

/// Runs one seeded simulation. Deterministic for a fixed config.
inline SimResult run(const SimConfig& config, std::ostream* trace = nullptr) {
  return Simulator(config, trace).run();
}

}  // namespace rpldoe::netsim

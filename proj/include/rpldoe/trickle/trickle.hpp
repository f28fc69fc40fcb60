#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <string_view>

#include "rpldoe/error.hpp"
#include "rpldoe/random.hpp"

namespace rpldoe::trickle {

using Millis = std::chrono::milliseconds;
using Micros = std::chrono::microseconds;

/// The three Trickle knobs. Interval bounds are powers of two in
/// milliseconds: I_min = 2^i_min_exp, I_max = I_min * 2^doublings.
struct TrickleParams {
  int i_min_exp = 8;
  int doublings = 4;
  std::uint32_t k = 6;

  bool operator==(const TrickleParams&) const = default;
};

// Largest power-of-two millisecond interval whose microsecond count, doubled,
// still fits in int64.
inline constexpr int kMaxIntervalExp = 52;

inline void validate(const TrickleParams& p) {
  if (p.i_min_exp < 1) throw Error(ErrorKind::kConfiguration, "i_min_exp must be >= 1");
  if (p.doublings < 0) throw Error(ErrorKind::kConfiguration, "doublings must be >= 0");
  if (p.k < 1) throw Error(ErrorKind::kConfiguration, "redundancy constant k must be >= 1");
}

inline Millis i_min_of(const TrickleParams& p) {
  if (p.i_min_exp < 1) throw Error(ErrorKind::kConfiguration, "i_min_exp must be >= 1");
  if (p.i_min_exp > kMaxIntervalExp)
    throw Error(ErrorKind::kRange, "2^" + std::to_string(p.i_min_exp) + " ms does not fit");
  return Millis{std::int64_t{1} << p.i_min_exp};
}

inline Millis i_max_of(const TrickleParams& p) {
  const auto imin = i_min_of(p);
  if (p.doublings < 0) throw Error(ErrorKind::kConfiguration, "doublings must be >= 0");
  if (p.i_min_exp + p.doublings > kMaxIntervalExp)
    throw Error(ErrorKind::kRange, "I_max = 2^" + std::to_string(p.i_min_exp + p.doublings) +
                                       " ms does not fit");
  return imin * (std::int64_t{1} << p.doublings);
}

enum class TrickleEvent { kIntervalStart, kConsistent, kTransmit, kSuppress, kReset, kStop };

inline std::string_view to_string(TrickleEvent e) {
  switch (e) {
    case TrickleEvent::kIntervalStart: return "interval_start";
    case TrickleEvent::kConsistent: return "consistent";
    case TrickleEvent::kTransmit: return "transmit";
    case TrickleEvent::kSuppress: return "suppress";
    case TrickleEvent::kReset: return "reset";
    case TrickleEvent::kStop: return "stop";
  }
  return "?";
}

struct TraceEntry {
  Micros time;
  TrickleEvent event;
  Millis interval;
  Micros t;
  std::uint32_t counter;
};

using TraceHook = std::function<void(const TraceEntry&)>;

/// Per-node Trickle state. Invariants while active: I_min <= I <= I_max,
/// I/2 <= t < I. The timer does not schedule anything itself; the owner
/// reads fire_time() / interval_end() and calls fire() / end_interval().
class TrickleTimer {
 public:
  explicit TrickleTimer(const TrickleParams& params)
      : params_(params), i_min_(i_min_of(params)), i_max_(i_max_of(params)), interval_(i_min_) {
    validate(params);
  }

  const TrickleParams& params() const { return params_; }
  Millis i_min() const { return i_min_; }
  Millis i_max() const { return i_max_; }

  Millis interval() const { return interval_; }
  Micros interval_start() const { return start_; }
  Micros interval_end() const { return start_ + interval_; }
  Micros t() const { return t_; }
  Micros fire_time() const { return start_ + t_; }
  std::uint32_t counter() const { return counter_; }
  bool pending_tx() const { return pending_; }
  bool active() const { return active_; }
  /// Bumped on every interval start so stale scheduled events can be told apart.
  std::uint64_t generation() const { return generation_; }

  void set_trace(TraceHook hook) { trace_ = std::move(hook); }

  /// Begins an interval of the current length at `now`: c = 0, t drawn
  /// uniformly from [I/2, I).
  template <typename URBG>
  void start_interval(Micros now, URBG& rng) {
    const Micros len = interval_;
    const Micros half = len / 2;
    start_ = now;
    t_ = Micros{uniform_int(rng, half.count(), len.count())};
    counter_ = 0;
    pending_ = true;
    active_ = true;
    ++generation_;
    emit(TrickleEvent::kIntervalStart, now);
  }

  void on_consistent(Micros now = Micros{0}) {
    if (counter_ < std::numeric_limits<std::uint32_t>::max()) ++counter_;
    emit(TrickleEvent::kConsistent, now);
  }

  bool should_transmit() const { return pending_ && counter_ < params_.k; }

  /// Handles reaching time t. Returns true when the node transmits.
  bool fire(Micros now) {
    const bool tx = should_transmit();
    const bool was_pending = pending_;
    pending_ = false;
    if (was_pending) emit(tx ? TrickleEvent::kTransmit : TrickleEvent::kSuppress, now);
    return tx;
  }

  /// Interval expiry: double I up to I_max and start the next interval.
  template <typename URBG>
  void end_interval(Micros now, URBG& rng) {
    interval_ = std::min(interval_ * 2, i_max_);
    start_interval(now, rng);
  }

  /// Inconsistency: back to I_min, start a fresh interval at `now`. Any
  /// pending transmission of the old interval is dropped.
  template <typename URBG>
  void reset(Micros now, URBG& rng) {
    interval_ = i_min_;
    emit(TrickleEvent::kReset, now);
    start_interval(now, rng);
  }

  /// Returns to the dormant I_min state without scheduling anything.
  void stop(Micros now = Micros{0}) {
    interval_ = i_min_;
    pending_ = false;
    active_ = false;
    counter_ = 0;
    ++generation_;
    emit(TrickleEvent::kStop, now);
  }

  /// Restores a saved counter value (checkpointing, tests).
  void set_counter(std::uint32_t c) { counter_ = c; }

 private:
  void emit(TrickleEvent e, Micros now) const {
    if (trace_) trace_(TraceEntry{now, e, interval_, t_, counter_});
  }

  TrickleParams params_;
  Millis i_min_;
  Millis i_max_;
  Millis interval_;
  Micros start_{0};
  Micros t_{0};
  std::uint32_t counter_ = 0;
  bool pending_ = false;
  bool active_ = false;
  std::uint64_t generation_ = 0;
  TraceHook trace_;
};

inline bool should_transmit(const TrickleTimer& timer, const TrickleParams& params) {
  return timer.pending_tx() && timer.counter() < params.k;
}

}  // namespace rpldoe::trickle

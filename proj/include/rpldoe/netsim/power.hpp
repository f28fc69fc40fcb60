#pragma once

#include <chrono>
#include <cmath>
#include <string>

#include "rpldoe/error.hpp"

namespace rpldoe::netsim {

using Micros = std::chrono::microseconds;

/// Draws of the four mutually exclusive node states plus per-DIO costs.
/// Defaults are Tmote-Sky-class figures; they are calibration knobs.
struct PowerModel {
  double cpu_active_mw = 1.8;
  double lpm_mw = 0.0545;
  double listen_mw = 60.0;
  double tx_mw = 57.6;
  Micros dio_airtime{3200};
  Micros dio_cpu_cost{1000};
  /// Share of otherwise idle time the radio spends listening (duty cycle);
  /// the remainder is spent in LPM.
  double idle_listen_fraction = 0.02;

  bool operator==(const PowerModel&) const = default;
};

inline void validate(const PowerModel& m) {
  if (m.cpu_active_mw < 0 || m.lpm_mw < 0 || m.listen_mw < 0 || m.tx_mw < 0)
    throw Error(ErrorKind::kConfiguration, "power draws must be >= 0");
  if (m.dio_airtime.count() < 0 || m.dio_cpu_cost.count() < 0)
    throw Error(ErrorKind::kConfiguration, "DIO costs must be >= 0");
  if (!(m.idle_listen_fraction >= 0.0 && m.idle_listen_fraction <= 1.0))
    throw Error(ErrorKind::kConfiguration, "idle_listen_fraction must be in [0, 1]");
}

/// Time a node spent in each state. Exactly one state holds at any instant.
struct StateTimes {
  Micros cpu{0};
  Micros lpm{0};
  Micros listen{0};
  Micros tx{0};

  Micros total() const { return cpu + lpm + listen + tx; }
  bool operator==(const StateTimes&) const = default;
};

/// Time-weighted average power per state, mW.
struct PowerBreakdown {
  double cpu_mw = 0.0;
  double lpm_mw = 0.0;
  double listen_mw = 0.0;
  double tx_mw = 0.0;
  double overall_mw = 0.0;

  bool operator==(const PowerBreakdown&) const = default;
};

inline PowerBreakdown account_power(const StateTimes& times, Micros duration,
                                    const PowerModel& model) {
  if (duration.count() <= 0) throw Error(ErrorKind::kAccounting, "duration must be > 0");
  const double total = static_cast<double>(times.total().count());
  const double d = static_cast<double>(duration.count());
  if (times.cpu.count() < 0 || times.lpm.count() < 0 || times.listen.count() < 0 ||
      times.tx.count() < 0)
    throw Error(ErrorKind::kAccounting, "negative state time");
  if (std::fabs(total - d) > 1e-6 * d)
    throw Error(ErrorKind::kAccounting, "state times sum to " + std::to_string(total) +
                                            " us, duration is " + std::to_string(d) + " us");
  PowerBreakdown p;
  p.cpu_mw = model.cpu_active_mw * static_cast<double>(times.cpu.count()) / d;
  p.lpm_mw = model.lpm_mw * static_cast<double>(times.lpm.count()) / d;
  p.listen_mw = model.listen_mw * static_cast<double>(times.listen.count()) / d;
  p.tx_mw = model.tx_mw * static_cast<double>(times.tx.count()) / d;
  p.overall_mw = p.cpu_mw + p.lpm_mw + p.listen_mw + p.tx_mw;
  return p;
}

}  // namespace rpldoe::netsim

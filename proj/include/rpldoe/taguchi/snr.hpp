#pragma once

#include <cmath>
#include <span>
#include <string>
#include <string_view>

#include "rpldoe/error.hpp"

namespace rpldoe::taguchi {

enum class SnrMetric { kSmallerBetter, kLargerBetter, kNominalBest };

inline std::string_view to_string(SnrMetric m) {
  switch (m) {
    case SnrMetric::kSmallerBetter: return "smaller";
    case SnrMetric::kLargerBetter: return "larger";
    case SnrMetric::kNominalBest: return "nominal";
  }
  return "?";
}

inline SnrMetric parse_snr_metric(std::string_view s) {
  if (s == "smaller" || s == "smaller-better") return SnrMetric::kSmallerBetter;
  if (s == "larger" || s == "larger-better") return SnrMetric::kLargerBetter;
  if (s == "nominal" || s == "nominal-best") return SnrMetric::kNominalBest;
  throw Error(ErrorKind::kInvalidInput, "unknown SNR metric '" + std::string(s) + "'");
}

namespace detail {
inline void require_positive(std::span<const double> y) {
  if (y.empty()) throw Error(ErrorKind::kInvalidInput, "no observations");
  for (double v : y)
    if (!(v > 0.0) || !std::isfinite(v))
      throw Error(ErrorKind::kDomain, "observations must be finite and > 0");
}
}  // namespace detail

/// -10 log10(mean of y^2), in dB. Power responses are minimized.
inline double snr_smaller_better(std::span<const double> y) {
  detail::require_positive(y);
  double acc = 0.0;
  for (double v : y) acc += v * v;
  return -10.0 * std::log10(acc / static_cast<double>(y.size()));
}

/// -10 log10(mean of 1/y^2), in dB.
inline double snr_larger_better(std::span<const double> y) {
  detail::require_positive(y);
  double acc = 0.0;
  for (double v : y) acc += 1.0 / (v * v);
  return -10.0 * std::log10(acc / static_cast<double>(y.size()));
}

/// 10 log10(mean^2 / sample variance), in dB. Needs at least two finite
/// observations with non-zero mean and non-zero spread.
inline double snr_nominal_best(std::span<const double> y) {
  if (y.size() < 2) throw Error(ErrorKind::kInvalidInput, "nominal-best needs r >= 2");
  double mean = 0.0;
  for (double v : y) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kDomain, "observations must be finite");
    mean += v;
  }
  mean /= static_cast<double>(y.size());
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  const double var = ss / static_cast<double>(y.size() - 1);
  if (var == 0.0) throw Error(ErrorKind::kDegenerateVariance, "sample variance is zero");
  if (mean == 0.0) throw Error(ErrorKind::kDegenerateVariance, "zero mean gives -inf dB");
  return 10.0 * std::log10(mean * mean / var);
}

inline double snr(SnrMetric metric, std::span<const double> y) {
  switch (metric) {
    case SnrMetric::kSmallerBetter: return snr_smaller_better(y);
    case SnrMetric::kLargerBetter: return snr_larger_better(y);
    case SnrMetric::kNominalBest: return snr_nominal_best(y);
  }
  throw Error(ErrorKind::kInvalidInput, "bad metric");
}

}  // namespace rpldoe::taguchi

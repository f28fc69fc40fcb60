#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "rpldoe/harness/fixture.hpp"
#include "rpldoe/taguchi/anova.hpp"
#include "rpldoe/taguchi/io.hpp"
#include "rpldoe/taguchi/snr.hpp"

using namespace rpldoe;
using namespace rpldoe::taguchi;
using Catch::Approx;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<double> fixture_power() {
  return {harness::fixture::kPower.begin(), harness::fixture::kPower.end()};
}

// Computational form: SS = sum_l T_l^2 / n_l - T^2 / N.
double ss_by_totals(const DesignMatrix& dm, const std::vector<double>& y, std::size_t f) {
  std::vector<double> t(3, 0.0);
  std::vector<double> n(3, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto l = static_cast<std::size_t>(dm.points[i].level_index[f] - 1);
    t[l] += y[i];
    n[l] += 1.0;
    total += y[i];
  }
  double s = 0.0;
  for (std::size_t l = 0; l < 3; ++l) s += t[l] * t[l] / n[l];
  return s - total * total / static_cast<double>(y.size());
}

std::vector<double> random_positive(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.5, 6.0);
  std::vector<double> y(n);
  for (auto& v : y) v = u(rng);
  return y;
}

}  // namespace

TEST_CASE("smaller-the-better SNR on hand-worked inputs") {
  const std::vector<double> one = {1.0};
  CHECK(snr_smaller_better(one) == 0.0);
  const std::vector<double> ten = {10.0};
  CHECK_THAT(snr_smaller_better(ten), WithinAbs(-20.0, 1e-12));
  // mean of squares = (1 + 9) / 2 = 5
  const std::vector<double> y = {1.0, 3.0};
  CHECK_THAT(snr_smaller_better(y), WithinAbs(-10.0 * std::log10(5.0), 1e-12));
}

TEST_CASE("larger-the-better SNR on hand-worked inputs") {
  const std::vector<double> y = {2.0, 2.0};
  CHECK_THAT(snr_larger_better(y), WithinAbs(20.0 * std::log10(2.0), 1e-12));
  // mean of 1/y^2 = (1 + 1/4) / 2 = 0.625
  const std::vector<double> z = {1.0, 2.0};
  CHECK_THAT(snr_larger_better(z), WithinAbs(-10.0 * std::log10(0.625), 1e-12));
}

TEST_CASE("nominal-the-best SNR uses the sample variance") {
  // mean 2, sample variance 1 -> 10 log10(4)
  const std::vector<double> y = {1.0, 2.0, 3.0};
  CHECK_THAT(snr_nominal_best(y), WithinAbs(10.0 * std::log10(4.0), 1e-12));
  const std::vector<double> flat = {2.0, 2.0};
  CHECK_THROWS_AS(snr_nominal_best(flat), Error);
  const std::vector<double> single = {2.0};
  CHECK_THROWS_AS(snr_nominal_best(single), Error);
}

TEST_CASE("SNR rejects empty, zero and negative observations") {
  const std::vector<double> empty;
  const std::vector<double> zero = {1.0, 0.0};
  const std::vector<double> negative = {-1.0};
  for (auto m : {SnrMetric::kSmallerBetter, SnrMetric::kLargerBetter}) {
    CHECK_THROWS_AS(snr(m, empty), Error);
    CHECK_THROWS_AS(snr(m, zero), Error);
    CHECK_THROWS_AS(snr(m, negative), Error);
  }
  try {
    snr_smaller_better(zero);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDomain);
  }
}

TEST_CASE("smaller-the-better SNR falls as the response grows") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    auto y = random_positive(rng, 3);
    const double before = snr_smaller_better(y);
    y[trial % 3] *= 1.1;
    CHECK(snr_smaller_better(y) < before);
  }
}

TEST_CASE("metric names parse in both directions") {
  for (auto m : {SnrMetric::kSmallerBetter, SnrMetric::kLargerBetter, SnrMetric::kNominalBest})
    CHECK(parse_snr_metric(to_string(m)) == m);
  CHECK_THROWS_AS(parse_snr_metric("best"), Error);
  CHECK(parse_anova_space("snr") == AnovaSpace::kSnr);
  CHECK_THROWS_AS(parse_anova_space("log"), Error);
}

TEST_CASE("factor sums of squares agree with the level-totals form") {
  const auto dm = harness::fixture::design();
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto y = random_positive(rng, 27);
    for (std::size_t f = 0; f < 5; ++f)
      CHECK_THAT(factor_sum_squares(dm, y, f), WithinAbs(ss_by_totals(dm, y, f), 1e-9));
  }
}

TEST_CASE("sum of factor and error SS equals the total on random responses") {
  const auto dm = harness::fixture::design();
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto y = random_positive(rng, 27);
    const auto t = anova(dm, y);
    double sum = t.error_ss;
    double pct = t.error_percent;
    for (const auto& r : t.factors) {
      sum += r.seq_ss;
      pct += r.percent_contribution;
      CHECK(r.seq_ss >= 0.0);
    }
    CHECK_THAT(sum, WithinRel(t.total_ss, 1e-12));
    CHECK_THAT(pct, WithinAbs(100.0, 1e-9));
    CHECK(t.error_df == 16);
    CHECK(t.total_df == 26);
  }
}

TEST_CASE("shifted responses keep every SS and scaled responses keep every F") {
  const auto dm = harness::fixture::design();
  std::mt19937_64 rng(13);
  const auto y = random_positive(rng, 27);
  std::vector<double> scaled, shifted;
  for (double v : y) {
    scaled.push_back(3.0 * v);
    shifted.push_back(v + 10.0);
  }
  const auto a = anova(dm, y);
  const auto s = anova(dm, scaled);
  const auto h = anova(dm, shifted);
  for (std::size_t i = 0; i < a.factors.size(); ++i) {
    CHECK_THAT(s.factors[i].seq_ss, WithinRel(9.0 * a.factors[i].seq_ss, 1e-10));
    CHECK_THAT(s.factors[i].f_value.value(), WithinRel(*a.factors[i].f_value, 1e-9));
    CHECK_THAT(h.factors[i].seq_ss, WithinRel(a.factors[i].seq_ss, 1e-8));
    CHECK_THAT(h.factors[i].p_value.value(), WithinAbs(*a.factors[i].p_value, 1e-9));
  }
}

TEST_CASE("reordering factors leaves each factor's row unchanged") {
  const auto dm = harness::fixture::design();
  const auto y = fixture_power();
  const auto base = anova(dm, y);

  auto factors = dm.factors;
  std::reverse(factors.begin(), factors.end());
  std::vector<std::vector<double>> rows;
  for (const auto& p : dm.points) rows.emplace_back(p.values.rbegin(), p.values.rend());
  const auto reversed = anova(design_from_rows(factors, rows), y);
  for (const auto& row : base.factors) {
    const auto& other = reversed.row(row.label);
    CHECK_THAT(other.seq_ss, WithinAbs(row.seq_ss, 1e-12));
    CHECK(other.f_value == row.f_value);
  }
  CHECK(base.factors.front().label == "A");
  CHECK(reversed.factors.front().label == "A");
}

TEST_CASE("response table on the reference power data matches an independent recomputation") {
  const auto dm = harness::fixture::design();
  const auto y = fixture_power();
  std::vector<double> sn;
  for (double v : y) sn.push_back(-20.0 * std::log10(v));
  const auto rt = response_table(dm, sn);
  for (std::size_t f = 0; f < 5; ++f) {
    double lo = 1e9, hi = -1e9;
    for (int l = 1; l <= 3; ++l) {
      double acc = 0.0;
      int n = 0;
      for (std::size_t i = 0; i < 27; ++i)
        if (dm.points[i].level_index[f] == l) {
          acc += sn[i];
          ++n;
        }
      const double m = acc / n;
      lo = std::min(lo, m);
      hi = std::max(hi, m);
      CHECK_THAT(rt.factors[f].level_means[static_cast<std::size_t>(l - 1)], WithinAbs(m, 1e-12));
    }
    CHECK_THAT(rt.factors[f].delta, WithinAbs(hi - lo, 1e-12));
  }
  CHECK_FALSE(rt.any_ties());
}

TEST_CASE("response ranks follow delta and ties are flagged") {
  std::vector<Factor> f = {{"A", "a", {1, 2, 3}}, {"B", "b", {1, 2, 3}}, {"C", "c", {1, 2, 3}}};
  const auto dm = make_design(f, l9());
  std::vector<double> sn(9);
  for (std::size_t i = 0; i < 9; ++i)
    sn[i] = 2.0 * dm.points[i].level_index[0] + 2.0 * dm.points[i].level_index[1] +
            0.5 * dm.points[i].level_index[2];
  const auto rt = response_table(dm, sn);
  CHECK(rt.row("A").rank == 1);
  CHECK(rt.row("B").rank == 2);
  CHECK(rt.row("C").rank == 3);
  CHECK(rt.row("A").tied);
  CHECK(rt.row("B").tied);
  CHECK_FALSE(rt.row("C").tied);
}

TEST_CASE("ranks are unchanged when every response is scaled") {
  const auto dm = harness::fixture::design();
  auto y = fixture_power();
  std::vector<double> sn, sn2;
  for (double v : y) {
    sn.push_back(snr_smaller_better(std::vector<double>{v}));
    sn2.push_back(snr_smaller_better(std::vector<double>{2.5 * v}));
  }
  const auto a = response_table(dm, sn);
  const auto b = response_table(dm, sn2);
  for (std::size_t i = 0; i < a.factors.size(); ++i) {
    CHECK(a.factors[i].rank == b.factors[i].rank);
    CHECK_THAT(b.factors[i].delta, WithinAbs(a.factors[i].delta, 1e-9));
  }
}

TEST_CASE("constant responses are flagged as zero variance") {
  const auto dm = harness::fixture::design();
  const std::vector<double> y(27, 1.187);
  const auto t = anova(dm, y);
  CHECK(t.zero_variance);
  CHECK(t.total_ss == 0.0);
  for (const auto& r : t.factors) {
    CHECK_FALSE(r.f_value.has_value());
    CHECK_FALSE(r.p_value.has_value());
  }
  CHECK_THROWS_AS(percent_contribution(1.0, 0.0), Error);
}

TEST_CASE("a saturated design has no error term") {
  const auto dm = make_design(
      {{"A", "a", {1, 2, 3}}, {"B", "b", {1, 2, 3}}, {"C", "c", {1, 2, 3}}, {"D", "d", {1, 2, 3}}}, l9());
  const std::vector<double> y = {1, 2, 4, 3, 5, 2, 6, 1, 3};
  const auto t = anova(dm, y);
  CHECK(t.saturated);
  CHECK(t.error_df == 0);
  CHECK_THAT(t.error_ss, WithinAbs(0.0, 1e-12));
  for (const auto& r : t.factors) CHECK_FALSE(r.f_value.has_value());
  try {
    f_value(1.0, 2, 0.0, 0);
    FAIL("expected no error df");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNoErrorDf);
  }
}

TEST_CASE("f_value edge cases") {
  CHECK(std::isinf(f_value(1.0, 2, 0.0, 4)));
  CHECK_THROWS_AS(f_value(0.0, 2, 0.0, 4), Error);
  CHECK_THAT(f_value(4.0, 2, 1.0, 4), WithinAbs(8.0, 1e-12));
  const std::vector<double> ss = {2.0, 3.0};
  CHECK_THROWS_AS(error_sum_squares(4.0, ss), Error);
  CHECK(error_sum_squares(5.0, ss) == 0.0);
}

TEST_CASE("main effects and interactions on the reference power data") {
  const auto dm = harness::fixture::design();
  const auto y = fixture_power();
  const auto e = effects(dm, y);
  const auto& min = e.main_effect("C");
  CHECK(min.level_values == std::vector<double>{8, 12, 16});
  CHECK(min.counts == std::vector<std::size_t>{9, 9, 9});
  // Rows 1-3, 16-18, 22-24 run at MIN = 8.
  const double expected = (4.17 + 4.929 + 5.69 + 2.16 + 2.59 + 2.663 + 2.625 + 2.944 + 2.905) / 9.0;
  CHECK_THAT(min.mean[0], WithinAbs(expected, 1e-12));
  CHECK(fixed(min.mean[0], 3) == "3.408");
  CHECK(min.mean_snr.empty());

  CHECK(e.interactions.size() == 10);
  const auto& bc = e.interaction("B", "C");
  for (const auto& row : bc.counts)
    for (auto n : row) CHECK(n == 3);
  CHECK_THROWS_AS(e.interaction("C", "B"), Error);
}

TEST_CASE("interaction cells with no run are left empty") {
  std::vector<Factor> f = {{"A", "a", {1, 2}}, {"B", "b", {1, 2}}};
  const auto dm = design_from_rows(f, {{1, 1}, {2, 2}, {1, 1}});
  const std::vector<double> y = {1.0, 2.0, 3.0};
  const auto e = effects(dm, y);
  const auto& x = e.interaction("A", "B");
  CHECK(x.mean[0][0] == 2.0);
  CHECK_FALSE(x.mean[0][1].has_value());
  std::ostringstream os;
  write_interactions_csv(os, e);
  CHECK(os.str().find("factor_i,level_i,factor_j,level_j,mean") == 0);
}

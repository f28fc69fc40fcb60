#include <catch_amalgamated.hpp>

#include <array>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "rpldoe/harness/fixture.hpp"
#include "rpldoe/taguchi/design.hpp"

using namespace rpldoe;
using namespace rpldoe::taguchi;

namespace {

std::vector<Factor> three_level(std::size_t n) {
  std::vector<Factor> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({std::string(1, static_cast<char>('A' + i)), "f" + std::to_string(i), {1, 2, 3}});
  return out;
}

std::vector<std::size_t> all_columns(const OrthogonalArray& oa) {
  std::vector<std::size_t> c(oa.columns());
  std::iota(c.begin(), c.end(), 0);
  return c;
}

// Columns of the 3^(13-10) design, written as GF(3) coefficient vectors over
// three base factors (a, b, c); run (a, b, c) enumerates base-3 with a slowest.
constexpr std::array<std::array<int, 3>, 13> kGenerators = {{
    {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {2, 1, 0}, {0, 0, 1}, {1, 0, 1}, {2, 0, 1},
    {0, 1, 1}, {1, 1, 1}, {2, 1, 1}, {0, 2, 1}, {1, 2, 1}, {2, 2, 1},
}};

}  // namespace

TEST_CASE("catalog arrays are pairwise balanced on every column pair") {
  for (const auto& oa : standard_catalog()) {
    INFO(oa.name);
    const auto rep = verify_orthogonality(oa, all_columns(oa));
    CHECK(rep.passed);
    CHECK(rep.failures.empty());
    CHECK(rep.pairs.size() == oa.columns() * (oa.columns() - 1) / 2);
    for (const auto& pc : rep.pairs)
      for (const auto& row : pc.joint)
        for (auto n : row) CHECK(n == oa.runs() / 9);
  }
}

TEST_CASE("L27 table matches its GF(3) generator construction") {
  const auto oa = l27();
  REQUIRE(oa.runs() == 27);
  REQUIRE(oa.columns() == 13);
  for (int run = 0; run < 27; ++run) {
    const int base[3] = {run / 9, (run / 3) % 3, run % 3};
    for (std::size_t col = 0; col < 13; ++col) {
      const auto& g = kGenerators[col];
      const int level = (g[0] * base[0] + g[1] * base[1] + g[2] * base[2]) % 3 + 1;
      INFO("run " << run + 1 << " column " << col + 1);
      CHECK(oa.at(static_cast<std::size_t>(run), col) == level);
    }
  }
}

TEST_CASE("L9 rows are distinct and every column is balanced") {
  const auto oa = l9();
  std::set<std::vector<int>> rows(oa.cells.begin(), oa.cells.end());
  CHECK(rows.size() == 9);
  CHECK(verify_orthogonality(oa, all_columns(oa)).passed);
}

TEST_CASE("a single altered cell breaks the balance check") {
  auto oa = l9();
  oa.cells[4][2] = oa.cells[4][2] % 3 + 1;
  const std::vector<std::size_t> cols = {0, 1, 2, 3};
  const auto rep = verify_orthogonality(oa, cols);
  CHECK_FALSE(rep.passed);
  CHECK_FALSE(rep.failures.empty());

  auto bad = l9();
  bad.cells[0][0] = 4;
  CHECK_FALSE(verify_orthogonality(bad, cols).passed);
  const std::vector<std::size_t> out_of_range = {7};
  CHECK_THROWS_AS(verify_orthogonality(l9(), out_of_range), Error);
}

TEST_CASE("min_runs counts one run for the mean plus the factor dof") {
  CHECK(min_runs(three_level(1)) == 3);
  CHECK(min_runs(three_level(4)) == 9);
  CHECK(min_runs(three_level(5)) == 11);
  std::vector<Factor> mixed = {{"A", "a", {1, 2}}, {"B", "b", {1, 2, 3, 4}}, {"C", "c", {1, 2, 3}}};
  CHECK(min_runs(mixed) == 1 + 1 + 3 + 2);
  std::vector<Factor> single = {{"A", "a", {1}}};
  CHECK_THROWS_AS(min_runs(single), Error);
  CHECK_THROWS_AS(min_runs(std::vector<Factor>{}), Error);
}

TEST_CASE("select_array picks the smallest feasible catalog array") {
  const auto catalog = standard_catalog();
  CHECK(select_array(three_level(2), catalog).name == "L9");
  CHECK(select_array(three_level(4), catalog).name == "L9");
  CHECK(select_array(three_level(5), catalog).name == "L27");
  CHECK(select_array(three_level(13), catalog).name == "L27");

  try {
    select_array(three_level(14), catalog);
    FAIL("expected no feasible array");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNoFeasibleArray);
  }
  std::vector<Factor> two_level = {{"A", "a", {0, 1}}, {"B", "b", {0, 1}}};
  CHECK_THROWS_AS(select_array(two_level, catalog), Error);
}

TEST_CASE("select_array never returns an array with too few runs") {
  const auto catalog = standard_catalog();
  for (std::size_t n = 1; n <= 13; ++n) {
    const auto f = three_level(n);
    const auto oa = select_array(f, catalog);
    CHECK(oa.runs() >= min_runs(f));
    CHECK(oa.columns() >= n);
  }
}

TEST_CASE("five factors on the default columns reproduce the reference layout") {
  const auto dm = make_design(harness::fixture::factors(), l27());
  REQUIRE(dm.run_count() == 27);
  for (std::size_t r = 0; r < 27; ++r)
    for (std::size_t i = 0; i < 5; ++i) {
      INFO("row " << r + 1 << " factor " << i);
      CHECK(dm.points[r].values[i] == harness::fixture::kLayout[r][i]);
    }
}

TEST_CASE("make_design honours an explicit column assignment") {
  auto f = three_level(3);
  const auto dm = make_design(f, l27(), {4, 0, 12});
  for (std::size_t r = 0; r < 27; ++r) {
    CHECK(dm.points[r].level_index[0] == l27().at(r, 4));
    CHECK(dm.points[r].level_index[1] == l27().at(r, 0));
    CHECK(dm.points[r].level_index[2] == l27().at(r, 12));
  }
  CHECK_THROWS_AS(make_design(f, l27(), {1, 1, 2}), Error);
  CHECK_THROWS_AS(make_design(f, l27(), {0, 1}), Error);
  CHECK_THROWS_AS(make_design(f, l27(), {0, 1, 13}), Error);
  std::vector<Factor> four = {{"A", "a", {1, 2, 3, 4}}};
  CHECK_THROWS_AS(make_design(four, l27()), Error);
}

TEST_CASE("any distinct column choice keeps the materialized design balanced") {
  const auto oa = l27();
  const std::vector<std::vector<std::size_t>> choices = {
      {0, 1, 2, 3, 4}, {12, 11, 10, 9, 8}, {0, 4, 8, 12}, {2, 5, 7, 10, 11, 1}};
  for (const auto& cols : choices) {
    const auto dm = make_design(three_level(cols.size()), oa, cols);
    const auto as = as_array(dm);
    std::vector<std::size_t> used(cols.size());
    std::iota(used.begin(), used.end(), 0);
    CHECK(verify_orthogonality(as, used).passed);
  }
}

TEST_CASE("design_from_rows maps values onto declared levels") {
  std::vector<Factor> f = {{"X", "x", {10, 20, 30}}};
  const auto dm = design_from_rows(f, {{30}, {10}, {20}});
  CHECK(dm.points[0].level_index == std::vector<int>{3});
  CHECK(dm.points[1].level_index == std::vector<int>{1});
  CHECK_THROWS_AS(design_from_rows(f, {{15}}), Error);
  CHECK_THROWS_AS(design_from_rows(f, {{10, 20}}), Error);
  CHECK(dm.factor_index("X") == 0);
  CHECK_THROWS_AS(dm.factor_index("Y"), Error);
}

TEST_CASE("factor validation rejects duplicate levels and empty labels") {
  CHECK_THROWS_AS(validate(Factor{"A", "a", {1, 1, 2}}), Error);
  CHECK_THROWS_AS(validate(Factor{"", "a", {1, 2}}), Error);
  CHECK_NOTHROW(validate(Factor{"A", "a", {1, 2}}));
}

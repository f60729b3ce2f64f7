#include <doctest.h>

#include <cmath>

#include "exorder/normality.hpp"
#include "test_support.hpp"

using namespace exorder;

TEST_CASE("rational expansions are periodic") {
  // [3;7,2] = 3 + 2/15 = 47/15, decimal .1333...
  FiniteCF x = FiniteCF::of({3, 7, 2});
  CHECK(x.value() == Rational(47, 15));
  Periodicity p = rational_periodicity(Rational(47, 15), 10, 100);
  CHECK(p.preperiod == 1);
  CHECK(p.period == 1);
  Periodicity q = rational_periodicity(Rational(1, 7), 10, 100);
  CHECK(q.preperiod == 0);
  CHECK(q.period == 6);
  CHECK(rational_periodicity(Rational(1, 8), 2, 100).period == 1);  // terminating: repeats 0
}

TEST_CASE("exact rationals are flagged") {
  std::vector<RealSample> s = {RealSample::rational(FiniteCF::of({3, 7, 2})),
                               RealSample::in_cylinder(FiniteCF::of({1, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2}))};
  NormalityReport r = normality_diagnostics(s, {10}, 4);
  REQUIRE(r.non_normal.size() == 1);
  CHECK(r.non_normal[0].index == 0);
  CHECK(r.non_normal[0].periodicity.period == 1);
  CHECK(r.bases[0].samples_used == 1);
}

TEST_CASE("certified digits of a narrow cylinder") {
  // sqrt(2) = [1; 2, 2, 2, ...], fractional part 0.41421356...
  std::vector<int> a(40, 2);
  a.insert(a.begin(), 1);
  RealSample x = RealSample::in_cylinder(FiniteCF::of_small(a));
  std::vector<std::uint8_t> d = certified_digits(x, 10, 8);
  std::vector<std::uint8_t> want = {4, 1, 4, 2, 1, 3, 5, 6};
  CHECK(d == want);
  std::size_t n = certified_digit_count(x, 10, 1000);
  CHECK(n >= 20);
  CHECK(n < 40);
  CHECK_THROWS_AS(certified_digits(x, 10, n + 1), InsufficientDigits);
}

TEST_CASE("chi-square p-values on desk samples") {
  const MeasureTree& tree = testing::desk_tree();
  std::vector<RealSample> s;
  std::size_t tokens = tree.tokens_through_level(1);
  for (const AdmissibleSeq& q : tree.sample(tokens, 50, 4, 0)) s.push_back(RealSample::in_cylinder(q.cf));
  NormalityReport r = normality_diagnostics(s, {2, 10}, 24);
  REQUIRE(r.bases.size() == 2);
  for (const BaseFrequencies& b : r.bases) {
    CHECK(b.samples_used == 50);
    std::uint64_t total = 0;
    for (auto c : b.digits) total += c;
    CHECK(total == 50 * 24);
    CHECK(b.p_digits >= 0.0);
    CHECK(b.p_digits <= 1.0);
    CHECK(b.p_digraphs >= 0.0);
    CHECK(b.p_digraphs <= 1.0);
  }
  CHECK(r.non_normal.empty());
}

TEST_CASE("DEL partial sums are finite and increasing") {
  const MeasureTree& tree = testing::desk_tree();
  std::vector<DelRow> rows = del_partial_sums(tree, 2, 1, 4, FourierMethod::monte_carlo(2000, 5));
  REQUIRE(rows.size() == 4);
  double prev = 0.0;
  for (const DelRow& r : rows) {
    CHECK(std::isfinite(r.increment));
    CHECK(r.increment >= 0.0);
    CHECK(r.partial_sum >= prev);
    CHECK(r.standard_error >= 0.0);
    prev = r.partial_sum;
  }
}

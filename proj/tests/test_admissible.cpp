#include <doctest.h>
#include <mpfr.h>

#include <cmath>

#include "exorder/admissible.hpp"
#include "exorder/profile.hpp"
#include "test_support.hpp"

using namespace exorder;

namespace {

// floor(log(rho (1 + eta/75)) / log(1 + eta/1000)) at 300 bits, eta = 1 and rho = 1000.
long gamma_oracle_rho1000() {
  mpfr_t a, b;
  mpfr_inits2(300, a, b, (mpfr_ptr)nullptr);
  mpfr_set_ui(a, 76, MPFR_RNDN);
  mpfr_div_ui(a, a, 75, MPFR_RNDN);
  mpfr_mul_ui(a, a, 1000, MPFR_RNDN);
  mpfr_log(a, a, MPFR_RNDN);
  mpfr_set_ui(b, 1001, MPFR_RNDN);
  mpfr_div_ui(b, b, 1000, MPFR_RNDN);
  mpfr_log(b, b, MPFR_RNDN);
  mpfr_div(a, a, b, MPFR_RNDN);
  mpfr_floor(a, a);
  long g = mpfr_get_si(a, MPFR_RNDN);
  mpfr_clears(a, b, (mpfr_ptr)nullptr);
  return g;
}

// Distance from the closed and open cylinder endpoints of prefix.next to the convergent of prefix.
std::pair<Rational, Rational> endpoint_gaps(const FiniteCF& prefix, const BigInt& next) {
  FiniteCF ext = prefix.extend(next);
  Rational conv(prefix.p(), prefix.K());
  conv.canonicalize();
  Rational closed(ext.p(), ext.K());
  Rational open(ext.p() + ext.pprime(), ext.K() + ext.Kprime());
  closed.canonicalize();
  open.canonicalize();
  return {abs(closed - conv), abs(open - conv)};
}

}  // namespace

TEST_CASE("rho encloses its closed forms") {
  CHECK(rho(ApproxProfile::power(2.5), BigInt(100)).contains(Rational(10)));
  Interval r2 = rho(ApproxProfile::power(2.0), BigInt(12345));
  CHECK(r2.contains(Rational(1)));
  ApproxProfile custom = ApproxProfile::custom({{BigInt(64), Rational(1, 8192)}, {BigInt(4096), Rational(1, 1 << 26)}}, 2.5);
  CHECK(rho(custom, BigInt(64)).contains(Rational(2)));
  CHECK_THROWS(rho(ApproxProfile::power(2.5), BigInt(0)));
}

TEST_CASE("profile flags") {
  CHECK(tau_threshold() == doctest::Approx((13.0 + std::sqrt(73.0)) / 8.0));
  ProfileFlags ok = ApproxProfile::power(2.5).validate();
  CHECK(ok.psi_positive);
  CHECK(ok.tau_in_range);
  ProfileFlags high = ApproxProfile::power(2.9).validate();
  CHECK_FALSE(high.tau_in_range);
}

TEST_CASE("exceptional hit on a hand instance") {
  ApproxProfile profile = ApproxProfile::power(2.5);
  FiniteCF prefix = FiniteCF::of({1, 100, 100});
  REQUIRE(prefix.K() == 10001);
  double r = std::sqrt(10001.0);
  BigInt b(static_cast<long>(std::ceil(1.015 * r)));
  HitWitness w = check_exceptional_hit(prefix, b, 1.0, profile);
  CHECK(w.status == WitnessStatus::holds);
  CHECK(w.next_denominator_ok);

  // oracle: both endpoint gaps inside [(1 - 1/10) psi, psi], psi = q^-2.5
  auto [closed, open] = endpoint_gaps(prefix, b);
  Interval psi = profile.psi(prefix.K(), 256);
  double lo = std::min(closed.get_d(), open.get_d()), hi = std::max(closed.get_d(), open.get_d());
  CHECK(hi <= psi.lo_double());
  CHECK(lo >= 0.9 * psi.hi_double());
  CHECK(w.gap_far == std::max(closed, open));

  HitWitness low = check_exceptional_hit(prefix, BigInt(static_cast<long>(std::floor(r))), 1.0, profile);
  CHECK(low.status == WitnessStatus::precondition_violated);
}

TEST_CASE("bounded miss exhaustive against a rational oracle") {
  const long N = 3;
  MissWitness w = check_bounded_miss(FiniteCF::of({1, 2}), 1, N);
  CHECK(w.status == WitnessStatus::holds);
  CHECK(w.margin > 0);
  CHECK_THROWS(check_bounded_miss(FiniteCF::of({1, 2}), N + 1, N));

  std::size_t checked = 0;
  for (int len = 2; len <= 4; ++len) {
    std::vector<int> c(len, 1);
    while (true) {
      FiniteCF prefix = FiniteCF::of_small(c);
      Rational bound(BigInt(1), (N + 2) * prefix.K() * prefix.K());
      for (long a = 1; a <= N; ++a) {
        auto [closed, open] = endpoint_gaps(prefix, BigInt(a));
        bool oracle = closed > bound && open >= bound;  // the open endpoint is excluded
        CHECK(oracle);
        CHECK((check_bounded_miss(prefix, a, N).status == WitnessStatus::holds) == oracle);
        CHECK(bounded_miss_holds_fast(prefix, a, N) == oracle);
        ++checked;
      }
      int i = len - 1;
      while (i >= 0 && c[i] == N) c[i--] = 1;
      if (i < 0) break;
      ++c[i];
    }
  }
  CHECK(checked == 3 * (9 + 27 + 81));
}

TEST_CASE("gamma at rho = 1000, eta = 1") {
  ApproxProfile profile = ApproxProfile::power(2.5);
  FiniteCF G = cf_of_rational(BigInt(1000001), BigInt(1000000));  // K = 10^6, rho = 1000
  REQUIRE(G.K() == 1000000);
  long long g = gamma_eta(G, 1.0, profile);
  CHECK(g == gamma_oracle_rho1000());
  CHECK(g == 6924);
  ExceptionalInterval I = exceptional_interval(G, 1.0, profile);
  CHECK(I.contained);
  CHECK(I.lo > BigInt(1010));
  CHECK(I.hi < BigInt(1020));
}

TEST_CASE("exceptional sets: sizes, emptiness and containment") {
  ApproxProfile profile = ApproxProfile::power(2.5);
  FiniteCF big = cf_of_rational(BigInt("1000000000001"), BigInt("1000000000000"));  // rho = 10^6
  ExceptionalInterval I = exceptional_interval(big, 0.5, profile);
  REQUIRE_FALSE(I.empty());
  double width = std::exp(I.log_hi_end) - std::exp(I.log_lo_end);
  CHECK(I.count() >= BigInt(static_cast<long>(std::floor(width))));
  CHECK(I.count() <= BigInt(static_cast<long>(std::ceil(width))));
  CHECK(width > 400);
  CHECK(width < 600);
  for (BigInt b = I.lo; b <= I.hi; b += 37) {
    CHECK(Rational(b) > Rational(1005, 1000) * 1000000);
    CHECK(Rational(b) < Rational(1010, 1000) * 1000000);
  }

  FiniteCF small = cf_of_rational(BigInt(101), BigInt(100));  // rho = 10
  CHECK(exceptional_interval(small, std::ldexp(1.0, -10), profile).empty());
  Schedule sched;
  sched.jk = {1};
  sched.etak = {std::ldexp(1.0, -10)};
  CHECK_THROWS_AS(exceptional_choices(small, 1, sched, profile), EmptyExceptionalSet);
}

TEST_CASE("two eta values give intervals inside their own windows") {
  ApproxProfile profile = ApproxProfile::power(2.5);
  FiniteCF G = cf_of_rational(BigInt(1000001), BigInt(1000000));
  for (double eta : {1.0, 0.25}) {
    ExceptionalInterval I = exceptional_interval(G, eta, profile);
    CHECK(I.contained);
    CHECK(I.log_lo_end > std::log(1000.0 * (1 + eta / 100)));
    CHECK(I.log_hi_end < std::log(1000.0 * (1 + eta / 50)));
  }
}

TEST_CASE("default schedule") {
  auto cfg = testing::desk_config();
  const MeasureTree& tree = testing::desk_tree();
  const Schedule& s = tree.schedule();
  CHECK(s.feasible());
  CHECK(s.jk.size() == 2);
  CHECK(s.jk[0] < s.jk[1]);
  CHECK(s.jk[1] >= std::max(s.jk[0] * s.jk[0], static_cast<long>(std::ceil(100 * (s.tau - 2) * s.jk[0] / s.epsilon))));
  CHECK(s.etak[0] > s.etak[1]);

  // more levels leave the earlier ones alone
  ScheduleOptions opts;
  opts.epsilon = cfg.schedule.epsilon;
  opts.levels = 3;
  Schedule deeper = default_schedule(tree.profile(), tree.nu_bar(), opts);
  REQUIRE(deeper.jk.size() == 3);
  CHECK(deeper.jk[0] == s.jk[0]);
  CHECK(deeper.jk[1] == s.jk[1]);

  CHECK_THROWS_AS(default_schedule(ApproxProfile::power(2.0), tree.nu_bar(), ScheduleOptions{}), InfeasibleSchedule);
}

TEST_CASE("verify_growth edge cases") {
  const MeasureTree& tree = testing::desk_tree();
  CHECK(verify_growth(AdmissibleSeq{}, tree.schedule()).falsified.empty());

  auto seqs = tree.sample(tree.tokens_through_level(1), 5, 11, 1);
  for (const auto& s : seqs) {
    REQUIRE(s.tokens.back().exceptional);
    std::vector<Token> bad = s.tokens;
    // doubling leaves T_1 but stays inside the desk spade margin (about 3.7 in log K)
    bad.back().b *= 10000;
    AdmissibleSeq forged = AdmissibleSeq::from_tokens(bad);
    GrowthReport r = verify_growth(forged, tree.schedule());
    CHECK_FALSE(r.spade);
    CHECK(admissibility_violation(forged, tree.schedule(), tree.profile(), &tree.nu_bar()).has_value());
    CHECK_FALSE(admissibility_violation(s, tree.schedule(), tree.profile(), &tree.nu_bar()).has_value());
  }
}

TEST_CASE("b-prefix continuant step") {
  const MeasureTree& tree = testing::desk_tree();
  for (const auto& s : tree.sample(tree.tokens_through_level(1), 20, 12, 2)) {
    GrowthReport r = verify_growth(s, tree.schedule());
    CHECK(r.spade_step);
  }
}

TEST_CASE("exactness scan on bounded quotients") {
  std::vector<int> ones(60, 1);
  FiniteCF x = FiniteCF::of_small(ones);
  ExactnessReport r = exactness_scan(x, ApproxProfile::power(2.5), 0.5, 20000, 10);
  CHECK_FALSE(r.verdict_upper);
  CHECK(r.q_checked == 20000);
  CHECK_THROWS(exactness_scan(FiniteCF::of_small({1, 2, 3}), ApproxProfile::power(2.5), 0.5, 1000));
}

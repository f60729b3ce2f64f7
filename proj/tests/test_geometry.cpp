#include <doctest.h>

#include <cmath>

#include "exorder/geometry.hpp"
#include "test_support.hpp"

using namespace exorder;

namespace {

std::vector<int> flat_blocks(const AdmissibleSeq& s) {
  std::vector<int> out;
  for (const auto& t : s.tokens) out.insert(out.end(), t.block.begin(), t.block.end());
  return out;
}

}  // namespace

TEST_CASE("decomposition exponents") {
  CHECK(alpha0() == doctest::Approx((10.0 - std::sqrt(73.0)) / 9.0).epsilon(1e-15));
  CHECK(alpha1(2.5, 0.2) == doctest::Approx((2.5 - 1.0 + 2.0) * alpha0()).epsilon(1e-15));
  AlphaIdentity id = alpha_identity();
  CHECK(std::fabs(id.residual_9) < 1e-14);
  CHECK(std::fabs(id.residual_8) > 1e-3);
}

TEST_CASE("scale classification examples") {
  const Schedule& s = testing::desk_tree().schedule();
  const double j1 = static_cast<double>(s.jk[0]), j2 = static_cast<double>(s.jk[1]), sg = s.sigma, eps = s.epsilon;
  const double delta = 0.05;
  double lz = (s.tau - 1 + 2 * eps + delta) * j1 * sg;
  REQUIRE(lz < (1 - 2 * eps) * j2 * sg);
  ScaleClassification t = classify_scale(lz, s);
  CHECK(t.kind == ScaleKind::typical);
  REQUIRE(t.j_of_zeta.has_value());
  CHECK(*t.j_of_zeta == static_cast<long>(std::floor((lz - (s.tau - 2) * j1 * sg) / sg)));

  ScaleClassification e = classify_scale(j1 * sg, s);
  CHECK(e.kind == ScaleKind::exceptional);
  CHECK(e.k == 1);
  CHECK_FALSE(e.j_of_zeta.has_value());

  ScaleClassification low = classify_scale(0.5 * (1 - 2 * eps) * j1 * sg, s);
  CHECK(low.kind == ScaleKind::typical);
  CHECK(*low.j_of_zeta == static_cast<long>(std::floor(0.5 * (1 - 2 * eps) * j1)));

  CHECK(classify_scale(10 * s.tau * j2 * sg, s).beyond_schedule);
}

TEST_CASE("alpha escape at exceptional scales") {
  const Schedule& s = testing::desk_tree().schedule();
  double lx = s.jk[0] * s.sigma / alpha0();  // |xi|^alpha0 sits inside the first window
  ScaleChoice c = choose_alpha(lx, s);
  CHECK(c.at_alpha0.kind == ScaleKind::exceptional);
  CHECK(c.used_alpha1);
  CHECK(c.chosen.kind == ScaleKind::typical);
  CHECK(c.alpha == doctest::Approx(alpha1(s.tau, s.epsilon)));
}

TEST_CASE("partition at the desk frequency keeps every member in its window") {
  const MeasureTree& tree = testing::desk_tree();
  // |xi| = 10^4 puts |xi|^alpha below one block at desk scale, so the desk frequency is used
  CHECK_THROWS(partition_classes(tree, std::log(1e4), alpha0(), 0.15));
  double lx = 19.85;
  ScaleChoice c = choose_alpha(lx, tree.schedule());
  REQUIRE(c.chosen.kind == ScaleKind::typical);
  ClassPartition p = partition_classes(tree, lx, c.alpha, 0.15);
  CHECK(p.window_violations == 0);
  CHECK(p.members.size() > 0);
  std::size_t assigned = 0;
  for (const auto& b : p.boxes) {
    assigned += b.members.size();
    for (std::size_t i : b.members) CHECK(flat_blocks(p.members[b.representative]) <= flat_blocks(p.members[i]));
  }
  CHECK(assigned == p.members.size());
}

TEST_CASE("a partition with one member picks it as representative") {
  BlockMeasure nu = build_nu_m(1, 2, 0.2);
  BlockMeasure nb = build_nu_bar(nu, 2, 0.2);
  REQUIRE(nb.size() == 1);
  Schedule s;
  s.N = 1;
  s.m = 2;
  s.J = 2;
  s.epsilon = 0.2;
  s.tau = 2.5;
  s.sigma = nb.sigma;
  s.concentration = 0.2;
  s.jk = {100};
  s.etak = {0.5};
  MeasureTree tiny(s, ApproxProfile::power(2.5), nb);
  double lx = 1.5 * s.sigma / alpha0();
  ClassPartition p = partition_classes(tiny, lx, alpha0(), 0.0);
  REQUIRE(p.j_of_zeta == 1);
  REQUIRE(p.members.size() == 1);
  REQUIRE(p.boxes.size() == 1);
  CHECK(p.boxes[0].representative == 0);
}

TEST_CASE("ball scan on a few samples") {
  const MeasureTree& tree = testing::desk_tree();
  BallScanOptions o;
  o.samples = 8;
  o.seed = 5;
  o.windows_per_width = 4;
  BallScan s = ball_condition_scan(tree, {Rational(1, 100), Rational(1, 10000)}, o);
  CHECK(s.split_max_error <= 1e-12);
  CHECK(s.capping_failures == 0);
  CHECK(s.ratio_failures == 0);
  CHECK(std::isfinite(s.beta_hat));
  CHECK(s.beta_hat > 0);
  CHECK_FALSE(s.table.empty());
  for (const auto& row : s.table) CHECK(row.log_lo <= row.log_hi);
}

TEST_CASE("capping along sampled exceptional entries") {
  const MeasureTree& tree = testing::desk_tree();
  for (const auto& s : tree.sample(tree.tokens_through_level(1), 10, 6, 1)) {
    AdmissibleSeq G = AdmissibleSeq::from_tokens(std::vector<Token>(s.tokens.begin(), s.tokens.end() - 1));
    CHECK(capping_holds(G.cf, s.tokens.back().b, tree.profile()));
  }
}

TEST_CASE("lower bound scan reports finite ratios") {
  LowerBoundScan r = lower_bound_scan(testing::desk_tree(), 6, 20, 7);
  CHECK(std::isfinite(r.worst_ratio));
  CHECK(r.worst_ratio > 0);
  CHECK(r.logK_min_ratio <= r.logK_max_ratio);
}

TEST_CASE("relative ball condition in the bad mode") {
  const MeasureTree& tree = testing::desk_tree();
  double lx = 19.85;
  ScaleChoice c = choose_alpha(lx, tree.schedule());
  ClassPartition p = partition_classes(tree, lx, c.alpha, 0.15);
  double log_width = (-1 + 2 * c.alpha) * lx;
  RelativeBallResult r = relative_ball_check(tree, p.members[0], lx, c.alpha, RelativeMode::bad, 1.0, log_width, 4, 6, 9);
  CHECK(r.windows == 4);
  CHECK(r.pass);
  CHECK(r.worst_margin >= 0);
}

TEST_CASE("dimension bracket for N = 2") {
  DimBracket b = dim_bad_estimate(2, 10);
  CHECK(b.lo <= 0.5312805062772051);
  CHECK(b.hi >= 0.5312805062772051);
  CHECK(b.hi - b.lo < 0.1);
}

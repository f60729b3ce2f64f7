#include <doctest.h>

#include <cmath>

#include "exorder/diagnostics.hpp"
#include "test_support.hpp"

using namespace exorder;

TEST_CASE("a representative compared with itself") {
  const MeasureTree& tree = testing::desk_tree();
  const double lx = 19.85;
  ClassPartition p = partition_classes(tree, lx, choose_alpha(lx, tree.schedule()).alpha, 0.15);
  const std::size_t rep = p.boxes[0].representative;
  ApproxErrorOptions o;
  o.samples = 200;
  o.seed = 9;
  ApproxErrorReport r = approx_error_diagnostics(tree, p, rep, std::exp(lx), o);
  CHECK(r.member == r.representative);
  CHECK(r.same_denominators);
  CHECK(r.t2_count == 0);
  CHECK(r.t2_mass_member == 0.0);
  CHECK(r.t2_mass_representative == 0.0);
  CHECK(r.t1_gap == 0.0);
  CHECK(r.weight_checks > 0);
  CHECK(r.weight_mismatches == 0);
  CHECK(r.H_blocks == static_cast<std::size_t>(tree.schedule().jk[0]) - p.j_of_zeta);
  CHECK(r.logK_H_min <= r.logK_H_max);
}

TEST_CASE("relative weights agree across a box") {
  const MeasureTree& tree = testing::desk_tree();
  const double lx = 19.85;
  ClassPartition p = partition_classes(tree, lx, choose_alpha(lx, tree.schedule()).alpha, 0.15);
  std::size_t box = 0;
  for (std::size_t b = 0; b < p.boxes.size(); ++b)
    if (p.boxes[b].members.size() > p.boxes[box].members.size()) box = b;
  REQUIRE(p.boxes[box].members.size() >= 2);
  ApproxErrorOptions o;
  o.samples = 100;
  for (std::size_t i = 0; i < 2; ++i) {
    ApproxErrorReport r = approx_error_diagnostics(tree, p, p.boxes[box].members[i], std::exp(lx), o);
    CHECK(r.weight_mismatches == 0);
    CHECK(std::isfinite(r.t1_gap));
  }
}

TEST_CASE("a schedule without a later level is rejected") {
  BlockMeasure nu = build_nu_m(1, 2, 0.2);
  BlockMeasure nb = build_nu_bar(nu, 2, 0.2);
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
  CHECK_THROWS_AS(approx_error_diagnostics(tiny, p, 0, std::exp(lx), ApproxErrorOptions{}), StageUnreachable);
  CHECK_THROWS_AS(approx_error_diagnostics(tiny, p, 5, std::exp(lx), ApproxErrorOptions{}), std::out_of_range);
}

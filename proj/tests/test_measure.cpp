#include <doctest.h>

#include <cmath>

#include "exorder/block_measure.hpp"
#include "exorder/measure_tree.hpp"
#include "test_support.hpp"

using namespace exorder;

TEST_CASE("nu_1 for N = 2 without the epsilon tilt") {
  BlockMeasure nu = build_nu_m(2, 1, 0.0);
  REQUIRE(nu.size() == 2);
  CHECK(nu.block(0) == std::vector<int>{1});
  CHECK(std::exp(nu.log_weights[0]) == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(std::exp(nu.log_weights[1]) == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("a single-letter alphabet has one block of weight 1") {
  BlockMeasure nu = build_nu_m(1, 3, 0.2);
  REQUIRE(nu.size() == 1);
  CHECK(nu.log_weights[0] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("nu_m weights follow K^(-2(1-eps)) / S_m") {
  const double eps = 0.2;
  BlockMeasure nu = build_nu_m(4, 3, eps);
  CHECK(nu.size() == 64);
  double total = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    double K = static_cast<double>(interior_continuant(nu.block(i)).get_d());
    CHECK(nu.log_weights[i] == doctest::Approx(-2 * (1 - eps) * std::log(K) - nu.log_Sm).epsilon(1e-13));
    total += std::exp(nu.log_weights[i]);
  }
  CHECK(std::fabs(total - 1.0) < 1e-12);
}

TEST_CASE("S_m grows with m when the dimension exceeds 1 - eps") {
  // independent sum over all words; at N = 6, eps = 0.2 the sum dips from m = 1 to m = 2
  auto oracle = [](long N, long m, double eps) {
    std::vector<int> w(m, 1);
    double total = 0.0;
    while (true) {
      double q0 = 0.0, q1 = 1.0;
      for (int x : w) {
        double q = x * q1 + q0;
        q0 = q1;
        q1 = q;
      }
      total += std::pow(q1, -2 * (1 - eps));
      long i = m - 1;
      while (i >= 0 && w[i] == N) w[i--] = 1;
      if (i < 0) break;
      ++w[i];
    }
    return std::log(total);
  };
  double prev = -INFINITY;
  for (long m = 1; m <= 5; ++m) {
    double s = build_nu_m(6, m, 0.2).log_Sm;
    CHECK(s == doctest::Approx(oracle(6, m, 0.2)).epsilon(1e-12));
    if (m >= 3) CHECK(s > prev);
    prev = s;
  }
  CHECK(build_nu_m(6, 2, 0.2).log_Sm < build_nu_m(6, 1, 0.2).log_Sm);
}

TEST_CASE("enumeration budget is enforced") { CHECK_THROWS_AS(build_nu_m(6, 8, 0.2, 1000), BudgetExceeded); }

TEST_CASE("nu_bar at the desk window") {
  BlockMeasure nu = build_nu_m(6, 2, 0.2);
  BlockMeasure nb = build_nu_bar(nu, 2, 0.2);
  NuBarReport r = check_nu_bar(nb, 0.2);
  CHECK(r.property_a);
  CHECK(r.max_factor <= 2.0);
  CHECK(r.property_b);
  CHECK(r.mass_ok);
  CHECK(std::fabs(r.weight_sum - 1.0) < 1e-12);
  for (std::size_t i = 0; i < nb.size(); ++i)
    CHECK(std::fabs(nb.log_K[i] - nb.sigma) < 0.2 * nb.sigma);
}

TEST_CASE("J = 1 conditions nu_m trivially when the window is wide") {
  BlockMeasure nu = build_nu_m(3, 2, 0.2);
  BlockMeasure nb = build_nu_bar(nu, 1, 10.0);
  REQUIRE(nb.size() == nu.size());
  for (std::size_t i = 0; i < nb.size(); ++i) CHECK(nb.log_weights[i] == doctest::Approx(nu.log_weights[i]));
}

TEST_CASE("the narrow window leaves too little mass") {
  BlockMeasure nu = build_nu_m(6, 2, 0.2);
  try {
    build_nu_bar(nu, 2, 0.2 / 500);
    FAIL("expected InsufficientConcentration");
  } catch (const InsufficientConcentration& e) {
    CHECK(e.mass() < 0.5);
  }
}

TEST_CASE("children conserve mass") {
  const MeasureTree& tree = testing::desk_tree();
  auto check_node = [&](const TreeNode& node) {
    auto kids = tree.children(node);
    LogSum s;
    for (const auto& k : kids) s.add(k.log_weight);
    CHECK(std::fabs(std::expm1(s.value() - node.log_weight)) < 1e-12);
  };
  check_node(tree.root());
  auto seqs = tree.sample(tree.tokens_through_level(1) + 2, 20, 21, 3);
  for (const auto& s : seqs) {
    for (std::size_t cut : {std::size_t(1), std::size_t(4), tree.tokens_through_level(0), s.tokens.size()}) {
      AdmissibleSeq prefix = AdmissibleSeq::from_tokens(std::vector<Token>(s.tokens.begin(), s.tokens.begin() + cut));
      check_node(tree.node_of(prefix));
    }
  }
}

TEST_CASE("exceptional children share the parent mass equally") {
  const MeasureTree& tree = testing::desk_tree();
  auto seqs = tree.sample(tree.tokens_through_level(0), 5, 22, 1);
  for (const auto& s : seqs) {
    TreeNode node = tree.node_of(s);
    REQUIRE(tree.exceptional_next(node));
    auto T = tree.exceptional_set(node);
    double expect = node.log_weight - T->log_count();
    TreeNode a = tree.child_exceptional(node, T->lo);
    TreeNode b = tree.child_exceptional(node, T->hi);
    CHECK(a.log_weight == b.log_weight);
    CHECK(a.log_weight == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("relative weights multiply back") {
  const MeasureTree& tree = testing::desk_tree();
  auto seqs = tree.sample(tree.tokens_through_level(1) + 3, 30, 23, 1);
  for (const auto& s : seqs) {
    std::size_t cut = 3;
    AdmissibleSeq base = AdmissibleSeq::from_tokens(std::vector<Token>(s.tokens.begin(), s.tokens.begin() + cut));
    std::vector<Token> rest(s.tokens.begin() + cut, s.tokens.end());
    RelativeView view(tree, base);
    double joined = tree.lambda_weight(s);
    CHECK(std::fabs(view.base().log_weight + view.log_weight(rest) - joined) < 1e-12);
  }
}

TEST_CASE("sampling is deterministic and admissible") {
  const MeasureTree& tree = testing::desk_tree();
  auto a = tree.sample(12, 10, 99, 5);
  auto b = tree.sample(12, 10, 99, 5);
  auto c = tree.sample(12, 10, 100, 5);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].cf.K() == b[i].cf.K());
    differs = differs || a[i].cf.K() != c[i].cf.K();
    CHECK_FALSE(admissibility_violation(a[i], tree.schedule(), tree.profile(), &tree.nu_bar()).has_value());
  }
  CHECK(differs);
}

TEST_CASE("node_of rejects blocks outside the support") {
  const MeasureTree& tree = testing::desk_tree();
  AdmissibleSeq bad;
  bad.push_block(std::vector<int>(tree.nu_bar().length, 6));
  CHECK_THROWS(tree.node_of(bad));
}

TEST_CASE("pushforward of a cylinder recovers its mass") {
  const MeasureTree& tree = testing::desk_tree();
  LogBracket all = tree.pushforward_interval(Rational(1), Rational(tree.schedule().N + 1), 1);
  CHECK(std::fabs(all.lower) < 1e-12);
  CHECK(std::fabs(all.upper) < 1e-12);
  auto seqs = tree.sample(4, 20, 24, 1);
  for (const auto& s : seqs) {
    for (std::size_t d = 1; d <= s.tokens.size(); ++d) {
      AdmissibleSeq prefix = AdmissibleSeq::from_tokens(std::vector<Token>(s.tokens.begin(), s.tokens.begin() + d));
      CylinderInterval cyl = cylinder(prefix.cf);
      LogBracket b = tree.pushforward_interval(cyl.lo, cyl.hi, d);
      double w = tree.lambda_weight(prefix);
      CHECK(std::fabs(b.lower - w) < 1e-12);
      CHECK(std::fabs(b.upper - w) < 1e-12);
    }
  }
}

TEST_CASE("brackets are ordered and tighten with depth") {
  const MeasureTree& tree = testing::desk_tree();
  Rational lo(3, 2), hi(5, 2);
  double prev_width = INFINITY;
  for (std::size_t d = 1; d <= 4; ++d) {
    LogBracket b = tree.pushforward_interval(lo, hi, d);
    CHECK(b.lower <= b.upper);
    CHECK(b.width() <= prev_width + 1e-15);
    prev_width = b.width();
  }
}

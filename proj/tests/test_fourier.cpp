#include <doctest.h>

#include <cmath>

#include "exorder/fourier.hpp"
#include "exorder/oscillatory.hpp"
#include "test_support.hpp"

using namespace exorder;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Plain midpoint-rule integral of e(f) on a fine grid.
Complex reference_integral(const Phase& f, double a, double b, std::size_t n) {
  Complex s = 0;
  double h = (b - a) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) s += unit_phasor(f.value(a + (i + 0.5) * h));
  return s * h;
}

}  // namespace

TEST_CASE("transform at zero frequency is the total mass") {
  FourierSample s = fourier_eval(testing::desk_tree(), 0.0, FourierMethod::cylinder_sum(8, 0.05));
  CHECK(std::abs(s.value - Complex(1.0, 0.0)) < 1e-12);
  CHECK(s.error_bound == 0.0);
}

TEST_CASE("conjugate symmetry") {
  const MeasureTree& tree = testing::desk_tree();
  FourierMethod m = FourierMethod::cylinder_sum(32, 0.05);
  FourierSample a = fourier_eval(tree, 300.0, m);
  FourierSample b = fourier_eval(tree, -300.0, m);
  CHECK(std::abs(a.value - std::conj(b.value)) < 1e-12);
}

TEST_CASE("refinement stays inside the coarse bound") {
  const MeasureTree& tree = testing::desk_tree();
  FourierSample coarse = fourier_eval(tree, 500.0, FourierMethod::cylinder_sum(32, 0.2));
  FourierSample fine = fourier_eval(tree, 500.0, FourierMethod::cylinder_sum(32, 0.02));
  CHECK(fine.error_bound <= coarse.error_bound);
  CHECK(std::abs(coarse.value - fine.value) <= coarse.error_bound + fine.error_bound);
}

TEST_CASE("Monte Carlo agrees with the cylinder sum") {
  const MeasureTree& tree = testing::desk_tree();
  FourierSample cs = fourier_eval(tree, 200.0, FourierMethod::cylinder_sum(32, 0.02));
  FourierSample mc = fourier_eval(tree, 200.0, FourierMethod::monte_carlo(20000, 3));
  CHECK(mc.standard_error > 0);
  CHECK(std::abs(cs.value - mc.value) <= cs.error_bound + mc.error_bound + 5 * mc.standard_error);
}

TEST_CASE("slope fit edge cases") {
  CHECK_FALSE(fit_log_slope({100.0}, {0.5}).has_value());
  auto flat = fit_log_slope({1e2, 1e3, 1e4}, {0.7, 0.7, 0.7});
  REQUIRE(flat.has_value());
  CHECK(std::fabs(flat->first) < 1e-12);
  auto line = fit_log_slope({1e2, 1e3, 1e4}, {1e-1, 1e-2, 1e-3});
  CHECK(line->first == doctest::Approx(-1.0));
  auto grid = geometric_grid(100.0, 1e5, 4);
  REQUIRE(grid.size() == 4);
  CHECK(grid[1] == doctest::Approx(1000.0));
  DecayScan one = decay_scan(testing::desk_tree(), {100.0}, AlphaPolicy::adaptive, FourierMethod::cylinder_sum(16, 0.05));
  CHECK_FALSE(one.slope.has_value());
}

TEST_CASE("van der Corput without a stationary point") {
  PolynomialPhase f({0.0, 40.0, 15.0});  // f' = 40 + 30 x on [0, 2]
  DerivativeCertificate c = certify_derivatives(f, 0.0, 2.0);
  CHECK(c.sign == 1);
  CHECK(c.min_abs_derivative <= 40.0);
  CHECK(c.min_abs_derivative > 39.0);
  VdcResult r = vdc_nonstationary(f, c.min_abs_derivative, c.max_abs_second, 0.0, 2.0);
  CHECK(r.pass);
  CHECK(std::abs(r.integral - reference_integral(f, 0.0, 2.0, 400000)) < 1e-6);
}

TEST_CASE("van der Corput with a stationary point") {
  // f' = (C1 x + C2) g with g = 2 + x/2 on [0, 1], stationary at 0.4
  const double C1 = 500.0, C2 = -200.0;
  PolynomialCofactor g({2.0, 0.5});
  PolynomialPhase f({0.0, 2.0 * C2, (2.0 * C1 + 0.5 * C2) / 2.0, 0.5 * C1 / 3.0});
  CofactorCertificate gc = certify_cofactor(g, 0.0, 1.0);
  CHECK(gc.min_abs <= 2.0);
  CHECK(gc.max_abs_derivative >= 0.5);
  double B = std::max(gc.max_abs_derivative, 2.0 * gc.min_abs);
  VdcResult r = vdc_stationary(f, g, C1, C2, gc.min_abs, B, 0.0, 1.0, stationary_constant_from_proof());
  CHECK(r.pass);
  CHECK(std::abs(r.integral - reference_integral(f, 0.0, 1.0, 400000)) < 1e-6);
  CHECK(stationary_constant_from_proof() == doctest::Approx(2.0 + 3.0 / M_PI));
}

TEST_CASE("box function derivative matches finite differences") {
  // moderate frequency so a central difference resolves the phase
  BoxFunction F(1e3, 6, {FiniteCF::of({1, 2, 3}), FiniteCF::of({2, 2, 3}), FiniteCF::of({1, 5, 1})},
                {std::log(0.5), std::log(0.3), std::log(0.2)});
  for (double x : {1.3, 2.7, 4.1, 6.5}) {
    double h = 1e-6;
    Complex fd = (F.value(x + h) - F.value(x - h)) / (2 * h);
    Complex d = F.derivative(x);
    CHECK(std::abs(fd - d) <= 1e-5 * std::max(1.0, std::abs(d)));
    CHECK(F.modulus(x) == doctest::Approx(std::abs(F.value(x))).epsilon(1e-9));
    CHECK(F.derivative_modulus(x) == doctest::Approx(std::abs(d)).epsilon(1e-9));
  }
}

TEST_CASE("single-member box") {
  FiniteCF G = FiniteCF::of({1, 3, 2});
  BoxFunction F(1e5, 6, {G}, {std::log(0.25)});
  CHECK(F.group_count() == 1);
  CHECK(F.mass() == doctest::Approx(0.25));
  for (double x : {1.0, 3.3, 7.0}) CHECK(F.modulus(x) == doctest::Approx(0.25));
  MBoundResult M = M_bound_check(F, alpha0(), 0.2);
  CHECK(M.M_numeric >= 0.0);
  M2Result r = m2_decompose(F, alpha0(), 0.2, 2.5, M2Options{});
  CHECK(r.m2_quadrature == doctest::Approx(0.0625 * 6.0).epsilon(1e-9));
  CHECK(r.agree);
  CHECK(r.counts[2] == 1);
}

TEST_CASE("pair classes follow the denominators") {
  CHECK(classify_pair(FiniteCF::of({1, 2, 3}), FiniteCF::of({4, 2, 3})) == PhaseCaseKind::C3);
  CHECK(classify_pair(FiniteCF::of({1, 2, 3}), FiniteCF::of({1, 1, 3})) == PhaseCaseKind::C2);
  // equal K, different K'
  FiniteCF a = FiniteCF::of({1, 1, 4}), b = FiniteCF::of({1, 4, 1});
  REQUIRE(a.K() == b.K());
  CHECK(classify_pair(a, b) == PhaseCaseKind::C1);
}

TEST_CASE("desk box: dual m2 agreement and Euclid recovery") {
  const MeasureTree& tree = testing::desk_tree();
  double lx = 19.85;
  ScaleChoice c = choose_alpha(lx, tree.schedule());
  ClassPartition p = partition_classes(tree, lx, c.alpha, 0.15);
  std::size_t best = 0;
  for (std::size_t b = 0; b < p.boxes.size(); ++b)
    if (p.boxes[b].members.size() <= 6 && p.boxes[b].members.size() > p.boxes[best].members.size()) best = b;
  BoxFunction F = build_f_xi(p, best, std::exp(lx), tree.schedule().N);
  M2Result r = m2_decompose(F, c.alpha, tree.schedule().epsilon, tree.schedule().tau, M2Options{});
  CHECK(r.relative_gap <= 1e-6);
  CHECK(r.bound_violations == 0);
  C3Recovery rec = c3_recovery_check(p, tree.schedule().N);
  CHECK(rec.pass);
  CHECK(rec.max_partners <= static_cast<std::size_t>(tree.schedule().N));
}

TEST_CASE("quasi-regularity combination") {
  Rng rng(17, 1);
  for (int i = 0; i < 20; ++i) CHECK(qr_combine_synthetic(random_qr_instance(rng)).pass);
  // F = 1: lhs = 1, and the right side reaches 1 only for large enough r
  double M = 1.0, m2 = 1.0, beta = 0.5;
  CHECK(qr_log_rhs(std::log(0.6), M, m2, beta) >= 0.0);
  CHECK(qr_log_rhs(std::log(1e-6), M, m2, beta) >= 0.0);  // the r^-3 term takes over
  double mid = qr_log_rhs(std::log(0.3), M, m2, beta);
  CHECK(std::isfinite(mid));
}

TEST_CASE("oscillatory quadrature against a closed form") {
  // int_0^1 e(w x) dx = (e(w) - 1) / (2 pi i w)
  const double w = 1234.5;
  PolynomialPhase f({0.0, w});
  QuadratureResult q = integrate_phase(f, 0.0, 1.0);
  Complex exact = (unit_phasor(w) - 1.0) / Complex(0.0, kTwoPi * w);
  CHECK(std::abs(q.value - exact) < 1e-10);
}

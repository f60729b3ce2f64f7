#include <doctest.h>

#include "exorder/cf.hpp"
#include "exorder/numeric.hpp"

using namespace exorder;

namespace {

// [c0; c1, ..., cn] evaluated from the right.
Rational evaluate_backward(const std::vector<long>& c) {
  Rational x(c.back());
  for (std::size_t i = c.size() - 1; i-- > 0;) x = Rational(c[i]) + 1 / x;
  return x;
}

// Denominator recurrence q_{-1} = 0, q_0 = 1, q_n = c_n q_{n-1} + q_{n-2}.
BigInt denominator_recurrence(const std::vector<long>& c) {
  BigInt q2 = 0, q1 = 1;
  for (std::size_t i = 1; i < c.size(); ++i) {
    BigInt q = c[i] * q1 + q2;
    q2 = q1;
    q1 = q;
  }
  return q1;
}

FiniteCF from(const std::vector<long>& c) {
  FiniteCF f;
  for (long x : c) f = f.extend(static_cast<unsigned long>(x));
  return f;
}

}  // namespace

TEST_CASE("continuant of a short sequence") {
  FiniteCF f = FiniteCF::of({1, 2, 2, 1});
  CHECK(f.K() == 7);
  CHECK(f.value() == Rational(10, 7));
}

TEST_CASE("empty sequence carries the identity matrix") {
  FiniteCF e;
  CHECK(e.K() == 0);
  CHECK(e.Kprime() == 1);
  CHECK(e.p() == 1);
  CHECK(e.pprime() == 0);
  CHECK(FiniteCF::of({5}).K() == 1);
}

TEST_CASE("cylinder of (1, 2)") {
  CylinderInterval c = cylinder(FiniteCF::of({1, 2}));
  CHECK(c.lo == Rational(4, 3));
  CHECK(c.hi == Rational(3, 2));
  CHECK(c.contains(Rational(3, 2)));
  CHECK_FALSE(c.contains(Rational(4, 3)));
  CHECK(c.width() == Rational(1, 6));
}

TEST_CASE("cylinders nest") {
  CylinderInterval outer = cylinder(FiniteCF::of({1, 2}));
  // a = 1 would include [1; 2, 1] = [1; 3], a point the outer cylinder excludes
  for (long a = 2; a <= 6; ++a) CHECK(cylinder(FiniteCF::of({1, 2, a})).subset_of(outer));
}

TEST_CASE("euclidean expansion of 7/5") {
  FiniteCF f = cf_of_rational(BigInt(7), BigInt(5));
  auto q = f.quotients();
  REQUIRE(q.size() == 3);
  CHECK(q[0] == 1);
  CHECK(q[1] == 2);
  CHECK(q[2] == 2);
  CHECK(f.value() == Rational(7, 5));
}

TEST_CASE("expansion round trips through the value") {
  Rng rng(3, 1);
  for (int i = 0; i < 500; ++i) {
    std::vector<long> c;
    std::size_t n = 1 + rng.uniform_below(12);
    for (std::size_t k = 0; k < n; ++k) c.push_back(1 + static_cast<long>(rng.uniform_below(50)));
    if (c.size() > 1 && c.back() == 1) c.back() = 2;
    Rational v = evaluate_backward(c);
    FiniteCF back = cf_of_rational(v.get_num(), v.get_den());
    CHECK(back.value() == v);
    CHECK(back.size() == c.size());
  }
}

TEST_CASE("matrix, recurrence and balanced product agree") {
  Rng rng(5, 2);
  for (int i = 0; i < 2000; ++i) {
    std::vector<long> c;
    std::size_t n = 1 + rng.uniform_below(25);
    for (std::size_t k = 0; k < n; ++k) c.push_back(1 + static_cast<long>(rng.uniform_below(1000)));
    FiniteCF f = from(c);
    CHECK(f.K() == denominator_recurrence(c));
    Rational v = evaluate_backward(c);
    CHECK(v == Rational(f.p(), f.K()));
    std::vector<BigInt> big(c.begin(), c.end());
    ConvergentMatrix m = convergent_matrix(big);
    CHECK(m.q == f.K());
    CHECK(m.qprime == f.Kprime());
    CHECK(m.p == f.p());
    CHECK(m.pprime == f.pprime());
    BigInt det = f.p() * f.Kprime() - f.pprime() * f.K();
    CHECK(det == f.determinant_sign());
  }
}

TEST_CASE("concat equals extension by every quotient") {
  FiniteCF g = FiniteCF::of({2, 3, 1, 4});
  FiniteCF h = FiniteCF::of({5, 1, 2});
  FiniteCF direct = FiniteCF::of({2, 3, 1, 4, 5, 1, 2});
  FiniteCF joined = g.concat(h);
  CHECK(joined.K() == direct.K());
  CHECK(joined.p() == direct.p());
  CHECK(joined.size() == 7);
}

TEST_CASE("gluing bounds on a small enumeration") {
  const long N = 3;
  std::vector<FiniteCF> words;
  for (int len = 1; len <= 3; ++len) {
    std::vector<int> w(len, 1);
    while (true) {
      words.push_back(FiniteCF::of_small(w));
      int i = len - 1;
      while (i >= 0 && w[i] == N) w[i--] = 1;
      if (i < 0) break;
      ++w[i];
    }
  }
  for (const auto& g : words)
    for (const auto& h : words) CHECK(concat_continuant_bounds(g, h, N).holds);
}

TEST_CASE("interior continuant and its 64-bit twin") {
  CHECK(interior_continuant({}) == 1);
  CHECK(interior_continuant({2, 2, 1}) == 7);
  std::vector<int> w = {3, 1, 4, 1, 5, 9, 2, 6};
  CHECK(BigInt(std::to_string(interior_continuant_u64(w.data(), w.size()))) == interior_continuant(w));
  std::vector<int> huge(100, 9);
  CHECK_THROWS(interior_continuant_u64(huge.data(), huge.size()));
}

TEST_CASE("denominator and block ratios") {
  Rng rng(9, 4);
  const long N = 6;
  for (int i = 0; i < 300; ++i) {
    std::vector<int> c;
    std::size_t n = 3 + rng.uniform_below(10);
    for (std::size_t k = 0; k < n; ++k) c.push_back(1 + static_cast<int>(rng.uniform_below(N)));
    FiniteCF f = FiniteCF::of_small(c);
    CHECK(denominator_ratio_holds(f, N));
    CHECK(block_ratio_holds(f, {1 + static_cast<int>(rng.uniform_below(N)), 2}, N));
  }
}

TEST_CASE("zero quotients are rejected") { CHECK_THROWS(FiniteCF::of({0, 3, 7})); }

TEST_CASE("mobius image matches continued-fraction extension") {
  FiniteCF f = FiniteCF::of({2, 3, 4});
  auto [lo, hi] = mobius_image(f, Rational(1), Rational(2));
  CHECK(lo == FiniteCF::of({2, 3, 4, 2}).value());
  CHECK(hi == FiniteCF::of({2, 3, 4, 1}).value());
}

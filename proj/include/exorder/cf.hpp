#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <vector>

#include "exorder/numeric.hpp"

namespace exorder {

// Finite continued fraction [c0; c1, ..., ct] with cached convergent matrix
//   [[p, p'], [K, K']] = prod [[c_k, 1], [1, 0]].
// The empty sequence carries the identity matrix, so K(c0) = 1 and K is independent of c0.
// Quotient storage is a shared persistent list: extend() is O(1) apart from the big-integer update.
class FiniteCF {
 public:
  FiniteCF();

  static FiniteCF of(std::initializer_list<long> quotients);
  static FiniteCF of(const std::vector<BigInt>& quotients);
  static FiniteCF of_small(const std::vector<int>& quotients);

  FiniteCF extend(const BigInt& c) const;
  FiniteCF extend(unsigned long c) const;
  FiniteCF extend_block(const std::vector<int>& block) const;
  FiniteCF concat(const FiniteCF& tail) const;

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  const BigInt& K() const { return K_; }
  const BigInt& Kprime() const { return Kp_; }
  const BigInt& p() const { return p_; }
  const BigInt& pprime() const { return pp_; }
  // p*K' - p'*K, equal to (-1)^size.
  int determinant_sign() const { return size_ % 2 == 0 ? 1 : -1; }

  std::vector<BigInt> quotients() const;
  // i = 0 is the last quotient.
  const BigInt& from_end(std::size_t i) const;

  Rational value() const;

 private:
  struct Node {
    BigInt c;
    std::shared_ptr<Node> prev;
    ~Node();
  };

  std::shared_ptr<Node> tail_;
  std::size_t size_ = 0;
  BigInt K_, Kp_, p_, pp_;
};

enum class HalfOpen { right_open, left_open };

struct CylinderInterval {
  Rational lo, hi;
  HalfOpen open_side = HalfOpen::right_open;

  Rational width() const { return hi - lo; }
  bool contains(const Rational& x) const;
  // Containment as sets, respecting which endpoints are included.
  bool subset_of(const CylinderInterval& outer) const;
};

CylinderInterval cylinder(const FiniteCF& cf);

// Image under x -> (p x + p')/(K x + K') of a closed interval [a, b] with a, b >= 0, sorted.
std::pair<Rational, Rational> mobius_image(const FiniteCF& cf, const Rational& a, const Rational& b);

struct GluingCheck {
  BigInt lower, upper, actual;
  bool holds = false;
};

// K(g)K(h) <= K(g.h) <= (N+2)K(g)K(h).
GluingCheck concat_continuant_bounds(const FiniteCF& g, const FiniteCF& h, long N);
double gluing_constant(long N);

// Canonical expansion of num/den >= 1 (no trailing 1 when length > 1).
FiniteCF cf_of_rational(const BigInt& num, const BigInt& den);

struct ConvergentMatrix {
  BigInt p, pprime, q, qprime;
};

// Independent route: balanced product of the 2x2 quotient matrices.
ConvergentMatrix convergent_matrix(const std::vector<BigInt>& quotients);

// Continuant polynomial of all entries (interior-segment convention): the denominator of
// [0; w1, ..., wn], with value 1 on the empty word.
BigInt interior_continuant(const std::vector<int>& w);
// Same in 64-bit arithmetic; throws on overflow.
std::uint64_t interior_continuant_u64(const int* w, std::size_t n);

// 1 + 1/(N+2) <= K/K' <= N+1, exact.
bool denominator_ratio_holds(const FiniteCF& cf, long N);

// K(G.a)/K(G) in [1, (N+1)^len(a)], exact.
bool block_ratio_holds(const FiniteCF& g, const std::vector<int>& block, long N);

}  // namespace exorder

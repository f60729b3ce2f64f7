#include "exorder/cf.hpp"

#include <cmath>
#include <stdexcept>

namespace exorder {

FiniteCF::Node::~Node() {
  // Unlink iteratively so very long sequences do not recurse on destruction.
  std::shared_ptr<Node> p = std::move(prev);
  while (p && p.use_count() == 1) {
    std::shared_ptr<Node> next = std::move(p->prev);
    p = std::move(next);
  }
}

FiniteCF::FiniteCF() : K_(0), Kp_(1), p_(1), pp_(0) {}

FiniteCF FiniteCF::of(std::initializer_list<long> quotients) {
  FiniteCF cf;
  for (long c : quotients) {
    if (c < 1) throw std::invalid_argument("partial quotients must be >= 1");
    cf = cf.extend(static_cast<unsigned long>(c));
  }
  return cf;
}

FiniteCF FiniteCF::of(const std::vector<BigInt>& quotients) {
  FiniteCF cf;
  for (const BigInt& c : quotients) cf = cf.extend(c);
  return cf;
}

FiniteCF FiniteCF::of_small(const std::vector<int>& quotients) { return FiniteCF().extend_block(quotients); }

FiniteCF FiniteCF::extend(const BigInt& c) const {
  if (sgn(c) <= 0) throw std::invalid_argument("extend: partial quotient must be >= 1");
  FiniteCF out;
  out.tail_ = std::make_shared<Node>(Node{c, tail_});
  out.size_ = size_ + 1;
  out.K_ = c * K_ + Kp_;
  out.Kp_ = K_;
  out.p_ = c * p_ + pp_;
  out.pp_ = p_;
  return out;
}

FiniteCF FiniteCF::extend(unsigned long c) const {
  if (c == 0) throw std::invalid_argument("extend: partial quotient must be >= 1");
  FiniteCF out;
  out.tail_ = std::make_shared<Node>(Node{BigInt(c), tail_});
  out.size_ = size_ + 1;
  mpz_mul_ui(out.K_.get_mpz_t(), K_.get_mpz_t(), c);
  out.K_ += Kp_;
  out.Kp_ = K_;
  mpz_mul_ui(out.p_.get_mpz_t(), p_.get_mpz_t(), c);
  out.p_ += pp_;
  out.pp_ = p_;
  return out;
}

FiniteCF FiniteCF::extend_block(const std::vector<int>& block) const {
  FiniteCF cf = *this;
  for (int c : block) {
    if (c < 1) throw std::invalid_argument("partial quotients must be >= 1");
    cf = cf.extend(static_cast<unsigned long>(c));
  }
  return cf;
}

FiniteCF FiniteCF::concat(const FiniteCF& tail) const {
  FiniteCF cf = *this;
  for (const BigInt& c : tail.quotients()) cf = cf.extend(c);
  return cf;
}

std::vector<BigInt> FiniteCF::quotients() const {
  std::vector<BigInt> out(size_);
  std::size_t i = size_;
  for (const Node* n = tail_.get(); n != nullptr; n = n->prev.get()) out[--i] = n->c;
  return out;
}

const BigInt& FiniteCF::from_end(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("FiniteCF::from_end");
  const Node* n = tail_.get();
  while (i-- > 0) n = n->prev.get();
  return n->c;
}

Rational FiniteCF::value() const {
  if (empty()) throw std::logic_error("value of the empty continued fraction");
  Rational r(p_, K_);
  r.canonicalize();
  return r;
}

bool CylinderInterval::contains(const Rational& x) const {
  if (open_side == HalfOpen::right_open) return lo <= x && x < hi;
  return lo < x && x <= hi;
}

bool CylinderInterval::subset_of(const CylinderInterval& outer) const {
  bool lo_ok = outer.lo < lo ||
               (outer.lo == lo && (outer.open_side == HalfOpen::right_open || open_side == HalfOpen::left_open));
  bool hi_ok = hi < outer.hi ||
               (hi == outer.hi && (outer.open_side == HalfOpen::left_open || open_side == HalfOpen::right_open));
  return lo_ok && hi_ok;
}

CylinderInterval cylinder(const FiniteCF& cf) {
  if (cf.empty()) throw std::invalid_argument("cylinder of the empty sequence");
  Rational a(cf.p(), cf.K());
  Rational b(cf.p() + cf.pprime(), cf.K() + cf.Kprime());
  a.canonicalize();
  b.canonicalize();
  CylinderInterval out;
  if ((cf.size() - 1) % 2 == 0) {
    out.lo = a;
    out.hi = b;
    out.open_side = HalfOpen::right_open;
  } else {
    out.lo = b;
    out.hi = a;
    out.open_side = HalfOpen::left_open;
  }
  return out;
}

std::pair<Rational, Rational> mobius_image(const FiniteCF& cf, const Rational& a, const Rational& b) {
  if (sgn(a) < 0 || sgn(b) < 0) throw std::invalid_argument("mobius_image: interval must lie in [0, inf)");
  auto apply = [&](const Rational& x) {
    Rational num = cf.p() * x + cf.pprime();
    Rational den = cf.K() * x + cf.Kprime();
    Rational r = num / den;
    return r;
  };
  Rational u = apply(a), v = apply(b);
  if (v < u) std::swap(u, v);
  return {u, v};
}

double gluing_constant(long N) { return std::log(static_cast<double>(N) + 2.0); }

GluingCheck concat_continuant_bounds(const FiniteCF& g, const FiniteCF& h, long N) {
  if (g.empty() || h.empty()) throw std::invalid_argument("concat_continuant_bounds: empty operand");
  std::vector<BigInt> hq = h.quotients();
  if (hq.front() < 1 || hq.front() > N) {
    throw std::invalid_argument("concat_continuant_bounds: first quotient of h must lie in [1, N]");
  }
  GluingCheck out;
  out.lower = g.K() * h.K();
  out.upper = (N + 2) * out.lower;
  out.actual = g.concat(h).K();
  out.holds = out.lower <= out.actual && out.actual <= out.upper;
  return out;
}

FiniteCF cf_of_rational(const BigInt& num, const BigInt& den) {
  if (sgn(den) == 0) throw std::invalid_argument("cf_of_rational: zero denominator");
  Rational x(num, den);
  x.canonicalize();
  if (x < 1) throw std::invalid_argument("cf_of_rational: value must be >= 1");
  BigInt a = x.get_num(), b = x.get_den();
  std::vector<BigInt> qs;
  while (sgn(b) != 0) {
    BigInt q, r;
    mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    qs.push_back(q);
    a = b;
    b = r;
  }
  if (qs.size() > 1 && qs.back() == 1) {
    qs.pop_back();
    qs.back() += 1;
  }
  return FiniteCF::of(qs);
}

ConvergentMatrix convergent_matrix(const std::vector<BigInt>& quotients) {
  struct M {
    BigInt a, b, c, d;
  };
  auto mul = [](const M& x, const M& y) {
    return M{x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
  };
  auto rec = [&](auto&& self, std::size_t lo, std::size_t hi) -> M {
    if (hi == lo) return M{1, 0, 0, 1};
    if (hi - lo == 1) return M{quotients[lo], 1, 1, 0};
    std::size_t mid = lo + (hi - lo) / 2;
    return mul(self(self, lo, mid), self(self, mid, hi));
  };
  M m = rec(rec, 0, quotients.size());
  return ConvergentMatrix{m.a, m.b, m.c, m.d};
}

BigInt interior_continuant(const std::vector<int>& w) {
  BigInt prev = 0, cur = 1;
  for (int c : w) {
    if (c < 1) throw std::invalid_argument("interior_continuant: entries must be >= 1");
    BigInt next = BigInt(c) * cur + prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

std::uint64_t interior_continuant_u64(const int* w, std::size_t n) {
  unsigned __int128 prev = 0, cur = 1;
  for (std::size_t i = 0; i < n; ++i) {
    unsigned __int128 next = static_cast<unsigned __int128>(w[i]) * cur + prev;
    if (next > UINT64_MAX) throw std::overflow_error("interior_continuant_u64 overflow");
    prev = cur;
    cur = next;
  }
  return static_cast<std::uint64_t>(cur);
}

bool denominator_ratio_holds(const FiniteCF& cf, long N) {
  if (sgn(cf.Kprime()) <= 0) return false;
  return (N + 3) * cf.Kprime() <= (N + 2) * cf.K() && cf.K() <= (N + 1) * cf.Kprime();
}

bool block_ratio_holds(const FiniteCF& g, const std::vector<int>& block, long N) {
  if (g.empty()) throw std::invalid_argument("block_ratio_holds: empty prefix");
  BigInt k = g.extend_block(block).K();
  BigInt bound;
  mpz_ui_pow_ui(bound.get_mpz_t(), static_cast<unsigned long>(N + 1), block.size());
  return g.K() <= k && k <= bound * g.K();
}

}  // namespace exorder

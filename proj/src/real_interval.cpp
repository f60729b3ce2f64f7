#include "exorder/real_interval.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace exorder {

Real::Real(mpfr_prec_t prec) { mpfr_init2(value_, prec); mpfr_set_zero(value_, 1); }

Real::Real(const Real& other) {
  mpfr_init2(value_, other.precision());
  mpfr_set(value_, other.value_, MPFR_RNDN);
}

Real::Real(Real&& other) noexcept {
  mpfr_init2(value_, other.precision());
  mpfr_swap(value_, other.value_);
}

Real& Real::operator=(const Real& other) {
  if (this != &other) {
    mpfr_set_prec(value_, other.precision());
    mpfr_set(value_, other.value_, MPFR_RNDN);
  }
  return *this;
}

Real& Real::operator=(Real&& other) noexcept {
  if (this != &other) mpfr_swap(value_, other.value_);
  return *this;
}

Real::~Real() { mpfr_clear(value_); }

Rational Real::to_rational() const {
  if (!mpfr_number_p(value_)) throw std::domain_error("Real::to_rational on non-finite value");
  Rational r;
  mpfr_get_q(r.get_mpq_t(), value_);
  return r;
}

Interval::Interval(mpfr_prec_t prec) : lo_(prec), hi_(prec) {}

Interval Interval::point(double x, mpfr_prec_t prec) {
  Interval out(prec);
  mpfr_set_d(out.lo_.get(), x, MPFR_RNDD);
  mpfr_set_d(out.hi_.get(), x, MPFR_RNDU);
  return out;
}

Interval Interval::of(const BigInt& x, mpfr_prec_t prec) {
  Interval out(prec);
  mpfr_set_z(out.lo_.get(), x.get_mpz_t(), MPFR_RNDD);
  mpfr_set_z(out.hi_.get(), x.get_mpz_t(), MPFR_RNDU);
  return out;
}

Interval Interval::of(const Rational& x, mpfr_prec_t prec) {
  Interval out(prec);
  mpfr_set_q(out.lo_.get(), x.get_mpq_t(), MPFR_RNDD);
  mpfr_set_q(out.hi_.get(), x.get_mpq_t(), MPFR_RNDU);
  return out;
}

Interval Interval::hull(const Interval& a, const Interval& b) {
  Interval out(std::max(a.precision(), b.precision()));
  mpfr_min(out.lo_.get(), a.lo_.get(), b.lo_.get(), MPFR_RNDD);
  mpfr_max(out.hi_.get(), a.hi_.get(), b.hi_.get(), MPFR_RNDU);
  return out;
}

double Interval::mid_double() const { return 0.5 * (lo_.to_double() + hi_.to_double()); }

double Interval::width_double() const {
  Real w(precision());
  mpfr_sub(w.get(), hi_.get(), lo_.get(), MPFR_RNDU);
  return w.to_double(MPFR_RNDU);
}

bool Interval::contains(const Rational& x) const {
  return mpfr_cmp_q(lo_.get(), x.get_mpq_t()) <= 0 && mpfr_cmp_q(hi_.get(), x.get_mpq_t()) >= 0;
}

bool Interval::contains(double x) const { return mpfr_cmp_d(lo_.get(), x) <= 0 && mpfr_cmp_d(hi_.get(), x) >= 0; }

std::optional<BigInt> Interval::certain_floor() const {
  BigInt a, b;
  mpfr_get_z(a.get_mpz_t(), lo_.get(), MPFR_RNDD);
  mpfr_get_z(b.get_mpz_t(), hi_.get(), MPFR_RNDD);
  if (a != b) return std::nullopt;
  return a;
}

std::optional<BigInt> Interval::certain_ceil() const {
  BigInt a, b;
  mpfr_get_z(a.get_mpz_t(), lo_.get(), MPFR_RNDU);
  mpfr_get_z(b.get_mpz_t(), hi_.get(), MPFR_RNDU);
  if (a != b) return std::nullopt;
  return a;
}

std::string Interval::describe() const {
  std::ostringstream os;
  os << "[" << fmt17(lo_double()) << ", " << fmt17(hi_double()) << "]";
  return os.str();
}

namespace {

mpfr_prec_t joint(const Interval& a, const Interval& b) { return std::max(a.precision(), b.precision()); }

}  // namespace

Interval operator+(const Interval& a, const Interval& b) {
  Interval out(joint(a, b));
  mpfr_add(out.lo().get(), a.lo().get(), b.lo().get(), MPFR_RNDD);
  mpfr_add(out.hi().get(), a.hi().get(), b.hi().get(), MPFR_RNDU);
  return out;
}

Interval operator-(const Interval& a, const Interval& b) {
  Interval out(joint(a, b));
  mpfr_sub(out.lo().get(), a.lo().get(), b.hi().get(), MPFR_RNDD);
  mpfr_sub(out.hi().get(), a.hi().get(), b.lo().get(), MPFR_RNDU);
  return out;
}

Interval operator-(const Interval& a) {
  Interval out(a.precision());
  mpfr_neg(out.lo().get(), a.hi().get(), MPFR_RNDD);
  mpfr_neg(out.hi().get(), a.lo().get(), MPFR_RNDU);
  return out;
}

Interval operator*(const Interval& a, const Interval& b) {
  mpfr_prec_t prec = joint(a, b);
  Interval out(prec);
  Real t(prec);
  bool first = true;
  for (const Real* x : {&a.lo(), &a.hi()}) {
    for (const Real* y : {&b.lo(), &b.hi()}) {
      mpfr_mul(t.get(), x->get(), y->get(), MPFR_RNDD);
      if (first || mpfr_less_p(t.get(), out.lo().get())) mpfr_set(out.lo().get(), t.get(), MPFR_RNDD);
      mpfr_mul(t.get(), x->get(), y->get(), MPFR_RNDU);
      if (first || mpfr_greater_p(t.get(), out.hi().get())) mpfr_set(out.hi().get(), t.get(), MPFR_RNDU);
      first = false;
    }
  }
  return out;
}

Interval operator/(const Interval& a, const Interval& b) {
  if (mpfr_sgn(b.lo().get()) <= 0 && mpfr_sgn(b.hi().get()) >= 0) {
    throw std::domain_error("interval division by an interval containing zero");
  }
  mpfr_prec_t prec = joint(a, b);
  Interval out(prec);
  Real t(prec);
  bool first = true;
  for (const Real* x : {&a.lo(), &a.hi()}) {
    for (const Real* y : {&b.lo(), &b.hi()}) {
      mpfr_div(t.get(), x->get(), y->get(), MPFR_RNDD);
      if (first || mpfr_less_p(t.get(), out.lo().get())) mpfr_set(out.lo().get(), t.get(), MPFR_RNDD);
      mpfr_div(t.get(), x->get(), y->get(), MPFR_RNDU);
      if (first || mpfr_greater_p(t.get(), out.hi().get())) mpfr_set(out.hi().get(), t.get(), MPFR_RNDU);
      first = false;
    }
  }
  return out;
}

Interval log(const Interval& a) {
  if (!a.positive()) throw std::domain_error("interval log of nonpositive interval");
  Interval out(a.precision());
  mpfr_log(out.lo().get(), a.lo().get(), MPFR_RNDD);
  mpfr_log(out.hi().get(), a.hi().get(), MPFR_RNDU);
  return out;
}

Interval exp(const Interval& a) {
  Interval out(a.precision());
  mpfr_exp(out.lo().get(), a.lo().get(), MPFR_RNDD);
  mpfr_exp(out.hi().get(), a.hi().get(), MPFR_RNDU);
  return out;
}

Interval sqrt(const Interval& a) {
  if (mpfr_sgn(a.lo().get()) < 0) throw std::domain_error("interval sqrt of negative interval");
  Interval out(a.precision());
  mpfr_sqrt(out.lo().get(), a.lo().get(), MPFR_RNDD);
  mpfr_sqrt(out.hi().get(), a.hi().get(), MPFR_RNDU);
  return out;
}

Interval square(const Interval& a) {
  if (mpfr_sgn(a.lo().get()) >= 0) {
    Interval out(a.precision());
    mpfr_sqr(out.lo().get(), a.lo().get(), MPFR_RNDD);
    mpfr_sqr(out.hi().get(), a.hi().get(), MPFR_RNDU);
    return out;
  }
  return a * a;
}

bool certainly_less(const Interval& a, const Interval& b) { return mpfr_less_p(a.hi().get(), b.lo().get()) != 0; }

}  // namespace exorder

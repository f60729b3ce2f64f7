#pragma once

#include <mpfr.h>

#include <optional>
#include <string>

#include "exorder/numeric.hpp"

namespace exorder {

// Owning MPFR value with explicit precision.
class Real {
 public:
  explicit Real(mpfr_prec_t prec = 128);
  Real(const Real& other);
  Real(Real&& other) noexcept;
  Real& operator=(const Real& other);
  Real& operator=(Real&& other) noexcept;
  ~Real();

  mpfr_ptr get() { return value_; }
  mpfr_srcptr get() const { return value_; }
  mpfr_prec_t precision() const { return mpfr_get_prec(value_); }
  double to_double(mpfr_rnd_t rnd = MPFR_RNDN) const { return mpfr_get_d(value_, rnd); }
  Rational to_rational() const;  // exact (value is dyadic)

 private:
  mpfr_t value_;
};

// Closed interval [lo, hi] with outward-rounded endpoints.
class Interval {
 public:
  explicit Interval(mpfr_prec_t prec = 128);

  static Interval point(double x, mpfr_prec_t prec);
  static Interval of(const BigInt& x, mpfr_prec_t prec);
  static Interval of(const Rational& x, mpfr_prec_t prec);
  static Interval hull(const Interval& a, const Interval& b);

  const Real& lo() const { return lo_; }
  const Real& hi() const { return hi_; }
  Real& lo() { return lo_; }
  Real& hi() { return hi_; }
  mpfr_prec_t precision() const { return lo_.precision(); }

  double lo_double() const { return lo_.to_double(MPFR_RNDD); }
  double hi_double() const { return hi_.to_double(MPFR_RNDU); }
  double mid_double() const;
  double width_double() const;

  bool contains(const Rational& x) const;
  bool contains(double x) const;
  bool positive() const { return mpfr_sgn(lo_.get()) > 0; }

  // Floor of every point in the interval when they agree.
  std::optional<BigInt> certain_floor() const;
  // Ceiling likewise.
  std::optional<BigInt> certain_ceil() const;

  std::string describe() const;

 private:
  Real lo_;
  Real hi_;
};

Interval operator+(const Interval& a, const Interval& b);
Interval operator-(const Interval& a, const Interval& b);
Interval operator*(const Interval& a, const Interval& b);
Interval operator/(const Interval& a, const Interval& b);
Interval operator-(const Interval& a);
Interval log(const Interval& a);
Interval exp(const Interval& a);
Interval sqrt(const Interval& a);
Interval square(const Interval& a);

// a.hi < b.lo
bool certainly_less(const Interval& a, const Interval& b);

}  // namespace exorder

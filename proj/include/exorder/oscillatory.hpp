#pragma once

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "exorder/cf.hpp"
#include "exorder/real_interval.hpp"

namespace exorder {

using Complex = std::complex<double>;

// e(t) = exp(2 pi i t)
Complex unit_phasor(double t);

class CertificationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Real phase f on an interval; integrands are e(f).
class Phase {
 public:
  virtual ~Phase() = default;
  virtual double value(double x) const = 0;
  virtual double derivative(double x) const = 0;
  // Enclosures over [lo, hi].
  virtual Interval derivative_range(double lo, double hi) const = 0;
  virtual Interval second_derivative_range(double lo, double hi) const = 0;
  // Upper bound on |f'| over [lo, hi]. The default uses derivative_range.
  virtual double derivative_bound(double lo, double hi) const;
};

// f(x) = sum c_k x^k
class PolynomialPhase : public Phase {
 public:
  explicit PolynomialPhase(std::vector<double> coeffs);
  double value(double x) const override;
  double derivative(double x) const override;
  Interval derivative_range(double lo, double hi) const override;
  Interval second_derivative_range(double lo, double hi) const override;
  const std::vector<double>& coefficients() const { return c_; }

 private:
  std::vector<double> c_, d1_, d2_;
};

// Phi(x) = -xi ((p x + p')/(q x + q') - (p~ x + p~')/(q~ x + q~')) for two prefixes.
class MobiusPairPhase : public Phase {
 public:
  MobiusPairPhase(double xi, const FiniteCF& first, const FiniteCF& second);
  double value(double x) const override;
  double derivative(double x) const override;
  Interval derivative_range(double lo, double hi) const override;
  Interval second_derivative_range(double lo, double hi) const override;
  double derivative_bound(double lo, double hi) const override;
  double xi() const { return xi_; }

 private:
  double xi_;
  double q1_, qp1_, q2_, qp2_;
  int d1_, d2_;
  double n2_, n1_, n0_;  // numerator of the Moebius difference, exact integer coefficients rounded once
  BigInt Q1_, QP1_, Q2_, QP2_;
};

// Cofactor g in f'(x) = (C1 x + C2) g(x).
class PhaseCofactor {
 public:
  virtual ~PhaseCofactor() = default;
  virtual double value(double x) const = 0;
  virtual Interval range(double lo, double hi) const = 0;
  virtual Interval derivative_range(double lo, double hi) const = 0;
};

class PolynomialCofactor : public PhaseCofactor {
 public:
  explicit PolynomialCofactor(std::vector<double> coeffs);
  double value(double x) const override;
  Interval range(double lo, double hi) const override;
  Interval derivative_range(double lo, double hi) const override;

 private:
  std::vector<double> c_, d1_;
};

// g(x) = -d ((q+q~) x + q' + q~') / ((q x + q')^2 (q~ x + q~')^2), xi folded into C1 and C2.
class MobiusPairCofactor : public PhaseCofactor {
 public:
  MobiusPairCofactor(const FiniteCF& first, const FiniteCF& second);
  double value(double x) const override;
  Interval range(double lo, double hi) const override;
  Interval derivative_range(double lo, double hi) const override;

 private:
  int sign_;
  BigInt Q1_, QP1_, Q2_, QP2_;
  double q1_, qp1_, q2_, qp2_;
};

struct QuadratureOptions {
  double resolution = 10.0;        // panels per unit phase: step <= 1/(resolution * max|f'|)
  std::size_t max_panels = 50'000'000;
  double direct_cycles = 400.0;    // above this many cycles on a piece, try collocation
  int levin_nodes = 16;
  int max_depth = 60;
};

struct QuadratureResult {
  Complex value;
  double error_estimate = 0.0;  // |fine - coarse| of the validation rerun
  std::size_t panels = 0;
  std::size_t levin_pieces = 0;
  bool within_budget = true;
};

// Direct Gauss-Legendre panels for a general integrand with a rate bound on its phase.
QuadratureResult integrate_oscillatory(const std::function<Complex(double)>& integrand,
                                       const std::function<double(double, double)>& rate_bound, double a, double b,
                                       const QuadratureOptions& opts = {});

// int_a^b e(f): collocation on monotone-rate pieces, panels elsewhere; validated by a doubled run.
QuadratureResult integrate_phase(const Phase& f, double a, double b, const QuadratureOptions& opts = {});

struct DerivativeCertificate {
  double min_abs_derivative = 0.0;  // certified lower bound on |f'|, 0 if f' may vanish
  int sign = 0;                     // +1 / -1 when f' keeps a certified sign, else 0
  double max_abs_second = 0.0;      // certified upper bound on |f''|
};
DerivativeCertificate certify_derivatives(const Phase& f, double a, double b, int pieces = 256);

struct VdcResult {
  Complex integral;
  double quadrature_error = 0.0;
  double bound = 0.0;
  bool pass = false;
  // stationary case only
  double window_length = 0.0;   // |J cap [a, b]|
  double window_bound = 0.0;    // 2 A^(-3/2) B |C1|^(-1/2)
};

// f' >= A or f' <= -A and |f''| <= B certified, then |int e(f)| <= A^-1/pi + (b-a) B/(2 pi A^2).
VdcResult vdc_nonstationary(const Phase& f, double A, double B, double a, double b, const QuadratureOptions& opts = {});

// f' = (C1 x + C2) g, |g| >= A, |g'| <= B, B > A certified; bound K (1 + b - a) B A^(-3/2) |C1|^(-1/2).
VdcResult vdc_stationary(const Phase& f, const PhaseCofactor& g, double C1, double C2, double A, double B, double a,
                         double b, double K, const QuadratureOptions& opts = {});

struct CofactorCertificate {
  double min_abs = 0.0;       // |g| >= min_abs
  double max_abs_derivative = 0.0;
};
CofactorCertificate certify_cofactor(const PhaseCofactor& g, double a, double b, int pieces = 256);

// Constant read off the integration-by-parts argument: 2 + 3/pi.
double stationary_constant_from_proof();

}  // namespace exorder

#include "exorder/oscillatory.hpp"

#include "exorder/block_measure.hpp"

#include <Eigen/Dense>
#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>

namespace exorder {

namespace {

constexpr mpfr_prec_t kPrec = 80;
const double kTwoPi = boost::math::constants::two_pi<double>();

Interval pt(double v) { return Interval::point(v, kPrec); }
Interval span(double lo, double hi) { return Interval::hull(pt(lo), pt(hi)); }
Interval big(const BigInt& v) { return Interval::of(v, kPrec); }

// smallest |x| over the interval
double mig(const Interval& x) {
  double lo = x.lo_double(), hi = x.hi_double();
  if (lo > 0) return lo;
  if (hi < 0) return -hi;
  return 0.0;
}
double mag(const Interval& x) { return std::max(std::fabs(x.lo_double()), std::fabs(x.hi_double())); }

std::vector<double> differentiate(const std::vector<double>& c) {
  std::vector<double> d;
  for (std::size_t k = 1; k < c.size(); ++k) d.push_back(static_cast<double>(k) * c[k]);
  return d;
}

double horner(const std::vector<double>& c, double x) {
  double r = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) r = r * x + c[k];
  return r;
}

Interval horner(const std::vector<double>& c, const Interval& x) {
  if (c.empty()) return pt(0.0);
  Interval r = pt(c.back());
  for (std::size_t k = c.size() - 1; k-- > 0;) r = r * x + pt(c[k]);
  return r;
}

using Rule = boost::math::quadrature::gauss<double, 6>;

Complex gauss_panel(const std::function<Complex(double)>& fn, double lo, double hi) {
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  Complex s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s += w[i] * (fn(mid + half * x[i]) + fn(mid - half * x[i]));
  }
  return s * half;
}

// Panels with step <= 1/(resolution * rate); false when the panel budget runs out.
bool gauss_panels(const std::function<Complex(double)>& fn, const std::function<double(double, double)>& rate,
                  double a, double b, double resolution, std::size_t max_panels, Complex& out, std::size_t& panels) {
  double x = a, h = b - a;
  while (x < b) {
    h = std::min(2.0 * h, b - x);
    for (;;) {
      double r = rate(x, x + h);
      if (r * h * resolution <= 1.0) break;
      h = std::min(0.5 * h, 0.999 / (resolution * r));
    }
    double next = (b - x - h <= 1e-15 * std::fabs(b)) ? b : x + h;
    out += gauss_panel(fn, x, next);
    x = next;
    if (++panels > max_panels) return false;
  }
  return true;
}

// Levin collocation on Chebyshev-Lobatto nodes: p' + 2 pi i f' p = 1, integral p e(f) at the ends.
Complex levin_piece(const Phase& f, double a, double b, int n) {
  const double pi = boost::math::constants::pi<double>();
  double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  std::vector<double> t(n + 1), x(n + 1);
  for (int k = 0; k <= n; ++k) {
    t[k] = std::cos(pi * k / n);
    x[k] = mid + half * t[k];
  }
  Eigen::MatrixXcd M(n + 1, n + 1);
  for (int i = 0; i <= n; ++i) {
    double ci = (i == 0 || i == n) ? 2.0 : 1.0;
    double diag = 0.0;
    for (int j = 0; j <= n; ++j) {
      if (i == j) continue;
      double cj = (j == 0 || j == n) ? 2.0 : 1.0;
      double d = (ci / cj) * (((i + j) % 2) ? -1.0 : 1.0) / (t[i] - t[j]);
      M(i, j) = d / half;
      diag -= d;
    }
    M(i, i) = Complex(diag / half, kTwoPi * f.derivative(x[i]));
  }
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Ones(n + 1);
  Eigen::VectorXcd p = M.partialPivLu().solve(rhs);
  return p(0) * unit_phasor(f.value(b)) - p(n) * unit_phasor(f.value(a));
}

struct PhaseAccumulator {
  Complex coarse = 0.0, fine = 0.0;
  std::size_t panels = 0, levin = 0;
  bool ok = true;
};

void phase_piece(const Phase& f, double l, double r, int depth, const QuadratureOptions& opts, PhaseAccumulator& acc) {
  if (!acc.ok) return;
  double cycles = f.derivative_bound(l, r) * (r - l);
  auto direct = [&]() {
    auto fn = [&f](double x) { return unit_phasor(f.value(x)); };
    auto rate = [&f](double lo, double hi) { return f.derivative_bound(lo, hi); };
    acc.ok = gauss_panels(fn, rate, l, r, opts.resolution, opts.max_panels, acc.coarse, acc.panels) &&
             gauss_panels(fn, rate, l, r, 2.0 * opts.resolution, opts.max_panels, acc.fine, acc.panels);
  };
  if (cycles <= opts.direct_cycles) {
    direct();
    return;
  }
  Interval d = f.derivative_range(l, r);
  double lo = mig(d), hi = mag(d);
  if (lo > 0.0 && hi <= 4.0 * lo) {
    acc.coarse += levin_piece(f, l, r, opts.levin_nodes);
    acc.fine += levin_piece(f, l, r, 2 * opts.levin_nodes);
    ++acc.levin;
    return;
  }
  if (depth >= opts.max_depth) {
    direct();
    return;
  }
  double m = 0.5 * (l + r);
  phase_piece(f, l, m, depth + 1, opts, acc);
  phase_piece(f, m, r, depth + 1, opts, acc);
}

}  // namespace

Complex unit_phasor(double t) {
  double frac = t - std::nearbyint(t);
  return std::polar(1.0, kTwoPi * frac);
}

double Phase::derivative_bound(double lo, double hi) const { return mag(derivative_range(lo, hi)); }

PolynomialPhase::PolynomialPhase(std::vector<double> coeffs)
    : c_(std::move(coeffs)), d1_(differentiate(c_)), d2_(differentiate(d1_)) {}

double PolynomialPhase::value(double x) const { return horner(c_, x); }
double PolynomialPhase::derivative(double x) const { return horner(d1_, x); }
Interval PolynomialPhase::derivative_range(double lo, double hi) const { return horner(d1_, span(lo, hi)); }
Interval PolynomialPhase::second_derivative_range(double lo, double hi) const { return horner(d2_, span(lo, hi)); }

MobiusPairPhase::MobiusPairPhase(double xi, const FiniteCF& first, const FiniteCF& second)
    : xi_(xi),
      q1_(first.K().get_d()),
      qp1_(first.Kprime().get_d()),
      q2_(second.K().get_d()),
      qp2_(second.Kprime().get_d()),
      d1_(first.determinant_sign()),
      d2_(second.determinant_sign()),
      Q1_(first.K()),
      QP1_(first.Kprime()),
      Q2_(second.K()),
      QP2_(second.Kprime()) {
  const BigInt &p1 = first.p(), &pp1 = first.pprime(), &p2 = second.p(), &pp2 = second.pprime();
  BigInt n2 = p1 * Q2_ - p2 * Q1_;
  BigInt n1 = p1 * QP2_ + pp1 * Q2_ - p2 * QP1_ - pp2 * Q1_;
  BigInt n0 = pp1 * QP2_ - pp2 * QP1_;
  n2_ = n2.get_d();
  n1_ = n1.get_d();
  n0_ = n0.get_d();
}

double MobiusPairPhase::value(double x) const {
  double num = (n2_ * x + n1_) * x + n0_;
  return -xi_ * num / ((q1_ * x + qp1_) * (q2_ * x + qp2_));
}

double MobiusPairPhase::derivative(double x) const {
  double u1 = q1_ * x + qp1_, u2 = q2_ * x + qp2_;
  if (d1_ == d2_) {
    double diff = (q2_ - q1_) * x + (qp2_ - qp1_);
    return -xi_ * d1_ * diff * (u1 + u2) / (u1 * u1 * u2 * u2);
  }
  return -xi_ * (d1_ / (u1 * u1) - d2_ / (u2 * u2));
}

Interval MobiusPairPhase::derivative_range(double lo, double hi) const {
  Interval X = span(lo, hi);
  Interval u1 = big(Q1_) * X + big(QP1_), u2 = big(Q2_) * X + big(QP2_);
  Interval s = pt(-xi_);
  if (d1_ == d2_) {
    Interval diff = big(BigInt(Q2_ - Q1_)) * X + big(BigInt(QP2_ - QP1_));
    Interval prod = u1 * u2;
    return s * pt(d1_) * diff * (u1 + u2) / square(prod);
  }
  return s * (pt(d1_) / square(u1) - pt(d2_) / square(u2));
}

Interval MobiusPairPhase::second_derivative_range(double lo, double hi) const {
  Interval X = span(lo, hi);
  Interval u1 = big(Q1_) * X + big(QP1_), u2 = big(Q2_) * X + big(QP2_);
  Interval t1 = pt(2.0 * d1_) * big(Q1_) / (square(u1) * u1);
  Interval t2 = pt(2.0 * d2_) * big(Q2_) / (square(u2) * u2);
  return pt(xi_) * (t1 - t2);
}

double MobiusPairPhase::derivative_bound(double lo, double hi) const {
  // each 1/u^2 term decreases in x on x >= 0
  auto term = [](double q, double qp, double x) {
    double u = q * x + qp;
    return 1.0 / (u * u);
  };
  double a_lo = term(q1_, qp1_, lo), a_hi = term(q1_, qp1_, hi);
  double b_lo = term(q2_, qp2_, lo), b_hi = term(q2_, qp2_, hi);
  double m;
  if (d1_ == d2_) m = std::max(std::fabs(a_lo - b_hi), std::fabs(a_hi - b_lo));
  else m = a_lo + b_lo;
  return std::fabs(xi_) * m * (1.0 + 1e-9);
}

PolynomialCofactor::PolynomialCofactor(std::vector<double> coeffs) : c_(std::move(coeffs)), d1_(differentiate(c_)) {}
double PolynomialCofactor::value(double x) const { return horner(c_, x); }
Interval PolynomialCofactor::range(double lo, double hi) const { return horner(c_, span(lo, hi)); }
Interval PolynomialCofactor::derivative_range(double lo, double hi) const { return horner(d1_, span(lo, hi)); }

MobiusPairCofactor::MobiusPairCofactor(const FiniteCF& first, const FiniteCF& second)
    : sign_(first.determinant_sign()),
      Q1_(first.K()),
      QP1_(first.Kprime()),
      Q2_(second.K()),
      QP2_(second.Kprime()),
      q1_(first.K().get_d()),
      qp1_(first.Kprime().get_d()),
      q2_(second.K().get_d()),
      qp2_(second.Kprime().get_d()) {
  if (first.determinant_sign() != second.determinant_sign()) {
    throw std::invalid_argument("MobiusPairCofactor: prefixes of different parity have no linear factor");
  }
}

double MobiusPairCofactor::value(double x) const {
  double u1 = q1_ * x + qp1_, u2 = q2_ * x + qp2_;
  return -sign_ * (u1 + u2) / (u1 * u1 * u2 * u2);
}

Interval MobiusPairCofactor::range(double lo, double hi) const {
  Interval X = span(lo, hi);
  Interval u1 = big(Q1_) * X + big(QP1_), u2 = big(Q2_) * X + big(QP2_);
  return pt(-sign_) * (u1 + u2) / square(u1 * u2);
}

Interval MobiusPairCofactor::derivative_range(double lo, double hi) const {
  Interval X = span(lo, hi);
  Interval u1 = big(Q1_) * X + big(QP1_), u2 = big(Q2_) * X + big(QP2_);
  Interval prod = u1 * u2;
  Interval S = big(BigInt(Q1_ + Q2_));
  Interval num = S * prod - pt(2.0) * (u1 + u2) * (big(Q1_) * u2 + big(Q2_) * u1);
  return pt(-sign_) * num / (square(prod) * prod);
}

QuadratureResult integrate_oscillatory(const std::function<Complex(double)>& integrand,
                                       const std::function<double(double, double)>& rate_bound, double a, double b,
                                       const QuadratureOptions& opts) {
  QuadratureResult r;
  Complex coarse = 0.0, fine = 0.0;
  r.within_budget = gauss_panels(integrand, rate_bound, a, b, opts.resolution, opts.max_panels, coarse, r.panels) &&
                    gauss_panels(integrand, rate_bound, a, b, 2.0 * opts.resolution, opts.max_panels, fine, r.panels);
  r.value = fine;
  r.error_estimate = std::abs(fine - coarse);
  return r;
}

QuadratureResult integrate_phase(const Phase& f, double a, double b, const QuadratureOptions& opts) {
  PhaseAccumulator acc;
  phase_piece(f, a, b, 0, opts, acc);
  QuadratureResult r;
  r.value = acc.fine;
  r.error_estimate = std::abs(acc.fine - acc.coarse);
  r.panels = acc.panels;
  r.levin_pieces = acc.levin;
  r.within_budget = acc.ok;
  return r;
}

DerivativeCertificate certify_derivatives(const Phase& f, double a, double b, int pieces) {
  DerivativeCertificate c;
  c.min_abs_derivative = INFINITY;
  bool pos = true, neg = true;
  for (int i = 0; i < pieces; ++i) {
    double lo = a + (b - a) * i / pieces;
    double hi = (i + 1 == pieces) ? b : a + (b - a) * (i + 1) / pieces;
    Interval d = f.derivative_range(lo, hi);
    if (!(d.lo_double() > 0)) pos = false;
    if (!(d.hi_double() < 0)) neg = false;
    c.min_abs_derivative = std::min(c.min_abs_derivative, mig(d));
    c.max_abs_second = std::max(c.max_abs_second, mag(f.second_derivative_range(lo, hi)));
  }
  c.sign = pos ? 1 : (neg ? -1 : 0);
  if (c.sign == 0) c.min_abs_derivative = 0.0;
  return c;
}

CofactorCertificate certify_cofactor(const PhaseCofactor& g, double a, double b, int pieces) {
  CofactorCertificate c;
  c.min_abs = INFINITY;
  for (int i = 0; i < pieces; ++i) {
    double lo = a + (b - a) * i / pieces;
    double hi = (i + 1 == pieces) ? b : a + (b - a) * (i + 1) / pieces;
    c.min_abs = std::min(c.min_abs, mig(g.range(lo, hi)));
    c.max_abs_derivative = std::max(c.max_abs_derivative, mag(g.derivative_range(lo, hi)));
  }
  return c;
}

VdcResult vdc_nonstationary(const Phase& f, double A, double B, double a, double b, const QuadratureOptions& opts) {
  if (!(A > 0) || !(B >= 0) || !(b > a)) throw std::invalid_argument("vdc_nonstationary: need A > 0, B >= 0, a < b");
  DerivativeCertificate c = certify_derivatives(f, a, b);
  if (c.sign == 0) throw CertificationFailure("vdc_nonstationary: f' is not certified to keep one sign");
  if (c.min_abs_derivative < A) throw CertificationFailure("vdc_nonstationary: |f'| >= A not certified");
  if (c.max_abs_second > B) throw CertificationFailure("vdc_nonstationary: |f''| <= B not certified");
  QuadratureResult q = integrate_phase(f, a, b, opts);
  if (!q.within_budget) throw BudgetExceeded("vdc_nonstationary: quadrature panel budget exceeded");
  VdcResult r;
  r.integral = q.value;
  r.quadrature_error = q.error_estimate;
  const double pi = boost::math::constants::pi<double>();
  r.bound = 1.0 / (pi * A) + (b - a) * B / (2.0 * pi * A * A);
  r.pass = std::abs(r.integral) <= r.bound;
  return r;
}

VdcResult vdc_stationary(const Phase& f, const PhaseCofactor& g, double C1, double C2, double A, double B, double a,
                         double b, double K, const QuadratureOptions& opts) {
  if (!(A > 0) || !(B > A) || C1 == 0.0 || !(b > a)) {
    throw std::invalid_argument("vdc_stationary: need 0 < A < B, C1 != 0, a < b");
  }
  CofactorCertificate c = certify_cofactor(g, a, b);
  if (c.min_abs < A) throw CertificationFailure("vdc_stationary: |g| >= A not certified");
  if (c.max_abs_derivative > B) throw CertificationFailure("vdc_stationary: |g'| <= B not certified");
  for (int i = 0; i <= 16; ++i) {
    double x = a + (b - a) * i / 16.0;
    double lhs = f.derivative(x);
    double lin = C1 * x + C2;
    double rhs = lin * g.value(x);
    double scale = std::fabs(lhs) + std::fabs(rhs) + std::fabs(C1 * x * g.value(x)) + std::fabs(C2 * g.value(x));
    if (std::fabs(lhs - rhs) > 1e-8 * scale) {
      throw CertificationFailure("vdc_stationary: f' differs from (C1 x + C2) g");
    }
  }
  QuadratureResult q = integrate_phase(f, a, b, opts);
  if (!q.within_budget) throw BudgetExceeded("vdc_stationary: quadrature panel budget exceeded");
  VdcResult r;
  r.integral = q.value;
  r.quadrature_error = q.error_estimate;
  double x_star = -C2 / C1;
  double half = 1.0 / std::sqrt(std::fabs(C1 * A));
  r.window_length = std::max(0.0, std::min(b, x_star + half) - std::max(a, x_star - half));
  r.window_bound = 2.0 * B * std::pow(A, -1.5) / std::sqrt(std::fabs(C1));
  r.bound = K * (1.0 + (b - a)) * B * std::pow(A, -1.5) / std::sqrt(std::fabs(C1));
  r.pass = std::abs(r.integral) < r.bound;
  return r;
}

double stationary_constant_from_proof() { return 2.0 + 3.0 / boost::math::constants::pi<double>(); }

}  // namespace exorder

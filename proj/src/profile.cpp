#include "exorder/profile.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace exorder {

double tau_threshold() { return (13.0 + std::sqrt(73.0)) / 8.0; }

ApproxProfile ApproxProfile::power(double tau) {
  if (!std::isfinite(tau)) throw std::invalid_argument("power profile: tau must be finite");
  ApproxProfile p;
  p.form_ = ProfileForm::power;
  p.tau_ = tau;
  p.tau_limit_ = tau;
  return p;
}

ApproxProfile ApproxProfile::power_log(double tau, double log_exp) {
  if (!std::isfinite(tau) || !std::isfinite(log_exp)) throw std::invalid_argument("power_log profile: non-finite parameter");
  ApproxProfile p;
  p.form_ = ProfileForm::power_log;
  p.tau_ = tau;
  p.log_exp_ = log_exp;
  p.tau_limit_ = tau;
  return p;
}

ApproxProfile ApproxProfile::custom(std::vector<PsiPoint> table, std::optional<double> tau_limit) {
  if (table.size() < 2) throw std::invalid_argument("custom profile needs at least two table points");
  std::sort(table.begin(), table.end(), [](const PsiPoint& a, const PsiPoint& b) { return a.q < b.q; });
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table[i].q < 1) throw std::invalid_argument("custom profile: q must be >= 1");
    if (sgn(table[i].psi) <= 0) throw std::invalid_argument("custom profile: psi must be positive");
    if (i > 0 && table[i].q == table[i - 1].q) throw std::invalid_argument("custom profile: duplicate q");
  }
  ApproxProfile p;
  p.form_ = ProfileForm::custom;
  p.table_ = std::move(table);
  for (const PsiPoint& pt : p.table_) {
    p.table_log_q_.push_back(log_of(pt.q));
    p.table_log_psi_.push_back(log_of(pt.psi));
  }
  std::size_t n = p.table_.size();
  double slope = (p.table_log_psi_[n - 1] - p.table_log_psi_[n - 2]) / (p.table_log_q_[n - 1] - p.table_log_q_[n - 2]);
  p.tau_limit_ = tau_limit ? *tau_limit : -slope;
  p.tau_ = p.tau_limit_;
  return p;
}

Interval ApproxProfile::log_psi(const BigInt& q, mpfr_prec_t prec) const {
  if (q < 1) throw std::domain_error("psi: q must be >= 1");
  Interval lq = log(Interval::of(q, prec));
  switch (form_) {
    case ProfileForm::power:
      return -(Interval::point(tau_, prec) * lq);
    case ProfileForm::power_log: {
      Interval one = Interval::of(BigInt(1), prec);
      return -(Interval::point(tau_, prec) * lq) - Interval::point(log_exp_, prec) * log(one + lq);
    }
    case ProfileForm::custom: {
      for (const PsiPoint& pt : table_) {
        if (pt.q == q) return log(Interval::of(pt.psi, prec));
      }
      std::size_t n = table_.size();
      std::size_t i = 0;
      if (q > table_[n - 1].q) {
        i = n - 2;
      } else {
        while (i + 2 < n && table_[i + 1].q < q) ++i;
      }
      Interval lq0 = log(Interval::of(table_[i].q, prec));
      Interval lq1 = log(Interval::of(table_[i + 1].q, prec));
      Interval lp0 = log(Interval::of(table_[i].psi, prec));
      Interval lp1 = log(Interval::of(table_[i + 1].psi, prec));
      return lp0 + (lq - lq0) * (lp1 - lp0) / (lq1 - lq0);
    }
  }
  throw std::logic_error("unknown profile form");
}

Interval ApproxProfile::psi(const BigInt& q, mpfr_prec_t prec) const { return exp(log_psi(q, prec)); }

Interval ApproxProfile::log_rho(const BigInt& q, mpfr_prec_t prec) const {
  if (q < 1) throw std::domain_error("rho: q must be >= 1");
  Interval lq = log(Interval::of(q, prec));
  if (form_ == ProfileForm::power) {
    return (Interval::point(tau_, prec) - Interval::point(2.0, prec)) * lq;
  }
  return -(Interval::point(2.0, prec) * lq) - log_psi(q, prec);
}

Interval ApproxProfile::rho(const BigInt& q, mpfr_prec_t prec) const { return exp(log_rho(q, prec)); }

Interval rho(const ApproxProfile& profile, const BigInt& q, mpfr_prec_t prec) { return profile.rho(q, prec); }

double ApproxProfile::log_psi_approx(double log_q) const {
  switch (form_) {
    case ProfileForm::power:
      return -tau_ * log_q;
    case ProfileForm::power_log:
      return -tau_ * log_q - log_exp_ * std::log1p(log_q);
    case ProfileForm::custom: {
      std::size_t n = table_.size();
      std::size_t i = 0;
      if (log_q > table_log_q_[n - 1]) {
        i = n - 2;
      } else {
        while (i + 2 < n && table_log_q_[i + 1] < log_q) ++i;
      }
      double t = (log_q - table_log_q_[i]) / (table_log_q_[i + 1] - table_log_q_[i]);
      return table_log_psi_[i] + t * (table_log_psi_[i + 1] - table_log_psi_[i]);
    }
  }
  return 0.0;
}

ProfileFlags ApproxProfile::validate(double log_qmax, int grid_points) const {
  ProfileFlags flags;
  if (form_ == ProfileForm::custom) {
    for (const PsiPoint& pt : table_) {
      if (sgn(pt.psi) <= 0) flags.psi_positive = false;
      if (pt.q * pt.q * pt.psi > 1) {
        flags.q2psi_le_one = false;
        flags.notes.push_back("q^2 psi(q) > 1 at table point q=" + to_decimal(pt.q));
      }
    }
  }
  std::vector<double> vals;
  for (int i = 0; i < grid_points; ++i) {
    double lq = log_qmax * i / (grid_points - 1);
    double v = 2.0 * lq + log_psi_approx(lq);
    vals.push_back(v);
    if (v > 1e-12 && flags.q2psi_le_one) {
      flags.q2psi_le_one = false;
      flags.notes.push_back("q^2 psi(q) > 1 near log q = " + fmt17(lq));
    }
  }
  for (std::size_t i = 1; i < vals.size(); ++i) {
    if (vals[i] > vals[i - 1] + 1e-12) {
      flags.q2psi_to_zero = false;
      flags.notes.push_back("q^2 psi(q) increases near log q = " + fmt17(log_qmax * i / (grid_points - 1)));
      break;
    }
  }
  if (flags.q2psi_to_zero && !(vals.back() < vals.front() - 1.0)) {
    flags.q2psi_to_zero = false;
    flags.notes.push_back("q^2 psi(q) does not decay on the scanned range (rho stays bounded)");
  }
  if (tau_limit_ < 2.0) {
    flags.tau_in_range = false;
    flags.notes.push_back("tau limit below 2");
  } else if (!(tau_limit_ < tau_threshold())) {
    flags.tau_in_range = false;
    flags.notes.push_back("tau limit " + fmt17(tau_limit_) + " is not below (13+sqrt 73)/8");
  }
  return flags;
}

std::string ApproxProfile::describe() const {
  std::ostringstream os;
  switch (form_) {
    case ProfileForm::power: os << "power(tau=" << fmt17(tau_) << ")"; break;
    case ProfileForm::power_log: os << "power_log(tau=" << fmt17(tau_) << ", log_exp=" << fmt17(log_exp_) << ")"; break;
    case ProfileForm::custom: os << "custom(" << table_.size() << " points, tau_limit=" << fmt17(tau_limit_) << ")"; break;
  }
  return os.str();
}

namespace {

// -1: r below the interval, +1: above, 0: undecided at every tried precision.
template <class F>
int place(const Rational& r, F&& enclosure) {
  for (mpfr_prec_t prec = 128; prec <= 8192; prec *= 2) {
    Interval iv = enclosure(prec);
    if (mpfr_cmp_q(iv.lo().get(), r.get_mpq_t()) > 0) return -1;
    if (mpfr_cmp_q(iv.hi().get(), r.get_mpq_t()) < 0) return +1;
  }
  return 0;
}

Rational abs_diff(const Rational& a, const Rational& b) {
  Rational d = a - b;
  return sgn(d) < 0 ? Rational(-d) : d;
}

}  // namespace

HitWitness check_exceptional_hit(const FiniteCF& prefix, const BigInt& b, double eta, const ApproxProfile& profile,
                           const BigInt& q1_threshold) {
  HitWitness w;
  if (prefix.empty()) throw std::invalid_argument("check_exceptional_hit: empty prefix");
  if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("check_exceptional_hit: eta must lie in (0, 1]");
  const BigInt& q = prefix.K();
  if (q <= q1_threshold) {
    w.status = WitnessStatus::precondition_violated;
    w.detail = "q_n = " + to_decimal(q) + " is not above Q1 = " + to_decimal(q1_threshold);
    return w;
  }
  Rational e = rational_from_double(eta);
  Rational f_lo = 1 + e / 100, f_hi = 1 + e / 50;
  Rational b_over_lo = Rational(b) / f_lo, b_over_hi = Rational(b) / f_hi;
  // need b/f_lo > rho and b/f_hi < rho
  int s1 = place(b_over_lo, [&](mpfr_prec_t pr) { return profile.rho(q, pr); });
  int s2 = place(b_over_hi, [&](mpfr_prec_t pr) { return profile.rho(q, pr); });
  if (s1 != +1 || s2 != -1) {
    w.status = WitnessStatus::precondition_violated;
    w.detail = "b is not certified inside ((1+eta/100) rho, (1+eta/50) rho)";
    return w;
  }

  Rational conv(prefix.p(), q);
  conv.canonicalize();
  Rational closed((b * prefix.p() + prefix.pprime()), (b * q + prefix.Kprime()));
  Rational open(((b + 1) * prefix.p() + prefix.pprime()), ((b + 1) * q + prefix.Kprime()));
  closed.canonicalize();
  open.canonicalize();
  int side_closed = sgn(Rational(closed - conv)), side_open = sgn(Rational(open - conv));
  w.monotone = side_closed != 0 && side_closed == side_open;
  Rational g_closed = abs_diff(closed, conv), g_open = abs_diff(open, conv);
  w.gap_far = std::max(g_closed, g_open);
  w.gap_near = std::min(g_closed, g_open);
  w.psi = profile.psi(q).mid_double();

  w.upper_ok = place(w.gap_far, [&](mpfr_prec_t pr) { return profile.psi(q, pr); }) == -1;
  Rational scale = 1 - e / 10;
  w.lower_ok = place(w.gap_near / scale, [&](mpfr_prec_t pr) { return profile.psi(q, pr); }) == +1;

  BigInt q_next = b * q + prefix.Kprime();
  Rational qn1(q_next);
  int t1 = place(qn1 / (Rational(q) * f_lo), [&](mpfr_prec_t pr) { return profile.rho(q, pr); });
  int t2 = place(qn1 / (Rational(q) * (1 + e / 40)), [&](mpfr_prec_t pr) { return profile.rho(q, pr); });
  w.next_denominator_ok = t1 == +1 && t2 == -1;

  bool ok = w.monotone && w.upper_ok && w.lower_ok;
  w.status = ok ? WitnessStatus::holds : WitnessStatus::fails;
  if (!ok) {
    w.detail = std::string(w.monotone ? "" : "distance not monotone on the cylinder; ") + (w.upper_ok ? "" : "upper bound psi violated; ") +
               (w.lower_ok ? "" : "lower bound (1-eta/10) psi violated");
  }
  return w;
}

MissWitness check_bounded_miss(const FiniteCF& prefix, long a, long N) {
  if (a < 1 || a > N) throw std::invalid_argument("check_bounded_miss: a must lie in [1, N]");
  if (prefix.empty()) throw std::invalid_argument("check_bounded_miss: empty prefix");
  MissWitness w;
  const BigInt& q = prefix.K();
  Rational conv(prefix.p(), q);
  conv.canonicalize();
  Rational closed((a * prefix.p() + prefix.pprime()), (a * q + prefix.Kprime()));
  Rational open(((a + 1) * prefix.p() + prefix.pprime()), ((a + 1) * q + prefix.Kprime()));
  closed.canonicalize();
  open.canonicalize();
  w.bound = Rational(BigInt(1), (N + 2) * q * q);
  w.bound.canonicalize();
  w.gap_closed = abs_diff(closed, conv);
  w.gap_open = abs_diff(open, conv);
  bool ok = w.gap_closed > w.bound && w.gap_open >= w.bound;
  w.status = ok ? WitnessStatus::holds : WitnessStatus::fails;
  Rational m = std::min(w.gap_closed, w.gap_open) / w.bound - 1;
  w.margin = m.get_d();
  return w;
}

bool bounded_miss_holds_fast(const FiniteCF& prefix, long a, long N) {
  if (a < 1 || a > N) throw std::invalid_argument("bounded_miss_holds_fast: a must lie in [1, N]");
  const BigInt& p = prefix.p();
  const BigInt& q = prefix.K();
  auto gap_ok = [&](long c, bool strict) {
    BigInt A = c * p + prefix.pprime();
    BigInt B = c * q + prefix.Kprime();
    BigInt num = A * q - p * B;
    if (sgn(num) < 0) num = -num;
    // |A/B - p/q| = num/(B q) against 1/((N+2) q^2)  <=>  (N+2) q num vs B
    BigInt lhs = (N + 2) * q * num;
    return strict ? lhs > B : lhs >= B;
  };
  return gap_ok(a, true) && gap_ok(a + 1, false);
}

namespace {

struct GapBracket {
  // gap in [lo_num/lo_den, hi_num/hi_den]
  BigInt lo_num, lo_den, hi_num, hi_den;
};

// min over p of |x - p/q| for all x in [L, H] (L = ln/ld, H = hn/hd).
GapBracket gap_bracket(std::uint64_t q, const BigInt& ln, const BigInt& ld, const BigInt& hn, const BigInt& hd,
                       BigInt& scratch_t, BigInt& scratch_p) {
  auto nearest = [&](const BigInt& n, const BigInt& d, BigInt& out) {
    mpz_mul_ui(scratch_t.get_mpz_t(), n.get_mpz_t(), q);
    BigInt twice = 2 * scratch_t + d;
    BigInt den2 = 2 * d;
    mpz_fdiv_q(out.get_mpz_t(), twice.get_mpz_t(), den2.get_mpz_t());
  };
  BigInt p1, p2;
  nearest(ln, ld, p1);
  nearest(hn, hd, p2);
  GapBracket best;
  bool first = true;
  for (const BigInt* pc : {&p1, &p2}) {
    if (!first && *pc == p1) break;
    // distances at both ends: |q*n - p*d| / (q*d)
    auto dist = [&](const BigInt& n, const BigInt& d, BigInt& num, BigInt& den) {
      mpz_mul_ui(scratch_t.get_mpz_t(), n.get_mpz_t(), q);
      scratch_p = *pc * d;
      num = scratch_t - scratch_p;
      int s = sgn(num);
      if (s < 0) num = -num;
      mpz_mul_ui(den.get_mpz_t(), d.get_mpz_t(), q);
      return s;
    };
    BigInt n1, d1, n2, d2;
    int s1 = dist(ln, ld, n1, d1);
    int s2 = dist(hn, hd, n2, d2);
    GapBracket g;
    bool lo_first = n1 * d2 <= n2 * d1;
    g.hi_num = lo_first ? n2 : n1;
    g.hi_den = lo_first ? d2 : d1;
    if (s1 != 0 && s2 != 0 && s1 != s2) {
      g.lo_num = 0;
      g.lo_den = 1;
    } else {
      g.lo_num = lo_first ? n1 : n2;
      g.lo_den = lo_first ? d1 : d2;
    }
    if (first) {
      best = g;
    } else {
      if (g.lo_num * best.lo_den < best.lo_num * g.lo_den) { best.lo_num = g.lo_num; best.lo_den = g.lo_den; }
      if (g.hi_num * best.hi_den < best.hi_num * g.hi_den) { best.hi_num = g.hi_num; best.hi_den = g.hi_den; }
    }
    first = false;
  }
  return best;
}

double log_ratio(const BigInt& num, const BigInt& den) {
  if (sgn(num) == 0) return -INFINITY;
  return log_of(num) - log_of(den);
}

// +1: value certainly above scale*psi(q); -1: certainly below; 0: undecided.
int compare_to_psi(const BigInt& num, const BigInt& den, std::uint64_t q, const ApproxProfile& profile,
                   const Rational& scale, double log_scale) {
  double lv = log_ratio(num, den);
  double lpsi = profile.log_psi_approx(std::log(static_cast<double>(q))) + log_scale;
  if (lv < lpsi - 1e-9) return -1;
  if (lv > lpsi + 1e-9) return +1;
  if (sgn(num) == 0) return -1;
  Rational v(num, den);
  v.canonicalize();
  v /= scale;
  int s = place(v, [&](mpfr_prec_t pr) { return profile.psi(BigInt(static_cast<unsigned long>(q)), pr); });
  return s;
}

}  // namespace

ExactnessReport exactness_scan(const FiniteCF& x, const ApproxProfile& profile, double c, std::uint64_t qmax,
                               std::uint64_t q_lower_threshold) {
  if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("exactness_scan: c must lie in (0, 1)");
  if (qmax < 1) throw std::invalid_argument("exactness_scan: Qmax must be >= 1");
  BigInt qmax2 = BigInt(static_cast<unsigned long>(qmax)) * BigInt(static_cast<unsigned long>(qmax));
  if (x.K() <= qmax2) {
    throw std::invalid_argument("exactness_scan: insufficient depth, K(x) = " + to_decimal(x.K()) +
                                " does not exceed Qmax^2");
  }
  std::vector<BigInt> qs = x.quotients();
  FiniteCF trunc;
  std::vector<FiniteCF> convergents;
  for (const BigInt& c_k : qs) {
    trunc = trunc.extend(c_k);
    convergents.push_back(trunc);
    if (trunc.K() > qmax2) break;
  }
  CylinderInterval br = cylinder(trunc);
  BigInt ln = br.lo.get_num(), ld = br.lo.get_den(), hn = br.hi.get_num(), hd = br.hi.get_den();

  ExactnessReport rep;
  Rational one(1);
  Rational lower_scale = 1 - rational_from_double(c);
  double log_lower_scale = std::log1p(-c);
  BigInt st, sp;
  for (std::uint64_t q = 1; q <= qmax; ++q) {
    GapBracket g = gap_bracket(q, ln, ld, hn, hd, st, sp);
    // hit: gap <= psi for every x in the bracket
    if (q <= q_lower_threshold) continue;
    int hi_vs = compare_to_psi(g.hi_num, g.hi_den, q, profile, one, 0.0);
    if (hi_vs == -1) {
      ++rep.hits;
    } else {
      int lo_vs = compare_to_psi(g.lo_num, g.lo_den, q, profile, one, 0.0);
      if (lo_vs != +1) ++rep.undetermined;
    }
    {
      int lo_vs = compare_to_psi(g.lo_num, g.lo_den, q, profile, lower_scale, log_lower_scale);
      if (lo_vs != +1) {
        int hi2 = compare_to_psi(g.hi_num, g.hi_den, q, profile, lower_scale, log_lower_scale);
        if (hi2 == -1) {
          if (rep.lower_violations == 0) rep.first_lower_violation = q;
          ++rep.lower_violations;
        } else {
          ++rep.undetermined;
        }
      }
    }
  }
  rep.q_checked = qmax;
  rep.verdict_upper = rep.hits > 0;
  rep.verdict_lower = rep.lower_violations == 0;

  for (std::size_t n = 0; n < convergents.size(); ++n) {
    const BigInt& qn = convergents[n].K();
    if (qn > BigInt(static_cast<unsigned long>(qmax))) break;
    std::uint64_t qv = qn.get_ui();
    GapBracket g = gap_bracket(qv, ln, ld, hn, hd, st, sp);
    ConvergentEntry e;
    e.n = n;
    e.q = qn;
    e.gap_lo = Rational(g.lo_num, g.lo_den);
    e.gap_hi = Rational(g.hi_num, g.hi_den);
    e.gap_lo.canonicalize();
    e.gap_hi.canonicalize();
    Interval ps = profile.psi(qn, 256);
    e.psi_lo = ps.lo_double();
    e.psi_hi = ps.hi_double();
    int hi_vs = compare_to_psi(g.hi_num, g.hi_den, qv, profile, one, 0.0);
    int lo_vs = compare_to_psi(g.lo_num, g.lo_den, qv, profile, one, 0.0);
    e.cls = hi_vs == -1 ? ApproxClass::exceptional_hit : (lo_vs == +1 ? ApproxClass::typical_miss : ApproxClass::undetermined);
    if (e.cls == ApproxClass::exceptional_hit) rep.verdict_upper_convergents = true;
    rep.per_convergent.push_back(std::move(e));
  }
  return rep;
}

}  // namespace exorder

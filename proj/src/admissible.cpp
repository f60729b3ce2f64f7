#include "exorder/admissible.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace exorder {

bool Schedule::validated() const {
  return std::all_of(growth_checks.begin(), growth_checks.end(), [](const GrowthCheck& c) { return c.passed; });
}

bool Schedule::feasible() const {
  return std::all_of(growth_checks.begin(), growth_checks.end(),
                     [](const GrowthCheck& c) { return c.passed || !c.required; });
}

std::vector<std::string> Schedule::failed_checks(bool required_only) const {
  std::vector<std::string> out;
  for (const GrowthCheck& c : growth_checks) {
    if (!c.passed && (c.required || !required_only)) out.push_back(c.name + ": " + c.detail);
  }
  return out;
}

AdmissibleSeq AdmissibleSeq::from_tokens(std::vector<Token> tokens) {
  AdmissibleSeq s;
  for (Token& t : tokens) {
    if (t.exceptional) s.push_exceptional(t.b);
    else s.push_block(t.block);
  }
  return s;
}

AdmissibleSeq AdmissibleSeq::with_block(const std::vector<int>& block) const {
  AdmissibleSeq s = *this;
  s.push_block(block);
  return s;
}

AdmissibleSeq AdmissibleSeq::with_exceptional(const BigInt& b) const {
  AdmissibleSeq s = *this;
  s.push_exceptional(b);
  return s;
}

void AdmissibleSeq::push_block(const std::vector<int>& block) {
  Token t;
  t.block = block;
  tokens.push_back(std::move(t));
  cf = cf.extend_block(block);
}

void AdmissibleSeq::push_exceptional(const BigInt& b) {
  Token t;
  t.exceptional = true;
  t.b = b;
  tokens.push_back(std::move(t));
  cf = cf.extend(b);
}

std::size_t AdmissibleSeq::block_count() const {
  return static_cast<std::size_t>(std::count_if(tokens.begin(), tokens.end(), [](const Token& t) { return !t.exceptional; }));
}

std::size_t AdmissibleSeq::exceptional_count() const { return tokens.size() - block_count(); }

SeqKind AdmissibleSeq::kind() const {
  return !tokens.empty() && tokens.back().exceptional ? SeqKind::b_seq : SeqKind::a_seq;
}

bool AdmissibleSeq::terminal(const Schedule& sched) const {
  if (kind() != SeqKind::a_seq || tokens.empty()) return false;
  std::size_t k = exceptional_count();
  return k < sched.levels() && static_cast<long>(block_count()) == sched.jk[k];
}

std::string AdmissibleSeq::describe() const {
  std::ostringstream os;
  os << "(";
  bool first = true;
  for (const Token& t : tokens) {
    if (!first) os << " | ";
    first = false;
    if (t.exceptional) {
      std::string d = to_decimal(t.b);
      if (d.size() > 24) os << "b~1e" << d.size() - 1;
      else os << "b=" << d;
    } else {
      for (std::size_t i = 0; i < t.block.size(); ++i) os << (i ? "," : "") << t.block[i];
    }
  }
  os << ")";
  return os.str();
}

double ExceptionalInterval::log_count() const {
  if (empty()) return -INFINITY;
  return log_of(count());
}

namespace {

constexpr mpfr_prec_t kMaxPrec = 1 << 17;

mpfr_prec_t starting_precision(const FiniteCF& G) {
  return static_cast<mpfr_prec_t>(bit_length(G.K()) + 128);
}

struct EtaFactors {
  Rational eta, u, lo_factor, hi_factor, gamma_factor;
};

EtaFactors eta_factors(double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("eta must lie in (0, 1]");
  EtaFactors f;
  f.eta = rational_from_double(eta);
  f.u = 1 + f.eta / 1000;
  f.lo_factor = 1 + f.eta / 100;
  f.hi_factor = 1 + f.eta / 50;
  f.gamma_factor = 1 + f.eta / 75;
  return f;
}

}  // namespace

long long gamma_eta(const FiniteCF& G, double eta, const ApproxProfile& profile) {
  if (G.K() < 2) throw std::invalid_argument("gamma_eta: K(G) must be >= 2");
  EtaFactors f = eta_factors(eta);
  for (mpfr_prec_t prec = starting_precision(G); prec <= kMaxPrec; prec *= 2) {
    Interval num = profile.log_rho(G.K(), prec) + log(Interval::of(f.gamma_factor, prec));
    Interval den = log(Interval::of(f.u, prec));
    Interval ratio = num / den;
    std::optional<BigInt> fl = ratio.certain_floor();
    if (fl) {
      if (!fl->fits_slong_p()) throw std::overflow_error("gamma_eta: exponent does not fit in 64 bits");
      return fl->get_si();
    }
  }
  throw FloorUncertain("gamma_eta: floor uncertain at working precision " + std::to_string(kMaxPrec) + " bits");
}

ExceptionalInterval exceptional_interval(const FiniteCF& G, double eta, const ApproxProfile& profile) {
  EtaFactors f = eta_factors(eta);
  ExceptionalInterval out;
  out.gamma = gamma_eta(G, eta, profile);
  for (mpfr_prec_t prec = starting_precision(G); prec <= kMaxPrec; prec *= 2) {
    Interval lu = log(Interval::of(f.u, prec));
    Interval g0 = Interval::of(BigInt(static_cast<long>(out.gamma)), prec);
    Interval g1 = Interval::of(BigInt(static_cast<long>(out.gamma + 1)), prec);
    Interval lo_end = exp(g0 * lu);
    Interval hi_end = exp(g1 * lu);
    std::optional<BigInt> c0 = lo_end.certain_ceil();
    std::optional<BigInt> c1 = hi_end.certain_ceil();
    if (!c0 || !c1) continue;
    // an integer endpoint would make the half-open window ambiguous under rounding
    if (lo_end.contains(Rational(*c0)) || hi_end.contains(Rational(*c1))) continue;
    Interval rho = profile.rho(G.K(), prec);
    Interval lower_wall = rho * Interval::of(f.lo_factor, prec);
    Interval upper_wall = rho * Interval::of(f.hi_factor, prec);
    out.lo = *c0;
    out.hi = *c1 - 1;
    out.contained = certainly_less(lower_wall, lo_end) && certainly_less(hi_end, upper_wall);
    out.log_rho = profile.log_rho(G.K(), 128).mid_double();
    out.log_lo_end = (g0 * lu).mid_double();
    out.log_hi_end = (g1 * lu).mid_double();
    return out;
  }
  throw FloorUncertain("exceptional_interval: endpoints not resolved at working precision");
}

ExceptionalInterval exceptional_choices(const FiniteCF& G, std::size_t k, const Schedule& sched,
                                        const ApproxProfile& profile) {
  if (k < 1 || k > sched.levels()) throw std::invalid_argument("exceptional_choices: stage out of range");
  ExceptionalInterval t = exceptional_interval(G, sched.etak[k - 1], profile);
  if (t.empty()) {
    throw EmptyExceptionalSet("schedule too aggressive: rho too small at j_" + std::to_string(k) + " (rho ~ e^" +
                              fmt17(t.log_rho) + ", T_" + std::to_string(k) + " empty); grow j_" + std::to_string(k));
  }
  return t;
}

std::optional<std::string> admissibility_violation(const AdmissibleSeq& seq, const Schedule& sched,
                                                   const ApproxProfile& profile, const BlockMeasure* nu_bar) {
  FiniteCF prefix;
  std::size_t j = 0, k = 0;
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    const Token& t = seq.tokens[i];
    bool due = k < sched.levels() && static_cast<long>(j) == sched.jk[k];
    if (t.exceptional) {
      if (!due) return "exceptional entry at token " + std::to_string(i) + " is not at a scheduled position";
      ExceptionalInterval T = exceptional_interval(prefix, sched.etak[k], profile);
      if (t.b < T.lo || t.b > T.hi) return "b_" + std::to_string(k + 1) + " outside T_" + std::to_string(k + 1);
      prefix = prefix.extend(t.b);
      ++k;
    } else {
      if (due) return "block at token " + std::to_string(i) + " where b_" + std::to_string(k + 1) + " is due";
      if (static_cast<long>(t.block.size()) != sched.p()) return "block at token " + std::to_string(i) + " has wrong length";
      for (int c : t.block) {
        if (c < 1 || c > sched.N) return "block entry outside [1, N] at token " + std::to_string(i);
      }
      if (nu_bar != nullptr && nu_bar->find(t.block) == BlockMeasure::npos) {
        return "block at token " + std::to_string(i) + " outside the support";
      }
      prefix = prefix.extend_block(t.block);
      ++j;
    }
  }
  if (prefix.K() != seq.cf.K() || prefix.Kprime() != seq.cf.Kprime()) return "cached continued fraction out of sync";
  return std::nullopt;
}

GrowthReport verify_growth(const AdmissibleSeq& seq, const Schedule& sched, bool keep_margins) {
  GrowthReport r;
  const double s = sched.sigma, eps = sched.epsilon, tau = sched.tau;
  FiniteCF prefix;
  std::size_t j = 0, k = 0;
  auto fail = [&](const std::string& what) {
    if (r.falsified.empty()) r.falsified = what;
  };
  for (const Token& t : seq.tokens) {
    if (t.exceptional) {
      FiniteCF before = prefix;
      prefix = prefix.extend(t.b);
      ++k;
      double jk = static_cast<double>(sched.j_at(k));
      double lk = log_of(prefix.K());
      double dev = std::fabs(lk - (tau - 1.0) * jk * s);
      double bound = 0.5 * eps * jk * s;
      r.worst_spade = std::max(r.worst_spade, dev / bound);
      if (!(dev < bound)) {
        r.spade = false;
        fail("spade at k=" + std::to_string(k));
      }
      double step = std::fabs(lk - log_of(t.b) - log_of(before.K()));
      if (!(step <= 1.0)) {
        r.spade_step = false;
        fail("spade step at k=" + std::to_string(k));
      }
      if (keep_margins) r.margins.push_back({"spade", j, k, dev, bound});
    } else {
      prefix = prefix.extend_block(t.block);
      ++j;
      double jk = static_cast<double>(sched.j_at(k));
      double lk = log_of(prefix.K());
      double dev = std::fabs(lk - (static_cast<double>(j) + (tau - 2.0) * jk) * s);
      double base = eps * static_cast<double>(j) * s;
      bool term = k < sched.levels() && static_cast<long>(j) == sched.jk[k];
      r.worst_heart = std::max(r.worst_heart, dev / base);
      if (!(dev < base)) {
        r.heart_base = false;
        r.heart = false;
        fail("heart at j=" + std::to_string(j) + ", k=" + std::to_string(k));
      }
      if (term) {
        double sharp = base / 100.0;
        r.worst_terminal = std::max(r.worst_terminal, dev / sharp);
        if (!(dev < sharp)) {
          r.heart = false;
          fail("heart-terminal at j=" + std::to_string(j) + ", k=" + std::to_string(k));
        }
        if (keep_margins) r.margins.push_back({"heart-terminal", j, k, dev, sharp});
      } else if (keep_margins) {
        r.margins.push_back({"heart", j, k, dev, base});
      }
    }
  }
  return r;
}

double log_K_floor(const BlockMeasure& nu_bar, long j) {
  if (j <= 0) return 0.0;
  double first = INFINITY, inner = INFINITY;
  for (std::size_t i = 0; i < nu_bar.size(); ++i) {
    const std::uint8_t* w = nu_bar.block_ptr(i);
    first = std::min(first, log_interior_continuant(w + 1, nu_bar.length - 1));
    inner = std::min(inner, nu_bar.log_K[i]);
  }
  return first + static_cast<double>(j - 1) * inner;
}

namespace {

GrowthCheck make_check(std::string name, std::string origin, bool required, bool passed, double lhs, double rhs,
                       std::string detail) {
  GrowthCheck c;
  c.name = std::move(name);
  c.origin = std::move(origin);
  c.required = required;
  c.passed = passed;
  c.lhs = lhs;
  c.rhs = rhs;
  c.detail = std::move(detail);
  return c;
}

// log of the guaranteed width of the exceptional window at scale rho: rho (1+eta/75)(eta/1000)/(1+eta/1000)
double log_window_width(double log_rho, double eta) {
  return log_rho + std::log1p(eta / 75.0) + std::log(eta / 1000.0) - std::log1p(eta / 1000.0);
}

}  // namespace

Schedule default_schedule(const ApproxProfile& profile, const BlockMeasure& nu_bar, const ScheduleOptions& opts) {
  if (nu_bar.level != BlockLevel::nu_bar) throw std::invalid_argument("default_schedule: expects a nu_bar measure");
  if (nu_bar.N < 2) throw std::invalid_argument("default_schedule: N must be >= 2");
  if (opts.levels < 1) throw std::invalid_argument("default_schedule: need at least one exceptional level");
  const double eps = opts.epsilon;
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("default_schedule: epsilon must lie in (0, 1)");
  if (std::fabs(eps - nu_bar.epsilon) > 1e-15) {
    throw std::invalid_argument("default_schedule: epsilon differs from the block measure's epsilon");
  }

  Schedule s;
  s.N = nu_bar.N;
  s.m = nu_bar.m;
  s.J = nu_bar.J;
  s.epsilon = eps;
  s.tau = profile.tau_limit();
  s.sigma = nu_bar.sigma;
  s.concentration = nu_bar.concentration;

  ProfileFlags flags = profile.validate();
  if (!flags.q2psi_to_zero) {
    throw InfeasibleSchedule("rho(q) = 1/(q^2 psi(q)) does not tend to infinity (lim rho = inf fails): " +
                             (flags.notes.empty() ? std::string() : flags.notes.front()));
  }
  s.growth_checks.push_back(make_check("rho-unbounded", "exceptional windows must eventually hold integers", true,
                                       flags.q2psi_to_zero, 0, 0, "q^2 psi(q) decays on the scanned grid"));
  s.growth_checks.push_back(make_check("q2psi-le-one", "profile hypothesis q^2 psi(q) <= 1", true, flags.q2psi_le_one,
                                       0, 0, flags.q2psi_le_one ? "holds on grid" : flags.notes.front()));
  s.growth_checks.push_back(make_check("tau-range", "profile hypothesis 2 <= tau < (13+sqrt 73)/8", false,
                                       flags.tau_in_range, s.tau, tau_threshold(), "tau limit vs threshold"));

  double cn = gluing_constant(s.N);
  double need_sigma = 500.0 * cn / eps;
  s.growth_checks.push_back(make_check("sigma-vs-gluing", "first-stage growth: sigma >= 500 C_N / eps", false,
                                       s.sigma >= need_sigma, s.sigma, need_sigma,
                                       "block length large enough to absorb the gluing constant"));
  double strict_window = eps / 500.0;
  s.growth_checks.push_back(make_check("concentration-window", "block concentration |log K - sigma| < (eps/500) sigma",
                                       false, s.concentration <= strict_window, s.concentration, strict_window,
                                       "relative window used to build the block measure"));
  if (opts.dim_lower && opts.dim_upper) {
    bool ok = 1.0 - eps < *opts.dim_lower && *opts.dim_upper < 1.0 - eps / 10.0;
    s.growth_checks.push_back(make_check("dim-bad-window", "1 - eps < dim Bad(N) < 1 - eps/10", false, ok,
                                         *opts.dim_lower, 1.0 - eps,
                                         "bracket [" + fmt17(*opts.dim_lower) + ", " + fmt17(*opts.dim_upper) + "]"));
  }

  // j_1: smallest block count at which every first-stage prefix has a nonempty exceptional window
  double min_inner = INFINITY;
  for (double lk : nu_bar.log_K) min_inner = std::min(min_inner, lk);
  double eta1 = opts.eta_ratio;
  long j1 = 0;
  double lk1 = 0.0;
  for (long j = 1; j <= opts.max_j1; ++j) {
    double lk = log_K_floor(nu_bar, j);
    if (lk <= std::log(2.0)) continue;
    double lr = profile.log_rho_approx(lk);
    if (log_window_width(lr, eta1) >= 1e-9 && lr >= std::log(200.0 / eta1)) {
      j1 = j;
      lk1 = lk;
      break;
    }
  }
  if (j1 == 0) throw InfeasibleSchedule("no j_1 <= " + std::to_string(opts.max_j1) + " makes T_1 nonempty");

  double slope = profile.log_rho_approx(lk1) / lk1;
  s.growth_checks.push_back(make_check("rho-slope", "exceptional growth log rho(K) ~ (tau-2) log K at j_1", false,
                                       std::fabs(slope - (s.tau - 2.0)) <= eps / 4.0, slope, s.tau - 2.0,
                                       "log rho(q)/log q at the smallest first-stage continuant"));

  s.jk.push_back(j1);
  for (std::size_t k = 1; k < opts.levels; ++k) {
    long prev = s.jk.back();
    double by_ratio = std::floor(100.0 * (s.tau - 2.0) * static_cast<double>(prev) / eps) + 1.0;
    double sq = static_cast<double>(prev) * static_cast<double>(prev);
    double next = std::max({sq, by_ratio, static_cast<double>(prev + 1)});
    if (next > 1e15) throw InfeasibleSchedule("j_k overflows at level " + std::to_string(k + 1));
    s.jk.push_back(static_cast<long>(next));
  }
  for (std::size_t k = 0; k < opts.levels; ++k) s.etak.push_back(std::pow(opts.eta_ratio, static_cast<double>(k + 1)));

  bool incr = true;
  for (std::size_t k = 1; k < s.jk.size(); ++k) incr = incr && s.jk[k] > s.jk[k - 1];
  s.growth_checks.push_back(make_check("jk-increasing", "schedule", true, incr, 0, 0, "j_k strictly increasing"));
  bool eta_dec = true;
  for (std::size_t k = 1; k < s.etak.size(); ++k) eta_dec = eta_dec && s.etak[k] < s.etak[k - 1];
  s.growth_checks.push_back(make_check("eta-decreasing", "schedule", true, eta_dec && s.etak.front() <= 1.0, 0, 0,
                                       "eta_k strictly decreasing in (0, 1]"));
  for (std::size_t k = 1; k < s.jk.size(); ++k) {
    double lhs = (s.tau - 2.0) * static_cast<double>(s.jk[k - 1]) * s.sigma;
    double rhs = eps / 100.0 * static_cast<double>(s.jk[k]) * s.sigma;
    s.growth_checks.push_back(make_check("jk-ratio-" + std::to_string(k + 1),
                                         "exceptional growth: (tau-2) j_{k-1} sigma < (eps/100) j_k sigma", false,
                                         lhs < rhs, lhs, rhs, "spacing of consecutive exceptional levels"));
  }

  // nonempty windows at every level, from a rigorous floor on log K
  double floor_lk = 0.0;
  long done = 0;
  for (std::size_t k = 0; k < s.jk.size(); ++k) {
    if (k == 0) {
      floor_lk = log_K_floor(nu_bar, s.jk[0]);
    } else {
      floor_lk += static_cast<double>(s.jk[k] - done) * min_inner;
    }
    done = s.jk[k];
    double lr = profile.log_rho_approx(floor_lk);
    double w = log_window_width(lr, s.etak[k]);
    s.growth_checks.push_back(make_check("T" + std::to_string(k + 1) + "-nonempty",
                                         "exceptional window holds an integer for every prefix", true, w >= 0.0, w, 0.0,
                                         "log width of the window at the smallest continuant"));
    s.growth_checks.push_back(make_check("Q1-" + std::to_string(k + 1), "exceptional follow-up: rho >= 200/eta_k", true,
                                         lr >= std::log(200.0 / s.etak[k]), lr, std::log(200.0 / s.etak[k]),
                                         "log rho at the smallest continuant"));
    // the exceptional quotient itself contributes at least (1+eta/100) rho
    floor_lk += lr;
  }

  if (!s.feasible()) {
    std::string msg = "infeasible schedule:";
    for (const std::string& f : s.failed_checks(true)) msg += " " + f + ";";
    throw InfeasibleSchedule(msg);
  }
  return s;
}

}  // namespace exorder

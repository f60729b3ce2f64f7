#include "exorder/fourier.hpp"

#include <algorithm>
#include <boost/math/constants/constants.hpp>
#include <cmath>
#include <map>
#include <sstream>

#include "exorder/parallel.hpp"

namespace exorder {

namespace {

const double kPi = boost::math::constants::pi<double>();
const double kTwoPi = boost::math::constants::two_pi<double>();

// e(t) for a long double phase; the fractional part is taken before rounding to double.
Complex phasor_ld(long double t) {
  long double frac = t - std::nearbyint(t);
  return std::polar(1.0, kTwoPi * static_cast<double>(frac));
}

struct Mat {
  long double p = 1, pp = 0, K = 0, Kp = 1;
};

Mat times(const Mat& m, const Mat& b) {
  return Mat{m.p * b.p + m.pp * b.K, m.p * b.pp + m.pp * b.Kp, m.K * b.p + m.Kp * b.K, m.K * b.pp + m.Kp * b.Kp};
}

// Cylinder of the matrix in the coordinate it acts on; the empty matrix stands for [1, N + 1].
void cylinder_of(const Mat& m, long N, long double& mid, long double& width) {
  if (m.K == 0) {
    mid = 1.0L + N / 2.0L;
    width = static_cast<long double>(N);
    return;
  }
  long double a = m.p / m.K, b = (m.p + m.pp) / (m.K + m.Kp);
  mid = 0.5L * (a + b);
  width = 1.0L / (m.K * (m.K + m.Kp));
}

// Depth-first walk over block cylinders below a tree position.
class CylinderWalker {
 public:
  explicit CylinderWalker(const MeasureTree& tree) : tree_(tree), sched_(tree.schedule()) {
    for (const BlockCylinder& c : tree.block_cylinders()) {
      blocks_.push_back(Mat{static_cast<long double>(c.p), static_cast<long double>(c.pp),
                            static_cast<long double>(c.K), static_cast<long double>(c.Kp)});
    }
    logw_ = tree.nu_bar().log_weights;
  }

  bool exceptional_next(std::size_t blocks, std::size_t stage) const {
    return stage < sched_.levels() && static_cast<long>(blocks) == sched_.jk[stage];
  }

  // leaf(mid, width, log_w). Adaptive: stop once width <= h, throw DeepenRequired at the token cap.
  // Fixed: stop exactly at the token cap.
  template <class Leaf>
  void walk(const Mat& m, double log_w, std::size_t blocks, std::size_t stage, std::size_t tokens_left, double h,
            bool fixed, Leaf& leaf) const {
    long double mid, width;
    cylinder_of(m, sched_.N, mid, width);
    if (fixed ? tokens_left == 0 : width <= h) {
      leaf(static_cast<double>(mid), static_cast<double>(width), log_w);
      return;
    }
    if (tokens_left == 0) {
      throw DeepenRequired("cylinder sum: token cap reached with cylinders wider than " + fmt17(h) +
                           "; deepen the method");
    }
    if (exceptional_next(blocks, stage)) {
      throw BudgetExceeded("cylinder sum: refinement reaches exceptional level " + std::to_string(stage + 1) +
                           " after " + std::to_string(blocks) + " blocks");
    }
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      walk(times(m, blocks_[i]), log_w + logw_[i], blocks + 1, stage, tokens_left - 1, h, fixed, leaf);
    }
  }

  // One ancestral draw refined until the cylinder width is at most h; returns the midpoint.
  double draw(Rng& rng, double h, std::size_t max_tokens, double& width_out) const {
    Mat m;
    std::size_t blocks = 0;
    for (std::size_t t = 0;; ++t) {
      long double mid, width;
      cylinder_of(m, sched_.N, mid, width);
      if (width <= h) {
        width_out = static_cast<double>(width);
        return static_cast<double>(mid);
      }
      if (t == max_tokens) throw DeepenRequired("monte carlo: token cap reached before the bias target");
      if (exceptional_next(blocks, 0)) {
        throw BudgetExceeded("monte carlo: refinement reaches the first exceptional level");
      }
      m = times(m, blocks_[tree_.draw_block(rng)]);
      ++blocks;
    }
  }

 private:
  const MeasureTree& tree_;
  const Schedule& sched_;
  std::vector<Mat> blocks_;
  std::vector<double> logw_;
};

void fill_scale(FourierSample& s, const Schedule& sched) {
  double ax = std::fabs(s.xi);
  if (ax <= 1.0) {
    s.alpha_used = alpha0();
    s.scale_kind = ScaleKind::typical;
    return;
  }
  ScaleChoice ch = choose_alpha(std::log(ax), sched);
  s.alpha_used = ch.alpha;
  s.scale_kind = ch.chosen.kind;
}

FourierSample cylinder_sum_eval(const MeasureTree& tree, double xi, const FourierMethod& method) {
  FourierSample s;
  s.xi = xi;
  s.method = method;
  fill_scale(s, tree.schedule());
  if (xi == 0.0) {
    s.value = 1.0;
    return s;
  }
  const long double ax = std::fabs(static_cast<long double>(xi));
  const bool fixed = method.target_error <= 0.0;
  const double h = fixed ? 0.0 : method.target_error / (kTwoPi * static_cast<double>(ax));
  CompensatedSum re, im;
  double max_width = 0.0;
  std::size_t leaves = 0;
  auto leaf = [&](double mid, double width, double log_w) {
    double w = std::exp(log_w);
    Complex z = phasor_ld(-ax * static_cast<long double>(mid));
    re.add(w * z.real());
    im.add(w * z.imag());
    max_width = std::max(max_width, width);
    ++leaves;
  };
  CylinderWalker walker(tree);
  walker.walk(Mat{}, 0.0, 0, 0, method.depth, h, fixed, leaf);
  Complex v(re.value(), im.value());
  s.value = xi < 0 ? std::conj(v) : v;
  s.error_bound = kTwoPi * static_cast<double>(ax) * max_width;
  s.leaves = leaves;
  return s;
}

struct McPoints {
  std::vector<double> x;
  double max_width = 0.0;
};

McPoints monte_carlo_points(const MeasureTree& tree, double max_abs_xi, const FourierMethod& method) {
  McPoints pts;
  double h = max_abs_xi > 0 ? method.bias_target / (kTwoPi * max_abs_xi) : 1.0;
  CylinderWalker walker(tree);
  Rng rng(method.seed, 41);
  pts.x.reserve(method.samples);
  for (std::size_t n = 0; n < method.samples; ++n) {
    double w = 0.0;
    pts.x.push_back(walker.draw(rng, h, method.depth, w));
    pts.max_width = std::max(pts.max_width, w);
  }
  return pts;
}

FourierSample monte_carlo_eval(const MeasureTree& tree, const McPoints& pts, double xi, const FourierMethod& method) {
  FourierSample s;
  s.xi = xi;
  s.method = method;
  fill_scale(s, tree.schedule());
  s.leaves = pts.x.size();
  if (xi == 0.0) {
    s.value = 1.0;
    return s;
  }
  if (pts.x.empty()) throw std::invalid_argument("monte carlo: no samples");
  CompensatedSum re, im, re2, im2;
  const long double lxi = xi;
  for (double x : pts.x) {
    Complex z = phasor_ld(-lxi * static_cast<long double>(x));
    re.add(z.real());
    im.add(z.imag());
    re2.add(z.real() * z.real());
    im2.add(z.imag() * z.imag());
  }
  double n = static_cast<double>(pts.x.size());
  double mr = re.value() / n, mi = im.value() / n;
  s.value = Complex(mr, mi);
  double var = std::max(0.0, re2.value() / n - mr * mr) + std::max(0.0, im2.value() / n - mi * mi);
  s.standard_error = n > 1 ? std::sqrt(var / (n - 1)) : INFINITY;
  s.error_bound = kTwoPi * std::fabs(xi) * pts.max_width;
  return s;
}

}  // namespace

FourierMethod FourierMethod::cylinder_sum(std::size_t depth, double target_error) {
  FourierMethod m;
  m.kind = FourierMethodKind::cylinder_sum;
  m.depth = depth;
  m.target_error = target_error;
  return m;
}

FourierMethod FourierMethod::fixed_depth(std::size_t depth) { return cylinder_sum(depth, 0.0); }

FourierMethod FourierMethod::monte_carlo(std::size_t samples, std::uint64_t seed) {
  FourierMethod m;
  m.kind = FourierMethodKind::monte_carlo;
  m.samples = samples;
  m.seed = seed;
  return m;
}

std::string FourierMethod::describe() const {
  std::ostringstream os;
  if (kind == FourierMethodKind::cylinder_sum) {
    os << "cylinderSum(depth=" << depth << ",target=" << fmt17(target_error) << ")";
  } else {
    os << "monteCarlo(n=" << samples << ",seed=" << seed << ",bias=" << fmt17(bias_target) << ")";
  }
  return os.str();
}

FourierSample fourier_eval(const MeasureTree& tree, double xi, const FourierMethod& method) {
  if (!std::isfinite(xi)) throw std::invalid_argument("fourier_eval: xi must be finite");
  if (method.kind == FourierMethodKind::cylinder_sum) return cylinder_sum_eval(tree, xi, method);
  McPoints pts = monte_carlo_points(tree, std::fabs(xi), method);
  return monte_carlo_eval(tree, pts, xi, method);
}

std::vector<FourierSample> fourier_eval_many(const MeasureTree& tree, const std::vector<double>& xis,
                                             const FourierMethod& method, unsigned workers) {
  for (double x : xis) {
    if (!std::isfinite(x)) throw std::invalid_argument("fourier_eval: xi must be finite");
  }
  std::vector<FourierSample> out(xis.size());
  if (method.kind == FourierMethodKind::cylinder_sum) {
    parallel_for(xis.size(), workers, [&](std::size_t i) { out[i] = cylinder_sum_eval(tree, xis[i], method); });
    return out;
  }
  double mx = 0.0;
  for (double x : xis) mx = std::max(mx, std::fabs(x));
  McPoints pts = monte_carlo_points(tree, mx, method);
  parallel_for(xis.size(), workers, [&](std::size_t i) { out[i] = monte_carlo_eval(tree, pts, xis[i], method); });
  return out;
}

// ---------------------------------------------------------------------------------------------

BoxFunction::BoxFunction(double xi, long N, std::vector<FiniteCF> members, std::vector<double> log_weights)
    : xi_(xi), N_(N), members_(std::move(members)) {
  if (members_.empty()) throw std::invalid_argument("BoxFunction: empty box");
  if (log_weights.size() != members_.size()) throw std::invalid_argument("BoxFunction: weight count mismatch");
  CompensatedSum total;
  for (double lw : log_weights) {
    weights_.push_back(std::exp(lw));
    total.add(weights_.back());
  }
  mass_ = total.value();
  std::map<std::pair<BigInt, BigInt>, std::size_t> by_denominators;
  for (std::size_t i = 0; i < members_.size(); ++i) {
    const FiniteCF& G = members_[i];
    if (G.K() <= 0) throw std::invalid_argument("BoxFunction: member with K = 0");
    p_.push_back(static_cast<long double>(G.p().get_d()));
    pp_.push_back(static_cast<long double>(G.pprime().get_d()));
    q_.push_back(static_cast<long double>(G.K().get_d()));
    qp_.push_back(static_cast<long double>(G.Kprime().get_d()));
    det_.push_back(G.determinant_sign());
    auto key = std::make_pair(G.K(), G.Kprime());
    auto it = by_denominators.find(key);
    if (it == by_denominators.end()) {
      Group g;
      g.rep = i;
      g.q = G.K().get_d();
      g.qp = G.Kprime().get_d();
      g.det = G.determinant_sign();
      by_denominators.emplace(key, groups_.size());
      group_of_.push_back(groups_.size());
      translate_.push_back(0);
      groups_.push_back(g);
    } else {
      const FiniteCF& R = members_[groups_[it->second].rep];
      BigInt diff = G.p() - R.p();
      if (diff % G.K() != 0 || G.pprime() - R.pprime() != (diff / G.K()) * G.Kprime()) {
        throw std::logic_error("BoxFunction: equal denominators without an integer translate");
      }
      BigInt k = diff / G.K();
      group_of_.push_back(it->second);
      translate_.push_back(k.get_si());
    }
  }
  for (std::size_t i = 0; i < members_.size(); ++i) {
    Group& g = groups_[group_of_[i]];
    g.amplitude += weights_[i] * phasor_ld(-static_cast<long double>(xi_) * translate_[i]);
  }
  for (const Group& g : groups_) relative_.emplace_back(xi_, members_[g.rep], members_[0]);
}

Complex BoxFunction::value(double x) const {
  Complex s = 0.0;
  const long double lx = x, lxi = xi_;
  for (std::size_t i = 0; i < members_.size(); ++i) {
    long double M = (p_[i] * lx + pp_[i]) / (q_[i] * lx + qp_[i]);
    s += weights_[i] * phasor_ld(-lxi * M);
  }
  return s;
}

Complex BoxFunction::derivative(double x) const {
  Complex s = 0.0;
  const long double lx = x, lxi = xi_;
  for (std::size_t i = 0; i < members_.size(); ++i) {
    long double u = q_[i] * lx + qp_[i];
    long double M = (p_[i] * lx + pp_[i]) / u;
    double slope = static_cast<double>(det_[i] / (u * u));
    s += weights_[i] * Complex(0.0, -kTwoPi * xi_ * slope) * phasor_ld(-lxi * M);
  }
  return s;
}

std::vector<Complex> BoxFunction::values(const std::vector<double>& xs) const {
  std::vector<Complex> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(value(x));
  return out;
}

Complex BoxFunction::demodulated(double x) const {
  Complex s = 0.0;
  for (std::size_t g = 0; g < groups_.size(); ++g) s += groups_[g].amplitude * unit_phasor(relative_[g].value(x));
  return s;
}

double BoxFunction::modulus(double x) const { return std::abs(demodulated(x)); }

double BoxFunction::derivative_modulus(double x) const {
  Complex s = 0.0;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    const Group& G = groups_[g];
    double u = G.q * x + G.qp;
    s += groups_[g].amplitude * (kTwoPi * xi_ * G.det / (u * u)) * unit_phasor(relative_[g].value(x));
  }
  return std::abs(s);
}

double BoxFunction::pair_rate(double lo, double hi) const {
  if (groups_.size() < 2) return 0.0;
  double top = -INFINITY, bottom = INFINITY;
  for (const Group& g : groups_) {
    double ul = g.q * lo + g.qp, uh = g.q * hi + g.qp;
    double a = g.det / (ul * ul), b = g.det / (uh * uh);
    top = std::max(top, std::max(a, b));
    bottom = std::min(bottom, std::min(a, b));
  }
  return std::fabs(xi_) * (top - bottom) * (1.0 + 1e-9);
}

double BoxFunction::derivative_triangle_bound() const {
  double s = 0.0;
  for (std::size_t i = 0; i < members_.size(); ++i) {
    double u = static_cast<double>(q_[i] + qp_[i]);
    s += weights_[i] * kTwoPi * std::fabs(xi_) / (u * u);
  }
  return s;
}

BoxFunction build_f_xi(const ClassPartition& partition, std::size_t box, double xi, long N) {
  if (box >= partition.boxes.size()) throw std::out_of_range("build_f_xi: box index");
  const PartitionBox& B = partition.boxes[box];
  if (B.members.empty()) throw std::invalid_argument("build_f_xi: empty box");
  std::vector<FiniteCF> cfs;
  std::vector<double> lw;
  // representative first: it is the demodulation reference
  std::vector<std::size_t> order{B.representative};
  for (std::size_t m : B.members) {
    if (m != B.representative) order.push_back(m);
  }
  for (std::size_t m : order) {
    cfs.push_back(partition.members[m].cf);
    lw.push_back(partition.member_log_weight[m]);
  }
  return BoxFunction(xi, N, std::move(cfs), std::move(lw));
}

MBoundResult M_bound_check(const BoxFunction& F, double alpha, double eps, std::size_t max_points) {
  const double a = F.lower(), b = F.upper();
  const double resolution = 10.0;
  const double amplitude_step = 0.01;  // 1/u^2 changes slowly on this scale for u >= q + q'
  MBoundResult r;
  // first pass: count points so an under-resolved grid is refused before any work
  std::size_t count = 1;
  double x = a;
  while (x < b) {
    double h = std::min(amplitude_step, b - x);
    for (;;) {
      double rate = F.pair_rate(x, x + h);
      if (rate * h * resolution <= 1.0) break;
      h = std::min(0.5 * h, 0.999 / (resolution * rate));
    }
    r.grid_step_max = std::max(r.grid_step_max, h);
    x += h;
    if (++count > max_points) {
      throw BudgetExceeded("M_bound_check: grid resolving the phase needs more than " + std::to_string(max_points) +
                           " points");
    }
  }
  r.grid_points = count;
  struct Peak {
    double value, x, h;
  };
  std::vector<Peak> peaks;
  auto keep = [&](double v, double at, double h) {
    peaks.push_back({v, at, h});
    if (peaks.size() > 64) {
      std::sort(peaks.begin(), peaks.end(), [](const Peak& p, const Peak& q) { return p.value > q.value; });
      peaks.resize(16);
    }
  };
  x = a;
  double prev = F.derivative_modulus(a);
  keep(prev, a, amplitude_step);
  while (x < b) {
    double h = std::min(amplitude_step, b - x);
    for (;;) {
      double rate = F.pair_rate(x, x + h);
      if (rate * h * resolution <= 1.0) break;
      h = std::min(0.5 * h, 0.999 / (resolution * rate));
    }
    x = (b - x - h <= 1e-15 * b) ? b : x + h;
    double v = F.derivative_modulus(x);
    keep(v, x, h);
  }
  std::sort(peaks.begin(), peaks.end(), [](const Peak& p, const Peak& q) { return p.value > q.value; });
  if (peaks.size() > 16) peaks.resize(16);
  r.M_numeric = peaks.front().value;
  r.argmax = peaks.front().x;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (const Peak& p : peaks) {
    double lo = std::max(a, p.x - p.h), hi = std::min(b, p.x + p.h);
    double c = hi - phi * (hi - lo), d = lo + phi * (hi - lo);
    double fc = F.derivative_modulus(c), fd = F.derivative_modulus(d);
    for (int it = 0; it < 60 && hi - lo > 1e-14; ++it) {
      if (fc > fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - phi * (hi - lo);
        fc = F.derivative_modulus(c);
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + phi * (hi - lo);
        fd = F.derivative_modulus(d);
      }
    }
    for (auto [v, at] : {std::pair{fc, c}, std::pair{fd, d}}) {
      if (v > r.M_numeric) {
        r.M_numeric = v;
        r.argmax = at;
      }
    }
  }
  double log_xi = std::log(std::fabs(F.xi()));
  r.M_bound = std::exp((1.0 - 2.0 * alpha + 3.0 * eps) * log_xi);
  r.M_triangle = F.derivative_triangle_bound();
  r.pass = r.M_numeric <= r.M_bound;
  return r;
}

// ---------------------------------------------------------------------------------------------

std::string to_string(PhaseCaseKind k) {
  switch (k) {
    case PhaseCaseKind::C1: return "C1";
    case PhaseCaseKind::C2: return "C2";
    case PhaseCaseKind::C3: return "C3";
  }
  return "?";
}

PhaseCaseKind classify_pair(const FiniteCF& first, const FiniteCF& second) {
  if (first.K() != second.K()) return PhaseCaseKind::C2;
  if (first.Kprime() != second.Kprime()) return PhaseCaseKind::C1;
  return PhaseCaseKind::C3;
}

M2Result m2_decompose(const BoxFunction& F, double alpha, double eps, double tau, const M2Options& opts) {
  const std::size_t n = F.size();
  const std::size_t pair_count = n * (n - 1) / 2;
  if (pair_count > opts.max_pairs) {
    throw BudgetExceeded("m2_decompose: " + std::to_string(pair_count) + " pairs exceed the budget of " +
                         std::to_string(opts.max_pairs));
  }
  const double a = F.lower(), b = F.upper(), len = b - a;
  const double xi = F.xi();
  const double K = opts.stationary_K > 0 ? opts.stationary_K : stationary_constant_from_proof();
  M2Result r;

  // direct quadrature of |F|^2
  auto integrand = [&F](double x) { return Complex(std::norm(F.demodulated(x)), 0.0); };
  auto rate = [&F](double lo, double hi) { return F.pair_rate(lo, hi); };
  QuadratureResult direct = integrate_oscillatory(integrand, rate, a, b, opts.quadrature);
  if (!direct.within_budget) throw BudgetExceeded("m2_decompose: direct quadrature exceeded the panel budget");
  r.m2_quadrature = direct.value.real();
  r.m2_quadrature_error = direct.error_estimate;

  // one oscillatory integral per pair of denominator groups
  const std::size_t ng = F.group_count();
  std::vector<std::size_t> rep(ng);
  for (std::size_t i = 0; i < n; ++i) {
    if (F.translate_of(i) == 0) rep[F.group_of(i)] = i;
  }
  struct GroupPair {
    Complex integral;
    double error = 0.0;
    double bound = 0.0;
    bool ok = true;
    PhaseCaseKind kind = PhaseCaseKind::C3;
  };
  std::vector<std::pair<std::size_t, std::size_t>> gp_index;
  for (std::size_t g = 0; g < ng; ++g) {
    for (std::size_t h = g + 1; h < ng; ++h) gp_index.emplace_back(g, h);
  }
  std::vector<GroupPair> gp(gp_index.size());
  parallel_for(gp_index.size(), opts.workers, [&](std::size_t t) {
    auto [g, h] = gp_index[t];
    const FiniteCF& G1 = F.members()[rep[g]];
    const FiniteCF& G2 = F.members()[rep[h]];
    MobiusPairPhase phi(xi, G1, G2);
    GroupPair& out = gp[t];
    out.kind = classify_pair(G1, G2);
    if (out.kind == PhaseCaseKind::C1) {
      DerivativeCertificate c = certify_derivatives(phi, a, b);
      if (!(c.min_abs_derivative > 0)) throw CertificationFailure("m2_decompose: C1 phase derivative not bounded away from 0");
      VdcResult v = vdc_nonstationary(phi, c.min_abs_derivative, c.max_abs_second, a, b, opts.quadrature);
      out.integral = v.integral;
      out.error = v.quadrature_error;
      out.bound = v.bound;
      out.ok = v.pass;
    } else {
      MobiusPairCofactor cof(G1, G2);
      CofactorCertificate cc = certify_cofactor(cof, a, b);
      double A = cc.min_abs;
      // any B >= |g'| with B > A meets the hypothesis
      double B = std::max(cc.max_abs_derivative, A * (1.0 + 1e-6));
      double C1 = xi * BigInt(G2.K() - G1.K()).get_d();
      double C2 = xi * BigInt(G2.Kprime() - G1.Kprime()).get_d();
      VdcResult v = vdc_stationary(phi, cof, C1, C2, A, B, a, b, K, opts.quadrature);
      out.integral = v.integral;
      out.error = v.quadrature_error;
      out.bound = v.bound;
      out.ok = v.pass;
    }
  });
  auto pair_index = [&](std::size_t g, std::size_t h) {
    // position of (g, h), g < h, in gp_index
    return g * ng - g * (g + 1) / 2 + (h - g - 1);
  };

  CompensatedSum total;
  CompensatedSum cre[3], cim[3], mag[3];
  const long double lxi = xi;
  double worst_ratio = -INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    double wi = F.weights()[i];
    // diagonal: constant phase 0
    total.add(wi * wi * len);
    cre[2].add(wi * wi * len);
    mag[2].add(wi * wi * len);
    ++r.counts[2];
    for (std::size_t j = i + 1; j < n; ++j) {
      double wj = F.weights()[j];
      std::size_t g = F.group_of(i), h = F.group_of(j);
      long dk = F.translate_of(i) - F.translate_of(j);
      Complex shift = std::polar(1.0, kTwoPi * static_cast<double>((-lxi * dk) - std::nearbyint(-lxi * dk)));
      PhaseCase pc;
      pc.first = i;
      pc.second = j;
      if (g == h) {
        pc.kind = PhaseCaseKind::C3;
        pc.quadrature_value = shift * len;
        pc.bound_used = len;
      } else {
        const GroupPair& q = g < h ? gp[pair_index(g, h)] : gp[pair_index(h, g)];
        pc.kind = q.kind;
        pc.quadrature_value = g < h ? shift * q.integral : shift * std::conj(q.integral);
        pc.quadrature_error = q.error;
        pc.bound_used = q.bound;
        pc.bound_ok = q.ok;
        if (!q.ok) ++r.bound_violations;
        double ratio = std::abs(q.integral) / q.bound;
        if (ratio > worst_ratio) {
          worst_ratio = ratio;
          r.worst_pair = std::to_string(i) + "," + std::to_string(j) + " " + to_string(q.kind) +
                         " |integral|/bound=" + fmt17(ratio);
        }
      }
      int c = static_cast<int>(pc.kind);
      double ww = wi * wj;
      // ordered pairs (i, j) and (j, i) contribute complex conjugates
      double re2 = 2.0 * ww * pc.quadrature_value.real();
      total.add(re2);
      cre[c].add(re2);
      mag[c].add(2.0 * ww * std::abs(pc.quadrature_value));
      r.counts[c] += 2;
      r.pairs.push_back(pc);
    }
  }
  for (int c = 0; c < 3; ++c) {
    r.contribution[c] = Complex(cre[c].value(), cim[c].value());
    r.magnitude[c] = mag[c].value();
  }
  r.m2_pairwise = total.value();
  double scale = std::max(std::fabs(r.m2_quadrature), std::fabs(r.m2_pairwise));
  r.relative_gap = scale > 0 ? std::fabs(r.m2_quadrature - r.m2_pairwise) / scale : 0.0;
  r.agree = r.relative_gap <= opts.agreement_tolerance;

  const double log_xi = std::log(std::fabs(xi));
  const double C = opts.exponent_slack;
  const double Nd = static_cast<double>(F.N());
  r.c3_bound = Nd * Nd * std::exp((-2.0 * alpha * tau / (2.0 * tau - 2.0) + C * eps) * log_xi);
  r.c3_ok = r.magnitude[2] <= r.c3_bound;
  r.bound_rhs = opts.prefactor * (std::exp(((3.0 * alpha - 1.0) / 2.0 + C * eps) * log_xi) +
                                  std::exp((-tau * alpha / (tau - 1.0) + C * eps) * log_xi));
  r.pass = r.m2_quadrature <= r.bound_rhs;
  return r;
}

C3Recovery c3_recovery_check(const ClassPartition& partition, long N) {
  C3Recovery r;
  r.members = partition.members.size();
  std::map<std::pair<BigInt, BigInt>, std::size_t> counts;
  for (const AdmissibleSeq& s : partition.members) ++counts[{s.cf.K(), s.cf.Kprime()}];
  for (const AdmissibleSeq& s : partition.members) {
    r.max_partners = std::max(r.max_partners, counts[{s.cf.K(), s.cf.Kprime()}]);
    // K/K' = [c_n; ..., c_1]; Euclid returns the canonical form
    std::vector<BigInt> q = s.cf.quotients();
    std::vector<BigInt> expect(q.rbegin(), q.rend() - 1);
    if (expect.size() > 1 && expect.back() == 1) {
      expect.pop_back();
      expect.back() += 1;
    }
    if (expect.empty()) continue;
    FiniteCF rec = cf_of_rational(s.cf.K(), s.cf.Kprime());
    if (rec.quotients() != expect) ++r.recovery_failures;
  }
  r.pass = r.recovery_failures == 0 && r.max_partners <= static_cast<std::size_t>(N);
  return r;
}

// ---------------------------------------------------------------------------------------------

double qr_log_rhs(double log_r, double M, double m2, double beta) {
  double log_M = std::log(M);
  double t = (m2 > 0 ? std::log(m2) : -INFINITY) + log_M - 3.0 * log_r;
  double inner = t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
  return log_sum_exp({std::log(2.0) + log_r, beta * (log_r - log_M) + inner});
}

BallPrecondition qr_ball_precondition(const RelativeView& view, double log_length, double beta, std::size_t windows,
                                      std::uint64_t seed) {
  const MeasureTree& tree = view.tree();
  BallPrecondition r;
  r.log_length = log_length;
  r.beta = beta;
  // dyadic length h >= r/M: a longer window only makes the check stricter
  const double ln2 = std::log(2.0);
  long k = static_cast<long>(std::floor(-log_length / ln2));
  Rational h = k >= 0 ? Rational(1, 1) / Rational(BigInt(1) << k) : Rational(BigInt(1) << -k);
  h.canonicalize();
  double log_h = -static_cast<double>(k) * ln2;
  double min_logK = *std::min_element(tree.nu_bar().log_K.begin(), tree.nu_bar().log_K.end());
  r.depth = static_cast<std::size_t>(std::ceil(std::max(0.0, -log_h) / (2.0 * min_logK))) + 3;
  std::vector<AdmissibleSeq> tails = tree.sample_continuations(view.base_seq(), r.depth, windows, seed, 29);
  for (const AdmissibleSeq& tail : tails) {
    Rational x = tail.cf.value();
    Rational lo = x - h / 2, hi = x + h / 2;
    if (lo < 1) {
      lo = 1;
      hi = 1 + h;
    }
    LogBracket br = view.pushforward(lo, hi, r.depth);
    ++r.windows;
    r.worst_margin = std::min(r.worst_margin, beta * log_length - br.upper);
  }
  r.pass = r.windows > 0 && r.worst_margin >= 0.0;
  return r;
}

QrResult qr_combine(const BoxFunction& F, const RelativeView& view, double log_r, double beta, double M, double m2,
                    const BallPrecondition& precondition, double leaf_tolerance) {
  QrResult r;
  r.precondition_ok = precondition.pass;
  {
    std::ostringstream os;
    os << "windows=" << precondition.windows << " log|I|=" << fmt17(precondition.log_length)
       << " beta=" << fmt17(precondition.beta) << " worst_margin=" << fmt17(precondition.worst_margin);
    r.precondition_detail = os.str();
  }
  const MeasureTree& tree = view.tree();
  CylinderWalker walker(tree);
  const double h = leaf_tolerance * F.mass() / std::max(M, 1e-300);
  CompensatedSum est, upper;
  auto leaf = [&](double mid, double width, double log_w) {
    double w = std::exp(log_w);
    double v = F.modulus(mid);
    est.add(w * v);
    upper.add(w * (v + 0.5 * M * width));
    ++r.cylinders;
  };
  const TreeNode& base = view.base();
  walker.walk(Mat{}, 0.0, base.blocks, base.stage, 64, h, false, leaf);
  r.lhs = est.value();
  r.lhs_upper = std::min(upper.value(), F.mass());
  r.log_rhs = qr_log_rhs(log_r, M, m2, beta);
  r.pass = r.precondition_ok && std::log(r.lhs_upper) <= r.log_rhs;
  return r;
}

namespace {

Complex trig_value(const SyntheticQrInstance& s, double x) {
  Complex v = 0.0;
  for (std::size_t k = 0; k < s.coeffs.size(); ++k) v += s.coeffs[k] * unit_phasor(s.freqs[k] * x);
  return v;
}

double trig_derivative_bound(const SyntheticQrInstance& s) {
  double m = 0.0;
  for (std::size_t k = 0; k < s.coeffs.size(); ++k) m += std::abs(s.coeffs[k]) * kTwoPi * std::fabs(s.freqs[k]);
  return m;
}

// int_a^b |F|^2 in closed form
double trig_l2(const SyntheticQrInstance& s) {
  double total = 0.0;
  for (std::size_t j = 0; j < s.coeffs.size(); ++j) {
    for (std::size_t k = 0; k < s.coeffs.size(); ++k) {
      double w = s.freqs[j] - s.freqs[k];
      Complex c = s.coeffs[j] * std::conj(s.coeffs[k]);
      Complex I;
      if (w == 0.0) {
        I = s.b - s.a;
      } else {
        I = (unit_phasor(w * s.b) - unit_phasor(w * s.a)) / Complex(0.0, kTwoPi * w);
      }
      total += (c * I).real();
    }
  }
  return total;
}

// sup over intervals of length L of the piecewise-constant mass; the sup sits at a window touching a breakpoint
double max_window_mass(const SyntheticQrInstance& s, double L) {
  const std::size_t P = s.density.size();
  const double piece = (s.b - s.a) / static_cast<double>(P);
  auto cdf = [&](double x) {
    if (x <= s.a) return 0.0;
    if (x >= s.b) return 1.0;
    double t = (x - s.a) / piece;
    std::size_t i = std::min<std::size_t>(P - 1, static_cast<std::size_t>(t));
    double acc = 0.0;
    for (std::size_t j = 0; j < i; ++j) acc += s.density[j] * piece;
    return acc + s.density[i] * (x - (s.a + i * piece));
  };
  double best = 0.0;
  for (std::size_t i = 0; i <= P; ++i) {
    double bp = s.a + i * piece;
    best = std::max(best, cdf(bp + L) - cdf(bp));
    best = std::max(best, cdf(bp) - cdf(bp - L));
  }
  return best;
}

}  // namespace

SyntheticQrInstance random_qr_instance(Rng& rng) {
  for (;;) {
    SyntheticQrInstance s;
    s.a = 0.0;
    s.b = 1.0 + 4.0 * rng.uniform01();
    std::size_t terms = 1 + rng.uniform_below(5);
    double budget = 0.2 + 0.8 * rng.uniform01();
    std::vector<double> mags;
    double msum = 0.0;
    for (std::size_t k = 0; k < terms; ++k) {
      mags.push_back(0.05 + rng.uniform01());
      msum += mags.back();
    }
    for (std::size_t k = 0; k < terms; ++k) {
      s.coeffs.push_back(std::polar(budget * mags[k] / msum, kTwoPi * rng.uniform01()));
      s.freqs.push_back(-60.0 + 120.0 * rng.uniform01());
    }
    std::size_t P = 1 + rng.uniform_below(8);
    double dsum = 0.0;
    for (std::size_t i = 0; i < P; ++i) {
      s.density.push_back(0.1 + rng.uniform01());
      dsum += s.density.back();
    }
    double piece = (s.b - s.a) / static_cast<double>(P);
    for (double& d : s.density) d /= dsum * piece;
    s.beta = 0.1 + 0.85 * rng.uniform01();
    s.r = std::exp(std::log(1e-3) + std::log(1e3) * rng.uniform01());
    double M = trig_derivative_bound(s);
    if (M <= 0) continue;
    double L = s.r / M;
    if (max_window_mass(s, L) <= std::pow(L, s.beta)) return s;
  }
}

SyntheticQrResult qr_combine_synthetic(const SyntheticQrInstance& s) {
  SyntheticQrResult r;
  r.M = trig_derivative_bound(s);
  r.m2 = trig_l2(s);
  double L = s.r / r.M;
  r.precondition_ok = max_window_mass(s, L) <= std::pow(L, s.beta);
  double maxw = 0.0;
  for (double w : s.freqs) maxw = std::max(maxw, std::fabs(w));
  const std::size_t P = s.density.size();
  const double piece = (s.b - s.a) / static_cast<double>(P);
  CompensatedSum lhs;
  for (std::size_t i = 0; i < P; ++i) {
    auto fn = [&](double x) { return Complex(std::abs(trig_value(s, x)), 0.0); };
    auto rate = [&](double, double) { return 2.0 * maxw + 1.0; };
    QuadratureOptions o;
    o.resolution = 40.0;
    QuadratureResult q = integrate_oscillatory(fn, rate, s.a + i * piece, s.a + (i + 1) * piece, o);
    lhs.add(s.density[i] * q.value.real());
  }
  r.lhs = lhs.value();
  r.rhs = std::exp(qr_log_rhs(std::log(s.r), r.M, r.m2, s.beta));
  r.pass = r.precondition_ok && r.lhs <= r.rhs;
  return r;
}

// ---------------------------------------------------------------------------------------------

std::vector<double> geometric_grid(double lo, double hi, std::size_t points) {
  if (points == 0) return {};
  if (!(lo > 0) || !(hi >= lo)) throw std::invalid_argument("geometric_grid: need 0 < lo <= hi");
  if (points == 1) return {lo};
  std::vector<double> g(points);
  double l = std::log(lo), step = (std::log(hi) - l) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) g[i] = std::exp(l + step * static_cast<double>(i));
  g.back() = hi;
  return g;
}

std::optional<std::pair<double, double>> fit_log_slope(const std::vector<double>& xis,
                                                       const std::vector<double>& moduli) {
  std::vector<double> X, Y;
  for (std::size_t i = 0; i < xis.size() && i < moduli.size(); ++i) {
    if (xis[i] > 0 && moduli[i] > 0) {
      X.push_back(std::log(xis[i]));
      Y.push_back(std::log(moduli[i]));
    }
  }
  if (X.size() < 2) return std::nullopt;
  double n = static_cast<double>(X.size()), mx = 0, my = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    mx += X[i];
    my += Y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    sxx += (X[i] - mx) * (X[i] - mx);
    sxy += (X[i] - mx) * (Y[i] - my);
  }
  if (sxx == 0) return std::nullopt;
  double slope = sxy / sxx;
  return std::make_pair(slope, my - slope * mx);
}

DecayScan decay_scan(const MeasureTree& tree, const std::vector<double>& xis, AlphaPolicy policy,
                     const FourierMethod& method, unsigned workers) {
  DecayScan out;
  std::vector<FourierSample> vals = fourier_eval_many(tree, xis, method, workers);
  std::vector<double> moduli;
  for (std::size_t i = 0; i < xis.size(); ++i) {
    DecayRow row;
    row.xi = xis[i];
    double ax = std::fabs(xis[i]);
    if (policy == AlphaPolicy::adaptive || ax <= 1.0) {
      row.alpha = vals[i].alpha_used;
      row.scale_kind = vals[i].scale_kind;
    } else {
      row.alpha = alpha0();
      row.scale_kind = classify_scale(alpha0() * std::log(ax), tree.schedule()).kind;
    }
    row.value = vals[i].value;
    row.modulus = std::abs(vals[i].value);
    row.error_bound = vals[i].error_bound;
    row.leaves = vals[i].leaves;
    moduli.push_back(row.modulus);
    out.table.push_back(row);
  }
  std::vector<double> ax;
  for (double x : xis) ax.push_back(std::fabs(x));
  if (auto fit = fit_log_slope(ax, moduli)) {
    out.slope = fit->first;
    out.intercept = fit->second;
  }
  return out;
}

}  // namespace exorder

#include "exorder/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace exorder {

double alpha0() { return (10.0 - std::sqrt(73.0)) / 9.0; }

double alpha1(double tau, double eps) { return (tau - 1.0 + 10.0 * eps) * alpha0(); }

AlphaIdentity alpha_identity() {
  const double t = tau_threshold();
  AlphaIdentity r;
  r.with_9 = (10.0 - std::sqrt(73.0)) / 9.0;
  r.with_8 = (10.0 - std::sqrt(73.0)) / 8.0;
  double a = (t * t - 3.0 * t + 2.0) / (t * t);
  double b = -1.0 / 3.0 + 4.0 / (3.0 * t);
  r.residual_9 = std::max(std::fabs(r.with_9 - a), std::fabs(r.with_9 - b));
  r.residual_8 = std::max(std::fabs(r.with_8 - a), std::fabs(r.with_8 - b));
  return r;
}

ScaleClassification classify_scale(double log_zeta, const Schedule& sched, double log_floor) {
  if (!(log_zeta > log_floor)) throw std::invalid_argument("classify_scale: scale at or below the floor");
  const double s = sched.sigma, e = sched.epsilon, tau = sched.tau;
  ScaleClassification c;
  c.log_zeta = log_zeta;
  std::size_t below = 0;
  for (std::size_t k = 1; k <= sched.levels(); ++k) {
    double jk = static_cast<double>(sched.j_at(k));
    double lo = (1.0 - 2.0 * e) * jk * s;
    double hi = (tau - 1.0 + 2.0 * e) * jk * s;
    if (log_zeta >= lo && log_zeta <= hi) {
      c.kind = ScaleKind::exceptional;
      c.k = k;
      return c;
    }
    if (log_zeta > hi) below = k;
  }
  c.kind = ScaleKind::typical;
  c.k = below;
  c.beyond_schedule = below == sched.levels();
  double jk = static_cast<double>(sched.j_at(below));
  c.j_of_zeta = static_cast<long>(std::floor((log_zeta - (tau - 2.0) * jk * s) / s));
  return c;
}

ScaleChoice choose_alpha(double log_xi, const Schedule& sched) {
  ScaleChoice ch;
  ch.at_alpha0 = classify_scale(alpha0() * log_xi, sched);
  if (ch.at_alpha0.kind == ScaleKind::typical) {
    ch.alpha = alpha0();
    ch.chosen = ch.at_alpha0;
  } else {
    ch.alpha = alpha1(sched.tau, sched.epsilon);
    ch.used_alpha1 = true;
    ch.chosen = classify_scale(ch.alpha * log_xi, sched);
  }
  return ch;
}

namespace {

long double to_long_double(const BigInt& x) {
  long e = 0;
  double m = mpz_get_d_2exp(&e, x.get_mpz_t());
  return std::ldexp(static_cast<long double>(m), static_cast<int>(e));
}

double log_cyl_width(const FiniteCF& cf) {
  return -(log_of(cf.K()) + log_of(BigInt(cf.K() + cf.Kprime())));
}

bool lex_less(const AdmissibleSeq& a, const AdmissibleSeq& b) {
  std::size_t n = std::min(a.tokens.size(), b.tokens.size());
  for (std::size_t i = 0; i < n; ++i) {
    const Token& x = a.tokens[i];
    const Token& y = b.tokens[i];
    if (x.exceptional != y.exceptional) return x.exceptional < y.exceptional;
    if (x.exceptional) {
      if (x.b != y.b) return x.b < y.b;
    } else if (x.block != y.block) {
      return x.block < y.block;
    }
  }
  return a.tokens.size() < b.tokens.size();
}

}  // namespace

ClassPartition partition_classes(const MeasureTree& tree, double log_xi, double alpha, double gap,
                                 std::size_t max_members) {
  const Schedule& sched = tree.schedule();
  ClassPartition part;
  part.log_xi = log_xi;
  part.alpha = alpha;
  part.gap = gap;
  ScaleClassification c = classify_scale(alpha * log_xi, sched);
  if (c.kind != ScaleKind::typical) throw std::invalid_argument("partition_classes: |xi|^alpha is an exceptional scale");
  part.j_of_zeta = *c.j_of_zeta;
  if (part.j_of_zeta < 1) throw std::invalid_argument("partition_classes: |xi|^alpha lies below the first block scale");
  const double eps = sched.epsilon;
  part.log_side = (alpha - gap) * log_xi;
  part.log_box_bound = 600.0 * eps * log_xi;

  // depth-first enumeration in lexicographic order
  AdmissibleSeq cur;
  std::function<void(const TreeNode&)> dfs = [&](const TreeNode& node) {
    if (static_cast<long>(node.blocks) == part.j_of_zeta && !tree.exceptional_next(node)) {
      if (part.members.size() >= max_members) throw BudgetExceeded("partition_classes: more than " + std::to_string(max_members) + " members");
      AdmissibleSeq m = cur;
      m.cf = node.cf;
      part.members.push_back(std::move(m));
      part.member_log_weight.push_back(node.log_weight);
      return;
    }
    if (tree.exceptional_next(node)) {
      auto T = tree.exceptional_set(node);
      if (T->count() > max_members) throw BudgetExceeded("partition_classes: exceptional set too large");
      for (BigInt b = T->lo; b <= T->hi; ++b) {
        cur.tokens.push_back(Token{true, {}, b});
        dfs(tree.child_exceptional(node, b));
        cur.tokens.pop_back();
      }
      return;
    }
    for (std::size_t i = 0; i < tree.nu_bar().size(); ++i) {
      cur.tokens.push_back(Token{false, tree.nu_bar().block(i), BigInt(0)});
      dfs(tree.child_block(node, i));
      cur.tokens.pop_back();
    }
  };
  dfs(tree.root());

  const double k_lo = (alpha - eps) * log_xi, k_hi = (alpha + eps) * log_xi;
  const double c_lo = (-2.0 * alpha - 2.0 * eps) * log_xi, c_hi = (-2.0 * alpha + 2.0 * eps) * log_xi;
  const long double corner = std::exp(static_cast<long double>(k_lo));
  const long double side = std::exp(static_cast<long double>(part.log_side));
  std::map<std::pair<long, long>, std::size_t> box_of;
  for (std::size_t i = 0; i < part.members.size(); ++i) {
    const FiniteCF& cf = part.members[i].cf;
    double lk = log_of(cf.K());
    double lc = log_cyl_width(cf);
    part.worst_K_excess = std::max(part.worst_K_excess, std::fabs(lk - alpha * log_xi) / (eps * log_xi));
    part.worst_cyl_excess = std::max(part.worst_cyl_excess, std::fabs(lc + 2.0 * alpha * log_xi) / (2.0 * eps * log_xi));
    if (lk < k_lo || lk > k_hi || lc < c_lo || lc > c_hi) {
      if (part.window_violations++ == 0) {
        std::ostringstream os;
        os << part.members[i].describe() << ": log K = " << lk << " vs [" << k_lo << ", " << k_hi << "], log|cyl| = " << lc
           << " vs [" << c_lo << ", " << c_hi << "]";
        part.first_violation = os.str();
      }
    }
    long i1 = static_cast<long>(std::floor((to_long_double(cf.K()) - corner) / side));
    long i2 = static_cast<long>(std::floor((to_long_double(cf.Kprime()) - corner) / side));
    auto key = std::make_pair(i1, i2);
    auto it = box_of.find(key);
    if (it == box_of.end()) {
      PartitionBox box;
      box.m1_index = i1;
      box.m2_index = i2;
      long double m1 = corner + side * i1, m2 = corner + side * i2;
      box.log_M1 = m1 > 0 ? static_cast<double>(std::log(m1)) : -INFINITY;
      box.log_M2 = m2 > 0 ? static_cast<double>(std::log(m2)) : -INFINITY;
      long double cover = std::exp(static_cast<long double>(k_hi));
      box.inside_cover = i1 >= 0 && i2 >= 0 && m1 <= cover && m2 <= cover;
      box.ratio_ok = m2 > 0 && m1 / m2 > 1.0L && m1 / m2 <= static_cast<long double>(sched.N) + 1.1L;
      box.representative = i;
      it = box_of.emplace(key, part.boxes.size()).first;
      part.boxes.push_back(box);
    }
    PartitionBox& box = part.boxes[it->second];
    box.members.push_back(i);
    if (lex_less(part.members[i], part.members[box.representative])) box.representative = i;
  }
  for (PartitionBox& box : part.boxes) {
    LogSum s;
    for (std::size_t i : box.members) s.add(part.member_log_weight[i]);
    box.log_mass = s.value();
    if (!box.ratio_ok) ++part.ratio_violations;
    if (!box.inside_cover) ++part.boxes_outside_cover;
  }
  part.box_count_constant = static_cast<double>(part.boxes.size()) * std::exp(-part.log_box_bound);
  return part;
}

std::vector<KindExponent> cylinder_exponents(const MeasureTree& tree, const std::vector<AdmissibleSeq>& seqs) {
  const Schedule& sched = tree.schedule();
  const double tau = sched.tau;
  std::vector<KindExponent> kinds(3);
  kinds[0].kind = "terminal-a";
  kinds[0].theory = 1.0;
  kinds[1].kind = "terminal-b";
  kinds[1].theory = tau / (2.0 * tau - 2.0);
  kinds[2].kind = "general-a";
  kinds[2].theory = tau / (2.0 * tau - 2.0);
  std::vector<CompensatedSum> sums(3);
  for (const AdmissibleSeq& seq : seqs) {
    TreeNode node = tree.root();
    for (const Token& t : seq.tokens) {
      if (t.exceptional) node = tree.child_exceptional(node, t.b);
      else node = tree.child_block(node, tree.nu_bar().find(t.block));
      double lc = log_cyl_width(node.cf);
      if (!(lc < 0.0)) continue;  // the first cylinders have length 1
      double ex = node.log_weight / lc;
      std::size_t kind = t.exceptional ? 1 : (tree.exceptional_next(node) ? 0 : 2);
      KindExponent& k = kinds[kind];
      ++k.count;
      k.min_exponent = std::min(k.min_exponent, ex);
      sums[kind].add(ex);
    }
  }
  for (std::size_t i = 0; i < 3; ++i) {
    if (kinds[i].count) kinds[i].mean_exponent = sums[i].value() / static_cast<double>(kinds[i].count);
  }
  return kinds;
}

bool capping_holds(const FiniteCF& G, const BigInt& b, const ApproxProfile& profile) {
  mpfr_prec_t prec = static_cast<mpfr_prec_t>(2 * bit_length(G.K()) + 128);
  FiniteCF Gb = G.extend(b);
  BigInt lhs = Gb.K() * Gb.K();
  Interval rho = profile.rho(G.K(), prec);
  Interval rhs = Interval::of(BigInt(2 * G.K() * G.K()), prec) * square(rho);
  return certainly_less(Interval::of(lhs, prec), rhs);
}

BallScan ball_condition_scan(const MeasureTree& tree, const std::vector<Rational>& widths, const BallScanOptions& opts) {
  const Schedule& sched = tree.schedule();
  BallScan scan;
  std::size_t tokens = opts.tokens ? opts.tokens : tree.tokens_through_level(sched.levels()) + 1;
  std::size_t depth = opts.bracket_depth ? opts.bracket_depth : tokens + 2;
  std::vector<AdmissibleSeq> seqs = tree.sample(tokens, opts.samples, opts.seed, 11);
  scan.kinds = cylinder_exponents(tree, seqs);

  // mass split at exceptional entries, capping arithmetic, denominator ratio
  for (const AdmissibleSeq& seq : seqs) {
    TreeNode node = tree.root();
    std::size_t pos = 0;
    for (const Token& t : seq.tokens) {
      if (t.exceptional) {
        auto T = tree.exceptional_set(node);
        CylinderInterval before = cylinder(node.cf);
        TreeNode child = tree.child_exceptional(node, t.b);
        CylinderInterval after = cylinder(child.cf);
        if (scan.split_checks < 64) {
          LogBracket whole = tree.pushforward_interval(before.lo, before.hi, pos);
          LogBracket part = tree.pushforward_interval(after.lo, after.hi, pos + 1);
          double err = std::fabs(part.upper - (whole.upper - T->log_count()));
          err = std::max(err, std::fabs(part.lower - part.upper));
          scan.split_max_error = std::max(scan.split_max_error, err);
          ++scan.split_checks;
        }
        ++scan.capping_checks;
        if (!capping_holds(node.cf, t.b, tree.profile())) ++scan.capping_failures;
        node = child;
      } else {
        node = tree.child_block(node, tree.nu_bar().find(t.block));
        if (log_of(node.cf.K()) > opts.ratio_log_threshold) {
          ++scan.ratio_checks;
          if (!denominator_ratio_holds(node.cf, sched.N)) ++scan.ratio_failures;
        }
      }
      ++pos;
    }
  }

  std::size_t per = std::min(opts.windows_per_width, seqs.size());
  for (const Rational& h : widths) {
    if (!(h > 0) || h >= 1) throw std::invalid_argument("ball_condition_scan: window widths must lie in (0, 1)");
    double log_h = log_of(h);
    for (std::size_t w = 0; w < per; ++w) {
      const AdmissibleSeq& seq = seqs[w];
      // shallowest prefix whose cylinder is no longer than h
      FiniteCF prefix;
      CylinderInterval cyl{};
      bool found = false;
      for (const Token& t : seq.tokens) {
        prefix = t.exceptional ? prefix.extend(t.b) : prefix.extend_block(t.block);
        cyl = cylinder(prefix);
        if (cyl.width() <= h) {
          found = true;
          break;
        }
      }
      if (!found) continue;
      Rational x = seq.cf.value();
      std::vector<std::pair<std::string, std::pair<Rational, Rational>>> windows = {
          {"aligned", {cyl.lo, Rational(cyl.lo + h)}},
          {"centered", {Rational(x - h / 2), Rational(x + h / 2)}}};
      for (auto& [anchor, iv] : windows) {
        LogBracket br = tree.pushforward_interval(iv.first, iv.second, depth);
        WindowRow row;
        row.log_h = log_h;
        row.anchor = anchor;
        row.log_lo = br.lower;
        row.log_hi = br.upper;
        row.exponent = std::isfinite(br.upper) ? br.upper / log_h : INFINITY;
        row.straddlers = br.straddlers;
        if (row.exponent < scan.beta_hat) {
          scan.beta_hat = row.exponent;
          scan.worst_log_h = log_h;
          scan.worst_window = anchor + " window at sample " + std::to_string(w);
        }
        scan.table.push_back(row);
      }
    }
  }
  return scan;
}

LowerBoundScan lower_bound_scan(const MeasureTree& tree, std::size_t tokens, std::size_t samples, std::uint64_t seed) {
  const Schedule& sched = tree.schedule();
  const BlockMeasure& nb = tree.nu_bar();
  LowerBoundScan out;
  std::vector<AdmissibleSeq> seqs = tree.sample(tokens, samples, seed, 13);
  out.by_depth.assign(tokens, {0, 0.0});
  for (std::size_t d = 0; d < tokens; ++d) out.by_depth[d].first = d + 1;
  for (const AdmissibleSeq& seq : seqs) {
    TreeNode node = tree.root();
    for (std::size_t d = 0; d < seq.tokens.size(); ++d) {
      const Token& t = seq.tokens[d];
      node = t.exceptional ? tree.child_exceptional(node, t.b) : tree.child_block(node, nb.find(t.block));
      double lc = log_cyl_width(node.cf);
      if (!(lc < 0.0)) continue;
      double r = node.log_weight / lc;
      out.by_depth[d].second = std::max(out.by_depth[d].second, r);
      if (r > out.worst_ratio) {
        out.worst_ratio = r;
        out.worst_prefix = std::to_string(d + 1) + " tokens of sample";
      }
    }
  }
  // comparability over the one-block support
  double cmin = INFINITY, cmax = -INFINITY, wmin = INFINITY, wmax = -INFINITY, kmin = INFINITY, kmax = -INFINITY;
  for (std::size_t i = 0; i < nb.size(); ++i) {
    FiniteCF f = FiniteCF::of_small(nb.block(i));
    double lc = log_cyl_width(f);
    cmin = std::min(cmin, lc);
    cmax = std::max(cmax, lc);
    wmin = std::min(wmin, nb.log_weights[i]);
    wmax = std::max(wmax, nb.log_weights[i]);
    double lk = log_of(f.K());
    kmin = std::min(kmin, lk);
    kmax = std::max(kmax, lk);
  }
  // log|cyl G2| / log|cyl G1| over ordered pairs: extremes at (max, min) and (min, max)
  out.cyl_exponent_lo = cmax / cmin;
  out.cyl_exponent_hi = cmin / cmax;
  out.mass_exponent_lo = wmax / wmin;
  out.mass_exponent_hi = wmin / wmax;
  const double e = sched.epsilon;
  out.lebesgue_ok = out.cyl_exponent_lo >= 1.0 - e / 50.0 && out.cyl_exponent_hi <= 1.0 + e / 50.0;
  out.mass_ok = out.mass_exponent_lo >= 1.0 - e / 50.0 && out.mass_exponent_hi <= 1.0 + e / 50.0;
  out.logK_min_ratio = kmin / sched.sigma;
  out.logK_max_ratio = kmax / sched.sigma;
  out.logK_ok = out.logK_min_ratio >= 1.0 - e / 100.0 && out.logK_max_ratio <= 1.0 + e / 100.0;
  return out;
}

RelativeBallResult relative_ball_check(const MeasureTree& tree, const AdmissibleSeq& G, double log_xi, double alpha,
                                       RelativeMode mode, double c_rel, double log_width, std::size_t windows,
                                       std::size_t depth, std::uint64_t seed) {
  const Schedule& sched = tree.schedule();
  const double eps = sched.epsilon, tau = sched.tau;
  ScaleChoice ch = choose_alpha(log_xi, sched);
  bool a0_typical = ch.at_alpha0.kind == ScaleKind::typical;
  if ((mode == RelativeMode::bad) != a0_typical) {
    throw std::invalid_argument("relative_ball_check: mode does not match the scale kind of |xi|^alpha0");
  }
  ScaleClassification c = classify_scale(alpha * log_xi, sched);
  if (c.kind != ScaleKind::typical) throw std::invalid_argument("relative_ball_check: |xi|^alpha is exceptional");
  if (static_cast<long>(G.block_count()) != std::max<long>(0, *c.j_of_zeta)) {
    throw std::invalid_argument("relative_ball_check: G must carry j(zeta) blocks");
  }
  double nominal = (-1.0 + 2.0 * alpha) * log_xi;
  if (std::fabs(log_width - nominal) > eps * log_xi) {
    throw std::invalid_argument("relative_ball_check: |I| outside |xi|^(-1+2 alpha +- eps)");
  }
  RelativeBallResult r;
  r.log_width = log_width;
  r.beta_F = mode == RelativeMode::bad ? (2.0 / tau - 2.0 * alpha) / (1.0 - 2.0 * alpha) - c_rel * eps
                                       : 1.0 - c_rel * eps;
  RelativeView view(tree, G);
  Rational h = rational_from_double(std::exp(log_width));
  double log_h = log_of(h);
  std::size_t tail_tokens = std::max<std::size_t>(4, depth);
  std::vector<AdmissibleSeq> tails = tree.sample_continuations(G, tail_tokens, windows, seed, 17);
  r.worst_margin = INFINITY;
  for (const AdmissibleSeq& tail : tails) {
    Rational x = tail.cf.value();
    Rational lo = x - h / 2, hi = x + h / 2;
    if (lo < 1) {
      lo = 1;
      hi = 1 + h;
    }
    auto img = mobius_image(G.cf, lo, hi);
    Rational stretched = img.second - img.first;
    if (stretched * G.cf.K() * G.cf.K() > h) r.stretch_ok = false;
    LogBracket br = view.pushforward(lo, hi, depth);
    ++r.windows;
    if (!std::isfinite(br.upper)) continue;
    double ex = br.upper / log_h;
    r.worst_exponent = std::min(r.worst_exponent, ex);
    r.worst_margin = std::min(r.worst_margin, r.beta_F * log_h - br.upper);
  }
  r.pass = r.windows > 0 && r.worst_margin >= 0.0 && r.stretch_ok;
  return r;
}

DimBracket dim_bad_estimate(long N, long m, std::uint64_t budget) {
  if (N < 1 || m < 1) throw std::invalid_argument("dim_bad_estimate: N and m must be positive");
  DimBracket out;
  out.m = m;
  out.lo = 0.0;
  out.hi = 1.0;
  for (long len : {m, m + 1}) {
    double words = std::pow(static_cast<double>(N), static_cast<double>(len));
    if (words > static_cast<double>(budget)) throw BudgetExceeded("dim_bad_estimate: N^m beyond the enumeration budget");
    std::vector<double> logk;
    logk.reserve(static_cast<std::size_t>(words));
    std::vector<std::uint8_t> w(static_cast<std::size_t>(len), 1);
    while (true) {
      logk.push_back(log_interior_continuant(w.data(), w.size()));
      std::size_t i = w.size();
      while (i > 0 && w[i - 1] == N) w[--i] = 1;
      if (i == 0) break;
      ++w[i - 1];
    }
    double kmin = *std::min_element(logk.begin(), logk.end());
    auto logZ = [&](double s) {
      // shift by the largest term for stability
      CompensatedSum acc;
      for (double lk : logk) acc.add(std::exp(-2.0 * s * (lk - kmin)));
      return -2.0 * s * kmin + std::log(acc.value());
    };
    auto root = [&](double slope) {
      // logZ(s) - slope*s is decreasing in s
      double a = 0.0, b = 1.0;
      if (logZ(0.0) <= 0.0) return 0.0;
      for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (a + b);
        if (logZ(mid) - slope * mid > 0.0) a = mid;
        else b = mid;
      }
      return 0.5 * (a + b);
    };
    double lo = (N == 1) ? 0.0 : root(std::log(4.0));
    double hi = (N == 1) ? 0.0 : root(0.0);
    out.lo = std::max(out.lo, lo);
    out.hi = std::min(out.hi, hi);
  }
  return out;
}

}  // namespace exorder

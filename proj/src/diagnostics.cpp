#include "exorder/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "exorder/admissible.hpp"

namespace exorder {

namespace {

std::size_t box_of_member(const ClassPartition& partition, std::size_t member) {
  for (std::size_t b = 0; b < partition.boxes.size(); ++b) {
    const auto& m = partition.boxes[b].members;
    if (std::find(m.begin(), m.end(), member) != m.end()) return b;
  }
  throw std::invalid_argument("approx_error_diagnostics: member " + std::to_string(member) + " is in no box");
}

std::vector<std::uint8_t> flatten(const std::vector<Token>& H) {
  std::vector<std::uint8_t> out;
  for (const Token& t : H)
    for (int c : t.block) out.push_back(static_cast<std::uint8_t>(c));
  return out;
}

FiniteCF with_blocks(const FiniteCF& base, const std::vector<Token>& H) {
  FiniteCF cf = base;
  for (const Token& t : H) cf = cf.extend_block(t.block);
  return cf;
}

}  // namespace

ApproxErrorReport approx_error_diagnostics(const MeasureTree& tree, const ClassPartition& partition,
                                           std::size_t member, double xi, const ApproxErrorOptions& opts) {
  if (member >= partition.members.size()) throw std::out_of_range("approx_error_diagnostics: member index");
  const Schedule& sched = tree.schedule();
  const BlockMeasure& nu = tree.nu_bar();
  const double eps = sched.epsilon;
  const double log_xi = std::log(std::abs(xi));

  ApproxErrorReport rep;
  rep.member = member;
  rep.representative = partition.boxes[box_of_member(partition, member)].representative;

  const AdmissibleSeq& G = partition.members[member];
  const AdmissibleSeq& R = partition.members[rep.representative];
  rep.stage = G.exceptional_count();
  const std::size_t k = rep.stage;
  if (k + 1 >= sched.levels())
    throw StageUnreachable("approx_error_diagnostics: no exceptional level after stage " + std::to_string(k + 1) +
                           " in a schedule with " + std::to_string(sched.levels()) + " levels");
  const long jz = static_cast<long>(G.block_count());
  if (sched.jk[k] < jz) throw std::logic_error("approx_error_diagnostics: member past its next exceptional entry");
  rep.H_blocks = static_cast<std::size_t>(sched.jk[k] - jz);
  const double eta = sched.etak[k];

  RelativeView view_G(tree, G), view_R(tree, R);
  rep.same_denominators = G.cf.K() == R.cf.K() && G.cf.Kprime() == R.cf.Kprime();

  double lk_min = INFINITY, lk_max = -INFINITY;
  CompensatedSum t2_G, t2_R;
  std::size_t t2_count_R = 0;

  auto classify = [&](const std::vector<Token>& H) {
    if (!H.empty()) {
      std::vector<std::uint8_t> w = flatten(H);
      double lk = log_interior_continuant(w.data(), w.size());
      lk_min = std::min(lk_min, lk);
      lk_max = std::max(lk_max, lk);
    }
    long long gG = gamma_eta(with_blocks(G.cf, H), eta, tree.profile());
    long long gR = rep.same_denominators ? gG : gamma_eta(with_blocks(R.cf, H), eta, tree.profile());
    return gG != gR;
  };

  double log_count = static_cast<double>(rep.H_blocks) * std::log(static_cast<double>(nu.size()));
  rep.exhaustive = log_count <= std::log(static_cast<double>(opts.exhaustive_budget)) + 1e-12;

  if (rep.exhaustive) {
    const std::size_t S = nu.size();
    std::vector<std::size_t> digits(rep.H_blocks, 0);
    std::vector<Token> H(rep.H_blocks);
    for (std::size_t i = 0; i < rep.H_blocks; ++i) H[i] = Token{false, nu.block(0), BigInt(0)};
    for (;;) {
      double wG = view_G.log_weight(H);
      double wR = view_R.log_weight(H);
      ++rep.weight_checks;
      if (!(wG == wR)) ++rep.weight_mismatches;
      ++rep.H_evaluated;
      if (classify(H)) {
        ++rep.t2_count;
        t2_G.add(std::exp(wG));
        t2_R.add(std::exp(wR));
      }
      std::size_t pos = 0;
      while (pos < rep.H_blocks && ++digits[pos] == S) {
        digits[pos] = 0;
        H[pos].block = nu.block(0);
        ++pos;
      }
      if (pos == rep.H_blocks) break;
      H[pos].block = nu.block(digits[pos]);
    }
    rep.t2_mass_member = t2_G.value();
    rep.t2_mass_representative = t2_R.value();
  } else {
    // H drawn from lambda_G; lambda_rep gets its own draws as an independent estimate
    auto draws_G = tree.sample_continuations(G, rep.H_blocks, opts.samples, opts.seed, 53);
    auto draws_R = tree.sample_continuations(R, rep.H_blocks, opts.samples, opts.seed, 59);
    for (const auto& d : draws_G) {
      double wG = view_G.log_weight(d.tokens);
      double wR = view_R.log_weight(d.tokens);
      ++rep.weight_checks;
      if (!(wG == wR)) ++rep.weight_mismatches;
      ++rep.H_evaluated;
      if (classify(d.tokens)) ++rep.t2_count;
    }
    for (const auto& d : draws_R) {
      ++rep.H_evaluated;
      if (classify(d.tokens)) ++t2_count_R;
    }
    const double n = static_cast<double>(opts.samples);
    rep.t2_mass_member = static_cast<double>(rep.t2_count) / n;
    rep.t2_mass_representative = static_cast<double>(t2_count_R) / n;
    double pmax = std::max(rep.t2_mass_member, rep.t2_mass_representative);
    rep.t2_stderr = std::sqrt(std::max(pmax * (1.0 - pmax), 1.0 / n) / n);
  }

  if (rep.H_blocks > 0) {
    rep.logK_H_min = lk_min;
    rep.logK_H_max = lk_max;
    rep.log_theta_lo = lk_max / (1.0 + eps);
    rep.log_theta_hi = lk_min / (1.0 - eps);
    rep.theta_bracket_nonempty = rep.log_theta_lo < rep.log_theta_hi;
    rep.theta_small = 0.5 * (rep.log_theta_lo + rep.log_theta_hi) <= 5.0 * log_xi;
  } else {
    rep.theta_bracket_nonempty = true;
    rep.theta_small = true;
  }

  rep.t2_threshold = opts.t2_prefactor * std::exp(-opts.t2_exponent_slack * eps * log_xi);
  // the threshold applies only when theta <= |xi|^5; larger theta is covered by cylinder smallness
  rep.t2_ok = !rep.theta_small ||
              std::max(rep.t2_mass_member, rep.t2_mass_representative) <= rep.t2_threshold;

  // F runs from H through b_{k+1} and the next block run; its cylinder is at most K(F)^-2 and
  // K(F) >= K(H) K(run), with the b entry dropped
  const double log_KF = log_K_floor(nu, static_cast<long>(rep.H_blocks)) +
                        log_K_floor(nu, sched.jk[k + 1] - sched.jk[k]);
  const double log_q = log_of(G.cf.K());
  rep.t1_log_bound = std::log(4.0 * std::numbers::pi * std::abs(xi)) - 2.0 * log_KF - 2.0 * log_q;
  rep.t1_gap = rep.same_denominators ? 0.0 : std::exp(rep.t1_log_bound);
  rep.t1_ok = rep.same_denominators || rep.t1_log_bound <= -log_xi;

  rep.pass = rep.weight_mismatches == 0 && rep.theta_bracket_nonempty && rep.t2_ok && rep.t1_ok;
  return rep;
}

}  // namespace exorder

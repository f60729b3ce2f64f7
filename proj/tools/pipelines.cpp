#include "pipelines.hpp"

#include <boost/version.hpp>
#include <gmp.h>
#include <mpfr.h>
#include <openssl/opensslv.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "exorder/admissible.hpp"
#include "exorder/block_measure.hpp"
#include "exorder/diagnostics.hpp"
#include "exorder/fourier.hpp"
#include "exorder/geometry.hpp"
#include "exorder/normality.hpp"
#include "exorder/parallel.hpp"
#include "exorder/serialize.hpp"

namespace exorder::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string kind_name(ScaleKind k) { return k == ScaleKind::typical ? "typical" : "exceptional"; }

void write_artifact(RunContext& ctx, const std::string& name, const std::string& content) {
  fs::path p = ctx.out / name;
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
  ctx.artifacts[name] = sha256_hex(content);
}

Json checks_json(const std::vector<CheckRow>& rows) {
  Json a = Json::array();
  for (const auto& r : rows) a.push_back(Json{{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
  return a;
}

void record_failures(RunContext& ctx, const std::string& pipeline, const std::vector<CheckRow>& rows) {
  for (const auto& r : rows)
    if (!r.pass) ctx.failed.push_back(pipeline + ": " + r.name + " (" + r.detail + ")");
}

std::string fmt(double x) { return fmt17(x); }

// ---- build ---------------------------------------------------------------

void pipeline_build(RunContext& ctx, std::ostream& log) {
  const RunConfig& c = ctx.config;
  ApproxProfile profile = build_profile(c.profile);
  BlockMeasure nu = build_nu_m(c.schedule.N, c.schedule.m, c.schedule.epsilon, c.schedule.enumeration_budget);
  BlockMeasure nb = build_nu_bar(nu, c.schedule.J, c.schedule.concentration, c.schedule.enumeration_budget);
  ScheduleOptions opts;
  opts.epsilon = c.schedule.epsilon;
  opts.levels = c.schedule.levels;
  opts.eta_ratio = c.schedule.eta_ratio;
  opts.max_j1 = c.schedule.max_j1;
  Schedule sched = default_schedule(profile, nb, opts);
  if (!sched.feasible()) {
    std::string failed;
    for (const auto& f : sched.failed_checks(true)) failed += (failed.empty() ? "" : ", ") + f;
    throw InfeasibleSchedule("schedule fails required checks: " + failed);
  }
  ctx.tree = std::make_unique<MeasureTree>(sched, profile, nb);
  log << "build: support " << nb.size() << " blocks, j_k =";
  for (long j : sched.jk) log << " " << j;
  log << "\n";

  write_artifact(ctx, "tree_snapshot.json",
                 dump_json(tree_snapshot(*ctx.tree, ctx.hash, c.snapshot_nodes, c.seed.value_or(0))));
  Json side;
  side["header"] = artifact_header("exorder.schedule", ctx.hash);
  side["schedule"] = to_json(sched);
  side["validated"] = sched.validated();
  side["feasible"] = sched.feasible();
  write_artifact(ctx, "schedule.json", dump_json(side));

  NuBarReport r = check_nu_bar(nb, nb.concentration);
  Json nbj;
  nbj["header"] = artifact_header("exorder.nu_bar_report", ctx.hash);
  nbj["support"] = nb.size();
  nbj["sigma"] = nb.sigma;
  nbj["concentration"] = nb.concentration;
  nbj["max_factor"] = r.max_factor;
  nbj["min_factor"] = r.min_factor;
  nbj["property_a"] = r.property_a;
  nbj["property_b"] = r.property_b;
  nbj["worst_relative_deviation"] = r.worst_relative_deviation;
  nbj["retained_mass"] = r.retained_mass;
  nbj["mass_ok"] = r.mass_ok;
  ProfileFlags flags = profile.validate();
  nbj["profile_flags"] = {{"psi_positive", flags.psi_positive},
                          {"q2psi_le_one", flags.q2psi_le_one},
                          {"q2psi_to_zero", flags.q2psi_to_zero},
                          {"tau_in_range", flags.tau_in_range},
                          {"notes", flags.notes}};
  write_artifact(ctx, "nu_bar_report.json", dump_json(nbj));
}

void ensure_tree(RunContext& ctx, std::ostream& log) {
  if (ctx.tree) return;
  fs::path snap = ctx.out / "tree_snapshot.json";
  if (fs::exists(snap)) {
    std::ifstream in(snap);
    Json j;
    try {
      j = Json::parse(in);
    } catch (const std::exception& e) {
      throw VerificationFailure(std::string("tree snapshot is not valid JSON: ") + e.what());
    }
    std::string stored;
    try {
      stored = j.at("header").at("config_hash").get<std::string>();
    } catch (...) {
    }
    if (stored == ctx.hash) {
      SnapshotCheck chk = validate_snapshot(j);
      if (!chk.ok) throw VerificationFailure("tree snapshot violates invariant '" + chk.invariant + "': " + chk.detail);
      ctx.tree.reset(new MeasureTree(tree_from_snapshot(j)));
      ctx.artifacts["tree_snapshot.json"] = sha256_hex(dump_json(j));
      log << "loaded tree snapshot\n";
      return;
    }
    log << "tree snapshot belongs to another config, rebuilding\n";
  }
  pipeline_build(ctx, log);
}

// ---- geometry ------------------------------------------------------------

struct BallOutcome {
  BallScan scan;
  std::vector<CheckRow> checks;
};

BallOutcome ball_scan(RunContext& ctx) {
  const RunConfig& c = ctx.config;
  const MeasureTree& tree = *ctx.tree;
  std::vector<Rational> widths;
  for (double e : c.geometry.ball_log10_widths) {
    if (!(e < 0) || e != std::floor(e)) throw ConfigError("geometry.ball_log10_widths must be negative integers");
    BigInt d;
    mpz_ui_pow_ui(d.get_mpz_t(), 10, static_cast<unsigned long>(-e));
    widths.push_back(Rational(BigInt(1), d));
  }
  BallScanOptions bo;
  bo.samples = c.geometry.ball_samples;
  bo.seed = c.require_seed();
  bo.windows_per_width = c.geometry.windows_per_width;
  BallOutcome out;
  out.scan = ball_condition_scan(tree, widths, bo);
  const BallScan& s = out.scan;
  out.checks.push_back({"mass-split-identity", s.split_max_error <= 1e-12,
                        "max log error " + fmt(s.split_max_error) + " over " + std::to_string(s.split_checks)});
  out.checks.push_back({"capping", s.capping_failures == 0,
                        std::to_string(s.capping_failures) + " of " + std::to_string(s.capping_checks)});
  out.checks.push_back({"denominator-ratio", s.ratio_failures == 0,
                        std::to_string(s.ratio_failures) + " of " + std::to_string(s.ratio_checks)});
  const ConstantsLedger& L = ctx.ledger;
  if (L.calibrated_on == ctx.model_hash) {
    out.checks.push_back({"beta-hat-regression", std::fabs(s.beta_hat - L.beta_hat) <= L.exponent_tolerance,
                          "beta_hat " + fmt(s.beta_hat) + ", ledger " + fmt(L.beta_hat)});
    for (const auto& k : s.kinds) {
      auto it = L.kind_exponents.find(k.kind);
      if (it == L.kind_exponents.end()) {
        out.checks.push_back({"kind-exponent-" + k.kind, false, "kind missing from the ledger"});
        continue;
      }
      out.checks.push_back({"kind-exponent-" + k.kind, std::fabs(k.min_exponent - it->second) <= L.exponent_tolerance,
                            "min exponent " + fmt(k.min_exponent) + ", ledger " + fmt(it->second)});
    }
  }
  Json j;
  j["header"] = artifact_header("exorder.ball_scan", ctx.hash);
  j["beta_hat"] = s.beta_hat;
  j["worst_window"] = s.worst_window;
  j["worst_log_h"] = s.worst_log_h;
  j["ledger_compared"] = L.calibrated_on == ctx.model_hash;
  Json kinds = Json::array();
  for (const auto& k : s.kinds)
    kinds.push_back({{"kind", k.kind}, {"count", k.count}, {"min_exponent", k.min_exponent},
                     {"mean_exponent", k.mean_exponent}, {"theory", k.theory}});
  j["kinds"] = kinds;
  j["checks"] = checks_json(out.checks);
  write_artifact(ctx, "balls.json", dump_json(j));
  if (c.write_csv) {
    CsvTable t("exorder.ball_windows", ctx.hash, {"log_h", "window", "log_mass_lo", "log_mass_hi", "exponent", "straddlers"});
    for (const auto& w : s.table)
      t.row({fmt(w.log_h), w.anchor, fmt(w.log_lo), fmt(w.log_hi), fmt(w.exponent), std::to_string(w.straddlers)});
    write_artifact(ctx, "ball_windows.csv", t.str());
  }
  return out;
}

void pipeline_scan_balls(RunContext& ctx, std::ostream& log) {
  ensure_tree(ctx, log);
  BallOutcome b = ball_scan(ctx);
  log << "scan-balls: beta_hat " << fmt(b.scan.beta_hat) << "\n";
  record_failures(ctx, "scan-balls", b.checks);
}

void pipeline_verify_geometry(RunContext& ctx, std::ostream& log) {
  ensure_tree(ctx, log);
  const RunConfig& c = ctx.config;
  const MeasureTree& tree = *ctx.tree;
  const Schedule& sched = tree.schedule();
  std::vector<CheckRow> checks;

  NuBarReport nbr = check_nu_bar(tree.nu_bar(), tree.nu_bar().concentration);
  checks.push_back({"nu-bar-factor", nbr.property_a, "max factor " + fmt(nbr.max_factor)});
  checks.push_back({"nu-bar-window", nbr.property_b, "worst relative deviation " + fmt(nbr.worst_relative_deviation)});
  checks.push_back({"nu-bar-mass", nbr.mass_ok, "retained " + fmt(nbr.retained_mass)});

  BallOutcome balls = ball_scan(ctx);
  checks.insert(checks.end(), balls.checks.begin(), balls.checks.end());

  // scale sweep: windows are disjoint and classification agrees with them
  const double top = 1.2 * (sched.tau + 1.0) * static_cast<double>(sched.jk.back()) * sched.sigma;
  std::size_t partition_errors = 0, escape_failures = 0, escape_cases = 0;
  for (int i = 1; i <= 1000; ++i) {
    double lz = top * i / 1000.0;
    int inside = 0;
    for (std::size_t k = 1; k <= sched.levels(); ++k) {
      double jk = static_cast<double>(sched.j_at(k));
      if (lz >= (1.0 - 2.0 * sched.epsilon) * jk * sched.sigma && lz <= (sched.tau - 1.0 + 2.0 * sched.epsilon) * jk * sched.sigma) ++inside;
    }
    ScaleClassification cl = classify_scale(lz, sched);
    bool exc = cl.kind == ScaleKind::exceptional;
    if (inside > 1 || exc != (inside == 1) || exc == cl.j_of_zeta.has_value()) ++partition_errors;
    double lx = lz / alpha0();
    ScaleChoice ch = choose_alpha(lx, sched);
    if (ch.used_alpha1 && !ch.chosen.beyond_schedule) {
      ++escape_cases;
      if (ch.chosen.kind != ScaleKind::typical) ++escape_failures;
    }
  }
  checks.push_back({"scale-partition", partition_errors == 0, std::to_string(partition_errors) + " of 1000 scales"});
  checks.push_back({"alpha-escape", escape_failures == 0,
                    std::to_string(escape_failures) + " of " + std::to_string(escape_cases) + " exceptional scales"});

  ScaleChoice ch = choose_alpha(c.geometry.partition_log_xi, sched);
  ClassPartition part = partition_classes(tree, c.geometry.partition_log_xi, ch.alpha, c.geometry.partition_gap);
  checks.push_back({"partition-windows", part.window_violations == 0,
                    std::to_string(part.window_violations) + " of " + std::to_string(part.members.size()) + " members" +
                        (part.first_violation.empty() ? "" : "; first " + part.first_violation)});
  checks.push_back({"partition-ratio", part.ratio_violations == 0, std::to_string(part.ratio_violations) + " members"});

  LowerBoundScan lb = lower_bound_scan(tree, c.geometry.lower_tokens, c.geometry.lower_samples, c.require_seed());

  Json j;
  j["header"] = artifact_header("exorder.geometry", ctx.hash);
  j["checks"] = checks_json(checks);
  j["beta_hat"] = balls.scan.beta_hat;
  j["partition"] = {{"log_xi", part.log_xi},
                    {"alpha", part.alpha},
                    {"used_alpha1", ch.used_alpha1},
                    {"gap", part.gap},
                    {"j_of_zeta", part.j_of_zeta},
                    {"members", part.members.size()},
                    {"boxes", part.boxes.size()},
                    {"boxes_outside_cover", part.boxes_outside_cover},
                    {"worst_K_excess", part.worst_K_excess},
                    {"worst_cyl_excess", part.worst_cyl_excess},
                    {"box_count_constant", part.box_count_constant}};
  j["lower_bound"] = {{"worst_ratio", lb.worst_ratio},
                      {"worst_prefix", lb.worst_prefix},
                      {"cyl_exponent", Json{lb.cyl_exponent_lo, lb.cyl_exponent_hi}},
                      {"mass_exponent", Json{lb.mass_exponent_lo, lb.mass_exponent_hi}},
                      {"lebesgue_ok", lb.lebesgue_ok},
                      {"mass_ok", lb.mass_ok},
                      {"logK_ratio", Json{lb.logK_min_ratio, lb.logK_max_ratio}},
                      {"logK_ok", lb.logK_ok}};
  write_artifact(ctx, "geometry.json", dump_json(j));
  std::size_t bad = 0;
  for (const auto& r : checks) bad += !r.pass;
  log << "verify-geometry: " << checks.size() - bad << "/" << checks.size() << " checks pass\n";
  record_failures(ctx, "verify-geometry", checks);
}

// ---- fourier -------------------------------------------------------------

void pipeline_verify_fourier(RunContext& ctx, std::ostream& log) {
  ensure_tree(ctx, log);
  const RunConfig& c = ctx.config;
  const MeasureTree& tree = *ctx.tree;
  const Schedule& sched = tree.schedule();
  const ConstantsLedger& L = ctx.ledger;
  const double lx = c.fourier.log_xi, xi = std::exp(lx), eps = sched.epsilon, tau = sched.tau;
  std::vector<CheckRow> checks;

  ScaleChoice ch = choose_alpha(lx, sched);
  ClassPartition part = partition_classes(tree, lx, ch.alpha, c.fourier.gap);

  M2Options mo;
  mo.stationary_K = L.stationary_K;
  mo.prefactor = L.m2_prefactor;
  mo.exponent_slack = L.m2_exponent_slack;
  mo.workers = ctx.workers;

  Json boxes = Json::array();
  std::size_t m_fail = 0, m2_fail = 0, m2_boxes = 0, vdc_viol = 0, c3_fail = 0, agree_fail = 0;
  double worst_gap = 0.0;
  std::size_t qr_box = c.fourier.qr_box;
  std::size_t qr_size = 0;
  std::vector<double> box_M(part.boxes.size(), 0.0), box_m2(part.boxes.size(), -1.0);
  for (std::size_t b = 0; b < part.boxes.size(); ++b) {
    BoxFunction F = build_f_xi(part, b, xi, sched.N);
    MBoundResult M = M_bound_check(F, ch.alpha, eps);
    box_M[b] = M.M_numeric;
    if (!M.pass) ++m_fail;
    Json bj = {{"box", b}, {"members", F.size()}, {"groups", F.group_count()}, {"mass", F.mass()},
               {"M_numeric", M.M_numeric}, {"M_bound", M.M_bound}, {"M_pass", M.pass}};
    if (F.size() <= c.fourier.max_box_members) {
      ++m2_boxes;
      M2Result r = m2_decompose(F, ch.alpha, eps, tau, mo);
      box_m2[b] = r.m2_quadrature;
      if (!r.pass) ++m2_fail;
      if (!r.agree) ++agree_fail;
      if (!r.c3_ok) ++c3_fail;
      vdc_viol += r.bound_violations;
      worst_gap = std::max(worst_gap, r.relative_gap);
      bj["m2_quadrature"] = r.m2_quadrature;
      bj["m2_pairwise"] = r.m2_pairwise;
      bj["relative_gap"] = r.relative_gap;
      bj["pair_counts"] = Json{r.counts[0], r.counts[1], r.counts[2]};
      bj["class_magnitude"] = Json{r.magnitude[0], r.magnitude[1], r.magnitude[2]};
      bj["bound_violations"] = r.bound_violations;
      bj["bound_rhs"] = r.bound_rhs;
      bj["m2_pass"] = r.pass;
      if (c.fourier.qr_box == 0 && F.size() > qr_size) {
        qr_size = F.size();
        qr_box = b;
      }
    }
    boxes.push_back(bj);
  }
  checks.push_back({"M-bound", m_fail == 0, std::to_string(m_fail) + " of " + std::to_string(part.boxes.size()) + " boxes"});
  checks.push_back({"m2-dual-agreement", agree_fail == 0, "worst relative gap " + fmt(worst_gap)});
  checks.push_back({"vdc-bounds", vdc_viol == 0, std::to_string(vdc_viol) + " pair violations"});
  checks.push_back({"c3-magnitude", c3_fail == 0, std::to_string(c3_fail) + " boxes"});
  checks.push_back({"m2-bound", m2_fail == 0, std::to_string(m2_fail) + " of " + std::to_string(m2_boxes) + " boxes"});

  C3Recovery rec = c3_recovery_check(part, sched.N);
  checks.push_back({"c3-recovery", rec.pass,
                    "max partners " + std::to_string(rec.max_partners) + ", failures " + std::to_string(rec.recovery_failures)});

  Json qrj = Json::object();
  if (qr_box < part.boxes.size() && box_m2[qr_box] >= 0.0) {
    BoxFunction F = build_f_xi(part, qr_box, xi, sched.N);
    RelativeView view(tree, part.members[part.boxes[qr_box].representative]);
    const double log_r = -1000.0 * eps * lx;
    const double beta = (2.0 / tau - 2.0 * ch.alpha) / (1.0 - 2.0 * ch.alpha) - L.rel_ball_C * eps;
    BallPrecondition pre = qr_ball_precondition(view, log_r - std::log(box_M[qr_box]), beta, 4, c.require_seed());
    QrResult q = qr_combine(F, view, log_r, beta, box_M[qr_box], box_m2[qr_box], pre);
    checks.push_back({"qr-desk", q.pass, "lhs upper " + fmt(q.lhs_upper) + ", log rhs " + fmt(q.log_rhs) +
                                             (q.precondition_ok ? "" : "; precondition: " + q.precondition_detail)});
    qrj = {{"box", qr_box}, {"log_r", log_r}, {"beta", beta}, {"lhs", q.lhs}, {"lhs_upper", q.lhs_upper},
           {"log_rhs", q.log_rhs}, {"precondition_ok", q.precondition_ok}, {"precondition_margin", pre.worst_margin},
           {"precondition_depth", pre.depth}, {"pass", q.pass}};

    // approximation-error diagnostics for every member of the same box
    ApproxErrorOptions ao;
    ao.samples = c.fourier.diagnostic_samples;
    ao.seed = c.require_seed();
    ao.t2_prefactor = L.t2_prefactor;
    ao.t2_exponent_slack = L.t2_exponent_slack;
    Json diag = Json::array();
    std::size_t mismatches = 0, t2_fail = 0, c2_fail = 0;
    double worst_t2 = 0.0;
    for (std::size_t mi : part.boxes[qr_box].members) {
      ApproxErrorReport r = approx_error_diagnostics(tree, part, mi, xi, ao);
      mismatches += r.weight_mismatches;
      if (!r.t2_ok) ++t2_fail;
      if (!r.t1_ok) ++c2_fail;
      worst_t2 = std::max({worst_t2, r.t2_mass_member, r.t2_mass_representative});
      diag.push_back({{"member", mi}, {"representative", r.representative}, {"same_denominators", r.same_denominators},
                      {"H_blocks", r.H_blocks}, {"exhaustive", r.exhaustive}, {"t2_mass_member", r.t2_mass_member},
                      {"t2_mass_representative", r.t2_mass_representative}, {"t2_stderr", r.t2_stderr},
                      {"t2_threshold", r.t2_threshold}, {"log_theta", Json{r.log_theta_lo, r.log_theta_hi}},
                      {"theta_small", r.theta_small}, {"weight_checks", r.weight_checks},
                      {"weight_mismatches", r.weight_mismatches}, {"t1_gap", r.t1_gap},
                      {"t1_log_bound", r.t1_log_bound}, {"pass", r.pass}});
    }
    checks.push_back({"relative-weights-equal", mismatches == 0, std::to_string(mismatches) + " mismatches"});
    checks.push_back({"t2-mass", t2_fail == 0, std::to_string(t2_fail) + " members above threshold, worst mass " + fmt(worst_t2)});
    checks.push_back({"t1-integral-difference", c2_fail == 0, std::to_string(c2_fail) + " members"});
    qrj["diagnostics"] = diag;
  } else {
    checks.push_back({"qr-desk", false, "no box within the member limit"});
  }

  Rng rng(c.require_seed(), 83);
  std::size_t syn_pass = 0;
  for (std::size_t i = 0; i < c.fourier.synthetic_instances; ++i) syn_pass += qr_combine_synthetic(random_qr_instance(rng)).pass;
  checks.push_back({"qr-synthetic", syn_pass == c.fourier.synthetic_instances,
                    std::to_string(syn_pass) + "/" + std::to_string(c.fourier.synthetic_instances)});

  Json j;
  j["header"] = artifact_header("exorder.fourier_checks", ctx.hash);
  j["log_xi"] = lx;
  j["alpha"] = ch.alpha;
  j["used_alpha1"] = ch.used_alpha1;
  j["gap"] = c.fourier.gap;
  j["ledger"] = {{"stationary_K", L.stationary_K}, {"m2_prefactor", L.m2_prefactor}, {"rel_ball_C", L.rel_ball_C},
                 {"t2_prefactor", L.t2_prefactor}};
  j["checks"] = checks_json(checks);
  j["boxes"] = boxes;
  j["qr"] = qrj;
  write_artifact(ctx, "fourier_checks.json", dump_json(j));
  std::size_t bad = 0;
  for (const auto& r : checks) bad += !r.pass;
  log << "verify-fourier: " << checks.size() - bad << "/" << checks.size() << " checks pass\n";
  record_failures(ctx, "verify-fourier", checks);
}

// ---- scans ---------------------------------------------------------------

void pipeline_decay(RunContext& ctx, std::ostream& log) {
  ensure_tree(ctx, log);
  const DecaySettings& d = ctx.config.decay;
  std::vector<double> xis = geometric_grid(d.xi_min, d.xi_max, d.points);
  AlphaPolicy policy = d.policy == "alpha0" ? AlphaPolicy::alpha0_only : AlphaPolicy::adaptive;
  DecayScan scan = decay_scan(*ctx.tree, xis, policy, FourierMethod::cylinder_sum(d.depth, d.target_error), ctx.workers);
  CsvTable t("exorder.decay", ctx.hash, {"xi", "alpha", "scaleKind", "re", "im", "modulus", "errorBound"});
  Json rows = Json::array();
  for (const auto& r : scan.table) {
    t.row({fmt(r.xi), fmt(r.alpha), kind_name(r.scale_kind), fmt(r.value.real()), fmt(r.value.imag()), fmt(r.modulus),
           fmt(r.error_bound)});
    rows.push_back({{"xi", r.xi}, {"alpha", r.alpha}, {"scale_kind", kind_name(r.scale_kind)}, {"re", r.value.real()},
                    {"im", r.value.imag()}, {"modulus", r.modulus}, {"error_bound", r.error_bound}, {"leaves", r.leaves}});
  }
  write_artifact(ctx, "decay.csv", t.str());
  Json j;
  j["header"] = artifact_header("exorder.decay", ctx.hash);
  j["policy"] = d.policy;
  j["method"] = FourierMethod::cylinder_sum(d.depth, d.target_error).describe();
  j["slope"] = scan.slope ? Json(*scan.slope) : Json(nullptr);
  j["intercept"] = scan.intercept ? Json(*scan.intercept) : Json(nullptr);
  j["table"] = rows;
  write_artifact(ctx, "decay.json", dump_json(j));
  log << "decay-scan: slope " << (scan.slope ? fmt(*scan.slope) : std::string("undefined")) << "\n";
}

void pipeline_exactness(RunContext& ctx, std::ostream& log) {
  ensure_tree(ctx, log);
  const ExactnessSettings& e = ctx.config.exactness;
  const MeasureTree& tree = *ctx.tree;
  std::size_t tokens = e.tokens ? e.tokens : tree.tokens_through_level(1) + 40;
  auto seqs = tree.sample(tokens, e.points, ctx.config.require_seed(), 71);
  Json pts = Json::array();
  std::size_t lower_ok = 0, upper = 0;
  for (const auto& s : seqs) {
    ExactnessReport r = exactness_scan(s.cf, tree.profile(), e.c, e.qmax, e.q_threshold);
    lower_ok += r.verdict_lower;
    upper += r.verdict_upper;
    Json conv = Json::array();
    for (const auto& ce : r.per_convergent) {
      std::string cls = ce.cls == ApproxClass::exceptional_hit ? "hit" : ce.cls == ApproxClass::typical_miss ? "miss" : "undetermined";
      conv.push_back({{"n", ce.n}, {"q", to_decimal(ce.q)}, {"psi_lo", ce.psi_lo}, {"psi_hi", ce.psi_hi}, {"class", cls}});
    }
    pts.push_back({{"prefix", s.describe()}, {"verdict_upper", r.verdict_upper},
                   {"verdict_upper_convergents", r.verdict_upper_convergents}, {"verdict_lower", r.verdict_lower},
                   {"q_checked", r.q_checked}, {"hits", r.hits}, {"lower_violations", r.lower_violations},
                   {"first_lower_violation", r.first_lower_violation}, {"undetermined", r.undetermined},
                   {"convergents", conv}});
  }
  Json j;
  j["header"] = artifact_header("exorder.exactness", ctx.hash);
  j["c"] = e.c;
  j["qmax"] = e.qmax;
  j["q_threshold"] = e.q_threshold;
  j["tokens"] = tokens;
  j["points"] = pts;
  write_artifact(ctx, "exactness.json", dump_json(j));
  log << "exactness: lower verdict holds on " << lower_ok << "/" << seqs.size() << ", upper hits on " << upper << "\n";
}

void pipeline_sample(RunContext& ctx, std::ostream& log) {
  ensure_tree(ctx, log);
  const MeasureTree& tree = *ctx.tree;
  const SampleSettings& sp = ctx.config.sample;
  std::size_t tokens = sp.tokens ? sp.tokens : tree.tokens_through_level(1);
  auto seqs = tree.sample(tokens, sp.count, ctx.config.require_seed(), 73);
  Json rows = Json::array();
  std::size_t growth_ok = 0;
  for (const auto& s : seqs) {
    GrowthReport g = verify_growth(s, tree.schedule(), false);
    bool ok = g.falsified.empty();
    growth_ok += ok;
    CylinderInterval cyl = cylinder(s.cf);
    rows.push_back({{"tokens", to_json(s.tokens)}, {"log_weight", tree.lambda_weight(s)}, {"log_K", log_of(s.cf.K())},
                    {"value_lo", cyl.lo.get_d()}, {"value_hi", cyl.hi.get_d()}, {"growth_ok", ok},
                    {"falsified", g.falsified}});
  }
  Json j;
  j["header"] = artifact_header("exorder.samples", ctx.hash);
  j["tokens"] = tokens;
  j["growth_pass"] = growth_ok;
  j["samples"] = rows;
  write_artifact(ctx, "samples.json", dump_json(j));
  log << "sample: " << seqs.size() << " prefixes, growth holds on " << growth_ok << "\n";
}

void pipeline_normality(RunContext& ctx, std::ostream& log) {
  ensure_tree(ctx, log);
  const MeasureTree& tree = *ctx.tree;
  const NormalitySettings& n = ctx.config.normality;
  const Schedule& sched = tree.schedule();
  int max_base = *std::max_element(n.bases.begin(), n.bases.end());
  // cylinders shorter than max_base^-digits with a margin
  double need = 0.5 * (static_cast<double>(n.digits) * std::log(max_base) + 10.0);
  double min_block = *std::min_element(tree.nu_bar().log_K.begin(), tree.nu_bar().log_K.end());
  std::size_t blocks = static_cast<std::size_t>(std::ceil(need / min_block)) + 1;
  std::size_t tokens = blocks;
  for (long jk : sched.jk)
    if (jk < static_cast<long>(blocks)) ++tokens;
  auto seqs = tree.sample(tokens, n.samples, ctx.config.require_seed(), 79);
  std::vector<RealSample> xs;
  xs.reserve(seqs.size());
  for (const auto& s : seqs) xs.push_back(RealSample::in_cylinder(s.cf));
  NormalityReport rep = normality_diagnostics(xs, n.bases, n.digits);
  auto del = del_partial_sums(tree, n.del_base, n.del_multiplier, n.del_N0,
                              FourierMethod::monte_carlo(n.del_samples, ctx.config.require_seed()), ctx.workers);
  Json bases = Json::array();
  CsvTable t("exorder.digit_frequencies", ctx.hash, {"base", "digit", "count"});
  for (const auto& b : rep.bases) {
    bases.push_back({{"base", b.base}, {"samples", b.samples_used}, {"chi2_digits", b.chi2_digits},
                     {"p_digits", b.p_digits}, {"chi2_digraphs", b.chi2_digraphs}, {"p_digraphs", b.p_digraphs},
                     {"digit_counts", b.digits}});
    for (std::size_t d = 0; d < b.digits.size(); ++d) t.row({std::to_string(b.base), std::to_string(d), std::to_string(b.digits[d])});
  }
  Json dj = Json::array();
  for (const auto& r : del)
    dj.push_back({{"N", r.N}, {"increment", r.increment}, {"partial_sum", r.partial_sum},
                  {"standard_error", r.standard_error}, {"bias_bound", r.bias_bound}});
  Json j;
  j["header"] = artifact_header("exorder.normality", ctx.hash);
  j["digits"] = n.digits;
  j["tokens"] = tokens;
  j["bases"] = bases;
  j["non_normal"] = rep.non_normal.size();
  j["del"] = {{"a", n.del_base}, {"multiplier", n.del_multiplier}, {"samples", n.del_samples}, {"rows", dj}};
  write_artifact(ctx, "normality.json", dump_json(j));
  if (ctx.config.write_csv) write_artifact(ctx, "digit_frequencies.csv", t.str());
  log << "normality: " << xs.size() << " samples at " << n.digits << " digits\n";
}

Json versions() {
  return {{"exorder", kVersion},
          {"gmp", gmp_version},
          {"mpfr", mpfr_get_version()},
          {"boost", BOOST_LIB_VERSION},
          {"openssl", OPENSSL_VERSION_TEXT},
          {"compiler", __VERSION__}};
}

void write_manifest(RunContext& ctx, int exit_code, double total_seconds) {
  Json m;
  m["header"] = artifact_header("exorder.manifest", ctx.hash);
  m["model_hash"] = ctx.model_hash;
  m["config"] = canonical_config(ctx.config);
  m["versions"] = versions();
  Json ledger = Json::parse(ledger_json(ctx.ledger));
  m["ledger"] = ledger;
  m["artifacts"] = ctx.artifacts;
  m["pipelines"] = ctx.pipeline_log;
  m["failed_checks"] = ctx.failed;
  m["exit_code"] = exit_code;
  m["timing"] = {{"wall_clock_seconds", total_seconds}};
  std::ofstream out(ctx.out / "MANIFEST", std::ios::binary);
  out << dump_json(m);
}

void load_previous_manifest(RunContext& ctx) {
  fs::path p = ctx.out / "MANIFEST";
  if (!fs::exists(p)) return;
  try {
    std::ifstream in(p);
    Json m = Json::parse(in);
    if (m.at("header").at("config_hash").get<std::string>() != ctx.hash) return;
    ctx.artifacts = m.at("artifacts");
    ctx.pipeline_log = m.at("pipelines");
  } catch (...) {
  }
}

}  // namespace

std::string model_hash(const RunConfig& c) {
  Json full = canonical_config(c);
  Json j;
  j["seed"] = full["seed"];
  j["profile"] = full["profile"];
  j["schedule"] = full["schedule"];
  j["geometry"] = full["geometry"];
  return sha256_hex(dump_json(j, 0));
}

int run_pipelines(const RunConfig& config, std::vector<std::string> steps, std::ostream& log) {
  auto t0 = std::chrono::steady_clock::now();
  RunContext ctx;
  ctx.config = config;
  ctx.hash = config_hash(config);
  ctx.model_hash = model_hash(config);
  ctx.out = fs::path(config.output_dir);
  ctx.workers = default_workers();

  std::vector<std::string> order = pipeline_order();
  order.insert(order.begin() + 1, "scan-balls");
  std::sort(steps.begin(), steps.end(), [&](const std::string& a, const std::string& b) {
    return std::find(order.begin(), order.end(), a) < std::find(order.begin(), order.end(), b);
  });
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());

  int code = exit_ok;
  try {
    fs::create_directories(ctx.out);
    load_previous_manifest(ctx);
    try {
      ctx.ledger = load_ledger(default_ledger_path());
    } catch (const std::exception& e) {
      log << "warning: " << e.what() << "; using default constants\n";
    }
    for (const std::string& s : steps) {
      auto p0 = std::chrono::steady_clock::now();
      std::size_t failed_before = ctx.failed.size();
      if (s == "build") pipeline_build(ctx, log);
      else if (s == "scan-balls") pipeline_scan_balls(ctx, log);
      else if (s == "verify-geometry") pipeline_verify_geometry(ctx, log);
      else if (s == "verify-fourier") pipeline_verify_fourier(ctx, log);
      else if (s == "decay-scan") pipeline_decay(ctx, log);
      else if (s == "exactness") pipeline_exactness(ctx, log);
      else if (s == "sample") pipeline_sample(ctx, log);
      else if (s == "normality") pipeline_normality(ctx, log);
      else throw ConfigError("unknown pipeline '" + s + "'");
      double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - p0).count();
      Json entry = {{"name", s}, {"status", ctx.failed.size() == failed_before ? "pass" : "fail"}, {"seconds", secs}};
      Json kept = Json::array();
      for (const auto& e : ctx.pipeline_log)
        if (e.at("name") != s) kept.push_back(e);
      kept.push_back(entry);
      ctx.pipeline_log = kept;
    }
    if (!ctx.failed.empty()) {
      for (const auto& f : ctx.failed) log << "FAILED " << f << "\n";
      code = exit_verification;
    }
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    code = exit_config;
  } catch (const InfeasibleSchedule& e) {
    log << "infeasible schedule: " << e.what() << "\n";
    code = exit_infeasible;
  } catch (const InsufficientConcentration& e) {
    log << "infeasible block measure: " << e.what() << "\n";
    code = exit_infeasible;
  } catch (const EmptyExceptionalSet& e) {
    log << "infeasible schedule: " << e.what() << "\n";
    code = exit_infeasible;
  } catch (const VerificationFailure& e) {
    log << "verification failure: " << e.what() << "\n";
    code = exit_verification;
  } catch (const BudgetExceeded& e) {
    log << "budget exceeded: " << e.what() << "\n";
    code = exit_budget;
  } catch (const DeepenRequired& e) {
    log << "budget exceeded: " << e.what() << "\n";
    code = exit_budget;
  } catch (const InsufficientDigits& e) {
    log << "budget exceeded: " << e.what() << "\n";
    code = exit_budget;
  } catch (const std::exception& e) {
    log << "verification failure: " << e.what() << "\n";
    code = exit_verification;
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  try {
    if (fs::exists(ctx.out)) write_manifest(ctx, code, secs);
  } catch (const std::exception& e) {
    log << "cannot write MANIFEST: " << e.what() << "\n";
  }
  return code;
}

int run_config_file(const std::string& path, const std::optional<std::vector<std::string>>& steps, std::ostream& log) {
  RunConfig cfg;
  try {
    cfg = parse_config_file(path);
    if (steps && !cfg.seed)
      for (const auto& s : *steps)
        if (s != "build") throw ConfigError("seed is mandatory for sampling pipelines");
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return exit_config;
  }
  return run_pipelines(cfg, steps ? *steps : cfg.pipelines, log);
}

}  // namespace exorder::cli

// Acceptance checks at the desk configuration: one PASS/FAIL line per criterion.
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "config.hpp"
#include "exorder/admissible.hpp"
#include "exorder/block_measure.hpp"
#include "exorder/cf.hpp"
#include "exorder/fourier.hpp"
#include "exorder/ledger.hpp"
#include "exorder/measure_tree.hpp"
#include "exorder/oscillatory.hpp"
#include "exorder/profile.hpp"
#include "exorder/serialize.hpp"
#include "pipelines.hpp"

namespace fs = std::filesystem;
using namespace exorder;

namespace {

// Tolerances, pinned.
constexpr double kLogTolerance = 1e-12;        // conservation and pushforward, log space
constexpr double kExponentTolerance = 0.02;    // ball exponents against the ledger
constexpr double kM2RelativeGap = 1e-6;        // pairwise vs quadrature
constexpr double kGoldenTolerance = 1e-9;      // decay table, absolute per entry
constexpr double kReferenceIntegralTol = 1e-5; // library integral vs midpoint oracle
constexpr double kConcentrationWindow = 1.0 / 500.0;  // relative to epsilon
constexpr std::size_t kSyntheticPhases = 1000;
constexpr std::size_t kQrInstances = 100;
constexpr std::size_t kEncodingSamples = 1000;
constexpr std::size_t kMeasureNodes = 1000;
constexpr std::size_t kGrowthSamples = 100;
constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string source_path(const std::string& rel) { return std::string(EXORDER_SOURCE_DIR) + "/" + rel; }

// ---- shared desk state ----------------------------------------------------

struct DeskRuns {
  fs::path root;
  fs::path full, subset;
  int full_exit = -1, subset_exit = -1;
  Json geometry, balls, fourier, decay;
};

cli::RunConfig desk_config() { return cli::parse_config_file(source_path("configs/desk.toml")); }

const MeasureTree& desk_tree() {
  static std::unique_ptr<MeasureTree> tree = [] {
    cli::RunConfig c = desk_config();
    ApproxProfile profile = cli::build_profile(c.profile);
    BlockMeasure nu = build_nu_m(c.schedule.N, c.schedule.m, c.schedule.epsilon, c.schedule.enumeration_budget);
    BlockMeasure nb = build_nu_bar(nu, c.schedule.J, c.schedule.concentration, c.schedule.enumeration_budget);
    ScheduleOptions opts;
    opts.epsilon = c.schedule.epsilon;
    opts.levels = c.schedule.levels;
    opts.eta_ratio = c.schedule.eta_ratio;
    opts.max_j1 = c.schedule.max_j1;
    Schedule sched = default_schedule(profile, nb, opts);
    return std::make_unique<MeasureTree>(sched, profile, nb);
  }();
  return *tree;
}

// Full desk run, then a second run of the seeded sampling pipelines into another directory.
DeskRuns& desk_runs() {
  static DeskRuns runs = [] {
    DeskRuns r;
    r.root = fs::temp_directory_path() / ("exorder_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(r.root);
    fs::create_directories(r.root);
    r.full = r.root / "full";
    r.subset = r.root / "subset";
    cli::RunConfig c = desk_config();
    std::ofstream log(r.root / "pipelines.log");
    c.output_dir = r.full.string();
    r.full_exit = cli::run_pipelines(c, c.pipelines, log);
    c.output_dir = r.subset.string();
    r.subset_exit = cli::run_pipelines(c, {"build", "decay-scan", "exactness", "sample", "normality"}, log);
    auto read = [](const fs::path& p) { return fs::exists(p) ? Json::parse(slurp(p)) : Json(); };
    r.geometry = read(r.full / "geometry.json");
    r.balls = read(r.full / "balls.json");
    r.fourier = read(r.full / "fourier_checks.json");
    r.decay = read(r.full / "decay.json");
    return r;
  }();
  return runs;
}

// Check row from a pipeline artifact; a missing row fails.
Outcome artifact_check(const Json& artifact, const std::string& name) {
  if (artifact.is_object() && artifact.contains("checks"))
    for (const auto& row : artifact["checks"])
      if (row.value("name", std::string()) == name)
        return {row.value("pass", false), name + ": " + row.value("detail", std::string())};
  return {false, name + ": missing from the run artifacts"};
}

void join(Outcome& total, const Outcome& part) {
  total.pass = total.pass && part.pass;
  if (!total.detail.empty()) total.detail += "; ";
  total.detail += (part.pass ? "" : "FAILED ") + part.detail;
}

// ---- oracles --------------------------------------------------------------

// q_{-1} = 0, q_0 = 1, q_n = c_n q_{n-1} + q_{n-2} over quotients c_1..c_n (c_0 ignored).
std::int64_t denominator_int64(const std::vector<int>& c) {
  std::int64_t q2 = 0, q1 = 1;
  for (std::size_t i = 1; i < c.size(); ++i) {
    std::int64_t q = c[i] * q1 + q2;
    q2 = q1;
    q1 = q;
  }
  return q1;
}

// Numerators and denominators by the three-term recurrence, exact.
void recurrence(const std::vector<BigInt>& c, BigInt& p, BigInt& pp, BigInt& q, BigInt& qp) {
  p = 1;
  pp = 0;
  q = 0;
  qp = 1;  // [[p, p'], [q, q']] = identity
  for (const BigInt& x : c) {
    BigInt np = x * p + pp, nq = x * q + qp;
    pp = p;
    qp = q;
    p = np;
    q = nq;
  }
}

// Every word over 1..N of the given lengths.
std::vector<std::vector<int>> words(int N, int min_len, int max_len) {
  std::vector<std::vector<int>> out;
  for (int len = min_len; len <= max_len; ++len) {
    std::vector<int> w(len, 1);
    while (true) {
      out.push_back(w);
      int i = len - 1;
      while (i >= 0 && w[i] == N) w[i--] = 1;
      if (i < 0) break;
      ++w[i];
    }
  }
  return out;
}

// Distances from the convergent of prefix to the two endpoints of cyl(prefix, next).
std::pair<Rational, Rational> endpoint_gaps(const FiniteCF& prefix, const BigInt& next) {
  FiniteCF ext = prefix.extend(next);
  Rational conv(prefix.p(), prefix.K());
  Rational closed(ext.p(), ext.K());
  Rational open(ext.p() + ext.pprime(), ext.K() + ext.Kprime());
  conv.canonicalize();
  closed.canonicalize();
  open.canonicalize();
  return {abs(closed - conv), abs(open - conv)};
}

// Midpoint rule for int_a^b e(f).
Complex midpoint_integral(const Phase& f, double a, double b, std::size_t n) {
  Complex s = 0;
  const double h = (b - a) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) s += unit_phasor(f.value(a + (i + 0.5) * h));
  return s * h;
}

// ---- criteria -------------------------------------------------------------

bool exact_kernel_agrees(const std::vector<BigInt>& c) {
  FiniteCF f = FiniteCF::of(c);
  BigInt p, pp, q, qp;
  recurrence(c, p, pp, q, qp);
  ConvergentMatrix m = convergent_matrix(c);
  if (f.p() != p || f.pprime() != pp || f.K() != q || f.Kprime() != qp) return false;
  if (m.p != p || m.pprime != pp || m.q != q || m.qprime != qp) return false;
  BigInt det = p * qp - pp * q;
  if (det != (c.size() % 2 == 0 ? 1 : -1) || det != f.determinant_sign()) return false;
  CylinderInterval cyl = cylinder(f);
  Rational want(BigInt(1), q * (q + qp));
  want.canonicalize();
  return cyl.width() == want;
}

Outcome cf_kernel_exactness() {
  Rng rng(kSeed, 1);
  std::size_t failures = 0, checked = 0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<BigInt> c;
    std::size_t n = 1 + rng.uniform_below(30);
    for (std::size_t k = 0; k < n; ++k) {
      if (rng.uniform_below(10) == 0) c.push_back(rng.uniform_int(BigInt(1), BigInt("1000000000000000000000000")));
      else c.push_back(BigInt(static_cast<long>(1 + rng.uniform_below(1000))));
    }
    failures += !exact_kernel_agrees(c);
    ++checked;
  }
  for (const auto& w : words(4, 1, 6)) {
    failures += !exact_kernel_agrees(std::vector<BigInt>(w.begin(), w.end()));
    ++checked;
  }
  return {failures == 0, std::to_string(failures) + " failures over " + std::to_string(checked) + " sequences"};
}

Outcome gluing_exhaustive() {
  std::size_t failures = 0, pairs = 0;
  for (int N = 1; N <= 4; ++N) {
    auto ws = words(N, 1, 5);
    std::vector<FiniteCF> cfs;
    std::vector<std::int64_t> K;
    for (const auto& w : ws) {
      cfs.push_back(FiniteCF::of_small(w));
      K.push_back(denominator_int64(w));
    }
    for (std::size_t i = 0; i < ws.size(); ++i)
      for (std::size_t j = 0; j < ws.size(); ++j) {
        std::vector<int> joined = ws[i];
        joined.insert(joined.end(), ws[j].begin(), ws[j].end());
        // K ignores the leading quotient of each operand; in the glued word h's leading quotient counts
        std::int64_t Kg = K[i], Kh = K[j];
        std::int64_t Kgh = denominator_int64(joined);
        bool oracle = Kg * Kh <= Kgh && Kgh <= (N + 2) * Kg * Kh;
        GluingCheck lib = concat_continuant_bounds(cfs[i], cfs[j], N);
        if (!oracle || lib.holds != oracle || lib.actual != BigInt(static_cast<long>(Kgh))) ++failures;
        ++pairs;
      }
  }
  return {failures == 0, std::to_string(failures) + " failures over " + std::to_string(pairs) + " pairs"};
}

Outcome encoding_correctness() {
  const MeasureTree& tree = desk_tree();
  const Schedule& sched = tree.schedule();
  const std::size_t tokens = tree.tokens_through_level(1) + 20;
  auto seqs = tree.sample(tokens, kEncodingSamples, kSeed, 7);
  std::size_t hits = 0, misses = 0, hit_fail = 0, miss_fail = 0, oracle_fail = 0;
  for (const AdmissibleSeq& s : seqs) {
    FiniteCF cf;
    std::size_t level = 0;
    for (const Token& t : s.tokens) {
      if (t.exceptional) {
        HitWitness w = check_exceptional_hit(cf, t.b, sched.etak[level], tree.profile());
        ++hits;
        if (w.status != WitnessStatus::holds) ++hit_fail;
        // oracle: both endpoints inside [(1 - eta/10) psi, psi]
        auto [closed, open] = endpoint_gaps(cf, t.b);
        Interval psi = tree.profile().psi(cf.K(), 256);
        double far = std::max(closed.get_d(), open.get_d()), near = std::min(closed.get_d(), open.get_d());
        if (!(far <= psi.hi_double() && near >= (1.0 - sched.etak[level] / 10.0) * psi.lo_double())) ++oracle_fail;
        cf = cf.extend(t.b);
        ++level;
        continue;
      }
      for (int a : t.block) {
        if (!cf.empty()) {
          bool lib = bounded_miss_holds_fast(cf, a, sched.N);
          ++misses;
          if (!lib) ++miss_fail;
          if (misses % 97 == 0) {
            auto [closed, open] = endpoint_gaps(cf, BigInt(a));
            Rational bound(BigInt(1), (sched.N + 2) * cf.K() * cf.K());
            bool oracle = closed > bound && open >= bound;
            if (oracle != lib || (check_bounded_miss(cf, a, sched.N).status == WitnessStatus::holds) != lib) ++oracle_fail;
          }
        }
        cf = cf.extend(static_cast<unsigned long>(a));
      }
    }
  }
  return {hit_fail + miss_fail + oracle_fail == 0,
          std::to_string(seqs.size()) + " sequences; exceptional " + std::to_string(hit_fail) + "/" + std::to_string(hits) +
              " fail, typical " + std::to_string(miss_fail) + "/" + std::to_string(misses) + " fail, oracle disagreements " +
              std::to_string(oracle_fail)};
}

Outcome block_measure_properties() {
  cli::RunConfig c = desk_config();
  BlockMeasure nu = build_nu_m(c.schedule.N, c.schedule.m, c.schedule.epsilon, c.schedule.enumeration_budget);
  const double window = c.schedule.epsilon * kConcentrationWindow;
  try {
    BlockMeasure nb = build_nu_bar(nu, c.schedule.J, window, c.schedule.enumeration_budget);
    NuBarReport r = check_nu_bar(nb, window);
    return {r.property_a && r.property_b && r.mass_ok,
            "window " + num(window) + ": factor " + num(r.max_factor) + ", deviation " + num(r.worst_relative_deviation) +
                ", mass " + num(r.retained_mass)};
  } catch (const InsufficientConcentration& e) {
    return {false, "window " + num(window) + " retains mass " + num(e.mass()) + " < 1/2"};
  }
}

Outcome measure_identities() {
  const MeasureTree& tree = desk_tree();
  auto seqs = tree.sample(tree.tokens_through_level(1) + 4, 50, kSeed, 11);
  double worst_child = 0, worst_split = 0, worst_push = 0;
  std::size_t nodes = 0;
  Rng rng(kSeed, 12);
  for (const AdmissibleSeq& s : seqs) {
    for (int rep = 0; rep < 20 && nodes < kMeasureNodes; ++rep, ++nodes) {
      std::size_t cut = 1 + rng.uniform_below(s.tokens.size() - 1);
      AdmissibleSeq prefix = AdmissibleSeq::from_tokens(std::vector<Token>(s.tokens.begin(), s.tokens.begin() + cut));
      TreeNode node = tree.node_of(prefix);
      LogSum sum;
      for (const auto& k : tree.children(node)) sum.add(k.log_weight);
      worst_child = std::max(worst_child, std::fabs(sum.value() - node.log_weight));

      std::vector<Token> rest(s.tokens.begin() + cut, s.tokens.end());
      RelativeView view(tree, prefix);
      worst_split = std::max(worst_split, std::fabs(view.base().log_weight + view.log_weight(rest) - tree.lambda_weight(s)));

      if (cut <= 6) {
        CylinderInterval cyl = cylinder(prefix.cf);
        LogBracket b = tree.pushforward_interval(cyl.lo, cyl.hi, cut);
        worst_push = std::max({worst_push, std::fabs(b.lower - node.log_weight), std::fabs(b.upper - node.log_weight)});
      }
    }
  }
  bool ok = worst_child <= kLogTolerance && worst_split <= kLogTolerance && worst_push <= kLogTolerance;
  return {ok, std::to_string(nodes) + " nodes; child sum " + num(worst_child) + ", multiply-back " + num(worst_split) +
                  ", pushforward " + num(worst_push)};
}

Outcome growth_induction() {
  const MeasureTree& tree = desk_tree();
  const Schedule& sched = tree.schedule();
  auto seqs = tree.sample(tree.tokens_through_level(sched.levels()), kGrowthSamples, kSeed, 13);
  std::size_t pass = 0;
  std::string first;
  for (const auto& s : seqs) {
    GrowthReport r = verify_growth(s, sched, false);
    bool ok = r.heart && r.spade && r.spade_step;
    pass += ok;
    if (!ok && first.empty()) first = r.falsified;
  }
  std::string unvalidated;
  for (const auto& f : sched.failed_checks()) unvalidated += (unvalidated.empty() ? "" : ", ") + f;
  bool ok = sched.validated() && pass == seqs.size();
  return {ok, std::string(sched.validated() ? "schedule validated" : "schedule not validated (" + unvalidated + ")") +
                  "; " + std::to_string(pass) + "/" + std::to_string(seqs.size()) + " sequences pass" +
                  (first.empty() ? "" : "; first failure: " + first)};
}

Outcome ball_conditions() {
  DeskRuns& runs = desk_runs();
  Outcome o{true, ""};
  join(o, artifact_check(runs.geometry, "mass-split-identity"));
  join(o, artifact_check(runs.geometry, "capping"));
  ConstantsLedger L = load_ledger(default_ledger_path());
  if (!runs.balls.is_object()) return {false, "balls.json missing"};
  double beta = json_double(runs.balls["beta_hat"]);
  join(o, {std::fabs(beta - L.beta_hat) <= kExponentTolerance, "beta_hat " + num(beta) + " vs " + num(L.beta_hat)});
  for (const auto& k : runs.balls["kinds"]) {
    std::string kind = k.at("kind").get<std::string>();
    auto it = L.kind_exponents.find(kind);
    double e = json_double(k.at("min_exponent"));
    bool ok = it != L.kind_exponents.end() && std::fabs(e - it->second) <= kExponentTolerance;
    join(o, {ok, kind + " " + num(e) + (it == L.kind_exponents.end() ? " (not in ledger)" : " vs " + num(it->second))});
  }
  return o;
}

Outcome scale_machinery() {
  DeskRuns& runs = desk_runs();
  Outcome o{true, ""};
  join(o, artifact_check(runs.geometry, "scale-partition"));
  join(o, artifact_check(runs.geometry, "alpha-escape"));
  join(o, artifact_check(runs.geometry, "partition-windows"));
  return o;
}

Outcome van_der_corput() {
  const double K = load_ledger(default_ledger_path()).stationary_K;
  Rng rng(kSeed, 14);
  std::size_t violations = 0, wrong_integral = 0;
  for (std::size_t i = 0; i < kSyntheticPhases; ++i) {
    if (i % 2 == 0) {
      // f' = c1 + 2 c2 x on [0, L], sign fixed
      double L = 0.5 + 1.5 * rng.uniform01();
      double c1 = (20.0 + 180.0 * rng.uniform01()) * (rng.uniform_below(2) ? 1 : -1);
      double c2 = (rng.uniform01() - 0.5) * std::fabs(c1) / (2.0 * L);
      PolynomialPhase f({0.0, c1, c2});
      DerivativeCertificate cert = certify_derivatives(f, 0.0, L);
      VdcResult r = vdc_nonstationary(f, cert.min_abs_derivative, cert.max_abs_second, 0.0, L);
      Complex ref = midpoint_integral(f, 0.0, L, 40000);
      double bound = 1.0 / (M_PI * cert.min_abs_derivative) +
                     L * cert.max_abs_second / (2.0 * M_PI * cert.min_abs_derivative * cert.min_abs_derivative);
      if (!r.pass || std::abs(ref) > bound) ++violations;
      if (std::abs(ref - r.integral) > kReferenceIntegralTol) ++wrong_integral;
    } else {
      // f' = (C1 x + C2)(g0 + g1 x) on [0, 1] with a stationary point inside
      double C1 = 100.0 + 900.0 * rng.uniform01();
      double x0 = 0.2 + 0.6 * rng.uniform01();
      double C2 = -C1 * x0;
      double g0 = 1.0 + 2.0 * rng.uniform01(), g1 = rng.uniform01() - 0.5;
      PolynomialCofactor g({g0, g1});
      PolynomialPhase f({0.0, C2 * g0, (C1 * g0 + C2 * g1) / 2.0, C1 * g1 / 3.0});
      CofactorCertificate gc = certify_cofactor(g, 0.0, 1.0);
      double B = std::max(gc.max_abs_derivative, 2.0 * gc.min_abs);
      VdcResult r = vdc_stationary(f, g, C1, C2, gc.min_abs, B, 0.0, 1.0, K);
      Complex ref = midpoint_integral(f, 0.0, 1.0, 40000);
      double bound = K * 2.0 * B * std::pow(gc.min_abs, -1.5) / std::sqrt(C1);
      if (!r.pass || std::abs(ref) > bound) ++violations;
      if (std::abs(ref - r.integral) > kReferenceIntegralTol) ++wrong_integral;
    }
  }
  Outcome o{violations == 0 && wrong_integral == 0,
            std::to_string(violations) + " bound violations, " + std::to_string(wrong_integral) + " integral mismatches over " +
                std::to_string(kSyntheticPhases) + " synthetic phases"};
  join(o, artifact_check(desk_runs().fourier, "vdc-bounds"));
  return o;
}

Outcome m2_dual() {
  DeskRuns& runs = desk_runs();
  Outcome o{true, ""};
  double worst = 0.0;
  std::size_t boxes = 0;
  if (runs.fourier.is_object())
    for (const auto& b : runs.fourier["boxes"])
      if (b.contains("relative_gap")) {
        worst = std::max(worst, json_double(b["relative_gap"]));
        ++boxes;
      }
  join(o, {boxes > 0 && worst <= kM2RelativeGap, "worst relative gap " + num(worst) + " over " + std::to_string(boxes) + " boxes"});
  join(o, artifact_check(runs.fourier, "c3-recovery"));
  return o;
}

Outcome qr_combination() {
  Rng rng(kSeed, 15);
  std::size_t pass = 0;
  for (std::size_t i = 0; i < kQrInstances; ++i) pass += qr_combine_synthetic(random_qr_instance(rng)).pass;
  Outcome o{pass == kQrInstances, std::to_string(pass) + "/" + std::to_string(kQrInstances) + " synthetic"};
  join(o, artifact_check(desk_runs().fourier, "qr-desk"));
  return o;
}

Outcome approximation_diagnostics() {
  DeskRuns& runs = desk_runs();
  Outcome o{true, ""};
  join(o, artifact_check(runs.fourier, "relative-weights-equal"));
  join(o, artifact_check(runs.fourier, "t2-mass"));
  return o;
}

// Rows of a CSV artifact after its comment lines.
std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

Outcome fourier_decay() {
  DeskRuns& runs = desk_runs();
  if (!runs.decay.is_object() || runs.decay["slope"].is_null()) return {false, "no decay slope"};
  double slope = json_double(runs.decay["slope"]);
  Outcome o{slope < 0.0, "slope " + num(slope)};
  fs::path golden = source_path("data/golden/decay.csv");
  if (!fs::exists(golden)) {
    join(o, {false, "golden table missing"});
    return o;
  }
  auto want = csv_rows(slurp(golden)), got = csv_rows(slurp(runs.full / "decay.csv"));
  double worst = 0.0;
  bool shape = want.size() == got.size() && !want.empty() && want[0] == got[0];
  for (std::size_t i = 1; shape && i < want.size(); ++i) {
    if (want[i].size() != got[i].size()) {
      shape = false;
      break;
    }
    for (std::size_t k = 0; k < want[i].size(); ++k) {
      char* end = nullptr;
      double w = std::strtod(want[i][k].c_str(), &end);
      if (*end != '\0') {  // label column
        shape = shape && want[i][k] == got[i][k];
        continue;
      }
      worst = std::max(worst, std::fabs(w - std::strtod(got[i][k].c_str(), nullptr)));
    }
  }
  join(o, {shape && worst <= kGoldenTolerance,
           shape ? "golden max deviation " + num(worst) + " over " + std::to_string(want.size() - 1) + " rows"
                 : "golden table shape differs"});
  return o;
}

Outcome reproducibility() {
  DeskRuns& runs = desk_runs();
  std::size_t compared = 0, differ = 0;
  std::string first;
  for (const auto& e : fs::directory_iterator(runs.subset)) {
    std::string name = e.path().filename().string();
    if (name == "MANIFEST") continue;
    ++compared;
    if (!fs::exists(runs.full / name) || slurp(e.path()) != slurp(runs.full / name)) {
      ++differ;
      if (first.empty()) first = name;
    }
  }
  Json ma = Json::parse(slurp(runs.full / "MANIFEST")), mb = Json::parse(slurp(runs.subset / "MANIFEST"));
  std::size_t hash_differ = 0;
  for (auto it = mb["artifacts"].begin(); it != mb["artifacts"].end(); ++it)
    if (!ma["artifacts"].contains(it.key()) || ma["artifacts"][it.key()] != it.value()) ++hash_differ;
  return {compared > 0 && differ == 0 && hash_differ == 0,
          std::to_string(compared) + " artifacts compared, " + std::to_string(differ) + " differ" +
              (first.empty() ? "" : " (first " + first + ")") + ", manifest hash mismatches " + std::to_string(hash_differ)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    std::string name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "cf-kernel-exactness", cf_kernel_exactness},
      {2, "gluing-bounds", gluing_exhaustive},
      {3, "encoding-correctness", encoding_correctness},
      {4, "block-measure-properties", block_measure_properties},
      {5, "measure-identities", measure_identities},
      {6, "continuant-growth", growth_induction},
      {7, "ball-conditions", ball_conditions},
      {8, "scale-machinery", scale_machinery},
      {9, "van-der-corput", van_der_corput},
      {10, "m2-dual", m2_dual},
      {11, "qr-combination", qr_combination},
      {12, "approximation-diagnostics", approximation_diagnostics},
      {13, "fourier-decay", fourier_decay},
      {14, "reproducibility", reproducibility},
  };
  std::size_t failed = 0;
  for (const Criterion& c : criteria) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << c.id << " " << c.name << " (" << num(secs) << " s): " << o.detail
              << std::endl;
  }
  std::error_code ec;
  fs::remove_all(desk_runs().root, ec);
  std::cout << criteria.size() - failed << "/" << criteria.size() << " criteria pass" << std::endl;
  return failed == 0 ? 0 : 1;
}

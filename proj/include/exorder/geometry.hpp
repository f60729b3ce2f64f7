#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "exorder/admissible.hpp"
#include "exorder/measure_tree.hpp"

namespace exorder {

// (10 - sqrt 73)/9, the coarse decomposition exponent.
double alpha0();
// (tau - 1 + 10 eps) alpha0, used when |xi|^alpha0 is exceptional.
double alpha1(double tau, double eps);
// Residuals of alpha0 = (t^2 - 3t + 2)/t^2 = -1/3 + 4/(3t) at the threshold t, for /9 and /8.
struct AlphaIdentity {
  double with_9 = 0.0, with_8 = 0.0;
  double residual_9 = 0.0, residual_8 = 0.0;
};
AlphaIdentity alpha_identity();

enum class ScaleKind { typical, exceptional };

struct ScaleClassification {
  double log_zeta = 0.0;
  ScaleKind kind = ScaleKind::typical;
  std::size_t k = 0;             // exceptional window index, or the stage below a typical scale
  std::optional<long> j_of_zeta; // present iff typical
  bool beyond_schedule = false;  // above the last configured window
};

// Boundaries of an exceptional window count as exceptional.
ScaleClassification classify_scale(double log_zeta, const Schedule& sched, double log_floor = 0.0);

struct ScaleChoice {
  double alpha = 0.0;
  bool used_alpha1 = false;
  ScaleClassification at_alpha0, chosen;
};
ScaleChoice choose_alpha(double log_xi, const Schedule& sched);

struct PartitionBox {
  long m1_index = 0, m2_index = 0;  // box offsets from the lower-left corner of the cover
  double log_M1 = 0.0, log_M2 = 0.0;  // log of the corners (box may sit below the cover)
  std::vector<std::size_t> members;   // indices into ClassPartition::members
  std::size_t representative = 0;     // lexicographically least member
  double log_mass = -INFINITY;        // log sum lambda(G*)
  bool ratio_ok = true;               // 1 < M1/M2 <= N + 1.1
  bool inside_cover = true;
};

struct ClassPartition {
  double log_xi = 0.0;
  double alpha = 0.0;
  double gap = 0.0;        // box side |xi|^(alpha - gap)
  double log_side = 0.0;
  long j_of_zeta = 0;
  std::vector<AdmissibleSeq> members;
  std::vector<double> member_log_weight;
  std::vector<PartitionBox> boxes;
  std::size_t window_violations = 0;  // members outside the K or |cyl| windows
  std::string first_violation;
  double worst_K_excess = 0.0;        // max over members of |log K - alpha log xi|/(eps log xi)
  double worst_cyl_excess = 0.0;
  std::size_t ratio_violations = 0;
  std::size_t boxes_outside_cover = 0;
  double log_box_bound = 0.0;         // 600 eps log xi
  double box_count_constant = 0.0;    // #boxes / |xi|^(600 eps)
};

// Members: every admissible prefix with j(zeta) blocks. Throws BudgetExceeded past max_members.
ClassPartition partition_classes(const MeasureTree& tree, double log_xi, double alpha, double gap,
                                 std::size_t max_members = 200000);

struct KindExponent {
  std::string kind;           // terminal-a, terminal-b, general-a
  std::size_t count = 0;
  double min_exponent = INFINITY;  // min log lambda(G*)/log |cyl(G)|
  double mean_exponent = 0.0;
  double theory = 0.0;        // 1 for terminal-a, tau/(2tau-2) otherwise
};

struct WindowRow {
  double log_h = 0.0;
  std::string anchor;   // aligned or centered
  double log_lo = 0.0;  // log lambda# bracket
  double log_hi = 0.0;
  double exponent = 0.0;  // log_hi / log h
  std::size_t straddlers = 0;
};

struct BallScan {
  double beta_hat = INFINITY;
  double worst_log_h = 0.0;
  std::string worst_window;
  std::vector<WindowRow> table;
  std::vector<KindExponent> kinds;
  std::size_t split_checks = 0;
  double split_max_error = 0.0;  // |log lambda(G.b) - log lambda(G) + log|T||, via brackets
  std::size_t capping_checks = 0;
  std::size_t capping_failures = 0;
  std::size_t ratio_checks = 0;       // denominator ratio at prefixes above the threshold
  std::size_t ratio_failures = 0;
};

struct BallScanOptions {
  std::size_t samples = 200;
  std::uint64_t seed = 1;
  std::size_t tokens = 0;          // sampled prefix length; 0 means through the last level
  std::size_t bracket_depth = 0;   // 0 means tokens + 2
  std::size_t windows_per_width = 8;
  double ratio_log_threshold = 20.0;  // check K/K' bounds once log K exceeds this
};

BallScan ball_condition_scan(const MeasureTree& tree, const std::vector<Rational>& widths, const BallScanOptions& opts);

// Cylinder mass exponents per sequence kind over sampled prefixes.
std::vector<KindExponent> cylinder_exponents(const MeasureTree& tree, const std::vector<AdmissibleSeq>& seqs);

struct LowerBoundScan {
  double worst_ratio = 0.0;  // max log lambda(G*)/log |cyl(G)|
  std::string worst_prefix;
  std::vector<std::pair<std::size_t, double>> by_depth;  // tokens, max ratio among prefixes of that length
  // comparability across j-block supports (j = 1 exhaustive)
  double cyl_exponent_lo = 0.0, cyl_exponent_hi = 0.0;  // range of log|cyl G2|/log|cyl G1|
  double mass_exponent_lo = 0.0, mass_exponent_hi = 0.0;
  bool lebesgue_ok = false, mass_ok = false;
  double logK_min_ratio = 0.0, logK_max_ratio = 0.0;  // log K(G)/(j sigma) over the support
  bool logK_ok = false;
};

LowerBoundScan lower_bound_scan(const MeasureTree& tree, std::size_t tokens, std::size_t samples, std::uint64_t seed);

enum class RelativeMode { bad, good };

struct RelativeBallResult {
  double beta_F = 0.0;
  double log_width = 0.0;
  double worst_exponent = INFINITY;  // min over windows of log lambda_G#(I) / log |I|
  double worst_margin = 0.0;         // log|I|*beta_F - log upper at the worst window
  bool pass = false;
  std::size_t windows = 0;
  bool stretch_ok = true;            // Moebius image length <= K^-2 |I|
};

// Windows of width |xi|^(-1+2 alpha) in tail coordinates, anchored at tail samples.
// C_rel is the ledger constant in beta_F = ... - C_rel eps.
RelativeBallResult relative_ball_check(const MeasureTree& tree, const AdmissibleSeq& G, double log_xi, double alpha,
                                       RelativeMode mode, double c_rel, double log_width, std::size_t windows,
                                       std::size_t depth, std::uint64_t seed);

struct DimBracket {
  double lo = 0.0, hi = 0.0;
  long m = 0;
};
// Words of length m: Z_m(s) = sum K(w)^(-2s). The dimension lies between the root of
// Z_m(s) = 4^s (supermultiplicative side) and the root of Z_m(s) = 1; result intersects m and m+1.
DimBracket dim_bad_estimate(long N, long m, std::uint64_t budget = 10'000'000);

// K(G.b)^-2 >= (1/2) K(G)^(-2-2 omega), omega = log rho(K(G))/log K(G).
bool capping_holds(const FiniteCF& G, const BigInt& b, const ApproxProfile& profile);

}  // namespace exorder

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "exorder/geometry.hpp"
#include "exorder/measure_tree.hpp"
#include "exorder/oscillatory.hpp"

namespace exorder {

class DeepenRequired : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FourierMethodKind { cylinder_sum, monte_carlo };

struct FourierMethod {
  FourierMethodKind kind = FourierMethodKind::cylinder_sum;
  std::size_t depth = 64;        // token cap below the root
  double target_error = 0.05;    // cylinder sum: refine until 2 pi |xi| max|cyl| <= target; <= 0 means fixed depth
  std::size_t samples = 100000;  // Monte Carlo
  std::uint64_t seed = 1;
  double bias_target = 1e-4;     // Monte Carlo: sample cylinders short enough for this phase bias

  static FourierMethod cylinder_sum(std::size_t depth, double target_error);
  static FourierMethod fixed_depth(std::size_t depth);
  static FourierMethod monte_carlo(std::size_t samples, std::uint64_t seed);
  std::string describe() const;
};

struct FourierSample {
  double xi = 0.0;
  Complex value;
  double error_bound = 0.0;     // cylinder sum: 2 pi |xi| max|cyl|; Monte Carlo: phase bias bound
  double standard_error = 0.0;  // Monte Carlo only
  FourierMethod method;
  double alpha_used = 0.0;
  ScaleKind scale_kind = ScaleKind::typical;
  std::size_t leaves = 0;       // cylinders summed, or samples drawn
};

// Estimate of the Fourier transform of the pushforward at xi.
FourierSample fourier_eval(const MeasureTree& tree, double xi, const FourierMethod& method);
// Several frequencies; Monte Carlo shares one sample set across them.
std::vector<FourierSample> fourier_eval_many(const MeasureTree& tree, const std::vector<double>& xis,
                                             const FourierMethod& method, unsigned workers = 1);

// F(x) = sum over a box of lambda(cyl G) e(-xi (p x + p')/(q x + q')) on [1, N + 1].
class BoxFunction {
 public:
  BoxFunction(double xi, long N, std::vector<FiniteCF> members, std::vector<double> log_weights);

  double xi() const { return xi_; }
  long N() const { return N_; }
  double lower() const { return 1.0; }
  double upper() const { return static_cast<double>(N_ + 1); }
  std::size_t size() const { return members_.size(); }
  const std::vector<FiniteCF>& members() const { return members_; }
  const std::vector<double>& weights() const { return weights_; }
  double mass() const { return mass_; }

  Complex value(double x) const;
  Complex derivative(double x) const;
  std::vector<Complex> values(const std::vector<double>& xs) const;
  // |F| and |F'| via phases measured against the first member (same modulus, better rounding).
  double modulus(double x) const;
  double derivative_modulus(double x) const;
  Complex demodulated(double x) const;

 private:
  // Members sharing (q, q') differ by an integer translate, so their relative phase is constant.
  struct Group {
    std::size_t rep = 0;  // member index
    Complex amplitude;    // sum of w e(-xi (M_i - M_rep)) over the group
    double q = 0.0, qp = 0.0;
    int det = 1;
  };

 public:
  std::size_t group_count() const { return groups_.size(); }
  std::size_t group_of(std::size_t member) const { return group_of_[member]; }
  // Integer k with M_member = M_rep + k.
  long translate_of(std::size_t member) const { return translate_[member]; }
  // Bound on |Phi_g' - Phi_h'| over [lo, hi] for any two groups.
  double pair_rate(double lo, double hi) const;
  // sum w 2 pi |xi| / (q + q')^2
  double derivative_triangle_bound() const;

 private:
  double xi_;
  long N_;
  std::vector<FiniteCF> members_;
  std::vector<double> weights_;
  double mass_ = 0.0;
  std::vector<long double> p_, pp_, q_, qp_;
  std::vector<int> det_;
  std::vector<Group> groups_;
  std::vector<std::size_t> group_of_;
  std::vector<long> translate_;
  std::vector<MobiusPairPhase> relative_;  // -xi (M_rep(g) - M_first), one per group
};

BoxFunction build_f_xi(const ClassPartition& partition, std::size_t box, double xi, long N);

struct MBoundResult {
  double M_numeric = 0.0;
  double M_bound = 0.0;    // |xi|^(1 - 2 alpha + 3 eps)
  double M_triangle = 0.0; // sum w 2 pi |xi| / (q + q')^2, a rigorous upper bound
  double grid_step_max = 0.0;
  std::size_t grid_points = 0;
  double argmax = 0.0;
  bool pass = false;
};
// Refuses (BudgetExceeded) when the grid would exceed max_points.
MBoundResult M_bound_check(const BoxFunction& F, double alpha, double eps, std::size_t max_points = 50'000'000);

enum class PhaseCaseKind { C1, C2, C3 };
std::string to_string(PhaseCaseKind k);
PhaseCaseKind classify_pair(const FiniteCF& first, const FiniteCF& second);

struct PhaseCase {
  std::size_t first = 0, second = 0;  // indices into the box
  PhaseCaseKind kind = PhaseCaseKind::C3;
  double bound_used = 0.0;
  Complex quadrature_value;
  double quadrature_error = 0.0;
  bool bound_ok = true;
};

struct M2Options {
  std::size_t max_pairs = 20000;
  double agreement_tolerance = 1e-6;
  double stationary_K = 0.0;      // frozen stationary-phase constant
  double prefactor = 1.0;         // fitted constant in front of the two powers
  double exponent_slack = 1.0;    // C in the O(eps) exponents
  QuadratureOptions quadrature;
  unsigned workers = 1;
};

struct M2Result {
  double m2_quadrature = 0.0;      // direct integral of |F|^2
  double m2_quadrature_error = 0.0;
  double m2_pairwise = 0.0;        // sum over ordered pairs
  double relative_gap = 0.0;
  bool agree = false;
  Complex contribution[3];         // signed sums per class
  double magnitude[3] = {0, 0, 0}; // sum of w w' |integral| per class
  std::size_t counts[3] = {0, 0, 0};
  std::size_t bound_violations = 0;
  std::string worst_pair;
  double c3_bound = 0.0;           // N^2 |xi|^(-2 alpha tau/(2 tau - 2) + C eps)
  bool c3_ok = false;
  double bound_rhs = 0.0;
  bool pass = false;
  std::vector<PhaseCase> pairs;    // unordered pairs, first < second
};

M2Result m2_decompose(const BoxFunction& F, double alpha, double eps, double tau, const M2Options& opts);

struct C3Recovery {
  std::size_t members = 0;
  std::size_t max_partners = 0;        // max over G of #{G~ : (q, q') equal}
  std::size_t recovery_failures = 0;   // quotients after the first not recovered from (q, q')
  bool pass = false;
};
// Exhaustive over the partition: Euclid on q/q' recovers every entry but the first.
C3Recovery c3_recovery_check(const ClassPartition& partition, long N);

struct QrResult {
  double lhs = 0.0;           // cylinder-sum estimate of int |F| dmu
  double lhs_upper = 0.0;     // rigorous upper bracket
  double log_rhs = 0.0;       // log(2 r + (r/M)^beta (1 + m2 M r^-3))
  bool pass = false;
  bool precondition_ok = false;
  std::string precondition_detail;
  std::size_t cylinders = 0;
};

double qr_log_rhs(double log_r, double M, double m2, double beta);

// Every interval of length r/M (read as the lemma's pigeonhole cells) carries tail mass <= (r/M)^beta.
// Windows are anchored at sampled tail points; brackets use cylinders down to that length.
struct BallPrecondition {
  double log_length = 0.0;
  double beta = 0.0;
  std::size_t windows = 0;
  double worst_margin = INFINITY;  // beta log|I| - log upper bracket, min over windows
  std::size_t depth = 0;
  bool pass = false;
};
BallPrecondition qr_ball_precondition(const RelativeView& view, double log_length, double beta, std::size_t windows,
                                      std::uint64_t seed);

// Desk instance: mu is the tail pushforward of the class representative. Leaves are refined until
// M |cyl| <= leaf_tolerance * mass(F).
QrResult qr_combine(const BoxFunction& F, const RelativeView& view, double log_r, double beta, double M, double m2,
                    const BallPrecondition& precondition, double leaf_tolerance = 1.0);

// Synthetic instance: F(x) = sum c_k e(w_k x), mu with piecewise constant density on [a, b].
struct SyntheticQrInstance {
  std::vector<Complex> coeffs;
  std::vector<double> freqs;
  double a = 0.0, b = 1.0;
  std::vector<double> density;  // equal-width pieces, integrates to 1
  double r = 0.1;
  double beta = 0.5;
};
SyntheticQrInstance random_qr_instance(Rng& rng);
struct SyntheticQrResult {
  double lhs = 0.0, rhs = 0.0, M = 0.0, m2 = 0.0;
  bool precondition_ok = false;
  bool pass = false;
};
SyntheticQrResult qr_combine_synthetic(const SyntheticQrInstance& inst);

struct DecayRow {
  double xi = 0.0;
  double alpha = 0.0;
  ScaleKind scale_kind = ScaleKind::typical;
  Complex value;
  double modulus = 0.0;
  double error_bound = 0.0;
  std::size_t leaves = 0;
};

enum class AlphaPolicy { adaptive, alpha0_only };

struct DecayScan {
  std::vector<DecayRow> table;
  std::optional<double> slope;  // least squares of log|value| on log xi; absent below two points
  std::optional<double> intercept;
};

std::vector<double> geometric_grid(double lo, double hi, std::size_t points);
DecayScan decay_scan(const MeasureTree& tree, const std::vector<double>& xis, AlphaPolicy policy,
                     const FourierMethod& method, unsigned workers = 1);
// Least-squares fit of log modulus against log xi.
std::optional<std::pair<double, double>> fit_log_slope(const std::vector<double>& xis, const std::vector<double>& moduli);

}  // namespace exorder

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "exorder/cf.hpp"
#include "exorder/real_interval.hpp"

namespace exorder {

enum class ProfileForm { power, power_log, custom };

struct PsiPoint {
  BigInt q;
  Rational psi;
};

// Largest admissible exponent: (13 + sqrt 73)/8.
double tau_threshold();

struct ProfileFlags {
  bool psi_positive = true;
  bool q2psi_le_one = true;
  bool q2psi_to_zero = true;
  bool tau_in_range = true;
  std::vector<std::string> notes;
};

// psi(q) = q^-tau                      (power)
//        = q^-tau (1 + log q)^-e       (power_log)
//        = log-log interpolation of a table, end slopes extended (custom)
class ApproxProfile {
 public:
  static ApproxProfile power(double tau);
  static ApproxProfile power_log(double tau, double log_exp);
  static ApproxProfile custom(std::vector<PsiPoint> table, std::optional<double> tau_limit = std::nullopt);

  ProfileForm form() const { return form_; }
  double tau() const { return tau_; }
  double log_exp() const { return log_exp_; }
  const std::vector<PsiPoint>& table() const { return table_; }
  double tau_limit() const { return tau_limit_; }

  Interval log_psi(const BigInt& q, mpfr_prec_t prec = 128) const;
  Interval psi(const BigInt& q, mpfr_prec_t prec = 128) const;
  Interval log_rho(const BigInt& q, mpfr_prec_t prec = 128) const;
  Interval rho(const BigInt& q, mpfr_prec_t prec = 128) const;

  // Double-precision evaluations for planning and fast filters (not used for verdicts).
  double log_psi_approx(double log_q) const;
  double log_rho_approx(double log_q) const { return -2.0 * log_q - log_psi_approx(log_q); }

  // Conditions q^2 psi <= 1 and q^2 psi -> 0 on a geometric grid up to exp(log_qmax), tau flag.
  ProfileFlags validate(double log_qmax = 200.0, int grid_points = 400) const;

  std::string describe() const;

 private:
  ProfileForm form_ = ProfileForm::power;
  double tau_ = 2.0;
  double log_exp_ = 0.0;
  double tau_limit_ = 2.0;
  std::vector<PsiPoint> table_;
  std::vector<double> table_log_q_, table_log_psi_;
};

Interval rho(const ApproxProfile& profile, const BigInt& q, mpfr_prec_t prec = 128);

enum class WitnessStatus { holds, fails, precondition_violated };

struct HitWitness {
  WitnessStatus status = WitnessStatus::fails;
  std::string detail;
  Rational gap_far;   // distance at the closed endpoint (largest)
  Rational gap_near;  // distance at the open endpoint (infimum)
  double psi = 0.0;
  bool monotone = false;
  bool upper_ok = false;
  bool lower_ok = false;
  bool next_denominator_ok = false;  // (1+eta/100) q rho <= q_{n+1} <= (1+eta/40) q rho
};

// Every x in cyl(prefix.b) satisfies (1 - eta/10) psi(q_n) <= |x - p_n/q_n| <= psi(q_n).
HitWitness check_exceptional_hit(const FiniteCF& prefix, const BigInt& b, double eta, const ApproxProfile& profile,
                           const BigInt& q1_threshold = BigInt(1));

struct MissWitness {
  WitnessStatus status = WitnessStatus::fails;
  Rational bound;         // 1/((N+2) q_n^2)
  Rational gap_closed;    // distance at the endpoint belonging to the cylinder
  Rational gap_open;      // distance at the excluded endpoint
  double margin = 0.0;    // min gap / bound - 1
};

// Every x in cyl(prefix.a) satisfies |x - p_n/q_n| > 1/((N+2) q_n^2).
MissWitness check_bounded_miss(const FiniteCF& prefix, long a, long N);

// Fast exact variant used by bulk sweeps; same verdict as check_bounded_miss.
bool bounded_miss_holds_fast(const FiniteCF& prefix, long a, long N);

enum class ApproxClass { exceptional_hit, typical_miss, undetermined };

struct ConvergentEntry {
  std::size_t n = 0;
  BigInt q;
  Rational gap_lo, gap_hi;
  double psi_lo = 0.0, psi_hi = 0.0;
  ApproxClass cls = ApproxClass::typical_miss;
};

struct ExactnessReport {
  std::vector<ConvergentEntry> per_convergent;
  bool verdict_upper = false;             // some q in (Q, Qmax] with ||qx|| / q <= psi(q)
  bool verdict_upper_convergents = false;  // some convergent denominator q <= Qmax with a hit
  bool verdict_lower = true;              // no q in (Q(c), Qmax] with gap < (1-c) psi(q)
  std::uint64_t q_checked = 0;
  std::uint64_t hits = 0;
  std::uint64_t lower_violations = 0;
  std::uint64_t first_lower_violation = 0;
  std::uint64_t undetermined = 0;
};

ExactnessReport exactness_scan(const FiniteCF& x, const ApproxProfile& profile, double c, std::uint64_t qmax,
                               std::uint64_t q_lower_threshold = 1);

}  // namespace exorder

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "exorder/block_measure.hpp"
#include "exorder/cf.hpp"
#include "exorder/profile.hpp"

namespace exorder {

struct GrowthCheck {
  std::string name;
  std::string origin;     // which construction step needs it
  bool required = true;   // false: sufficient condition used by the asymptotic argument
  bool passed = false;
  double lhs = 0.0, rhs = 0.0;
  std::string detail;
};

struct Schedule {
  long N = 0;
  long m = 0;
  long J = 0;
  double epsilon = 0.0;
  double tau = 0.0;            // tau limit of the profile
  double sigma = 0.0;          // center of the block concentration window
  double concentration = 0.0;  // relative half-width of that window
  std::vector<long> jk;        // j_1 < j_2 < ... (block counts before each exceptional entry)
  std::vector<double> etak;    // eta_1 > eta_2 > ...
  std::vector<GrowthCheck> growth_checks;

  long p() const { return m * J; }
  std::size_t levels() const { return jk.size(); }
  // j_k for k >= 1, with j_0 = 0
  long j_at(std::size_t k) const { return k == 0 ? 0 : jk.at(k - 1); }
  bool validated() const;  // every recorded check passed
  bool feasible() const;   // every required check passed
  std::vector<std::string> failed_checks(bool required_only = false) const;
};

class InfeasibleSchedule : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FloorUncertain : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyExceptionalSet : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Token {
  bool exceptional = false;
  std::vector<int> block;  // when !exceptional
  BigInt b;                // when exceptional
};

enum class SeqKind { a_seq, b_seq };

struct AdmissibleSeq {
  std::vector<Token> tokens;
  FiniteCF cf;

  static AdmissibleSeq from_tokens(std::vector<Token> tokens);
  AdmissibleSeq with_block(const std::vector<int>& block) const;
  AdmissibleSeq with_exceptional(const BigInt& b) const;
  void push_block(const std::vector<int>& block);
  void push_exceptional(const BigInt& b);

  std::size_t block_count() const;
  std::size_t exceptional_count() const;
  SeqKind kind() const;
  // a-sequence whose next entry must be an exceptional quotient
  bool terminal(const Schedule& sched) const;
  std::string describe() const;
};

// The exceptional-quotient window [(1+eta/1000)^gamma, (1+eta/1000)^(gamma+1)) and its integers.
struct ExceptionalInterval {
  long long gamma = 0;
  BigInt lo, hi;           // T = {lo, ..., hi}, empty when hi < lo
  bool contained = false;  // I inside ((1+eta/100) rho, (1+eta/50) rho), certified
  double log_rho = 0.0;
  double log_lo_end = 0.0;  // log of (1+eta/1000)^gamma
  double log_hi_end = 0.0;
  bool empty() const { return hi < lo; }
  BigInt count() const { return empty() ? BigInt(0) : BigInt(hi - lo + 1); }
  double log_count() const;
};

long long gamma_eta(const FiniteCF& G, double eta, const ApproxProfile& profile);
ExceptionalInterval exceptional_interval(const FiniteCF& G, double eta, const ApproxProfile& profile);
// T_k for a terminal prefix at stage k (1-based); throws EmptyExceptionalSet when T_k is empty.
ExceptionalInterval exceptional_choices(const FiniteCF& G, std::size_t k, const Schedule& sched,
                                        const ApproxProfile& profile);

// First violated admissibility clause, if any. The support check is skipped when nu_bar is null.
std::optional<std::string> admissibility_violation(const AdmissibleSeq& seq, const Schedule& sched,
                                                   const ApproxProfile& profile, const BlockMeasure* nu_bar = nullptr);

struct GrowthMargin {
  std::string clause;  // "heart", "heart-terminal", "spade"
  std::size_t j = 0;   // blocks so far
  std::size_t k = 0;   // exceptional entries so far
  double deviation = 0.0;  // |log K - target|
  double bound = 0.0;
};

struct GrowthReport {
  bool heart = true;           // every a-prefix, with the sharpened bound at terminal prefixes
  bool heart_base = true;      // every a-prefix against eps*j*sigma only
  bool spade = true;           // every b-prefix
  bool spade_step = true;      // |log K - log b - log K(G')| <= 1 at every b-prefix
  double worst_heart = 0.0;    // max deviation/bound over a-prefixes
  double worst_terminal = 0.0;
  double worst_spade = 0.0;
  std::vector<GrowthMargin> margins;
  std::string falsified;       // first failing clause, empty if none
};

GrowthReport verify_growth(const AdmissibleSeq& seq, const Schedule& sched, bool keep_margins = true);

struct ScheduleOptions {
  double epsilon = 0.2;
  std::size_t levels = 2;              // exceptional levels (depth budget)
  double eta_ratio = 0.5;              // eta_k = eta_ratio^k
  std::optional<double> dim_lower;     // bracket of dim Bad(N) when known
  std::optional<double> dim_upper;
  long max_j1 = 10000;
};

// Lower bound on log K(G) over every G made of j blocks of the support.
double log_K_floor(const BlockMeasure& nu_bar, long j);

Schedule default_schedule(const ApproxProfile& profile, const BlockMeasure& nu_bar, const ScheduleOptions& opts);

}  // namespace exorder

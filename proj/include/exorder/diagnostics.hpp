#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "exorder/geometry.hpp"
#include "exorder/measure_tree.hpp"

namespace exorder {

// The schedule has no exceptional level after the member's stage.
class StageUnreachable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ApproxErrorOptions {
  std::size_t samples = 2000;               // H draws from lambda_G when T is too large to list
  std::uint64_t seed = 1;
  std::uint64_t exhaustive_budget = 200000; // list T when |support|^blocks is at most this
  double t2_prefactor = 1.0;                // ledger constant in front of |xi|^(-C eps)
  double t2_exponent_slack = 1.0;           // ledger C
};

// Tuples H of a-blocks between G (j(zeta) blocks) and the next exceptional entry.
struct ApproxErrorReport {
  std::size_t member = 0, representative = 0;  // partition indices
  std::size_t stage = 0;                       // exceptional entries already in G
  std::size_t H_blocks = 0;
  bool exhaustive = false;
  std::size_t H_evaluated = 0;

  // theta with theta^(1-eps) < K(H) < theta^(1+eps) for every evaluated H
  double logK_H_min = 0.0, logK_H_max = 0.0;
  double log_theta_lo = 0.0, log_theta_hi = 0.0;  // open bracket on log theta
  bool theta_bracket_nonempty = false;
  bool theta_small = false;                       // theta <= |xi|^5 at the bracket midpoint

  // T split by the gamma equality test; masses under lambda_G and lambda_rep
  std::size_t t2_count = 0;
  double t2_mass_member = 0.0, t2_mass_representative = 0.0;
  double t2_stderr = 0.0;  // 0 when exhaustive
  double t2_threshold = 0.0;
  bool t2_ok = false;

  // lambda_G(H) = lambda_rep(H), bitwise
  std::size_t weight_checks = 0;
  std::size_t weight_mismatches = 0;

  // T1 integral difference |int e(xi (p x + p')/(q x + q')) d(lambda_G# - lambda_rep#)|.
  // Exactly 0 when G and the representative share (q, q'); otherwise the oscillation bound
  // 4 pi |xi| max|cyl F| / q^2 over continuations F through the following block run.
  double t1_gap = 0.0;
  double t1_log_bound = -INFINITY;
  bool same_denominators = false;
  bool t1_ok = false;

  bool pass = false;
};

// Diagnostics for one partition member against its box representative.
ApproxErrorReport approx_error_diagnostics(const MeasureTree& tree, const ClassPartition& partition,
                                           std::size_t member, double xi, const ApproxErrorOptions& opts);

}  // namespace exorder

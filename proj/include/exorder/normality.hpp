#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "exorder/cf.hpp"
#include "exorder/fourier.hpp"
#include "exorder/measure_tree.hpp"

namespace exorder {

class InsufficientDigits : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A real known through a continued fraction prefix (x in cyl(prefix)), or an exact rational.
struct RealSample {
  FiniteCF prefix;
  bool exact_rational = false;

  static RealSample in_cylinder(FiniteCF prefix) { return RealSample{std::move(prefix), false}; }
  static RealSample rational(FiniteCF cf) { return RealSample{std::move(cf), true}; }
};

// First `digits` base-b digits of frac(x) when the whole cylinder agrees on them.
// Throws InsufficientDigits otherwise.
std::vector<std::uint8_t> certified_digits(const RealSample& x, int base, std::size_t digits);
// Number of leading base-b digits of frac(x) shared by every point of the cylinder (capped).
std::size_t certified_digit_count(const RealSample& x, int base, std::size_t cap);

struct Periodicity {
  std::size_t preperiod = 0;
  std::size_t period = 0;  // 0 when the period is longer than the horizon
};
// Exact rationals have eventually periodic expansions; detected from repeated remainders.
Periodicity rational_periodicity(const Rational& x, int base, std::size_t horizon);

struct BaseFrequencies {
  int base = 10;
  std::size_t samples_used = 0;        // excludes exact rationals
  std::vector<std::uint64_t> digits;   // counts per digit
  std::vector<std::uint64_t> digraphs; // counts over non-overlapping pairs, index d1 * base + d2
  double chi2_digits = 0.0, p_digits = 1.0;
  double chi2_digraphs = 0.0, p_digraphs = 1.0;
};

struct FlaggedSample {
  std::size_t index = 0;
  int base = 10;
  Periodicity periodicity;
};

struct NormalityReport {
  std::size_t digits = 0;
  std::vector<BaseFrequencies> bases;
  std::vector<FlaggedSample> non_normal;  // exact rationals
};

NormalityReport normality_diagnostics(const std::vector<RealSample>& samples, const std::vector<int>& bases,
                                      std::size_t digits);

// Partial sums of sum_N N^-3 sum_{j,k <= N} mu^(m (a^j - a^k)), mu the pushforward.
struct DelRow {
  long N = 0;
  double increment = 0.0;
  double partial_sum = 0.0;
  double standard_error = 0.0;  // Monte Carlo, propagated
  double bias_bound = 0.0;
};

std::vector<DelRow> del_partial_sums(const MeasureTree& tree, long a, long multiplier, long N0,
                                     const FourierMethod& method, unsigned workers = 1);

}  // namespace exorder

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace exorder {

enum class BlockLevel { nu_m, nu_bar };

// Probability measure on blocks of partial quotients in [1, N], stored in lexicographic order.
// K(block) is the continuant of all entries (the block read as an interior segment).
struct BlockMeasure {
  BlockLevel level = BlockLevel::nu_m;
  long N = 0;
  long m = 0;       // inner block length
  long J = 1;       // inner blocks per block (1 for nu_m)
  long length = 0;  // m * J
  double epsilon = 0.0;

  std::vector<std::uint8_t> entries;  // size() * length, row-major
  std::vector<double> log_weights;
  std::vector<double> log_K;

  double log_Sm = 0.0;  // log of the normalizer sum_w K(w)^{-2(1-eps)}, nu_m only

  // nu_bar only
  std::vector<double> log_product_weights;  // log prod nu_m(sub-blocks)
  double sigma = 0.0;                       // mean of log K under nu_m^J
  double log_K_sd = 0.0;                    // standard deviation of log K under nu_m^J
  double concentration = 0.0;               // relative half-width of the window around sigma
  double retained_mass = 1.0;               // nu_m^J(E)
  bool sampled = false;
  double retained_mass_stderr = 0.0;
  std::string support_predicate;

  std::size_t size() const { return log_weights.size(); }
  const std::uint8_t* block_ptr(std::size_t i) const { return entries.data() + i * length; }
  std::vector<int> block(std::size_t i) const;
  // Index of a block in the support, or npos.
  std::size_t find(const std::vector<int>& block) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientConcentration : public std::runtime_error {
 public:
  InsufficientConcentration(const std::string& what, double mass) : std::runtime_error(what), mass_(mass) {}
  double mass() const { return mass_; }

 private:
  double mass_;
};

double log_interior_continuant(const std::uint8_t* w, std::size_t n);

BlockMeasure build_nu_m(long N, long m, double eps, std::uint64_t budget = 10'000'000);

// E = {|log K - sigma| < concentration * sigma}; nu_bar = nu_m^J conditioned on E.
BlockMeasure build_nu_bar(const BlockMeasure& nu, long J, double concentration, std::uint64_t budget = 10'000'000);

// Smallest relative window whose set E keeps at least half of the product mass.
double minimal_concentration(const BlockMeasure& nu, long J, std::uint64_t budget = 10'000'000);

// Rejection-sampling counterpart of build_nu_bar for product spaces beyond the enumeration budget.
// Support and weights are empirical; sigma and the retained mass are Monte Carlo estimates.
BlockMeasure build_nu_bar_sampled(const BlockMeasure& nu, long J, double concentration, std::size_t samples,
                                  std::uint64_t seed);

struct NuBarReport {
  double max_factor = 0.0;  // max nu_bar / prod nu_m over the support
  double min_factor = 0.0;
  bool property_a = false;  // factor <= 2
  bool property_b = false;  // |log K - sigma| < window * sigma on the support
  double worst_relative_deviation = 0.0;
  double retained_mass = 0.0;
  bool mass_ok = false;
  double weight_sum = 0.0;
};

NuBarReport check_nu_bar(const BlockMeasure& nu_bar, double window);

}  // namespace exorder

#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace exorder {

using BigInt = mpz_class;
using Rational = mpq_class;

// Natural logarithm of a positive big integer / rational, accurate to double rounding.
double log_of(const BigInt& x);
double log_of(const Rational& x);

std::string to_decimal(const BigInt& x);
BigInt parse_bigint(const std::string& s);
std::string to_string(const Rational& x);

// Exact rational value of a finite double.
Rational rational_from_double(double x);

BigInt floor_of(const Rational& x);
BigInt ceil_of(const Rational& x);

// Bits needed to store |x|.
std::size_t bit_length(const BigInt& x);

// %.17g formatting used by every artifact writer.
std::string fmt17(double x);

// Deterministic random stream. Streams derived from (seed, index) are independent
// in practice and identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);
  std::uint64_t next();
  // Uniform in [0, 1) with 53 random bits.
  double uniform01();
  // Uniform integer in [lo, hi], rejection sampled from 64-bit words.
  BigInt uniform_int(const BigInt& lo, const BigInt& hi);
  std::uint64_t uniform_below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t& state);

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Accumulates log(sum exp(x_i)) without overflow; empty sum is -inf.
class LogSum {
 public:
  void add(double log_x);
  double value() const;
  bool empty() const { return terms_.empty(); }

 private:
  std::vector<double> terms_;
};

double log_sum_exp(const std::vector<double>& xs);

}  // namespace exorder

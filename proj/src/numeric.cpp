#include "exorder/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace exorder {

double log_of(const BigInt& x) {
  if (sgn(x) <= 0) throw std::domain_error("log_of: nonpositive integer");
  long exp2 = 0;
  double mant = mpz_get_d_2exp(&exp2, x.get_mpz_t());
  return std::log(mant) + static_cast<double>(exp2) * std::log(2.0);
}

double log_of(const Rational& x) {
  if (sgn(x) <= 0) throw std::domain_error("log_of: nonpositive rational");
  return log_of(BigInt(x.get_num())) - log_of(BigInt(x.get_den()));
}

std::string to_decimal(const BigInt& x) { return x.get_str(10); }

BigInt parse_bigint(const std::string& s) {
  BigInt out;
  if (s.empty() || out.set_str(s, 10) != 0) throw std::invalid_argument("not a decimal integer: '" + s + "'");
  return out;
}

std::string to_string(const Rational& x) { return x.get_str(10); }

Rational rational_from_double(double x) {
  if (!std::isfinite(x)) throw std::domain_error("rational_from_double: non-finite value");
  Rational r;
  mpq_set_d(r.get_mpq_t(), x);
  return r;
}

BigInt floor_of(const Rational& x) {
  BigInt out;
  mpz_fdiv_q(out.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
  return out;
}

BigInt ceil_of(const Rational& x) {
  BigInt out;
  mpz_cdiv_q(out.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
  return out;
}

std::size_t bit_length(const BigInt& x) {
  if (sgn(x) == 0) return 0;
  return mpz_sizeinbase(x.get_mpz_t(), 2);
}

std::string fmt17(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed ^ (0xD1B54A32D192ED03ULL * (stream + 1));
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(state)), static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state)), static_cast<std::uint32_t>(splitmix64(state))};
  engine_.seed(seq);
}

std::uint64_t Rng::next() { return engine_(); }

double Rng::uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::uniform_below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_below(0)");
  std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  for (;;) {
    std::uint64_t r = next();
    if (r < limit) return r % n;
  }
}

BigInt Rng::uniform_int(const BigInt& lo, const BigInt& hi) {
  if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
  BigInt span = hi - lo + 1;
  if (span.fits_ulong_p() && span.get_ui() > 0) {
    return lo + BigInt(static_cast<unsigned long>(uniform_below(span.get_ui())));
  }
  std::size_t bits = bit_length(span);
  std::size_t words = (bits + 63) / 64;
  std::size_t top_bits = bits - 64 * (words - 1);
  for (;;) {
    BigInt r = 0;
    for (std::size_t w = 0; w < words; ++w) {
      std::uint64_t v = next();
      if (w == 0 && top_bits < 64) v &= (std::uint64_t{1} << top_bits) - 1;
      r <<= 64;
      r += BigInt(static_cast<unsigned long>(v));
    }
    if (r < span) return lo + r;
  }
}

void CompensatedSum::add(double x) {
  double t = sum_ + x;
  if (std::fabs(sum_) >= std::fabs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
}

void LogSum::add(double log_x) {
  if (log_x == -std::numeric_limits<double>::infinity()) return;
  terms_.push_back(log_x);
}

double LogSum::value() const { return log_sum_exp(terms_); }

double log_sum_exp(const std::vector<double>& xs) {
  if (xs.empty()) return -std::numeric_limits<double>::infinity();
  double mx = *std::max_element(xs.begin(), xs.end());
  if (std::isinf(mx)) return mx;
  CompensatedSum s;
  for (double x : xs) s.add(std::exp(x - mx));
  return mx + std::log(s.value());
}

}  // namespace exorder

#include "exorder/normality.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <map>

namespace exorder {

namespace {

void check_base(int base) {
  if (base < 2 || base > 36) throw std::invalid_argument("normality: base must lie in [2, 36], got " + std::to_string(base));
}

// Fractional part of x written with exactly `digits` base-b digits (truncated).
std::string frac_digits(const Rational& x, int base, std::size_t digits) {
  Rational frac = x - Rational(floor_of(x));
  BigInt scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), static_cast<unsigned long>(base), digits);
  BigInt n = floor_of(Rational(frac * scale));
  std::string s = n.get_str(base);
  if (s.size() < digits) s.insert(0, digits - s.size(), '0');
  return s;
}

std::uint8_t digit_value(char c) {
  return static_cast<std::uint8_t>(c <= '9' ? c - '0' : c - 'a' + 10);
}

double chi2_pvalue(double chi2, double dof) {
  boost::math::chi_squared_distribution<double> dist(dof);
  return boost::math::cdf(boost::math::complement(dist, chi2));
}

double chi2_stat(const std::vector<std::uint64_t>& counts) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) return 0.0;
  const double expected = static_cast<double>(total) / static_cast<double>(counts.size());
  double s = 0.0;
  for (auto c : counts) {
    double d = static_cast<double>(c) - expected;
    s += d * d / expected;
  }
  return s;
}

}  // namespace

std::size_t certified_digit_count(const RealSample& x, int base, std::size_t cap) {
  check_base(base);
  if (x.exact_rational) return cap;
  CylinderInterval cyl = cylinder(x.prefix);
  if (floor_of(cyl.lo) != floor_of(cyl.hi)) return 0;
  std::string a = frac_digits(cyl.lo, base, cap);
  std::string b = frac_digits(cyl.hi, base, cap);
  std::size_t n = 0;
  while (n < cap && a[n] == b[n]) ++n;
  return n;
}

std::vector<std::uint8_t> certified_digits(const RealSample& x, int base, std::size_t digits) {
  check_base(base);
  Rational anchor = x.exact_rational ? x.prefix.value() : cylinder(x.prefix).lo;
  if (!x.exact_rational) {
    std::size_t have = certified_digit_count(x, base, digits);
    if (have < digits)
      throw InsufficientDigits("normality: sample certifies " + std::to_string(have) + " base-" +
                               std::to_string(base) + " digits, " + std::to_string(digits) + " requested");
  }
  std::string s = frac_digits(anchor, base, digits);
  std::vector<std::uint8_t> out(digits);
  for (std::size_t i = 0; i < digits; ++i) out[i] = digit_value(s[i]);
  return out;
}

Periodicity rational_periodicity(const Rational& x, int base, std::size_t horizon) {
  check_base(base);
  const BigInt den = x.get_den();
  BigInt r = x.get_num() - floor_of(x) * den;
  std::map<BigInt, std::size_t> seen;
  Periodicity out;
  for (std::size_t pos = 0; pos <= horizon; ++pos) {
    if (r == 0) {
      // terminating expansion: zeros repeat from here
      out.preperiod = pos;
      out.period = 1;
      return out;
    }
    auto [it, inserted] = seen.emplace(r, pos);
    if (!inserted) {
      out.preperiod = it->second;
      out.period = pos - it->second;
      return out;
    }
    r = (r * base) % den;
  }
  out.preperiod = horizon;
  return out;
}

NormalityReport normality_diagnostics(const std::vector<RealSample>& samples, const std::vector<int>& bases,
                                      std::size_t digits) {
  if (digits < 2) throw std::invalid_argument("normality: need at least two digits");
  NormalityReport rep;
  rep.digits = digits;
  for (int base : bases) {
    check_base(base);
    BaseFrequencies f;
    f.base = base;
    f.digits.assign(static_cast<std::size_t>(base), 0);
    f.digraphs.assign(static_cast<std::size_t>(base * base), 0);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (samples[i].exact_rational) {
        rep.non_normal.push_back(FlaggedSample{i, base, rational_periodicity(samples[i].prefix.value(), base, digits)});
        continue;
      }
      std::vector<std::uint8_t> d = certified_digits(samples[i], base, digits);
      ++f.samples_used;
      for (auto v : d) ++f.digits[v];
      for (std::size_t k = 0; k + 1 < d.size(); k += 2) ++f.digraphs[d[k] * base + d[k + 1]];
    }
    if (f.samples_used > 0) {
      f.chi2_digits = chi2_stat(f.digits);
      f.p_digits = chi2_pvalue(f.chi2_digits, base - 1);
      f.chi2_digraphs = chi2_stat(f.digraphs);
      f.p_digraphs = chi2_pvalue(f.chi2_digraphs, base * base - 1);
    }
    rep.bases.push_back(std::move(f));
  }
  return rep;
}

std::vector<DelRow> del_partial_sums(const MeasureTree& tree, long a, long multiplier, long N0,
                                     const FourierMethod& method, unsigned workers) {
  if (a < 2) throw std::invalid_argument("del_partial_sums: base a must be >= 2");
  if (multiplier == 0) throw std::invalid_argument("del_partial_sums: multiplier must be nonzero");
  if (N0 < 1) return {};
  if (static_cast<double>(N0) * std::log2(static_cast<double>(a)) + std::log2(std::abs(static_cast<double>(multiplier))) > 52.0)
    throw std::invalid_argument("del_partial_sums: frequencies exceed exact double range");

  std::vector<double> power(static_cast<std::size_t>(N0) + 1, 1.0);
  for (long j = 1; j <= N0; ++j) power[j] = power[j - 1] * static_cast<double>(a);

  // distinct positive frequencies m (a^k - a^j), j < k
  std::vector<double> xis;
  for (long k = 2; k <= N0; ++k)
    for (long j = 1; j < k; ++j) xis.push_back(std::abs(static_cast<double>(multiplier)) * (power[k] - power[j]));
  std::sort(xis.begin(), xis.end());
  xis.erase(std::unique(xis.begin(), xis.end()), xis.end());
  std::vector<FourierSample> vals = fourier_eval_many(tree, xis, method, workers);
  auto lookup = [&](double xi) -> const FourierSample& {
    auto it = std::lower_bound(xis.begin(), xis.end(), xi);
    return vals[static_cast<std::size_t>(it - xis.begin())];
  };

  std::vector<DelRow> rows;
  double partial = 0.0, se = 0.0, bias = 0.0;
  double off_re = 0.0, off_se = 0.0, off_bias = 0.0;  // over j < k <= N
  for (long N = 1; N <= N0; ++N) {
    for (long j = 1; j < N; ++j) {
      const FourierSample& s = lookup(std::abs(static_cast<double>(multiplier)) * (power[N] - power[j]));
      off_re += s.value.real();
      off_se += s.standard_error;
      off_bias += s.error_bound;
    }
    const double w = 1.0 / (static_cast<double>(N) * N * N);
    DelRow row;
    row.N = N;
    // the diagonal contributes mu^(0) = 1 per term; off-diagonal pairs are conjugate
    row.increment = w * (static_cast<double>(N) + 2.0 * off_re);
    partial += row.increment;
    se += w * 2.0 * off_se;
    bias += w * 2.0 * off_bias;
    row.partial_sum = partial;
    row.standard_error = se;
    row.bias_bound = bias;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace exorder

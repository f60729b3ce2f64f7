#include "exorder/block_measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>

#include "exorder/numeric.hpp"

namespace exorder {

std::vector<int> BlockMeasure::block(std::size_t i) const {
  const std::uint8_t* p = block_ptr(i);
  return std::vector<int>(p, p + length);
}

std::size_t BlockMeasure::find(const std::vector<int>& blk) const {
  if (static_cast<long>(blk.size()) != length) return npos;
  std::vector<std::uint8_t> key(blk.begin(), blk.end());
  std::size_t lo = 0, hi = size();
  while (lo < hi) {
    std::size_t mid = (lo + hi) / 2;
    int c = std::memcmp(block_ptr(mid), key.data(), length);
    if (c == 0) return mid;
    if (c < 0) lo = mid + 1; else hi = mid;
  }
  return npos;
}

double log_interior_continuant(const std::uint8_t* w, std::size_t n) {
  // 128-bit exact while it fits, then a ratio recurrence in long double.
  unsigned __int128 prev = 0, cur = 1;
  std::size_t i = 0;
  const unsigned __int128 cap = static_cast<unsigned __int128>(1) << 120;
  for (; i < n && cur < cap; ++i) {
    unsigned __int128 next = static_cast<unsigned __int128>(w[i]) * cur + prev;
    prev = cur;
    cur = next;
  }
  long double lc = std::log(static_cast<long double>(cur));
  if (i == n) return static_cast<double>(lc);
  long double ratio = static_cast<long double>(prev) / static_cast<long double>(cur);
  for (; i < n; ++i) {
    long double r = static_cast<long double>(w[i]) + ratio;
    lc += std::log(r);
    ratio = 1.0L / r;
  }
  return static_cast<double>(lc);
}

namespace {

void check_budget(long N, long len, std::uint64_t budget, const char* what) {
  long double count = std::pow(static_cast<long double>(N), static_cast<long double>(len));
  if (count > static_cast<long double>(budget)) {
    throw BudgetExceeded(std::string(what) + ": " + std::to_string(N) + "^" + std::to_string(len) +
                         " blocks exceed the enumeration budget of " + std::to_string(budget) +
                         "; use a smaller block length or sampling mode");
  }
}

}  // namespace

BlockMeasure build_nu_m(long N, long m, double eps, std::uint64_t budget) {
  if (N < 1 || N > 255) throw std::invalid_argument("build_nu_m: N must lie in [1, 255]");
  if (m < 1) throw std::invalid_argument("build_nu_m: m must be >= 1");
  if (!(eps >= 0.0 && eps < 1.0)) throw std::invalid_argument("build_nu_m: eps must lie in [0, 1)");
  check_budget(N, m, budget, "build_nu_m");
  BlockMeasure nu;
  nu.level = BlockLevel::nu_m;
  nu.N = N;
  nu.m = m;
  nu.J = 1;
  nu.length = m;
  nu.epsilon = eps;
  std::size_t count = 1;
  for (long i = 0; i < m; ++i) count *= static_cast<std::size_t>(N);
  nu.entries.resize(count * m);
  nu.log_K.resize(count);
  std::vector<std::uint8_t> w(m, 1);
  for (std::size_t idx = 0; idx < count; ++idx) {
    std::copy(w.begin(), w.end(), nu.entries.begin() + idx * m);
    nu.log_K[idx] = log_interior_continuant(w.data(), m);
    for (long pos = m - 1; pos >= 0; --pos) {
      if (w[pos] < N) { ++w[pos]; break; }
      w[pos] = 1;
    }
  }
  double expo = -2.0 * (1.0 - eps);
  std::vector<double> raw(count);
  for (std::size_t i = 0; i < count; ++i) raw[i] = expo * nu.log_K[i];
  nu.log_Sm = log_sum_exp(raw);
  nu.log_weights.resize(count);
  for (std::size_t i = 0; i < count; ++i) nu.log_weights[i] = raw[i] - nu.log_Sm;
  nu.support_predicate = "all blocks in [1," + std::to_string(N) + "]^" + std::to_string(m);
  return nu;
}

namespace {

struct ProductStats {
  double sigma;
  double sd;
};

template <class F>
void for_each_product(const BlockMeasure& nu, long J, F&& f) {
  std::size_t n = nu.size();
  std::vector<std::size_t> idx(J, 0);
  std::vector<std::uint8_t> buf(nu.length * J);
  for (;;) {
    double lw = 0.0;
    for (long j = 0; j < J; ++j) {
      std::copy(nu.block_ptr(idx[j]), nu.block_ptr(idx[j]) + nu.length, buf.begin() + j * nu.length);
      lw += nu.log_weights[idx[j]];
    }
    f(buf.data(), lw);
    long pos = J - 1;
    while (pos >= 0 && ++idx[pos] == n) { idx[pos] = 0; --pos; }
    if (pos < 0) break;
  }
}

ProductStats product_stats(const BlockMeasure& nu, long J) {
  long len = nu.length * J;
  CompensatedSum s1, s2;
  for_each_product(nu, J, [&](const std::uint8_t* w, double lw) {
    double lk = log_interior_continuant(w, len);
    double wt = std::exp(lw);
    s1.add(wt * lk);
    s2.add(wt * lk * lk);
  });
  double mean = s1.value();
  return {mean, std::sqrt(std::max(0.0, s2.value() - mean * mean))};
}

}  // namespace

BlockMeasure build_nu_bar(const BlockMeasure& nu, long J, double concentration, std::uint64_t budget) {
  if (nu.level != BlockLevel::nu_m) throw std::invalid_argument("build_nu_bar: expects a nu_m measure");
  if (J < 1) throw std::invalid_argument("build_nu_bar: J must be >= 1");
  if (!(concentration > 0.0)) throw std::invalid_argument("build_nu_bar: concentration must be positive");
  check_budget(nu.N, nu.length * J, budget, "build_nu_bar");
  long len = nu.length * J;
  ProductStats st = product_stats(nu, J);
  double sigma = st.sigma;
  double half = concentration * sigma;

  BlockMeasure out;
  out.level = BlockLevel::nu_bar;
  out.N = nu.N;
  out.m = nu.m;
  out.J = J;
  out.length = len;
  out.epsilon = nu.epsilon;
  out.sigma = sigma;
  out.log_K_sd = st.sd;
  out.concentration = concentration;
  out.log_Sm = nu.log_Sm;
  std::vector<double> kept_lw;
  for_each_product(nu, J, [&](const std::uint8_t* w, double lw) {
    double lk = log_interior_continuant(w, len);
    if (std::fabs(lk - sigma) < half) {
      out.entries.insert(out.entries.end(), w, w + len);
      out.log_K.push_back(lk);
      out.log_product_weights.push_back(lw);
      kept_lw.push_back(lw);
    }
  });
  double log_mass = log_sum_exp(kept_lw);
  out.retained_mass = std::exp(log_mass);
  if (!(out.retained_mass >= 0.5)) {
    throw InsufficientConcentration("build_nu_bar: retained product mass " + fmt17(out.retained_mass) +
                                        " < 1/2 at relative window " + fmt17(concentration) +
                                        "; increase J (or the window)",
                                    out.retained_mass);
  }
  out.log_weights.resize(kept_lw.size());
  for (std::size_t i = 0; i < kept_lw.size(); ++i) out.log_weights[i] = kept_lw[i] - log_mass;
  out.support_predicate = "|log K - sigma| < " + fmt17(concentration) + " * sigma, sigma = " + fmt17(sigma);
  return out;
}

double minimal_concentration(const BlockMeasure& nu, long J, std::uint64_t budget) {
  check_budget(nu.N, nu.length * J, budget, "minimal_concentration");
  long len = nu.length * J;
  double sigma = product_stats(nu, J).sigma;
  std::vector<std::pair<double, double>> dev;  // relative deviation, weight
  for_each_product(nu, J, [&](const std::uint8_t* w, double lw) {
    double lk = log_interior_continuant(w, len);
    dev.emplace_back(std::fabs(lk - sigma) / sigma, std::exp(lw));
  });
  std::sort(dev.begin(), dev.end());
  CompensatedSum acc;
  for (std::size_t i = 0; i < dev.size(); ++i) {
    acc.add(dev[i].second);
    bool last_of_tie = i + 1 == dev.size() || dev[i + 1].first > dev[i].first;
    if (last_of_tie && acc.value() >= 0.5) {
      double next = i + 1 < dev.size() ? dev[i + 1].first : dev[i].first * 2 + 1e-12;
      return std::nextafter(dev[i].first, next);
    }
  }
  return dev.back().first * 2 + 1e-12;
}

BlockMeasure build_nu_bar_sampled(const BlockMeasure& nu, long J, double concentration, std::size_t samples,
                                  std::uint64_t seed) {
  if (nu.level != BlockLevel::nu_m) throw std::invalid_argument("build_nu_bar_sampled: expects a nu_m measure");
  if (samples < 2) throw std::invalid_argument("build_nu_bar_sampled: need at least two samples");
  long len = nu.length * J;
  std::vector<double> cdf(nu.size());
  CompensatedSum acc;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    acc.add(std::exp(nu.log_weights[i]));
    cdf[i] = acc.value();
  }
  Rng rng(seed, 0x6e75);
  auto draw = [&](std::vector<std::uint8_t>& buf) {
    for (long j = 0; j < J; ++j) {
      double u = rng.uniform01() * cdf.back();
      std::size_t k = std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
      if (k >= cdf.size()) k = cdf.size() - 1;
      std::copy(nu.block_ptr(k), nu.block_ptr(k) + nu.length, buf.begin() + j * nu.length);
    }
  };
  std::vector<std::vector<std::uint8_t>> draws(samples, std::vector<std::uint8_t>(len));
  std::vector<double> lks(samples);
  CompensatedSum s1, s2;
  for (std::size_t i = 0; i < samples; ++i) {
    draw(draws[i]);
    lks[i] = log_interior_continuant(draws[i].data(), len);
    s1.add(lks[i]);
    s2.add(lks[i] * lks[i]);
  }
  double n = static_cast<double>(samples);
  double sigma = s1.value() / n;
  double sd = std::sqrt(std::max(0.0, s2.value() / n - sigma * sigma));
  std::map<std::vector<std::uint8_t>, std::size_t> counts;
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    if (std::fabs(lks[i] - sigma) < concentration * sigma) {
      ++counts[draws[i]];
      ++accepted;
    }
  }
  double frac = static_cast<double>(accepted) / n;
  BlockMeasure out;
  out.level = BlockLevel::nu_bar;
  out.N = nu.N;
  out.m = nu.m;
  out.J = J;
  out.length = len;
  out.epsilon = nu.epsilon;
  out.sigma = sigma;
  out.log_K_sd = sd;
  out.concentration = concentration;
  out.retained_mass = frac;
  out.retained_mass_stderr = std::sqrt(frac * (1 - frac) / n);
  out.sampled = true;
  out.log_Sm = nu.log_Sm;
  if (accepted == 0 || frac < 0.5) {
    throw InsufficientConcentration("build_nu_bar_sampled: acceptance rate " + fmt17(frac) + " < 1/2", frac);
  }
  for (const auto& [blk, cnt] : counts) {
    out.entries.insert(out.entries.end(), blk.begin(), blk.end());
    out.log_K.push_back(log_interior_continuant(blk.data(), len));
    double lw = 0.0;
    for (long j = 0; j < J; ++j) {
      std::size_t k = nu.find(std::vector<int>(blk.begin() + j * nu.length, blk.begin() + (j + 1) * nu.length));
      lw += nu.log_weights[k];
    }
    out.log_product_weights.push_back(lw);
    out.log_weights.push_back(std::log(static_cast<double>(cnt) / static_cast<double>(accepted)));
  }
  out.support_predicate = "sampled: |log K - sigma| < " + fmt17(concentration) + " * sigma";
  return out;
}

NuBarReport check_nu_bar(const BlockMeasure& nb, double window) {
  NuBarReport r;
  if (nb.level != BlockLevel::nu_bar) throw std::invalid_argument("check_nu_bar: expects a nu_bar measure");
  r.retained_mass = nb.retained_mass;
  r.mass_ok = nb.retained_mass >= 0.5;
  r.property_a = true;
  r.property_b = true;
  CompensatedSum total;
  r.max_factor = 0.0;
  r.min_factor = INFINITY;
  for (std::size_t i = 0; i < nb.size(); ++i) {
    double factor = std::exp(nb.log_weights[i] - nb.log_product_weights[i]);
    r.max_factor = std::max(r.max_factor, factor);
    r.min_factor = std::min(r.min_factor, factor);
    if (factor > 2.0) r.property_a = false;
    double dev = std::fabs(nb.log_K[i] - nb.sigma);
    r.worst_relative_deviation = std::max(r.worst_relative_deviation, dev / nb.sigma);
    if (!(dev < window * nb.sigma)) r.property_b = false;
    total.add(std::exp(nb.log_weights[i]));
  }
  r.weight_sum = total.value();
  return r;
}

}  // namespace exorder

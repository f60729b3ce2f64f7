#include "exorder/measure_tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace exorder {

double LogBracket::width() const {
  double hi = std::isfinite(upper) ? std::exp(upper) : 0.0;
  double lo = std::isfinite(lower) ? std::exp(lower) : 0.0;
  return hi - lo;
}

MeasureTree::MeasureTree(Schedule schedule, ApproxProfile profile, BlockMeasure nu_bar)
    : schedule_(std::move(schedule)), profile_(std::move(profile)), nu_bar_(std::move(nu_bar)) {
  if (nu_bar_.size() == 0) throw std::invalid_argument("MeasureTree: empty block support");
  if (nu_bar_.length != schedule_.p()) throw std::invalid_argument("MeasureTree: block length differs from schedule");
  const std::size_t n = nu_bar_.size();
  cyl_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    FiniteCF f = FiniteCF::of_small(nu_bar_.block(i));
    CylinderInterval c = cylinder(f);
    BlockCylinder& bc = cyl_[i];
    bc.lo = c.lo;
    bc.hi = c.hi;
    bc.p = f.p().get_si();
    bc.pp = f.pprime().get_si();
    bc.K = f.K().get_si();
    bc.Kp = f.Kprime().get_si();
  }
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0u);
  std::sort(order_.begin(), order_.end(), [&](std::uint32_t a, std::uint32_t b) { return cyl_[a].lo < cyl_[b].lo; });
  cum_sorted_.assign(n + 1, 0.0L);
  for (std::size_t i = 0; i < n; ++i) {
    cum_sorted_[i + 1] = cum_sorted_[i] + std::exp(static_cast<long double>(nu_bar_.log_weights[order_[i]]));
  }
  cum_lex_.assign(n + 1, 0.0);
  CompensatedSum acc;
  for (std::size_t i = 0; i < n; ++i) {
    acc.add(std::exp(nu_bar_.log_weights[i]));
    cum_lex_[i + 1] = acc.value();
  }
}

bool MeasureTree::exceptional_next(const TreeNode& node) const {
  return node.stage < schedule_.levels() && static_cast<long>(node.blocks) == schedule_.jk[node.stage];
}

std::shared_ptr<const ExceptionalInterval> MeasureTree::exceptional_set(const TreeNode& node) const {
  if (!exceptional_next(node)) throw std::logic_error("exceptional_set: node is not terminal");
  std::string key = std::to_string(node.stage) + ":" + node.cf.K().get_str(32) + "/" + node.cf.Kprime().get_str(32);
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = t_cache_.find(key);
    if (it != t_cache_.end()) return it->second;
  }
  auto t = std::make_shared<const ExceptionalInterval>(
      exceptional_choices(node.cf, node.stage + 1, schedule_, profile_));
  std::lock_guard<std::mutex> lock(cache_mutex_);
  if (t_cache_.size() > 200000) t_cache_.clear();
  t_cache_.emplace(std::move(key), t);
  return t;
}

TreeNode MeasureTree::child_block(const TreeNode& node, std::size_t support_index) const {
  TreeNode c;
  const std::uint8_t* w = nu_bar_.block_ptr(support_index);
  FiniteCF cf = node.cf;
  for (long i = 0; i < nu_bar_.length; ++i) cf = cf.extend(static_cast<unsigned long>(w[i]));
  c.cf = std::move(cf);
  c.blocks = node.blocks + 1;
  c.stage = node.stage;
  c.log_weight = node.log_weight + nu_bar_.log_weights[support_index];
  return c;
}

TreeNode MeasureTree::child_exceptional(const TreeNode& node, const BigInt& b) const {
  auto t = exceptional_set(node);
  if (b < t->lo || b > t->hi) throw std::invalid_argument("child_exceptional: b outside T");
  TreeNode c;
  c.cf = node.cf.extend(b);
  c.blocks = node.blocks;
  c.stage = node.stage + 1;
  c.log_weight = node.log_weight - t->log_count();
  return c;
}

std::vector<TreeNode> MeasureTree::children(const TreeNode& node, std::size_t max_count) const {
  std::vector<TreeNode> out;
  if (exceptional_next(node)) {
    auto t = exceptional_set(node);
    if (t->count() > max_count) throw std::length_error("children: exceptional set too large to enumerate");
    for (BigInt b = t->lo; b <= t->hi; ++b) out.push_back(child_exceptional(node, b));
  } else {
    out.reserve(nu_bar_.size());
    for (std::size_t i = 0; i < nu_bar_.size(); ++i) out.push_back(child_block(node, i));
  }
  return out;
}

TreeNode MeasureTree::node_of(const AdmissibleSeq& seq) const {
  TreeNode node = root();
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    const Token& t = seq.tokens[i];
    std::string where = " at token " + std::to_string(i);
    if (exceptional_next(node)) {
      if (!t.exceptional) throw std::invalid_argument("not admissible: block where b_" + std::to_string(node.stage + 1) + " is due" + where);
      auto T = exceptional_set(node);
      if (t.b < T->lo || t.b > T->hi) throw std::invalid_argument("not admissible: b_" + std::to_string(node.stage + 1) + " outside T" + where);
      node = child_exceptional(node, t.b);
    } else {
      if (t.exceptional) throw std::invalid_argument("not admissible: exceptional entry off schedule" + where);
      std::size_t idx = nu_bar_.find(t.block);
      if (idx == BlockMeasure::npos) throw std::invalid_argument("not admissible: block outside the support" + where);
      node = child_block(node, idx);
    }
  }
  return node;
}

double MeasureTree::range_log_mass(std::size_t a, std::size_t b) const {
  if (b <= a) return -INFINITY;
  if (b - a <= 32) {
    LogSum s;
    for (std::size_t i = a; i < b; ++i) s.add(nu_bar_.log_weights[order_[i]]);
    return s.value();
  }
  long double m = cum_sorted_[b] - cum_sorted_[a];
  return static_cast<double>(std::log(m));
}

namespace {

// Pull back [lo, hi] inside cyl of the matrix (p pp; K Kp) to tail coordinates; the convergent p/K goes to infinity.
void pull_back(long p, long pp, long K, long Kp, const Rational& lo, const Rational& hi, Rational& s,
               std::optional<Rational>& e) {
  Rational conv(p, K);
  conv.canonicalize();
  auto image = [&](const Rational& t) {
    Rational r = (Rational(pp) - t * Kp) / (t * K - Rational(p));
    return r;
  };
  if (lo == conv) {
    s = image(hi);
    e.reset();
  } else if (hi == conv) {
    s = image(lo);
    e.reset();
  } else {
    Rational a = image(lo), b = image(hi);
    if (a > b) std::swap(a, b);
    s = a;
    e = b;
  }
}

}  // namespace

void MeasureTree::bracket_rec(const TreeNode& node, const Rational& s_in, const std::optional<Rational>& e,
                              std::size_t depth, LogSum& lower, LogSum& upper, std::size_t& straddlers) const {
  Rational s = s_in < 1 ? Rational(1) : s_in;
  if (e && *e <= s) return;
  if (exceptional_next(node)) {
    auto T = exceptional_set(node);
    double lw = node.log_weight - T->log_count();
    BigInt b_lo = floor_of(s);
    if (b_lo < T->lo) b_lo = T->lo;
    BigInt b_hi = e ? BigInt(ceil_of(*e) - 1) : T->hi;
    if (b_hi > T->hi) b_hi = T->hi;
    if (b_lo > b_hi) return;
    BigInt in_lo = ceil_of(s);
    if (in_lo < T->lo) in_lo = T->lo;
    BigInt in_hi = e ? BigInt(floor_of(*e) - 1) : T->hi;
    if (in_hi > T->hi) in_hi = T->hi;
    if (in_lo <= in_hi) {
      BigInt cnt = in_hi - in_lo + 1;
      double m = lw + log_of(cnt);
      lower.add(m);
      upper.add(m);
    }
    std::vector<BigInt> cut;
    if (in_lo > in_hi) {
      cut.push_back(b_lo);
      if (b_hi != b_lo) cut.push_back(b_hi);
    } else {
      if (b_lo < in_lo) cut.push_back(b_lo);
      if (b_hi > in_hi) cut.push_back(b_hi);
    }
    for (const BigInt& b : cut) {
      if (depth == 0) {
        upper.add(lw);
        ++straddlers;
        continue;
      }
      TreeNode c = child_exceptional(node, b);
      Rational lo = s > Rational(b) ? s : Rational(b);
      Rational hi = Rational(b + 1);
      if (e && *e < hi) hi = *e;
      Rational s2 = 1 / (hi - Rational(b));
      std::optional<Rational> e2;
      if (lo != Rational(b)) e2 = 1 / (lo - Rational(b));
      bracket_rec(c, s2, e2, depth - 1, lower, upper, straddlers);
    }
    return;
  }
  const std::size_t n = order_.size();
  // first position whose cylinder ends beyond s
  std::size_t a = static_cast<std::size_t>(
      std::upper_bound(order_.begin(), order_.end(), s,
                       [&](const Rational& x, std::uint32_t i) { return x < cyl_[i].hi; }) -
      order_.begin());
  std::size_t bnd = n;
  if (e) {
    bnd = static_cast<std::size_t>(
        std::lower_bound(order_.begin(), order_.end(), *e,
                         [&](std::uint32_t i, const Rational& x) { return cyl_[i].lo < x; }) -
        order_.begin());
  }
  if (a >= bnd) return;
  bool first_cut = cyl_[order_[a]].lo < s;
  bool last_cut = e && cyl_[order_[bnd - 1]].hi > *e;
  std::size_t ia = a + (first_cut ? 1 : 0);
  std::size_t ib = bnd - (last_cut ? 1 : 0);
  if (ia < ib) {
    double m = node.log_weight + range_log_mass(ia, ib);
    lower.add(m);
    upper.add(m);
  }
  std::vector<std::size_t> cut;
  if (first_cut) cut.push_back(a);
  if (last_cut && !(first_cut && bnd - 1 == a)) cut.push_back(bnd - 1);
  for (std::size_t pos : cut) {
    std::uint32_t idx = order_[pos];
    double lw = node.log_weight + nu_bar_.log_weights[idx];
    if (depth == 0) {
      upper.add(lw);
      ++straddlers;
      continue;
    }
    const BlockCylinder& bc = cyl_[idx];
    Rational lo = s > bc.lo ? s : bc.lo;
    Rational hi = bc.hi;
    if (e && *e < hi) hi = *e;
    Rational s2;
    std::optional<Rational> e2;
    pull_back(bc.p, bc.pp, bc.K, bc.Kp, lo, hi, s2, e2);
    bracket_rec(child_block(node, idx), s2, e2, depth - 1, lower, upper, straddlers);
  }
}

LogBracket MeasureTree::bracket_from(const TreeNode& base, const Rational& lo, const std::optional<Rational>& hi,
                                     std::size_t depth) const {
  if (hi && *hi < lo) throw std::invalid_argument("pushforward: empty interval");
  LogSum lower, upper;
  LogBracket out;
  if (depth == 0) {
    // the base cylinder itself is the only candidate
    bool meets = !hi || *hi > 1;
    if (meets) upper.add(base.log_weight);
    out.straddlers = meets ? 1 : 0;
  } else {
    bracket_rec(base, lo, hi, depth - 1, lower, upper, out.straddlers);
  }
  out.lower = lower.value();
  out.upper = upper.value();
  return out;
}

LogBracket MeasureTree::pushforward_interval(const Rational& lo, const Rational& hi, std::size_t depth) const {
  return bracket_from(root(), lo, hi, depth);
}

std::size_t MeasureTree::draw_block(Rng& rng) const {
  double u = rng.uniform01() * cum_lex_.back();
  auto it = std::upper_bound(cum_lex_.begin() + 1, cum_lex_.end(), u);
  std::size_t idx = static_cast<std::size_t>(it - cum_lex_.begin()) - 1;
  return std::min(idx, nu_bar_.size() - 1);
}

std::size_t MeasureTree::tokens_through_level(std::size_t k) const {
  if (k == 0) return static_cast<std::size_t>(schedule_.jk.at(0));
  return static_cast<std::size_t>(schedule_.jk.at(k - 1)) + k;
}

std::vector<AdmissibleSeq> MeasureTree::sample(std::size_t tokens, std::size_t count, std::uint64_t seed,
                                               std::uint64_t stream) const {
  return sample_continuations(AdmissibleSeq{}, tokens, count, seed, stream);
}

std::vector<AdmissibleSeq> MeasureTree::sample_continuations(const AdmissibleSeq& base, std::size_t tokens,
                                                             std::size_t count, std::uint64_t seed,
                                                             std::uint64_t stream) const {
  std::vector<AdmissibleSeq> out;
  out.reserve(count);
  const TreeNode start = node_of(base);
  Rng rng(seed, stream);
  for (std::size_t n = 0; n < count; ++n) {
    AdmissibleSeq seq;
    TreeNode node = start;
    FiniteCF tail;
    for (std::size_t t = 0; t < tokens; ++t) {
      if (exceptional_next(node)) {
        auto T = exceptional_set(node);
        BigInt b = rng.uniform_int(T->lo, T->hi);
        node = child_exceptional(node, b);
        tail = tail.extend(b);
        seq.tokens.push_back(Token{true, {}, b});
      } else {
        std::size_t idx = draw_block(rng);
        node = child_block(node, idx);
        std::vector<int> blk = nu_bar_.block(idx);
        tail = tail.extend_block(blk);
        seq.tokens.push_back(Token{false, std::move(blk), BigInt(0)});
      }
    }
    seq.cf = std::move(tail);
    out.push_back(std::move(seq));
  }
  return out;
}

RelativeView::RelativeView(const MeasureTree& tree, const AdmissibleSeq& base)
    : tree_(&tree), seq_(base), base_(tree.node_of(base)) {
  if (!std::isfinite(base_.log_weight)) throw std::invalid_argument("RelativeView: zero-mass base");
}

double RelativeView::log_weight(const std::vector<Token>& continuation) const {
  // walk from the base with weight zero so equal continuations give bitwise equal results
  TreeNode node = base_;
  node.log_weight = 0.0;
  for (std::size_t i = 0; i < continuation.size(); ++i) {
    const Token& t = continuation[i];
    if (tree_->exceptional_next(node)) {
      if (!t.exceptional) throw std::invalid_argument("not admissible: block where an exceptional entry is due");
      node = tree_->child_exceptional(node, t.b);
    } else {
      if (t.exceptional) throw std::invalid_argument("not admissible: exceptional entry off schedule");
      std::size_t idx = tree_->nu_bar().find(t.block);
      if (idx == BlockMeasure::npos) throw std::invalid_argument("not admissible: block outside the support");
      node = tree_->child_block(node, idx);
    }
  }
  return node.log_weight;
}

LogBracket RelativeView::pushforward(const Rational& lo, const Rational& hi, std::size_t depth) const {
  LogBracket b = tree_->bracket_from(base_, lo, hi, depth);
  b.lower -= base_.log_weight;
  b.upper -= base_.log_weight;
  return b;
}

}  // namespace exorder

#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "exorder/admissible.hpp"
#include "exorder/block_measure.hpp"
#include "exorder/cf.hpp"
#include "exorder/numeric.hpp"
#include "exorder/profile.hpp"

namespace exorder {

// A node of the cylinder tree: an admissible prefix without its token list.
struct TreeNode {
  FiniteCF cf;
  std::size_t blocks = 0;  // a-blocks so far
  std::size_t stage = 0;   // exceptional entries so far
  double log_weight = 0.0; // log lambda(G*)
  std::size_t depth() const { return blocks + stage; }
};

struct LogBracket {
  double lower = -INFINITY;  // log of the mass of cylinders certainly inside
  double upper = -INFINITY;  // log of the mass of cylinders meeting the interval
  std::size_t straddlers = 0;  // nodes cut off by the depth limit
  double width() const;        // exp(upper) - exp(lower)
};

// Tail-coordinate extent of one support block: cyl(block) read as a continued fraction
// with the first entry as integer part. Endpoints are small exact rationals.
struct BlockCylinder {
  Rational lo, hi;
  long p = 0, pp = 0, K = 0, Kp = 0;  // convergent matrix of the block
};

class MeasureTree {
 public:
  MeasureTree(Schedule schedule, ApproxProfile profile, BlockMeasure nu_bar);

  const Schedule& schedule() const { return schedule_; }
  const ApproxProfile& profile() const { return profile_; }
  const BlockMeasure& nu_bar() const { return nu_bar_; }

  TreeNode root() const { return TreeNode{}; }
  // True when the next entry after this node is an exceptional quotient.
  bool exceptional_next(const TreeNode& node) const;
  // T_k for a node with exceptional_next(); cached per continuant pair.
  std::shared_ptr<const ExceptionalInterval> exceptional_set(const TreeNode& node) const;

  TreeNode child_block(const TreeNode& node, std::size_t support_index) const;
  TreeNode child_exceptional(const TreeNode& node, const BigInt& b) const;
  // Every child; refuses exceptional sets larger than max_count.
  std::vector<TreeNode> children(const TreeNode& node, std::size_t max_count = 1u << 20) const;

  // Walks seq through the tree, rejecting non-admissible input with the violated clause.
  TreeNode node_of(const AdmissibleSeq& seq) const;
  double lambda_weight(const AdmissibleSeq& seq) const { return node_of(seq).log_weight; }

  // Brackets on log lambda#([lo, hi]) from cylinders at most `depth` tokens below the root.
  LogBracket pushforward_interval(const Rational& lo, const Rational& hi, std::size_t depth) const;
  // Same bracket for the tail measure below `base`, in tail coordinates (not renormalized).
  LogBracket bracket_from(const TreeNode& base, const Rational& lo, const std::optional<Rational>& hi,
                          std::size_t depth) const;

  // Ancestral sampling of `count` prefixes with `tokens` entries each.
  std::vector<AdmissibleSeq> sample(std::size_t tokens, std::size_t count, std::uint64_t seed,
                                    std::uint64_t stream = 0) const;
  // Continuations of `base` drawn from lambda_base; each result holds only the new tokens and
  // the continued fraction of the tail.
  std::vector<AdmissibleSeq> sample_continuations(const AdmissibleSeq& base, std::size_t tokens, std::size_t count,
                                                  std::uint64_t seed, std::uint64_t stream = 0) const;
  // Tokens needed to include b_k (k >= 1), or j_1 blocks when k = 0.
  std::size_t tokens_through_level(std::size_t k) const;

  const std::vector<BlockCylinder>& block_cylinders() const { return cyl_; }
  // Support indices sorted by tail cylinder.
  const std::vector<std::uint32_t>& cylinder_order() const { return order_; }
  std::size_t draw_block(Rng& rng) const;

 private:
  void bracket_rec(const TreeNode& node, const Rational& s, const std::optional<Rational>& e, std::size_t depth,
                   LogSum& lower, LogSum& upper, std::size_t& straddlers) const;
  double range_log_mass(std::size_t a, std::size_t b) const;  // sorted positions [a, b)

  Schedule schedule_;
  ApproxProfile profile_;
  BlockMeasure nu_bar_;
  std::vector<BlockCylinder> cyl_;
  std::vector<std::uint32_t> order_;
  std::vector<long double> cum_sorted_;  // prefix sums of linear weights in cylinder order
  std::vector<double> cum_lex_;          // prefix sums in support order, for sampling
  mutable std::mutex cache_mutex_;
  mutable std::unordered_map<std::string, std::shared_ptr<const ExceptionalInterval>> t_cache_;
};

// lambda_G: weights lambda(G.F)/lambda(G*) and the tail pushforward.
class RelativeView {
 public:
  RelativeView(const MeasureTree& tree, const AdmissibleSeq& base);
  const MeasureTree& tree() const { return *tree_; }
  const TreeNode& base() const { return base_; }
  const AdmissibleSeq& base_seq() const { return seq_; }
  // log lambda_G(F) for a continuation F of the base.
  double log_weight(const std::vector<Token>& continuation) const;
  // log lambda_G#([lo, hi]) brackets, tail coordinates.
  LogBracket pushforward(const Rational& lo, const Rational& hi, std::size_t depth) const;

 private:
  const MeasureTree* tree_;
  AdmissibleSeq seq_;
  TreeNode base_;
};

}  // namespace exorder

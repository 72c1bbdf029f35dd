#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "spn/inference.hpp"
#include "spn/logsum.hpp"
#include "spn/network.hpp"
#include "spn/rng.hpp"

namespace helpers {

// Hand-built alternating network over four variables: a root sum over two
// products, the first combining two pairwise mixtures, the second fully
// factorized. Pinned facts (by manual count): 21 nodes, 20 edges, depth 4,
// 3 sums, 6 products, 12 leaves, 7 unique scopes, 4 alternating layers.
inline spn::Spn demo_network() {
  using spn::Node;
  std::vector<Node> nodes;
  nodes.push_back(Node::leaf(0, 0.8));   // 0
  nodes.push_back(Node::leaf(1, 0.3));   // 1
  nodes.push_back(Node::leaf(0, 0.4));   // 2
  nodes.push_back(Node::leaf(1, 0.9));   // 3
  nodes.push_back(Node::product({0, 1}));                 // 4
  nodes.push_back(Node::product({2, 3}));                 // 5
  nodes.push_back(Node::sum({4, 5}, {0.6, 0.4}));         // 6
  nodes.push_back(Node::leaf(2, 0.7));   // 7
  nodes.push_back(Node::leaf(3, 0.2));   // 8
  nodes.push_back(Node::leaf(2, 0.1));   // 9
  nodes.push_back(Node::leaf(3, 0.6));   // 10
  nodes.push_back(Node::product({7, 8}));                 // 11
  nodes.push_back(Node::product({9, 10}));                // 12
  nodes.push_back(Node::sum({11, 12}, {0.3, 0.7}));       // 13
  nodes.push_back(Node::product({6, 13}));                // 14
  nodes.push_back(Node::leaf(0, 0.5));   // 15
  nodes.push_back(Node::leaf(1, 0.25));  // 16
  nodes.push_back(Node::leaf(2, 0.35));  // 17
  nodes.push_back(Node::leaf(3, 0.65));  // 18
  nodes.push_back(Node::product({15, 16, 17, 18}));       // 19
  nodes.push_back(Node::sum({14, 19}, {0.55, 0.45}));     // 20
  return spn::build_spn(std::move(nodes), 20, 4);
}

// Random valid network: alternating sum/product levels over a random scope
// partition, optional leaf sharing (so some nodes have several parents) and
// the occasional zero weight. Depth in edges is at most 2 * max_sum_levels.
class RandomSpnBuilder {
 public:
  RandomSpnBuilder(spn::Rng& rng, int n_vars, int max_sum_levels, bool normalized)
      : rng_(rng), n_vars_(n_vars), max_levels_(max_sum_levels), normalized_(normalized),
        leaf_pool_(static_cast<std::size_t>(n_vars), kNone) {}

  spn::Spn build() {
    std::vector<int> vars(static_cast<std::size_t>(n_vars_));
    for (int v = 0; v < n_vars_; ++v) vars[static_cast<std::size_t>(v)] = v;
    const spn::NodeId root = grow(vars, max_levels_);
    spn::BuildOptions opts;
    opts.allow_unnormalized = !normalized_;
    return spn::build_spn(std::move(nodes_), root, n_vars_, opts);
  }

 private:
  static constexpr spn::NodeId kNone = ~spn::NodeId{0};

  spn::NodeId add(spn::Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<spn::NodeId>(nodes_.size() - 1);
  }

  spn::NodeId leaf_for(int var) {
    spn::NodeId& pooled = leaf_pool_[static_cast<std::size_t>(var)];
    if (pooled != kNone && rng_.bernoulli(0.5)) return pooled;  // shared leaf: DAG edge
    const spn::NodeId id = add(spn::Node::leaf(var, rng_.uniform(0.05, 0.95)));
    pooled = id;
    return id;
  }

  spn::NodeId factorized(const std::vector<int>& vars) {
    if (vars.size() == 1) return leaf_for(vars.front());
    std::vector<spn::NodeId> children;
    for (int v : vars) children.push_back(leaf_for(v));
    return add(spn::Node::product(std::move(children)));
  }

  spn::NodeId component(const std::vector<int>& vars, int levels_left) {
    // Random partition into 2..3 disjoint groups, one product on top. At the
    // last level multi-variable groups flatten into the product directly so
    // the depth in edges is exactly 2 * sum levels.
    const int groups = vars.size() == 2 ? 2 : rng_.uniform_int(2, 3);
    std::vector<std::vector<int>> parts(static_cast<std::size_t>(groups));
    std::vector<int> shuffled = vars;
    for (std::size_t i = shuffled.size(); i > 1; --i)
      std::swap(shuffled[i - 1], shuffled[rng_.below(i)]);
    for (std::size_t i = 0; i < shuffled.size(); ++i)
      parts[i < static_cast<std::size_t>(groups) ? i : rng_.below(static_cast<std::uint64_t>(groups))]
          .push_back(shuffled[i]);
    std::vector<spn::NodeId> children;
    for (auto& part : parts) {
      if (part.size() == 1)
        children.push_back(leaf_for(part.front()));
      else if (levels_left <= 1)
        for (int v : part) children.push_back(leaf_for(v));
      else
        children.push_back(grow(part, levels_left - 1));
    }
    return add(spn::Node::product(std::move(children)));
  }

  spn::NodeId grow(const std::vector<int>& vars, int levels_left) {
    if (vars.size() == 1) return leaf_for(vars.front());
    if (levels_left <= 0) return factorized(vars);
    const int k = rng_.uniform_int(2, 3);
    std::vector<spn::NodeId> children;
    std::vector<double> weights;
    for (int c = 0; c < k; ++c) {
      children.push_back(component(vars, levels_left));
      weights.push_back(rng_.uniform(0.2, 2.0));
    }
    if (rng_.bernoulli(0.05)) weights.front() = 0.0;  // exercise -inf log weights
    if (normalized_) {
      double total = 0.0;
      for (double w : weights) total += w;
      for (double& w : weights) w /= total;
    }
    return add(spn::Node::sum(std::move(children), weights));
  }

  spn::Rng& rng_;
  int n_vars_;
  int max_levels_;
  bool normalized_;
  std::vector<spn::NodeId> leaf_pool_;
  std::vector<spn::Node> nodes_;
};

inline spn::Spn random_spn(spn::Rng& rng, int n_vars, int max_sum_levels, bool normalized = true) {
  return RandomSpnBuilder(rng, n_vars, max_sum_levels, normalized).build();
}

inline spn::Evidence random_evidence(spn::Rng& rng, int n_vars) {
  spn::Evidence ev(n_vars);
  for (int v = 0; v < n_vars; ++v) {
    const double u = rng.uniform();
    if (u < 0.35)
      ev.set(v, 0);
    else if (u < 0.7)
      ev.set(v, 1);
  }
  return ev;
}

inline std::vector<std::uint8_t> bits_of(std::uint64_t index, int n) {
  std::vector<std::uint8_t> x(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) x[static_cast<std::size_t>(v)] = (index >> v) & 1;
  return x;
}

inline bool consistent_with(const std::vector<std::uint8_t>& x, const spn::Evidence& ev) {
  for (int v = 0; v < ev.n_vars(); ++v)
    if (!ev.is_marginalized(v) && ev.value(v) != x[static_cast<std::size_t>(v)]) return false;
  return true;
}

// Brute-force oracles built only on evaluate(): log-domain sums/maxima over
// all completions of the evidence.
inline double brute_log_marginal(const spn::Spn& s, const spn::Evidence& ev) {
  double acc = spn::kNegInf;
  const std::uint64_t cells = std::uint64_t{1} << s.n_vars();
  for (std::uint64_t i = 0; i < cells; ++i) {
    const auto x = bits_of(i, s.n_vars());
    if (consistent_with(x, ev)) acc = spn::log_add(acc, spn::evaluate(s, x));
  }
  return acc;
}

inline double brute_max_evaluate(const spn::Spn& s) {
  double best = spn::kNegInf;
  const std::uint64_t cells = std::uint64_t{1} << s.n_vars();
  for (std::uint64_t i = 0; i < cells; ++i)
    best = std::max(best, spn::evaluate(s, bits_of(i, s.n_vars())));
  return best;
}

// Argmax of the max-product score over all completions; the oracle for MPE.
inline std::pair<std::vector<std::uint8_t>, double> brute_max_product(const spn::Mpn& m,
                                                                      const spn::Evidence& ev) {
  const spn::Spn& s = m.network();
  double best = spn::kNegInf;
  std::vector<std::uint8_t> arg;
  const std::uint64_t cells = std::uint64_t{1} << s.n_vars();
  for (std::uint64_t i = 0; i < cells; ++i) {
    const auto x = bits_of(i, s.n_vars());
    if (!consistent_with(x, ev)) continue;
    const double v = spn::mpn_evaluate(m, x);
    if (v > best) {
      best = v;
      arg = x;
    }
  }
  return {arg, best};
}

// A copy of the sub-network reachable from the given nodes with a fresh
// uniform-weight sum on top: the reference construction that scope
// aggregation must reproduce.
inline spn::Spn uniform_sum_over(const spn::Spn& s, const std::vector<spn::NodeId>& members) {
  std::vector<bool> keep(s.size(), false);
  std::vector<spn::NodeId> stack = members;
  while (!stack.empty()) {
    const spn::NodeId id = stack.back();
    stack.pop_back();
    if (keep[id]) continue;
    keep[id] = true;
    for (spn::NodeId c : s.node(id).children) stack.push_back(c);
  }
  std::vector<spn::NodeId> remap(s.size(), 0);
  std::vector<spn::Node> nodes;
  for (spn::NodeId id = 0; id < s.size(); ++id) {
    if (!keep[id]) continue;
    remap[id] = static_cast<spn::NodeId>(nodes.size());
    spn::Node n = s.node(id);
    for (spn::NodeId& c : n.children) c = remap[c];
    nodes.push_back(std::move(n));
  }
  std::vector<spn::NodeId> children;
  std::vector<double> weights;
  for (spn::NodeId m : members) {
    children.push_back(remap[m]);
    weights.push_back(1.0 / static_cast<double>(members.size()));
  }
  const spn::NodeId root = static_cast<spn::NodeId>(nodes.size());
  nodes.push_back(spn::Node::sum(std::move(children), weights));
  return spn::build_spn(std::move(nodes), root, s.n_vars());
}

// All labeled spanning trees on n nodes via Pruefer sequences (n >= 2).
inline std::vector<std::vector<std::pair<int, int>>> all_spanning_trees(int n) {
  std::vector<std::vector<std::pair<int, int>>> trees;
  const int len = n - 2;
  std::vector<int> seq(static_cast<std::size_t>(std::max(len, 0)), 0);
  while (true) {
    std::vector<int> degree(static_cast<std::size_t>(n), 1);
    for (int s : seq) ++degree[static_cast<std::size_t>(s)];
    std::vector<int> leaves;
    for (int v = 0; v < n; ++v)
      if (degree[static_cast<std::size_t>(v)] == 1) leaves.push_back(v);
    std::vector<std::pair<int, int>> edges;
    for (int s : seq) {
      const auto it = std::min_element(leaves.begin(), leaves.end());
      const int leaf = *it;
      leaves.erase(it);
      edges.emplace_back(leaf, s);
      if (--degree[static_cast<std::size_t>(s)] == 1) leaves.push_back(s);
    }
    if (leaves.size() == 2) edges.emplace_back(leaves[0], leaves[1]);
    trees.push_back(std::move(edges));

    int pos = len - 1;
    while (pos >= 0 && seq[static_cast<std::size_t>(pos)] == n - 1) {
      seq[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++seq[static_cast<std::size_t>(pos)];
  }
  return trees;
}

}  // namespace helpers

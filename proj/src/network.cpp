#include "spn/network.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <unordered_set>

#include "spn/logsum.hpp"

namespace spn {

namespace {

double log_or_neg_inf(double w) {
  if (w < 0.0 || std::isnan(w)) throw Error("negative or NaN weight");
  return w == 0.0 ? kNegInf : std::log(w);
}

}  // namespace

Node Node::sum(std::vector<NodeId> children, const std::vector<double>& weights) {
  std::vector<double> lw(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) lw[i] = log_or_neg_inf(weights[i]);
  return sum_log(std::move(children), std::move(lw));
}

Node Node::sum_log(std::vector<NodeId> children, std::vector<double> log_weights) {
  Node n;
  n.kind = NodeKind::Sum;
  n.children = std::move(children);
  n.log_weights = std::move(log_weights);
  return n;
}

Node Node::product(std::vector<NodeId> children) {
  Node n;
  n.kind = NodeKind::Product;
  n.children = std::move(children);
  return n;
}

Node Node::leaf(int variable, double p_one) {
  if (p_one < 0.0 || p_one > 1.0 || std::isnan(p_one))
    throw Error("leaf probability outside [0, 1]");
  return leaf_log(variable, log_or_neg_inf(1.0 - p_one), log_or_neg_inf(p_one));
}

Node Node::leaf_log(int variable, double log_p0, double log_p1) {
  Node n;
  n.kind = NodeKind::Leaf;
  n.variable = variable;
  n.log_p = {log_p0, log_p1};
  return n;
}

namespace {

// Structural checks that do not need scopes.
void check_local_shape(const std::vector<Node>& nodes, int n_vars) {
  const auto n = static_cast<NodeId>(nodes.size());
  for (NodeId id = 0; id < n; ++id) {
    const Node& node = nodes[id];
    for (NodeId c : node.children)
      if (c >= n) throw Error("dangling child id at node " + std::to_string(id));
    switch (node.kind) {
      case NodeKind::Sum:
        if (node.children.empty()) throw Error("empty sum node " + std::to_string(id));
        if (node.children.size() != node.log_weights.size())
          throw Error("weight/child count mismatch at node " + std::to_string(id));
        for (double lw : node.log_weights)
          if (std::isnan(lw)) throw Error("NaN weight at node " + std::to_string(id));
        break;
      case NodeKind::Product:
        if (node.children.size() < 2)
          throw Error("product node " + std::to_string(id) + " needs at least 2 children");
        break;
      case NodeKind::Leaf: {
        if (node.variable < 0 || node.variable >= n_vars)
          throw Error("leaf variable out of range at node " + std::to_string(id));
        if (!node.children.empty()) throw Error("leaf with children at node " + std::to_string(id));
        const double mass = std::exp(node.log_p[0]) + std::exp(node.log_p[1]);
        if (std::isnan(mass) || std::abs(mass - 1.0) > 1e-9)
          throw Error("leaf table not normalized at node " + std::to_string(id));
        break;
      }
    }
  }
}

// Iterative DFS from the root: detects cycles, rejects unreachable nodes and
// emits a child-before-parent order.
std::vector<NodeId> topological_order(const std::vector<Node>& nodes, NodeId root) {
  enum class Mark : std::uint8_t { White, Grey, Black };
  std::vector<Mark> mark(nodes.size(), Mark::White);
  std::vector<NodeId> order;
  order.reserve(nodes.size());

  struct Frame {
    NodeId id;
    std::size_t next_child;
  };
  std::vector<Frame> stack{{root, 0}};
  mark[root] = Mark::Grey;
  while (!stack.empty()) {
    Frame& f = stack.back();
    const Node& node = nodes[f.id];
    if (f.next_child < node.children.size()) {
      const NodeId c = node.children[f.next_child++];
      if (mark[c] == Mark::Grey) throw Error("cycle detected through node " + std::to_string(c));
      if (mark[c] == Mark::White) {
        mark[c] = Mark::Grey;
        stack.push_back({c, 0});
      }
    } else {
      mark[f.id] = Mark::Black;
      order.push_back(f.id);
      stack.pop_back();
    }
  }
  for (NodeId id = 0; id < nodes.size(); ++id)
    if (mark[id] != Mark::Black)
      throw Error("node " + std::to_string(id) + " unreachable from root");
  return order;
}

std::vector<Scope> compute_scopes(const std::vector<Node>& nodes, int n_vars) {
  std::vector<Scope> scopes(nodes.size(), Scope(n_vars));
  for (NodeId id = 0; id < nodes.size(); ++id) {
    const Node& node = nodes[id];
    if (node.kind == NodeKind::Leaf) {
      scopes[id].set(node.variable);
    } else {
      for (NodeId c : node.children) scopes[id].unite(scopes[c]);
    }
  }
  return scopes;
}

std::vector<Violation> completeness_violations(const std::vector<Node>& nodes,
                                               const std::vector<Scope>& scopes) {
  std::vector<Violation> out;
  for (NodeId id = 0; id < nodes.size(); ++id) {
    const Node& node = nodes[id];
    if (node.kind != NodeKind::Sum) continue;
    const Scope& first = scopes[node.children.front()];
    for (NodeId c : node.children) {
      if (scopes[c] != first) {
        out.push_back({id, "sum children with unequal scopes"});
        break;
      }
    }
  }
  return out;
}

std::vector<Violation> decomposability_violations(const std::vector<Node>& nodes,
                                                  const std::vector<Scope>& scopes,
                                                  int n_vars) {
  std::vector<Violation> out;
  for (NodeId id = 0; id < nodes.size(); ++id) {
    const Node& node = nodes[id];
    if (node.kind != NodeKind::Product) continue;
    Scope seen(n_vars);
    for (NodeId c : node.children) {
      if (seen.intersects(scopes[c])) {
        out.push_back({id, "product children with intersecting scopes"});
        break;
      }
      seen.unite(scopes[c]);
    }
  }
  return out;
}

std::vector<Violation> normalization_violations(const std::vector<Node>& nodes, double tol) {
  std::vector<Violation> out;
  for (NodeId id = 0; id < nodes.size(); ++id) {
    const Node& node = nodes[id];
    if (node.kind == NodeKind::Sum) {
      double mass = 0.0;
      for (double lw : node.log_weights) mass += std::exp(lw);
      if (std::abs(mass - 1.0) > tol)
        out.push_back({id, "sum weights deviate from 1 by " + std::to_string(mass - 1.0)});
    } else if (node.kind == NodeKind::Leaf) {
      const double mass = std::exp(node.log_p[0]) + std::exp(node.log_p[1]);
      if (std::abs(mass - 1.0) > tol) out.push_back({id, "leaf table deviates from 1"});
    }
  }
  return out;
}

}  // namespace

Spn build_spn(std::vector<Node> nodes, NodeId root, int n_vars, const BuildOptions& options) {
  if (nodes.empty()) throw Error("empty node list");
  if (n_vars < 1 || n_vars > Scope::kMaxVars) throw Error("n_vars out of range");
  if (root >= nodes.size()) throw Error("root out of range");
  check_local_shape(nodes, n_vars);

  // Verifies acyclicity and reachability; also yields a child-before-parent
  // order for inputs that need renumbering.
  const std::vector<NodeId> order = topological_order(nodes, root);
  bool already_sorted = true;
  for (NodeId id = 0; id < nodes.size() && already_sorted; ++id)
    for (NodeId c : nodes[id].children)
      if (c >= id) {
        already_sorted = false;
        break;
      }
  if (!already_sorted) {
    // Relabel so node id = position in topological order.
    std::vector<NodeId> new_id(nodes.size());
    for (NodeId pos = 0; pos < order.size(); ++pos) new_id[order[pos]] = pos;
    std::vector<Node> sorted(nodes.size());
    for (NodeId old = 0; old < nodes.size(); ++old) {
      Node n = std::move(nodes[old]);
      for (NodeId& c : n.children) c = new_id[c];
      sorted[new_id[old]] = std::move(n);
    }
    nodes = std::move(sorted);
    root = new_id[root];
  }

  std::vector<Scope> scopes = compute_scopes(nodes, n_vars);
  if (auto v = completeness_violations(nodes, scopes); !v.empty())
    throw Error("completeness violation at node " + std::to_string(v.front().node));
  if (auto v = decomposability_violations(nodes, scopes, n_vars); !v.empty())
    throw Error("decomposability violation at node " + std::to_string(v.front().node));
  if (!options.allow_unnormalized) {
    if (auto v = normalization_violations(nodes, options.tol); !v.empty())
      throw Error("normalization violation at node " + std::to_string(v.front().node) + ": " +
                  v.front().detail);
  }

  Spn s;
  s.nodes_ = std::move(nodes);
  s.scopes_ = std::move(scopes);
  s.root_ = root;
  s.n_vars_ = n_vars;
  return s;
}

std::vector<Violation> check_complete(const Spn& s) {
  std::vector<Scope> scopes;
  scopes.reserve(s.size());
  for (NodeId id = 0; id < s.size(); ++id) scopes.push_back(s.scope(id));
  return completeness_violations(s.nodes(), scopes);
}

std::vector<Violation> check_decomposable(const Spn& s) {
  std::vector<Scope> scopes;
  scopes.reserve(s.size());
  for (NodeId id = 0; id < s.size(); ++id) scopes.push_back(s.scope(id));
  return decomposability_violations(s.nodes(), scopes, s.n_vars());
}

std::vector<Violation> check_locally_normalized(const Spn& s, double tol) {
  return normalization_violations(s.nodes(), tol);
}

Spn normalize_weights(const Spn& s) {
  std::vector<Node> nodes = s.nodes();
  for (NodeId id = 0; id < nodes.size(); ++id) {
    Node& node = nodes[id];
    if (node.kind != NodeKind::Sum) continue;
    const double total = log_sum_exp(node.log_weights);
    if (total == kNegInf) throw Error("zero total weight at sum node " + std::to_string(id));
    for (double& lw : node.log_weights) lw -= total;
  }
  return build_spn(std::move(nodes), s.root(), s.n_vars());
}

ScopeBand scope_band(int scope_length, const ScopeRanges& ranges) {
  if (scope_length < 2) throw Error("scope band undefined for length < 2");
  if (scope_length <= 3) return ScopeBand::Small;
  if (scope_length <= ranges.medium_hi) return ScopeBand::Medium;
  return ScopeBand::Large;
}

StructStats structural_stats(const Spn& s, const ScopeRanges& ranges) {
  StructStats st;
  std::vector<int> depth_to_leaf(s.size(), 0);
  std::unordered_set<Scope, ScopeHash> unique;
  for (NodeId id = 0; id < s.size(); ++id) {
    const Node& node = s.node(id);
    unique.insert(s.scope(id));
    st.n_edges += static_cast<std::int64_t>(node.children.size());
    switch (node.kind) {
      case NodeKind::Sum: st.n_sum++; break;
      case NodeKind::Product: st.n_product++; break;
      case NodeKind::Leaf: st.n_leaves++; break;
    }
    for (NodeId c : node.children)
      depth_to_leaf[id] = std::max(depth_to_leaf[id], depth_to_leaf[c] + 1);
    if (node.kind != NodeKind::Leaf) {
      const int len = s.scope_length(id);
      if (len > 1) {
        switch (scope_band(len, ranges)) {
          case ScopeBand::Small: st.scope_small++; break;
          case ScopeBand::Medium: st.scope_medium++; break;
          case ScopeBand::Large: st.scope_large++; break;
        }
      }
    }
  }
  st.depth = depth_to_leaf[s.root()];
  st.n_unique_scopes = static_cast<int>(unique.size());
  return st;
}

std::string stats_csv(const StructStats& st, int m_min) {
  std::ostringstream out;
  out << "m_min,depth,n_edges,n_sum,n_product,n_leaves,n_unique_scopes,scope_s,scope_m,scope_l\n"
      << m_min << ',' << st.depth << ',' << st.n_edges << ',' << st.n_sum << ',' << st.n_product
      << ',' << st.n_leaves << ',' << st.n_unique_scopes << ',' << st.scope_small << ','
      << st.scope_medium << ',' << st.scope_large << '\n';
  return out.str();
}

}  // namespace spn

#include "spn/inference.hpp"

#include <cmath>

#include "spn/logsum.hpp"
#include "spn/rng.hpp"

namespace spn {

namespace {

void check_instance(const Spn& s, std::span<const std::uint8_t> instance) {
  if (static_cast<int>(instance.size()) != s.n_vars()) throw Error("instance length mismatch");
  for (std::uint8_t v : instance)
    if (v > 1) throw Error("non-binary value in instance");
}

void check_evidence(const Spn& s, const Evidence& ev) {
  if (ev.n_vars() != s.n_vars()) throw Error("evidence arity mismatch");
}

// One bottom-up sweep; node ids are topologically ordered so a forward pass
// suffices. `Leaf` maps a leaf node to its log output.
template <typename LeafFn>
Eigen::VectorXd sweep_sum(const Spn& s, LeafFn&& leaf_value) {
  Eigen::VectorXd value(static_cast<Eigen::Index>(s.size()));
  std::vector<double> terms;
  for (NodeId id = 0; id < s.size(); ++id) {
    const Node& node = s.node(id);
    switch (node.kind) {
      case NodeKind::Leaf:
        value[id] = leaf_value(node);
        break;
      case NodeKind::Product: {
        double acc = 0.0;
        for (NodeId c : node.children) acc += value[c];
        value[id] = acc;
        break;
      }
      case NodeKind::Sum: {
        terms.resize(node.children.size());
        for (std::size_t i = 0; i < node.children.size(); ++i)
          terms[i] = node.log_weights[i] + value[node.children[i]];
        value[id] = log_sum_exp(terms);
        break;
      }
    }
  }
  return value;
}

template <typename LeafFn>
Eigen::VectorXd sweep_max(const Spn& s, LeafFn&& leaf_value) {
  Eigen::VectorXd value(static_cast<Eigen::Index>(s.size()));
  for (NodeId id = 0; id < s.size(); ++id) {
    const Node& node = s.node(id);
    switch (node.kind) {
      case NodeKind::Leaf:
        value[id] = leaf_value(node);
        break;
      case NodeKind::Product: {
        double acc = 0.0;
        for (NodeId c : node.children) acc += value[c];
        value[id] = acc;
        break;
      }
      case NodeKind::Sum: {
        double best = kNegInf;
        for (std::size_t i = 0; i < node.children.size(); ++i) {
          const double t = node.log_weights[i] + value[node.children[i]];
          if (t > best) best = t;
        }
        value[id] = best;
        break;
      }
    }
  }
  return value;
}

double leaf_marginal_value(const Node& leaf, const Evidence& ev) {
  return ev.is_marginalized(leaf.variable) ? 0.0 : leaf.log_p[ev.value(leaf.variable)];
}

// Max-pass leaf rule: lookup under evidence, otherwise the larger table
// entry (the leaf's own MPE value).
double leaf_max_value(const Node& leaf, const Evidence& ev) {
  if (!ev.is_marginalized(leaf.variable)) return leaf.log_p[ev.value(leaf.variable)];
  return leaf.log_p[0] >= leaf.log_p[1] ? leaf.log_p[0] : leaf.log_p[1];
}

}  // namespace

double evaluate(const Spn& s, std::span<const std::uint8_t> instance) {
  check_instance(s, instance);
  const auto value =
      sweep_sum(s, [&](const Node& leaf) { return leaf.log_p[instance[static_cast<std::size_t>(leaf.variable)]]; });
  return value[s.root()];
}

double marginal(const Spn& s, const Evidence& ev) {
  check_evidence(s, ev);
  const auto value = sweep_sum(s, [&](const Node& leaf) { return leaf_marginal_value(leaf, ev); });
  return value[s.root()];
}

double conditional(const Spn& s, const Evidence& query, const Evidence& given) {
  check_evidence(s, query);
  check_evidence(s, given);
  const Evidence joint = query.merged_with(given);  // throws on overlap
  const double log_given = marginal(s, given);
  if (log_given == kNegInf) throw Error("conditioning evidence has zero probability");
  return marginal(s, joint) - log_given;
}

double log_partition(const Spn& s) { return marginal(s, Evidence::all_marginalized(s.n_vars())); }

ActivationVector activations(const Spn& s, const Evidence& ev) {
  check_evidence(s, ev);
  return sweep_sum(s, [&](const Node& leaf) { return leaf_marginal_value(leaf, ev); });
}

Mpn build_mpn(const Spn& s) { return Mpn(s); }

double mpn_evaluate(const Mpn& m, std::span<const std::uint8_t> instance) {
  const Spn& s = m.network();
  check_instance(s, instance);
  const auto value =
      sweep_max(s, [&](const Node& leaf) { return leaf.log_p[instance[static_cast<std::size_t>(leaf.variable)]]; });
  return value[s.root()];
}

namespace {

// Viterbi-style descent writing leaf states into `ev`. At a max node only the
// argmax branch is followed (ties to the lowest child id); at a product all
// branches. Decomposability guarantees each variable is set at most once.
void trace_assignment(const Spn& s, const Eigen::VectorXd& value, NodeId start, Evidence& ev) {
  std::vector<NodeId> stack{start};
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    const Node& node = s.node(id);
    switch (node.kind) {
      case NodeKind::Leaf: {
        if (ev.is_marginalized(node.variable))
          ev.set(node.variable, node.log_p[0] >= node.log_p[1] ? 0 : 1);
        break;
      }
      case NodeKind::Product:
        for (NodeId c : node.children) stack.push_back(c);
        break;
      case NodeKind::Sum: {
        NodeId best_child = node.children.front();
        double best = kNegInf;
        for (std::size_t i = 0; i < node.children.size(); ++i) {
          const double t = node.log_weights[i] + value[node.children[i]];
          if (t > best || (t == best && node.children[i] < best_child)) {
            best = t;
            best_child = node.children[i];
          }
        }
        stack.push_back(best_child);
        break;
      }
    }
  }
}

}  // namespace

MpeResult mpe_assign(const Mpn& m, const Evidence& ev) {
  const Spn& s = m.network();
  check_evidence(s, ev);
  const auto value = sweep_max(s, [&](const Node& leaf) { return leaf_max_value(leaf, ev); });
  if (value[s.root()] == kNegInf) throw Error("evidence has zero probability under max-product");

  Evidence full = ev;
  trace_assignment(s, value, s.root(), full);
  MpeResult result;
  result.assignment.resize(static_cast<std::size_t>(s.n_vars()));
  for (int v = 0; v < s.n_vars(); ++v) {
    if (full.is_marginalized(v))
      throw Error("trace left variable unassigned; network does not cover all variables");
    result.assignment[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(full.value(v));
  }
  result.log_value = value[s.root()];
  return result;
}

std::vector<Evidence> mpe_filters_all_nodes(const Spn& s) {
  const Evidence none = Evidence::all_marginalized(s.n_vars());
  const auto value = sweep_max(s, [&](const Node& leaf) { return leaf_max_value(leaf, none); });
  std::vector<Evidence> out;
  out.reserve(s.size());
  for (NodeId id = 0; id < s.size(); ++id) {
    Evidence ev = none;
    trace_assignment(s, value, id, ev);
    out.push_back(std::move(ev));
  }
  return out;
}

BinaryMatrix sample(const Spn& s, std::uint64_t seed, int n) {
  if (n < 0) throw Error("negative sample count");
  if (!check_locally_normalized(s, 1e-6).empty())
    throw Error("sampling requires a locally normalized network");
  BinaryMatrix out(n, s.n_vars());
  Rng rng(seed);
  std::vector<NodeId> stack;
  for (int i = 0; i < n; ++i) {
    stack.assign(1, s.root());
    while (!stack.empty()) {
      const NodeId id = stack.back();
      stack.pop_back();
      const Node& node = s.node(id);
      switch (node.kind) {
        case NodeKind::Leaf: {
          const double p1 = std::exp(node.log_p[1]);
          out(i, node.variable) = rng.bernoulli(p1) ? 1 : 0;
          break;
        }
        case NodeKind::Product:
          for (NodeId c : node.children) stack.push_back(c);
          break;
        case NodeKind::Sum: {
          // Inverse-CDF over linear weights.
          const double u = rng.uniform();
          double cum = 0.0;
          NodeId pick = node.children.back();
          for (std::size_t c = 0; c < node.children.size(); ++c) {
            cum += std::exp(node.log_weights[c]);
            if (u < cum) {
              pick = node.children[c];
              break;
            }
          }
          stack.push_back(pick);
          break;
        }
      }
    }
  }
  return out;
}

}  // namespace spn

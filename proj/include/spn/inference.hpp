#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "spn/data.hpp"
#include "spn/evidence.hpp"
#include "spn/network.hpp"

namespace spn {

/// Per-node log outputs for one query, indexed by NodeId.
using ActivationVector = Eigen::VectorXd;

/// log p(X = x) for a complete binary instance.
double evaluate(const Spn& s, std::span<const std::uint8_t> instance);

/// log marginal probability of the observed variables; marginalized leaves
/// output 1. With nothing observed this is the log partition function.
double marginal(const Spn& s, const Evidence& ev);

/// log p(query | given) = marginal(query ∪ given) - marginal(given).
/// Throws when the conditioning evidence has zero mass.
double conditional(const Spn& s, const Evidence& query, const Evidence& given);

/// log Z; 0 for locally normalized networks.
double log_partition(const Spn& s);

/// All node outputs (log domain) under marginal-style evaluation.
ActivationVector activations(const Spn& s, const Evidence& ev);

/// Max-product transform: same nodes, children and weights, with sum nodes
/// evaluated as weighted maxima.
class Mpn {
 public:
  const Spn& network() const { return net_; }

 private:
  friend Mpn build_mpn(const Spn& s);
  explicit Mpn(Spn net) : net_(std::move(net)) {}
  Spn net_;
};

Mpn build_mpn(const Spn& s);

/// Max-product value of a complete instance.
double mpn_evaluate(const Mpn& m, std::span<const std::uint8_t> instance);

struct MpeResult {
  std::vector<std::uint8_t> assignment;  // complete instance
  double log_value;                      // max-product network output at `assignment`
};

/// Approximate most-probable-explanation completion of `ev`. Bottom-up pass:
/// evidence leaves are looked up, marginalized leaves output their larger
/// table entry. Top-down trace: follow the argmax child of every max node
/// (ties broken towards the lowest child id) and all children of product
/// nodes; traced leaves contribute their argmax state (ties towards 0).
/// Re-evaluating the max-product network at the returned assignment
/// reproduces log_value exactly. Throws when the evidence has zero mass.
MpeResult mpe_assign(const Mpn& m, const Evidence& ev);

/// Joint MPE trace for every sub-network: one bottom-up max pass with all
/// variables unobserved, then a top-down trace started from each node.
/// Entry n holds the argmax assignment restricted to the scope of n
/// (variables outside it stay marginalized).
std::vector<Evidence> mpe_filters_all_nodes(const Spn& s);

/// Ancestral sampling: descend from the root choosing sum branches with
/// probability proportional to their weights; Bernoulli draws at leaves.
/// Deterministic given the seed. Requires a locally normalized network.
BinaryMatrix sample(const Spn& s, std::uint64_t seed, int n);

}  // namespace spn

#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <vector>

#include "spn/data.hpp"
#include "spn/network.hpp"

namespace spn {

/// One feedforward stage: row i of `matrix` describes the inputs of node
/// `outputs[i]`; column j refers to node `inputs[j]`, which lives in an
/// earlier layer or among the leaves. Sum layers store linear weights,
/// product layers 0/1 indicators.
struct Layer {
  NodeKind kind = NodeKind::Sum;
  Eigen::SparseMatrix<double, Eigen::RowMajor> matrix;
  std::vector<NodeId> inputs;
  std::vector<NodeId> outputs;
};

struct LayeredLeaf {
  NodeId id;
  int variable;
  double log_p0, log_p1;
};

/// Network flattened into a sequence of sparse layers for batch evaluation.
struct LayeredSpn {
  int n_vars = 0;
  std::size_t n_nodes = 0;
  NodeId root = 0;
  std::vector<LayeredLeaf> leaves;
  std::vector<Layer> layers;
};

/// Group inner nodes by (distance from the leaves, kind), in increasing
/// distance; at equal distance a product layer precedes a sum layer. For
/// alternating networks this yields the minimum number of layers.
LayeredSpn compile_layers(const Spn& s);

/// Log-probability per batch row. Matches node-wise evaluate() within 1e-9;
/// every sum layer goes through a per-row log-sum-exp so no intermediate
/// leaves the log domain unsafely.
Eigen::VectorXd evaluate_layered(const LayeredSpn& net, const BinaryMatrix& batch);

}  // namespace spn

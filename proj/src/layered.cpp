#include "spn/layered.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "spn/error.hpp"
#include "spn/logsum.hpp"

namespace spn {

LayeredSpn compile_layers(const Spn& s) {
  LayeredSpn out;
  out.n_vars = s.n_vars();
  out.n_nodes = s.size();
  out.root = s.root();

  std::vector<int> dist(s.size(), 0);
  for (NodeId id = 0; id < s.size(); ++id) {
    const Node& node = s.node(id);
    if (node.kind == NodeKind::Leaf) {
      out.leaves.push_back({id, node.variable, node.log_p[0], node.log_p[1]});
      continue;
    }
    for (NodeId c : node.children) dist[id] = std::max(dist[id], dist[c] + 1);
  }

  // (distance, kind) buckets; product before sum at equal distance.
  std::map<std::pair<int, int>, std::vector<NodeId>> buckets;
  for (NodeId id = 0; id < s.size(); ++id) {
    const Node& node = s.node(id);
    if (node.kind == NodeKind::Leaf) continue;
    const int kind_rank = node.kind == NodeKind::Product ? 0 : 1;
    buckets[{dist[id], kind_rank}].push_back(id);
  }

  for (auto& [key, members] : buckets) {
    Layer layer;
    layer.kind = key.second == 0 ? NodeKind::Product : NodeKind::Sum;
    layer.outputs = members;  // ascending node id within the bucket

    std::unordered_map<NodeId, int> col_of;
    for (NodeId id : members)
      for (NodeId c : s.node(id).children)
        if (!col_of.count(c)) {
          col_of.emplace(c, static_cast<int>(layer.inputs.size()));
          layer.inputs.push_back(c);
        }

    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t r = 0; r < members.size(); ++r) {
      const Node& node = s.node(members[r]);
      for (std::size_t c = 0; c < node.children.size(); ++c) {
        const double w =
            node.kind == NodeKind::Sum ? std::exp(node.log_weights[c]) : 1.0;
        triplets.emplace_back(static_cast<int>(r), col_of.at(node.children[c]), w);
      }
    }
    layer.matrix.resize(static_cast<int>(members.size()), static_cast<int>(layer.inputs.size()));
    // Parallel edges to the same child accumulate, matching node-wise semantics.
    layer.matrix.setFromTriplets(triplets.begin(), triplets.end());
    out.layers.push_back(std::move(layer));
  }
  return out;
}

Eigen::VectorXd evaluate_layered(const LayeredSpn& net, const BinaryMatrix& batch) {
  if (batch.cols() != net.n_vars && batch.rows() > 0) throw Error("batch column count mismatch");
  const Eigen::Index m = batch.rows();
  Eigen::VectorXd result(m);
  if (m == 0) return result;
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index c = 0; c < batch.cols(); ++c)
      if (batch(r, c) > 1) throw Error("non-binary value in batch");

  // Node values in the log domain, one column per instance.
  Eigen::MatrixXd value(static_cast<Eigen::Index>(net.n_nodes), m);
  for (const LayeredLeaf& leaf : net.leaves)
    for (Eigen::Index i = 0; i < m; ++i)
      value(leaf.id, i) = batch(i, leaf.variable) ? leaf.log_p1 : leaf.log_p0;

  Eigen::MatrixXd gathered;
  for (const Layer& layer : net.layers) {
    gathered.resize(static_cast<Eigen::Index>(layer.inputs.size()), m);
    for (std::size_t j = 0; j < layer.inputs.size(); ++j)
      gathered.row(static_cast<Eigen::Index>(j)) = value.row(layer.inputs[j]);

    if (layer.kind == NodeKind::Product) {
      // In the log domain a product layer is exactly the sparse product Px.
      Eigen::MatrixXd prod = layer.matrix * gathered;
      for (std::size_t r = 0; r < layer.outputs.size(); ++r)
        value.row(layer.outputs[r]) = prod.row(static_cast<Eigen::Index>(r));
    } else {
      // Row-wise log-sum-exp over log(w_ij) + x_j.
      Eigen::RowVectorXd mx(m), acc(m);
      for (std::size_t r = 0; r < layer.outputs.size(); ++r) {
        mx.setConstant(kNegInf);
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(
                 layer.matrix, static_cast<int>(r));
             it; ++it) {
          const double lw = it.value() == 0.0 ? kNegInf : std::log(it.value());
          mx = mx.cwiseMax((gathered.row(it.col()).array() + lw).matrix());
        }
        acc.setZero();
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(
                 layer.matrix, static_cast<int>(r));
             it; ++it) {
          const double lw = it.value() == 0.0 ? kNegInf : std::log(it.value());
          acc.array() += ((gathered.row(it.col()).array() + lw) - mx.array()).exp();
        }
        value.row(layer.outputs[r]) =
            (mx.array() == kNegInf).select(kNegInf, mx.array() + acc.array().log()).matrix();
      }
    }
  }
  for (Eigen::Index i = 0; i < m; ++i) result[i] = value(net.root, i);
  return result;
}

}  // namespace spn

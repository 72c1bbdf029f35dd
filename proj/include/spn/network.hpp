#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "spn/scope.hpp"

namespace spn {

using NodeId = std::uint32_t;

enum class NodeKind : std::uint8_t { Sum, Product, Leaf };

/// One network node. Sum nodes carry log-domain child weights (parallel to
/// `children`); leaves are Bernoulli tables over {0, 1} stored in log domain.
struct Node {
  NodeKind kind = NodeKind::Leaf;
  std::vector<NodeId> children;
  std::vector<double> log_weights;  // sum nodes only
  int variable = -1;                // leaves only
  std::array<double, 2> log_p{0.0, 0.0};

  /// Sum node from linear-domain weights; converted to log once here.
  static Node sum(std::vector<NodeId> children, const std::vector<double>& weights);
  static Node sum_log(std::vector<NodeId> children, std::vector<double> log_weights);
  static Node product(std::vector<NodeId> children);
  /// Bernoulli leaf from p(X = 1) in linear domain.
  static Node leaf(int variable, double p_one);
  static Node leaf_log(int variable, double log_p0, double log_p1);
};

struct Violation {
  NodeId node;
  std::string detail;
};

struct BuildOptions {
  /// Permit sum nodes whose linear weights do not add to one. Leaves must
  /// always be normalized. Used for partition-function experiments and as
  /// the input side of normalize_weights().
  bool allow_unnormalized = false;
  double tol = 1e-9;
};

/// Immutable rooted DAG of sum/product/leaf nodes. Node ids are dense and
/// index `nodes()` in a topological order (children before parents), so a
/// single forward sweep evaluates the network. Safe to share across threads
/// once built.
class Spn {
 public:
  int n_vars() const { return n_vars_; }
  NodeId root() const { return root_; }
  std::size_t size() const { return nodes_.size(); }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  const Scope& scope(NodeId id) const { return scopes_.at(id); }
  const std::vector<Node>& nodes() const { return nodes_; }

  int scope_length(NodeId id) const { return scopes_.at(id).count(); }

  friend Spn build_spn(std::vector<Node> nodes, NodeId root, int n_vars,
                       const BuildOptions& options);

 private:
  Spn() = default;

  std::vector<Node> nodes_;
  std::vector<Scope> scopes_;
  NodeId root_ = 0;
  int n_vars_ = 0;
};

/// Validating constructor. Checks child references, acyclicity, reachability
/// from the root, completeness, decomposability and (unless opted out) local
/// normalization; computes scopes bottom-up. Input nodes may be listed in any
/// acyclic order; they are renumbered into topological order when necessary,
/// with the root id remapped accordingly.
Spn build_spn(std::vector<Node> nodes, NodeId root, int n_vars,
              const BuildOptions& options = {});

/// Every sum node whose children's scopes differ. Empty report = complete.
std::vector<Violation> check_complete(const Spn& s);

/// Every product node with two children of intersecting scope.
std::vector<Violation> check_decomposable(const Spn& s);

/// Sum nodes whose linear weights deviate from summing to one by more than
/// tol, plus leaves whose table does.
std::vector<Violation> check_locally_normalized(const Spn& s, double tol);

/// Rescale every sum node's weights to sum to one. Throws on a sum with zero
/// total mass. The result passes check_locally_normalized at 1e-9.
Spn normalize_weights(const Spn& s);

/// S = [2,3], M = [4, medium_hi], L = (medium_hi, n_vars]. Only nodes with
/// scope length > 1 fall in a range.
struct ScopeRanges {
  int medium_hi = 100;
};

enum class ScopeBand { Small, Medium, Large };

/// Band for a scope length > 1; throws on length < 2.
ScopeBand scope_band(int scope_length, const ScopeRanges& ranges);

struct StructStats {
  int depth = 0;  // edges on the longest root-to-leaf path
  std::int64_t n_edges = 0;
  int n_sum = 0;
  int n_product = 0;
  int n_leaves = 0;
  int n_unique_scopes = 0;
  int scope_small = 0;
  int scope_medium = 0;
  int scope_large = 0;
};

StructStats structural_stats(const Spn& s, const ScopeRanges& ranges = {});

/// Stats row in CSV form, with header. Matches the columns emitted by the
/// CLI `learn` subcommand.
std::string stats_csv(const StructStats& stats, int m_min);

/// Line-oriented text format, header `spn-model v1 <n_vars> <n_nodes>
/// <root>`. Weights are printed with 17 significant digits so a round trip
/// reproduces every bit; -inf prints as `-inf`.
std::string serialize(const Spn& s);
Spn deserialize(std::string_view text);

void save_spn(const Spn& s, const std::string& path);
Spn load_spn(const std::string& path);

}  // namespace spn

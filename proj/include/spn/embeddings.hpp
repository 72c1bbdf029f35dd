#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spn/data.hpp"
#include "spn/evidence.hpp"
#include "spn/mixtrees.hpp"
#include "spn/network.hpp"

namespace spn {

enum class FeatureKind : std::uint8_t { Node, ScopeGroup, Template };

/// Provenance of one embedding column.
struct FeatureMeta {
  FeatureKind kind = FeatureKind::Node;
  NodeId node = 0;       // Node features
  Scope scope;           // Node and ScopeGroup features
  int template_id = -1;  // Template features, with the source rectangle
  int rect_row = -1, rect_col = -1, rect_height = 0, rect_width = 0;
};

/// Instances × features, log domain. -inf is a legal value, NaN is not;
/// column order is deterministic (ascending node id / template id).
struct EmbeddingMatrix {
  Eigen::MatrixXd values;
  std::vector<FeatureMeta> features;
};

/// One column per inner node with scope length > 1: the node's log output
/// on each instance, columns in ascending node id.
EmbeddingMatrix extract_inner(const Spn& s, const DataMatrix& data);

/// Column subset by extractor node kind (sum or product), order preserved.
EmbeddingMatrix filter_by_type(const EmbeddingMatrix& emb, const Spn& s, NodeKind kind);

/// Column subset by extractor scope-length band, order preserved.
EmbeddingMatrix filter_by_scope_length(const EmbeddingMatrix& emb, const Spn& s,
                                       const ScopeRanges& ranges, ScopeBand band);

/// One feature per scope shared by at least one sum node (every scope with a
/// leaf joins in when include_leaves is set): the log of the arithmetic mean
/// of the group's linear-domain outputs, i.e. the activation of a fictitious
/// uniform-weight sum node over the group. Columns ordered by the lowest
/// node id in the group.
EmbeddingMatrix aggregate_by_scope(const Spn& s, const DataMatrix& data, bool include_leaves);

/// Rectangular pixel patch on an image grid, plus the variable indices it
/// covers (row-major).
struct QueryTemplate {
  std::vector<int> variables;
  int row = 0, col = 0, height = 0, width = 0;
};

/// d rectangles with top-left corner and sides uniform over feasible values.
/// Deterministic given the seed.
std::vector<QueryTemplate> generate_patch_queries(std::uint64_t seed, int d, int img_h, int img_w,
                                                  int min_side, int max_side);

/// Any model that can answer log-marginal queries.
using MarginalFn = std::function<double(const Evidence&)>;

MarginalFn marginal_oracle(const Spn& s);
MarginalFn marginal_oracle(const TreeMixture& m);

/// Column j holds the log marginal of each instance restricted to template
/// j's variables. Marginals are cached per observed state pattern, so the
/// model is queried at most min(instances, 2^|Q|) times per template.
EmbeddingMatrix query_embeddings(const MarginalFn& model, std::span<const QueryTemplate> templates,
                                 const DataMatrix& data);

/// CSV with header feature_0,...[,label], 17 significant digits, plus a
/// sidecar metadata CSV (feature,kind,detail) mapping columns to node ids,
/// scopes, or template rectangles.
void save_embeddings_csv(const EmbeddingMatrix& emb, std::span<const int> labels,
                         const std::string& path, const std::string& meta_path);

/// Real-valued matrix with optional labels, as written by
/// save_embeddings_csv (also accepts plain 0/1 data CSVs).
struct FeatureDataset {
  Eigen::MatrixXd X;
  std::vector<int> labels;
};

FeatureDataset load_features_csv(const std::string& path);

}  // namespace spn

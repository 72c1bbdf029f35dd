#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "spn/data.hpp"
#include "spn/network.hpp"

namespace spn {

struct LearnParams {
  double rho = 20.0;    // G-test threshold for declaring columns dependent
  int m_min = 100;      // stop splitting rows below this slice size
  double alpha = 0.1;   // Laplace smoothing for leaf tables
  int em_restarts = 3;
  int em_iters = 100;
  double em_tol = 1e-4;
  std::uint64_t seed = 0;
};

/// Grid used when a validation split is available.
inline constexpr double kAlphaGrid[] = {0.1, 0.2, 0.5, 1.0, 2.0};

/// View of a rectangular sub-block of a data matrix.
struct DataSlice {
  const DataMatrix* data = nullptr;
  std::vector<int> rows;
  std::vector<int> cols;

  static DataSlice full(const DataMatrix& d);
};

/// G statistic of independence between two binary columns:
/// G = 2 Σ_{a,b} c_ab ln(c_ab N / (c_a c_b)), empty cells contributing 0.
/// Constant columns give 0 by convention.
double g_test(const DataSlice& slice, int col_i, int col_j);
double g_test(const DataMatrix& data, int col_i, int col_j);

/// Binary variable split: build the dependency graph with an edge wherever
/// g_test exceeds rho; if it is connected there is no split, otherwise return
/// (largest connected component, all remaining columns). Column indices refer
/// to positions in slice.cols.
std::optional<std::pair<std::vector<int>, std::vector<int>>> split_columns(const DataSlice& slice,
                                                                           double rho);

struct RowClusters {
  std::vector<int> rows_a, rows_b;  // rows_b empty signals a degenerate outcome
  double weight_a = 1.0, weight_b = 0.0;
};

/// Two-component Bernoulli naive-Bayes mixture fitted by EM with random
/// responsibility restarts; rows are hard-assigned to the argmax component
/// and weights are the resulting proportions.
RowClusters cluster_rows(const DataSlice& slice, const LearnParams& params, std::uint64_t seed);

/// Smoothed Bernoulli leaf over one slice column:
/// p(X=1) = (ones + alpha) / (n + 2 alpha); an empty slice gives p = 0.5.
Node make_leaf(const DataSlice& slice, int col, double alpha);

/// LearnSPN-b: recursive binary partitioning of the data matrix. Column
/// splits (G-test) are attempted before row clustering; slices smaller than
/// m_min are factorized into independent leaves. The result is complete,
/// decomposable and locally normalized over all columns.
Spn learn_structure(const DataMatrix& data, const LearnParams& params);

/// Per-leaf sufficient statistics recorded during learning, enough to
/// re-smooth every leaf at a different alpha without touching the structure.
struct LeafCounts {
  NodeId node;
  std::int64_t ones;
  std::int64_t rows;
};

struct LearnedStructure {
  Spn model;
  std::vector<LeafCounts> leaf_counts;
};

LearnedStructure learn_structure_with_counts(const DataMatrix& data, const LearnParams& params);

/// New network with every leaf re-estimated from its recorded counts at the
/// given alpha; sum weights are untouched.
Spn reparameterize_leaves(const Spn& model, std::span<const LeafCounts> counts, double alpha);

struct AlphaSelection {
  double alpha;
  Spn model;  // structure refit with the winning alpha
};

/// Learn the structure once, then grid-search the leaf smoothing coefficient
/// on mean validation log-likelihood; ties go to the smaller alpha.
AlphaSelection select_alpha(const DataMatrix& train, const DataMatrix& valid,
                            std::span<const double> alpha_grid, const LearnParams& params);

}  // namespace spn

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "spn/data.hpp"
#include "spn/evidence.hpp"

namespace spn {

/// Directed spanning tree rooted at variable 0 with binary conditional
/// tables. log_cond[v](s, x) = log p(X_v = x | parent = s); the root's two
/// rows both hold its marginal.
struct ChowLiuTree {
  int n_vars = 0;
  std::vector<int> parent;  // -1 for the root
  std::vector<Eigen::Matrix2d> log_cond;
};

struct TreeMixture {
  std::vector<ChowLiuTree> components;
  std::vector<double> log_weights;
};

struct MixtureParams {
  int em_iters = 100;
  double em_tol = 1e-4;
  int em_restarts = 3;
};

/// Pairwise mutual information from the alpha-smoothed empirical joint
/// (cells (c_ab + alpha)/(N + 4 alpha)); diagonal zeroed.
Eigen::MatrixXd mutual_information(const DataMatrix& data, double alpha);

/// Maximum spanning tree over mutual information (deterministic lexicographic
/// tie-break), rooted at variable 0, with alpha-smoothed tables.
ChowLiuTree learn_chow_liu(const DataMatrix& data, double alpha);

/// EM over component responsibilities with a full Chow-Liu refit per
/// component on weighted counts each iteration. k = 1 reduces to
/// learn_chow_liu. Best of em_restarts random initializations.
TreeMixture learn_mixture(const DataMatrix& data, int k, double alpha, const MixtureParams& params,
                          std::uint64_t seed);

struct MixtureFit {
  TreeMixture mixture;
  std::vector<double> ll_trace;  // training mean LL per EM iteration (winning restart)
};

MixtureFit learn_mixture_traced(const DataMatrix& data, int k, double alpha,
                                const MixtureParams& params, std::uint64_t seed);

/// Marginal of the observed variables by leaf-to-root elimination; linear in
/// the number of variables.
double tree_marginal(const ChowLiuTree& tree, const Evidence& ev);

double mixture_marginal(const TreeMixture& mixture, const Evidence& ev);

/// Mean log-likelihood of a dataset under the mixture.
double mixture_mean_ll(const TreeMixture& mixture, const DataMatrix& data);

/// Text format, header `mt-model v1 <n_vars> <k>`; per component a `C
/// <log_weight>` line followed by one `<parent> <logp(0|0)> <logp(1|0)>
/// <logp(0|1)> <logp(1|1)>` line per variable.
std::string serialize(const TreeMixture& mixture);
TreeMixture deserialize_mt(std::string_view text);

void save_mt(const TreeMixture& mixture, const std::string& path);
TreeMixture load_mt(const std::string& path);

}  // namespace spn

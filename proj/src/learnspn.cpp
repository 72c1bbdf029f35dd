#include "spn/learnspn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spn/inference.hpp"
#include "spn/logsum.hpp"
#include "spn/rng.hpp"

namespace spn {

DataSlice DataSlice::full(const DataMatrix& d) {
  DataSlice s;
  s.data = &d;
  s.rows.resize(static_cast<std::size_t>(d.rows()));
  s.cols.resize(static_cast<std::size_t>(d.cols()));
  std::iota(s.rows.begin(), s.rows.end(), 0);
  std::iota(s.cols.begin(), s.cols.end(), 0);
  return s;
}

double g_test(const DataSlice& slice, int col_i, int col_j) {
  const BinaryMatrix& X = slice.data->X;
  const int ci = slice.cols.at(static_cast<std::size_t>(col_i));
  const int cj = slice.cols.at(static_cast<std::size_t>(col_j));
  std::int64_t c[2][2] = {{0, 0}, {0, 0}};
  for (int r : slice.rows) ++c[X(r, ci)][X(r, cj)];
  const double n = static_cast<double>(slice.rows.size());
  const double row_tot[2] = {static_cast<double>(c[0][0] + c[0][1]),
                             static_cast<double>(c[1][0] + c[1][1])};
  const double col_tot[2] = {static_cast<double>(c[0][0] + c[1][0]),
                             static_cast<double>(c[0][1] + c[1][1])};
  double g = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const double cab = static_cast<double>(c[a][b]);
      if (cab > 0.0) g += cab * std::log(cab * n / (row_tot[a] * col_tot[b]));
    }
  return 2.0 * g;
}

double g_test(const DataMatrix& data, int col_i, int col_j) {
  return g_test(DataSlice::full(data), col_i, col_j);
}

std::optional<std::pair<std::vector<int>, std::vector<int>>> split_columns(const DataSlice& slice,
                                                                           double rho) {
  const int k = static_cast<int>(slice.cols.size());
  if (k < 2) throw Error("split_columns needs at least two columns");

  // Union-find over the dependency graph.
  std::vector<int> parent(static_cast<std::size_t>(k));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      if (g_test(slice, i, j) > rho) {
        const int ri = find(i), rj = find(j);
        if (ri != rj) parent[static_cast<std::size_t>(std::max(ri, rj))] = std::min(ri, rj);
      }

  std::vector<std::vector<int>> components(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) components[static_cast<std::size_t>(find(i))].push_back(i);
  components.erase(std::remove_if(components.begin(), components.end(),
                                  [](const auto& c) { return c.empty(); }),
                   components.end());
  if (components.size() < 2) return std::nullopt;

  // Largest component vs everything else; on ties the component with the
  // lowest leading column index wins (components already sort that way).
  std::size_t best = 0;
  for (std::size_t i = 1; i < components.size(); ++i)
    if (components[i].size() > components[best].size()) best = i;

  std::vector<int> rest;
  for (std::size_t i = 0; i < components.size(); ++i)
    if (i != best) rest.insert(rest.end(), components[i].begin(), components[i].end());
  std::sort(rest.begin(), rest.end());
  return std::make_pair(components[best], rest);
}

namespace {

// Two-component Bernoulli naive-Bayes mixture. Thetas are alpha-smoothed at
// every M step; responsibilities are clamped away from 0/1 so a component
// can always recover rows.
struct TwoClusterEm {
  const DataSlice& slice;
  const LearnParams& params;

  RowClusters run(std::uint64_t seed) const {
    const int n = static_cast<int>(slice.rows.size());
    const int d = static_cast<int>(slice.cols.size());
    const BinaryMatrix& X = slice.data->X;

    Eigen::VectorXd best_resp(n);
    double best_ll = -std::numeric_limits<double>::infinity();

    for (int restart = 0; restart < params.em_restarts; ++restart) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(restart)));
      Eigen::VectorXd resp(n);  // responsibility of the first component
      for (int i = 0; i < n; ++i) resp[i] = rng.uniform();

      double prev_ll = -std::numeric_limits<double>::infinity();
      double ll = prev_ll;
      Eigen::VectorXd theta_a(d), theta_b(d);
      for (int iter = 0; iter < params.em_iters; ++iter) {
        // M step.
        const double na = resp.sum();
        const double nb = static_cast<double>(n) - na;
        const double pi_a = std::clamp(na / n, 1e-6, 1.0 - 1e-6);
        for (int j = 0; j < d; ++j) {
          double ones_a = 0.0, ones_b = 0.0;
          for (int i = 0; i < n; ++i) {
            const double x = X(slice.rows[static_cast<std::size_t>(i)],
                               slice.cols[static_cast<std::size_t>(j)]);
            ones_a += resp[i] * x;
            ones_b += (1.0 - resp[i]) * x;
          }
          theta_a[j] = (ones_a + params.alpha) / (na + 2.0 * params.alpha);
          theta_b[j] = (ones_b + params.alpha) / (nb + 2.0 * params.alpha);
        }

        // E step with the data log-likelihood as the convergence signal.
        ll = 0.0;
        const double log_pi_a = std::log(pi_a), log_pi_b = std::log1p(-pi_a);
        for (int i = 0; i < n; ++i) {
          double la = log_pi_a, lb = log_pi_b;
          for (int j = 0; j < d; ++j) {
            const bool one = X(slice.rows[static_cast<std::size_t>(i)],
                               slice.cols[static_cast<std::size_t>(j)]) != 0;
            la += one ? std::log(theta_a[j]) : std::log1p(-theta_a[j]);
            lb += one ? std::log(theta_b[j]) : std::log1p(-theta_b[j]);
          }
          const double tot = log_add(la, lb);
          ll += tot;
          resp[i] = std::clamp(std::exp(la - tot), 1e-6, 1.0 - 1e-6);
        }
        if (std::abs(ll - prev_ll) < params.em_tol) break;
        prev_ll = ll;
      }
      if (ll > best_ll) {
        best_ll = ll;
        best_resp = resp;
      }
    }

    RowClusters out;
    for (int i = 0; i < n; ++i) {
      if (best_resp[i] >= 0.5)
        out.rows_a.push_back(slice.rows[static_cast<std::size_t>(i)]);
      else
        out.rows_b.push_back(slice.rows[static_cast<std::size_t>(i)]);
    }
    if (out.rows_a.empty()) out.rows_a.swap(out.rows_b);  // keep the first set nonempty
    out.weight_a = static_cast<double>(out.rows_a.size()) / n;
    out.weight_b = static_cast<double>(out.rows_b.size()) / n;
    return out;
  }
};

}  // namespace

RowClusters cluster_rows(const DataSlice& slice, const LearnParams& params, std::uint64_t seed) {
  if (slice.rows.size() < 2) throw Error("cluster_rows needs at least two rows");
  return TwoClusterEm{slice, params}.run(seed);
}

Node make_leaf(const DataSlice& slice, int col, double alpha) {
  const int c = slice.cols.at(static_cast<std::size_t>(col));
  std::int64_t ones = 0;
  for (int r : slice.rows) ones += slice.data->X(r, c);
  const double n = static_cast<double>(slice.rows.size());
  const double p =
      (n == 0.0 && alpha == 0.0) ? 0.5 : (static_cast<double>(ones) + alpha) / (n + 2.0 * alpha);
  return Node::leaf(c, p);
}

namespace {

struct Builder {
  const DataMatrix& data;
  const LearnParams& params;
  std::vector<Node> nodes;
  std::vector<LeafCounts> leaf_counts;

  NodeId add(Node n) {
    nodes.push_back(std::move(n));
    return static_cast<NodeId>(nodes.size() - 1);
  }

  NodeId add_leaf(const DataSlice& slice, int col) {
    std::int64_t ones = 0;
    for (int r : slice.rows) ones += data.X(r, slice.cols[static_cast<std::size_t>(col)]);
    const NodeId id = add(make_leaf(slice, col, params.alpha));
    leaf_counts.push_back({id, ones, static_cast<std::int64_t>(slice.rows.size())});
    return id;
  }

  NodeId factorize(const DataSlice& slice) {
    if (slice.cols.size() == 1) return add_leaf(slice, 0);
    std::vector<NodeId> children;
    children.reserve(slice.cols.size());
    for (int j = 0; j < static_cast<int>(slice.cols.size()); ++j)
      children.push_back(add_leaf(slice, j));
    return add(Node::product(std::move(children)));
  }

  NodeId grow(const DataSlice& slice, std::uint64_t seed) {
    if (slice.cols.size() == 1) return add_leaf(slice, 0);
    if (static_cast<int>(slice.rows.size()) < params.m_min) return factorize(slice);

    if (auto split = split_columns(slice, params.rho)) {
      DataSlice left{&data, slice.rows, {}}, right{&data, slice.rows, {}};
      for (int j : split->first) left.cols.push_back(slice.cols[static_cast<std::size_t>(j)]);
      for (int j : split->second) right.cols.push_back(slice.cols[static_cast<std::size_t>(j)]);
      const NodeId a = grow(left, derive_seed(seed, 0));
      const NodeId b = grow(right, derive_seed(seed, 1));
      return add(Node::product({a, b}));
    }

    if (slice.rows.size() < 2) return factorize(slice);
    const RowClusters clusters = cluster_rows(slice, params, derive_seed(seed, 2));
    if (clusters.rows_b.empty()) return factorize(slice);

    DataSlice top{&data, clusters.rows_a, slice.cols};
    DataSlice bottom{&data, clusters.rows_b, slice.cols};
    const NodeId a = grow(top, derive_seed(seed, 3));
    const NodeId b = grow(bottom, derive_seed(seed, 4));
    return add(Node::sum({a, b}, {clusters.weight_a, clusters.weight_b}));
  }
};

void check_learn_input(const DataMatrix& data) {
  if (data.rows() < 1 || data.cols() < 1) throw Error("empty data matrix");
  for (Eigen::Index r = 0; r < data.rows(); ++r)
    for (Eigen::Index c = 0; c < data.cols(); ++c)
      if (data.X(r, c) > 1) throw Error("non-binary data");
}

}  // namespace

LearnedStructure learn_structure_with_counts(const DataMatrix& data, const LearnParams& params) {
  check_learn_input(data);
  Builder b{data, params, {}, {}};
  const NodeId root = b.grow(DataSlice::full(data), params.seed);
  return {build_spn(std::move(b.nodes), root, static_cast<int>(data.cols())),
          std::move(b.leaf_counts)};
}

Spn learn_structure(const DataMatrix& data, const LearnParams& params) {
  return learn_structure_with_counts(data, params).model;
}

Spn reparameterize_leaves(const Spn& model, std::span<const LeafCounts> counts, double alpha) {
  std::vector<Node> nodes = model.nodes();
  for (const LeafCounts& lc : counts) {
    Node& n = nodes.at(lc.node);
    if (n.kind != NodeKind::Leaf) throw Error("leaf count entry does not point at a leaf");
    const double rows = static_cast<double>(lc.rows);
    const double p = (rows == 0.0 && alpha == 0.0)
                         ? 0.5
                         : (static_cast<double>(lc.ones) + alpha) / (rows + 2.0 * alpha);
    n = Node::leaf(n.variable, p);
  }
  return build_spn(std::move(nodes), model.root(), model.n_vars());
}

AlphaSelection select_alpha(const DataMatrix& train, const DataMatrix& valid,
                            std::span<const double> alpha_grid, const LearnParams& params) {
  if (alpha_grid.empty()) throw Error("empty alpha grid");
  if (valid.rows() < 1) throw Error("empty validation split");
  const LearnedStructure learned = learn_structure_with_counts(train, params);

  double best_alpha = 0.0;
  double best_ll = -std::numeric_limits<double>::infinity();
  bool have_best = false;
  for (double alpha : alpha_grid) {
    const Spn candidate = reparameterize_leaves(learned.model, learned.leaf_counts, alpha);
    double ll = 0.0;
    for (Eigen::Index r = 0; r < valid.rows(); ++r) ll += evaluate(candidate, valid.row(r));
    ll /= static_cast<double>(valid.rows());
    if (!have_best || ll > best_ll || (ll == best_ll && alpha < best_alpha)) {
      have_best = true;
      best_ll = ll;
      best_alpha = alpha;
    }
  }
  return {best_alpha, reparameterize_leaves(learned.model, learned.leaf_counts, best_alpha)};
}

}  // namespace spn

#include "spn/mixtrees.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "spn/error.hpp"
#include "spn/logsum.hpp"
#include "spn/rng.hpp"

namespace spn {

namespace {

struct PairCounts {
  double total = 0.0;             // Σ row weights
  Eigen::VectorXd ones;           // Σ w x_i
  Eigen::MatrixXd both;           // Σ w x_i x_j
};

PairCounts weighted_counts(const DataMatrix& data, const Eigen::VectorXd& w) {
  PairCounts pc;
  const Eigen::MatrixXd Xd = data.X.cast<double>();
  pc.total = w.sum();
  pc.ones = Xd.transpose() * w;
  pc.both = Xd.transpose() * w.asDiagonal() * Xd;
  return pc;
}

// Smoothed joint of a column pair; marginals are the joint's row/col sums so
// everything stays consistent under smoothing.
void joint_table(const PairCounts& pc, double alpha, int i, int j, double p[2][2]) {
  const double c11 = pc.both(i, j);
  const double c10 = pc.ones[i] - c11;
  const double c01 = pc.ones[j] - c11;
  const double c00 = pc.total - c11 - c10 - c01;
  const double z = pc.total + 4.0 * alpha;
  p[0][0] = (c00 + alpha) / z;
  p[0][1] = (c01 + alpha) / z;
  p[1][0] = (c10 + alpha) / z;
  p[1][1] = (c11 + alpha) / z;
}

double pair_mi(const PairCounts& pc, double alpha, int i, int j) {
  double p[2][2];
  joint_table(pc, alpha, i, j, p);
  const double pi[2] = {p[0][0] + p[0][1], p[1][0] + p[1][1]};
  const double pj[2] = {p[0][0] + p[1][0], p[0][1] + p[1][1]};
  double mi = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      if (p[a][b] > 0.0) mi += p[a][b] * std::log(p[a][b] / (pi[a] * pj[b]));
  return mi;
}

Eigen::MatrixXd mi_matrix(const PairCounts& pc, double alpha, int n) {
  Eigen::MatrixXd mi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) mi(i, j) = mi(j, i) = pair_mi(pc, alpha, i, j);
  return mi;
}

// Maximum spanning tree, Kruskal with (-mi, i, j) ordering, oriented away
// from variable 0; tables from the same smoothed counts.
ChowLiuTree fit_tree(const DataMatrix& data, const Eigen::VectorXd& row_weights, double alpha) {
  const int n = static_cast<int>(data.cols());
  ChowLiuTree tree;
  tree.n_vars = n;
  tree.parent.assign(static_cast<std::size_t>(n), -1);
  tree.log_cond.assign(static_cast<std::size_t>(n), Eigen::Matrix2d::Zero());

  const PairCounts pc = weighted_counts(data, row_weights);

  if (n > 1) {
    const Eigen::MatrixXd mi = mi_matrix(pc, alpha, n);
    struct Edge {
      int i, j;
      double mi;
    };
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) edges.push_back({i, j, mi(i, j)});
    std::stable_sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
      if (a.mi != b.mi) return a.mi > b.mi;
      return a.i != b.i ? a.i < b.i : a.j < b.j;
    });

    std::vector<int> uf(static_cast<std::size_t>(n));
    std::iota(uf.begin(), uf.end(), 0);
    auto find = [&](int x) {
      while (uf[static_cast<std::size_t>(x)] != x) {
        uf[static_cast<std::size_t>(x)] = uf[static_cast<std::size_t>(uf[static_cast<std::size_t>(x)])];
        x = uf[static_cast<std::size_t>(x)];
      }
      return x;
    };
    std::vector<std::vector<int>> adjacency(static_cast<std::size_t>(n));
    int taken = 0;
    for (const Edge& e : edges) {
      const int ri = find(e.i), rj = find(e.j);
      if (ri == rj) continue;
      uf[static_cast<std::size_t>(std::max(ri, rj))] = std::min(ri, rj);
      adjacency[static_cast<std::size_t>(e.i)].push_back(e.j);
      adjacency[static_cast<std::size_t>(e.j)].push_back(e.i);
      if (++taken == n - 1) break;
    }

    // Orient away from variable 0.
    std::vector<int> queue{0};
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    seen[0] = true;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const int u = queue[q];
      for (int v : adjacency[static_cast<std::size_t>(u)])
        if (!seen[static_cast<std::size_t>(v)]) {
          seen[static_cast<std::size_t>(v)] = true;
          tree.parent[static_cast<std::size_t>(v)] = u;
          queue.push_back(v);
        }
    }
  }

  for (int v = 0; v < n; ++v) {
    Eigen::Matrix2d lc;
    const int u = tree.parent[static_cast<std::size_t>(v)];
    if (u < 0) {
      const double p1 = (pc.ones[v] + alpha) / (pc.total + 2.0 * alpha);
      lc(0, 0) = lc(1, 0) = std::log1p(-p1);
      lc(0, 1) = lc(1, 1) = std::log(p1);
    } else {
      const double c11 = pc.both(u, v);
      const double cu1 = pc.ones[u];
      const double p1_given1 = (c11 + alpha) / (cu1 + 2.0 * alpha);
      const double p1_given0 = (pc.ones[v] - c11 + alpha) / (pc.total - cu1 + 2.0 * alpha);
      lc(0, 0) = std::log1p(-p1_given0);
      lc(0, 1) = std::log(p1_given0);
      lc(1, 0) = std::log1p(-p1_given1);
      lc(1, 1) = std::log(p1_given1);
    }
    tree.log_cond[static_cast<std::size_t>(v)] = lc;
  }
  return tree;
}

double tree_log_prob(const ChowLiuTree& tree, std::span<const std::uint8_t> x) {
  double ll = 0.0;
  for (int v = 0; v < tree.n_vars; ++v) {
    const int u = tree.parent[static_cast<std::size_t>(v)];
    const int s = u < 0 ? 0 : x[static_cast<std::size_t>(u)];
    ll += tree.log_cond[static_cast<std::size_t>(v)](s, x[static_cast<std::size_t>(v)]);
  }
  return ll;
}

void check_binary(const DataMatrix& data) {
  if (data.rows() < 1 || data.cols() < 1) throw Error("empty data matrix");
  for (Eigen::Index r = 0; r < data.rows(); ++r)
    for (Eigen::Index c = 0; c < data.cols(); ++c)
      if (data.X(r, c) > 1) throw Error("non-binary data");
}

}  // namespace

Eigen::MatrixXd mutual_information(const DataMatrix& data, double alpha) {
  check_binary(data);
  const PairCounts pc =
      weighted_counts(data, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(data.rows())));
  return mi_matrix(pc, alpha, static_cast<int>(data.cols()));
}

ChowLiuTree learn_chow_liu(const DataMatrix& data, double alpha) {
  check_binary(data);
  if (data.cols() < 2) throw Error("chow-liu needs at least two variables");
  return fit_tree(data, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(data.rows())), alpha);
}

MixtureFit learn_mixture_traced(const DataMatrix& data, int k, double alpha,
                                const MixtureParams& params, std::uint64_t seed) {
  check_binary(data);
  if (k < 1) throw Error("component count must be >= 1");
  const Eigen::Index n = data.rows();

  if (k == 1) {
    MixtureFit fit;
    fit.mixture.components.push_back(fit_tree(data, Eigen::VectorXd::Ones(n), alpha));
    fit.mixture.log_weights.push_back(0.0);
    fit.ll_trace.push_back(mixture_mean_ll(fit.mixture, data));
    return fit;
  }

  MixtureFit best;
  double best_ll = -std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < params.em_restarts; ++restart) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(restart)));
    // Dirichlet(1) responsibilities via normalized exponential draws.
    Eigen::MatrixXd resp(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
      double tot = 0.0;
      for (int c = 0; c < k; ++c) {
        const double e = -std::log(1.0 - rng.uniform());
        resp(i, c) = e;
        tot += e;
      }
      resp.row(i) /= tot;
    }

    TreeMixture accepted;
    std::vector<double> trace;
    double accepted_ll = -std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < params.em_iters; ++iter) {
      // M step: weights plus a full per-component refit on weighted counts.
      TreeMixture candidate;
      candidate.log_weights.resize(static_cast<std::size_t>(k));
      for (int c = 0; c < k; ++c) {
        const double mass = std::max(resp.col(c).sum(), 1e-12);
        candidate.log_weights[static_cast<std::size_t>(c)] =
            std::log(mass / static_cast<double>(n));
        candidate.components.push_back(fit_tree(data, resp.col(c), alpha));
      }
      const double wz = log_sum_exp(candidate.log_weights);
      for (double& lw : candidate.log_weights) lw -= wz;

      // E step: responsibilities and the mean data log-likelihood of the
      // freshly fitted model.
      double ll = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<double> terms(static_cast<std::size_t>(k));
        for (int c = 0; c < k; ++c)
          terms[static_cast<std::size_t>(c)] =
              candidate.log_weights[static_cast<std::size_t>(c)] +
              tree_log_prob(candidate.components[static_cast<std::size_t>(c)], data.row(i));
        const double tot = log_sum_exp(terms);
        ll += tot;
        for (int c = 0; c < k; ++c)
          resp(i, c) = std::exp(terms[static_cast<std::size_t>(c)] - tot);
      }
      ll /= static_cast<double>(n);

      // Smoothed refits are not exact M steps, so guard against the rare
      // downhill move: keep the previous model and stop.
      if (ll < accepted_ll) break;
      accepted = std::move(candidate);
      trace.push_back(ll);
      if (ll - accepted_ll < params.em_tol) {
        accepted_ll = ll;
        break;
      }
      accepted_ll = ll;
    }

    if (accepted_ll > best_ll) {
      best_ll = accepted_ll;
      best.mixture = std::move(accepted);
      best.ll_trace = std::move(trace);
    }
  }
  return best;
}

TreeMixture learn_mixture(const DataMatrix& data, int k, double alpha, const MixtureParams& params,
                          std::uint64_t seed) {
  return learn_mixture_traced(data, k, alpha, params, seed).mixture;
}

double tree_marginal(const ChowLiuTree& tree, const Evidence& ev) {
  if (ev.n_vars() != tree.n_vars) throw Error("evidence arity mismatch");
  const int n = tree.n_vars;

  std::vector<std::vector<int>> children(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v)
    if (tree.parent[static_cast<std::size_t>(v)] >= 0)
      children[static_cast<std::size_t>(tree.parent[static_cast<std::size_t>(v)])].push_back(v);

  // Bottom-up order: parents after children.
  std::vector<int> order{0};
  for (std::size_t q = 0; q < order.size(); ++q)
    for (int c : children[static_cast<std::size_t>(order[q])]) order.push_back(c);
  std::reverse(order.begin(), order.end());

  // message[v](s) = log Σ_x p(x|parent=s) Π_child message(x), x over the
  // states admitted by the evidence.
  Eigen::MatrixXd message = Eigen::MatrixXd::Zero(n, 2);
  double root_value = 0.0;
  for (int v : order) {
    const auto& lc = tree.log_cond[static_cast<std::size_t>(v)];
    double child_sum[2] = {0.0, 0.0};
    for (int x = 0; x < 2; ++x)
      for (int c : children[static_cast<std::size_t>(v)]) child_sum[x] += message(c, x);

    const bool root = tree.parent[static_cast<std::size_t>(v)] < 0;
    for (int s = 0; s < 2; ++s) {
      double acc = kNegInf;
      for (int x = 0; x < 2; ++x) {
        if (!ev.is_marginalized(v) && ev.value(v) != x) continue;
        acc = log_add(acc, lc(s, x) + child_sum[x]);
      }
      message(v, s) = acc;
      if (root) {
        root_value = acc;  // both parent states give the same value at the root
        break;
      }
    }
  }
  return root_value;
}

double mixture_marginal(const TreeMixture& mixture, const Evidence& ev) {
  if (mixture.components.empty()) throw Error("empty mixture");
  std::vector<double> terms(mixture.components.size());
  for (std::size_t c = 0; c < mixture.components.size(); ++c)
    terms[c] = mixture.log_weights[c] + tree_marginal(mixture.components[c], ev);
  return log_sum_exp(terms);
}

double mixture_mean_ll(const TreeMixture& mixture, const DataMatrix& data) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    std::vector<double> terms(mixture.components.size());
    for (std::size_t c = 0; c < mixture.components.size(); ++c)
      terms[c] = mixture.log_weights[c] + tree_log_prob(mixture.components[c], data.row(i));
    ll += log_sum_exp(terms);
  }
  return ll / static_cast<double>(data.rows());
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void validate_mixture(const TreeMixture& m) {
  if (m.components.empty() || m.components.size() != m.log_weights.size())
    throw Error("malformed mixture");
  double mass = 0.0;
  for (double lw : m.log_weights) mass += std::exp(lw);
  if (std::abs(mass - 1.0) > 1e-9) throw Error("mixture weights do not sum to 1");
  for (const ChowLiuTree& t : m.components) {
    const int n = t.n_vars;
    if (n < 1 || static_cast<int>(t.parent.size()) != n ||
        static_cast<int>(t.log_cond.size()) != n)
      throw Error("malformed tree");
    // Parent relation must be a spanning tree rooted at 0.
    if (t.parent[0] != -1) throw Error("tree root must be variable 0");
    std::vector<std::vector<int>> children(static_cast<std::size_t>(n));
    for (int v = 1; v < n; ++v) {
      const int u = t.parent[static_cast<std::size_t>(v)];
      if (u < 0 || u >= n) throw Error("tree parent out of range");
      children[static_cast<std::size_t>(u)].push_back(v);
    }
    std::vector<int> reach{0};
    for (std::size_t q = 0; q < reach.size(); ++q)
      for (int c : children[static_cast<std::size_t>(reach[q])]) reach.push_back(c);
    if (static_cast<int>(reach.size()) != n) throw Error("tree parents contain a cycle");
    for (const auto& lc : t.log_cond)
      for (int s = 0; s < 2; ++s) {
        const double row = std::exp(lc(s, 0)) + std::exp(lc(s, 1));
        if (std::isnan(row) || std::abs(row - 1.0) > 1e-9)
          throw Error("conditional table row does not sum to 1");
      }
  }
}

}  // namespace

std::string serialize(const TreeMixture& mixture) {
  validate_mixture(mixture);
  std::ostringstream out;
  out << "mt-model v1 " << mixture.components.front().n_vars << ' ' << mixture.components.size()
      << '\n';
  for (std::size_t c = 0; c < mixture.components.size(); ++c) {
    out << "C " << fmt_double(mixture.log_weights[c]) << '\n';
    const ChowLiuTree& t = mixture.components[c];
    for (int v = 0; v < t.n_vars; ++v) {
      const auto& lc = t.log_cond[static_cast<std::size_t>(v)];
      out << t.parent[static_cast<std::size_t>(v)] << ' ' << fmt_double(lc(0, 0)) << ' '
          << fmt_double(lc(0, 1)) << ' ' << fmt_double(lc(1, 0)) << ' ' << fmt_double(lc(1, 1))
          << '\n';
    }
  }
  return out.str();
}

namespace {

double parse_double_tok(std::istringstream& in, const char* what) {
  std::string tok;
  if (!(in >> tok)) throw IoError(std::string("missing ") + what);
  double v{};
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size())
    throw IoError(std::string("malformed ") + what);
  return v;
}

}  // namespace

TreeMixture deserialize_mt(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string magic, version;
  int n_vars = 0, k = 0;
  if (!(in >> magic >> version >> n_vars >> k) || magic != "mt-model")
    throw IoError("not an mt-model document");
  if (version != "v1") throw IoError("unsupported mt-model version");
  if (n_vars < 1 || k < 1) throw IoError("bad mt-model header");

  TreeMixture m;
  for (int c = 0; c < k; ++c) {
    std::string tag;
    if (!(in >> tag) || tag != "C") throw IoError("expected component weight line");
    m.log_weights.push_back(parse_double_tok(in, "component weight"));
    ChowLiuTree t;
    t.n_vars = n_vars;
    t.parent.resize(static_cast<std::size_t>(n_vars));
    t.log_cond.resize(static_cast<std::size_t>(n_vars));
    for (int v = 0; v < n_vars; ++v) {
      if (!(in >> t.parent[static_cast<std::size_t>(v)])) throw IoError("missing parent");
      Eigen::Matrix2d lc;
      lc(0, 0) = parse_double_tok(in, "logp(0|0)");
      lc(0, 1) = parse_double_tok(in, "logp(1|0)");
      lc(1, 0) = parse_double_tok(in, "logp(0|1)");
      lc(1, 1) = parse_double_tok(in, "logp(1|1)");
      t.log_cond[static_cast<std::size_t>(v)] = lc;
    }
    m.components.push_back(std::move(t));
  }
  validate_mixture(m);
  return m;
}

void save_mt(const TreeMixture& mixture, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << serialize(mixture);
  if (!out) throw IoError("write failed: " + path);
}

TreeMixture load_mt(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_mt(buf.str());
}

}  // namespace spn

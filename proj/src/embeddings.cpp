#include "spn/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "spn/inference.hpp"
#include "spn/logsum.hpp"
#include "spn/rng.hpp"

namespace spn {

EmbeddingMatrix extract_inner(const Spn& s, const DataMatrix& data) {
  std::vector<NodeId> picks;
  for (NodeId id = 0; id < s.size(); ++id)
    if (s.node(id).kind != NodeKind::Leaf && s.scope_length(id) > 1) picks.push_back(id);

  EmbeddingMatrix emb;
  emb.values.resize(data.rows(), static_cast<Eigen::Index>(picks.size()));
  emb.features.reserve(picks.size());
  for (NodeId id : picks) emb.features.push_back({FeatureKind::Node, id, s.scope(id), -1});

  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    const ActivationVector act = activations(s, Evidence::complete(data.row(r)));
    for (std::size_t j = 0; j < picks.size(); ++j)
      emb.values(r, static_cast<Eigen::Index>(j)) = act[picks[j]];
  }
  return emb;
}

namespace {

EmbeddingMatrix select_columns(const EmbeddingMatrix& emb, const std::vector<Eigen::Index>& cols) {
  EmbeddingMatrix out;
  out.values.resize(emb.values.rows(), static_cast<Eigen::Index>(cols.size()));
  out.features.reserve(cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    out.values.col(static_cast<Eigen::Index>(j)) = emb.values.col(cols[j]);
    out.features.push_back(emb.features[static_cast<std::size_t>(cols[j])]);
  }
  return out;
}

}  // namespace

EmbeddingMatrix filter_by_type(const EmbeddingMatrix& emb, const Spn& s, NodeKind kind) {
  if (kind == NodeKind::Leaf) throw Error("type filter selects sum or product nodes");
  std::vector<Eigen::Index> cols;
  for (std::size_t j = 0; j < emb.features.size(); ++j) {
    const FeatureMeta& f = emb.features[j];
    if (f.kind != FeatureKind::Node) throw Error("type filter needs node features");
    if (s.node(f.node).kind == kind) cols.push_back(static_cast<Eigen::Index>(j));
  }
  return select_columns(emb, cols);
}

EmbeddingMatrix filter_by_scope_length(const EmbeddingMatrix& emb, const Spn& s,
                                       const ScopeRanges& ranges, ScopeBand band) {
  std::vector<Eigen::Index> cols;
  for (std::size_t j = 0; j < emb.features.size(); ++j) {
    const FeatureMeta& f = emb.features[j];
    if (f.kind != FeatureKind::Node) throw Error("scope filter needs node features");
    if (scope_band(s.scope_length(f.node), ranges) == band)
      cols.push_back(static_cast<Eigen::Index>(j));
  }
  return select_columns(emb, cols);
}

EmbeddingMatrix aggregate_by_scope(const Spn& s, const DataMatrix& data, bool include_leaves) {
  // Scope groups keyed by the lowest member id, which also fixes the column
  // order. Sum nodes always participate; leaves only when asked for.
  std::unordered_map<Scope, std::vector<NodeId>, ScopeHash> groups;
  for (NodeId id = 0; id < s.size(); ++id) {
    const NodeKind kind = s.node(id).kind;
    if (kind == NodeKind::Sum || (include_leaves && kind == NodeKind::Leaf))
      groups[s.scope(id)].push_back(id);
  }
  std::vector<std::vector<NodeId>> ordered;
  ordered.reserve(groups.size());
  for (auto& [scope, members] : groups) {
    (void)scope;
    ordered.push_back(std::move(members));
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });

  EmbeddingMatrix emb;
  emb.values.resize(data.rows(), static_cast<Eigen::Index>(ordered.size()));
  emb.features.reserve(ordered.size());
  for (const auto& members : ordered)
    emb.features.push_back({FeatureKind::ScopeGroup, members.front(), s.scope(members.front()), -1});

  std::vector<double> terms;
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    const ActivationVector act = activations(s, Evidence::complete(data.row(r)));
    for (std::size_t g = 0; g < ordered.size(); ++g) {
      terms.clear();
      for (NodeId id : ordered[g]) terms.push_back(act[id]);
      // log-mean-exp: the output of a uniform-weight sum over the group.
      emb.values(r, static_cast<Eigen::Index>(g)) =
          log_sum_exp(terms) - std::log(static_cast<double>(terms.size()));
    }
  }
  return emb;
}

std::vector<QueryTemplate> generate_patch_queries(std::uint64_t seed, int d, int img_h, int img_w,
                                                  int min_side, int max_side) {
  if (d < 0) throw Error("negative template count");
  if (min_side < 2 || min_side > max_side || max_side > std::min(img_h, img_w))
    throw Error("infeasible patch bounds");
  Rng rng(seed);
  std::vector<QueryTemplate> out;
  out.reserve(static_cast<std::size_t>(d));
  for (int t = 0; t < d; ++t) {
    QueryTemplate q;
    q.height = rng.uniform_int(min_side, max_side);
    q.width = rng.uniform_int(min_side, max_side);
    q.row = rng.uniform_int(0, img_h - q.height);
    q.col = rng.uniform_int(0, img_w - q.width);
    for (int r = 0; r < q.height; ++r)
      for (int c = 0; c < q.width; ++c) q.variables.push_back((q.row + r) * img_w + q.col + c);
    out.push_back(std::move(q));
  }
  return out;
}

MarginalFn marginal_oracle(const Spn& s) {
  return [&s](const Evidence& ev) { return marginal(s, ev); };
}

MarginalFn marginal_oracle(const TreeMixture& m) {
  return [&m](const Evidence& ev) { return mixture_marginal(m, ev); };
}

EmbeddingMatrix query_embeddings(const MarginalFn& model, std::span<const QueryTemplate> templates,
                                 const DataMatrix& data) {
  EmbeddingMatrix emb;
  emb.values.resize(data.rows(), static_cast<Eigen::Index>(templates.size()));
  emb.features.reserve(templates.size());

  const int n_vars = static_cast<int>(data.cols());
  for (std::size_t t = 0; t < templates.size(); ++t) {
    const QueryTemplate& q = templates[t];
    FeatureMeta meta;
    meta.kind = FeatureKind::Template;
    meta.template_id = static_cast<int>(t);
    meta.rect_row = q.row;
    meta.rect_col = q.col;
    meta.rect_height = q.height;
    meta.rect_width = q.width;
    emb.features.push_back(std::move(meta));

    for (int v : q.variables)
      if (v < 0 || v >= n_vars) throw Error("template variable out of range");

    // One marginal evaluation per distinct observed pattern of the template.
    std::unordered_map<std::string, double> cache;
    std::string key((q.variables.size() + 7) / 8, '\0');
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
      const auto row = data.row(r);
      std::fill(key.begin(), key.end(), '\0');
      for (std::size_t i = 0; i < q.variables.size(); ++i)
        key[i >> 3] = static_cast<char>(
            key[i >> 3] | (row[static_cast<std::size_t>(q.variables[i])] << (i & 7)));
      if (auto it = cache.find(key); it != cache.end()) {
        emb.values(r, static_cast<Eigen::Index>(t)) = it->second;
        continue;
      }
      Evidence ev(n_vars);
      for (int v : q.variables) ev.set(v, row[static_cast<std::size_t>(v)]);
      const double value = model(ev);
      if (std::isnan(value)) throw Error("marginal oracle returned NaN");
      cache.emplace(key, value);
      emb.values(r, static_cast<Eigen::Index>(t)) = value;
    }
  }
  return emb;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string scope_spec(const Scope& scope) {
  std::string out;
  for (int v : scope.variables()) {
    if (!out.empty()) out += ' ';
    out += std::to_string(v);
  }
  return out;
}

}  // namespace

void save_embeddings_csv(const EmbeddingMatrix& emb, std::span<const int> labels,
                         const std::string& path, const std::string& meta_path) {
  if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != emb.values.rows())
    throw Error("label count does not match instance count");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (Eigen::Index j = 0; j < emb.values.cols(); ++j) out << (j ? "," : "") << "feature_" << j;
  if (!labels.empty()) out << (emb.values.cols() ? "," : "") << "label";
  out << '\n';
  for (Eigen::Index r = 0; r < emb.values.rows(); ++r) {
    for (Eigen::Index j = 0; j < emb.values.cols(); ++j)
      out << (j ? "," : "") << fmt_double(emb.values(r, j));
    if (!labels.empty()) out << (emb.values.cols() ? "," : "") << labels[static_cast<std::size_t>(r)];
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);

  std::ofstream meta(meta_path, std::ios::binary);
  if (!meta) throw IoError("cannot open for writing: " + meta_path);
  meta << "feature,kind,detail\n";
  for (std::size_t j = 0; j < emb.features.size(); ++j) {
    const FeatureMeta& f = emb.features[j];
    meta << "feature_" << j << ',';
    switch (f.kind) {
      case FeatureKind::Node:
        meta << "node,node_id=" << f.node << " scope=" << scope_spec(f.scope);
        break;
      case FeatureKind::ScopeGroup:
        meta << "scope,scope=" << scope_spec(f.scope);
        break;
      case FeatureKind::Template:
        meta << "template,template_id=" << f.template_id;
        if (f.rect_height > 0)
          meta << " rect=" << f.rect_row << ' ' << f.rect_col << ' ' << f.rect_height << ' '
               << f.rect_width;
        break;
    }
    meta << '\n';
  }
  if (!meta) throw IoError("write failed: " + meta_path);
}

FeatureDataset load_features_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);

  FeatureDataset out;
  std::vector<std::vector<double>> rows;
  bool label_column = false;
  bool first = true;
  std::string line;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> fields;
    std::string field;
    for (char ch : line) {
      if (ch == ',') {
        fields.push_back(field);
        field.clear();
      } else if (ch != '\r') {
        field += ch;
      }
    }
    fields.push_back(field);

    if (first) {
      first = false;
      double dummy;
      auto [p, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), dummy);
      const bool header = ec != std::errc{} || p != fields[0].data() + fields[0].size();
      width = fields.size();
      if (header) {
        label_column = fields.back() == "label";
        continue;
      }
    }
    if (fields.size() != width) throw IoError(path + ": inconsistent column count");
    std::vector<double> row(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      auto [p, ec] =
          std::from_chars(fields[i].data(), fields[i].data() + fields[i].size(), row[i]);
      if (ec != std::errc{} || p != fields[i].data() + fields[i].size())
        throw IoError(path + ": malformed number '" + fields[i] + "'");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path + ": no data rows");

  const std::size_t n_features = width - (label_column ? 1 : 0);
  if (n_features == 0) throw IoError(path + ": no feature columns");
  out.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n_features));
  if (label_column) out.labels.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < n_features; ++c)
      out.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    if (label_column) {
      const double y = rows[r].back();
      if (y < 0 || y != std::floor(y)) throw IoError(path + ": labels must be nonnegative integers");
      out.labels[r] = static_cast<int>(y);
    }
  }
  return out;
}

}  // namespace spn

// Command-line front end for the SPN library: structure learning, inference,
// sampling, embedding extraction, a linear-probe classifier, tree-mixture
// baselines, synthetic data and the full set of model visualizations.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "spn/embeddings.hpp"
#include "spn/inference.hpp"
#include "spn/layered.hpp"
#include "spn/learnspn.hpp"
#include "spn/logreg.hpp"
#include "spn/mixtrees.hpp"
#include "spn/network.hpp"
#include "spn/rng.hpp"
#include "spn/synthetic.hpp"
#include "spn/viz.hpp"

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "spncli 1.0.0";

// All file outputs go through a temp-then-rename so a crash never leaves a
// half-written artifact behind.
template <typename WriteFn>
void atomic_output(const std::string& path, WriteFn&& write) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  write(tmp);
  fs::rename(tmp, target);
}

void require_readable(const std::string& path) {
  std::ifstream probe(path);
  if (!probe) throw spn::IoError("cannot open: " + path);
}

bool is_mt_model(const std::string& path) {
  std::ifstream in(path);
  std::string magic;
  in >> magic;
  return magic == "mt-model";
}

// Loads either model kind behind the shared marginal-query surface.
struct AnyModel {
  std::optional<spn::Spn> spn;
  std::optional<spn::TreeMixture> mt;

  static AnyModel load(const std::string& path) {
    require_readable(path);
    AnyModel m;
    if (is_mt_model(path))
      m.mt = spn::load_mt(path);
    else
      m.spn = spn::load_spn(path);
    return m;
  }

  int n_vars() const {
    return spn ? spn->n_vars() : mt->components.front().n_vars;
  }

  spn::MarginalFn oracle() const {
    return spn ? spn::marginal_oracle(*spn) : spn::marginal_oracle(*mt);
  }
};

spn::Evidence parse_evidence(const std::string& text, int n_vars) {
  std::vector<std::string> tokens;
  std::string tok;
  for (char ch : text) {
    if (ch == ',') {
      tokens.push_back(tok);
      tok.clear();
    } else if (ch != ' ') {
      tok += ch;
    }
  }
  tokens.push_back(tok);
  if (static_cast<int>(tokens.size()) != n_vars)
    throw spn::Error("evidence has " + std::to_string(tokens.size()) + " entries, model expects " +
                     std::to_string(n_vars));
  spn::Evidence ev(n_vars);
  for (int v = 0; v < n_vars; ++v) {
    if (tokens[static_cast<std::size_t>(v)] == "*") continue;
    if (tokens[static_cast<std::size_t>(v)] == "0")
      ev.set(v, 0);
    else if (tokens[static_cast<std::size_t>(v)] == "1")
      ev.set(v, 1);
    else
      throw spn::Error("evidence entries must be 0, 1 or *");
  }
  return ev;
}

std::vector<std::uint8_t> data_row(const spn::DataMatrix& d, int row) {
  if (row < 0 || row >= d.rows()) throw spn::Error("row index out of range");
  return {d.row(row).begin(), d.row(row).end()};
}

std::string model_stem(const std::string& path) { return fs::path(path).stem().string(); }

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

struct GenArgs {
  std::string kind = "two-block";
  int train = 1000, valid = 0, test = 0;
  int height = 8, width = 8;
  double noise = 0.1;
  std::uint64_t seed = 0;
  std::string out_prefix;
};

void run_gen(const GenArgs& a) {
  auto generate = [&](int rows, std::uint64_t seed) {
    return a.kind == "two-block" ? spn::gen_two_block(rows, a.height, a.width, a.noise, seed)
                                 : spn::gen_rectangles(rows, a.height, a.width, a.noise, seed);
  };
  const std::vector<std::pair<std::string, int>> splits{
      {"train", a.train}, {"valid", a.valid}, {"test", a.test}};
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i].second <= 0) continue;
    const std::string path = a.out_prefix + "_" + splits[i].first + ".csv";
    const spn::DataMatrix d = generate(splits[i].second, spn::derive_seed(a.seed, i));
    atomic_output(path, [&](const std::string& tmp) { spn::save_data_csv(d, tmp); });
    std::cout << path << ": " << d.rows() << " rows, " << d.cols() << " columns\n";
  }
}

struct LearnArgs {
  std::string train_csv;
  std::string valid_csv;
  spn::LearnParams params;
  bool grid_alpha = false;
  std::uint64_t seed = 0;
  std::string model_out = "model.spn";
  std::string stats_out;
  int medium_hi = 100;
};

void run_learn(LearnArgs& a) {
  require_readable(a.train_csv);
  const spn::DataMatrix train = spn::load_data_csv(a.train_csv);
  a.params.seed = a.seed;

  spn::Spn model = [&] {
    if (a.grid_alpha) {
      if (a.valid_csv.empty()) throw spn::Error("--alpha-grid needs --valid");
      const spn::DataMatrix valid = spn::load_data_csv(a.valid_csv);
      const spn::AlphaSelection sel = spn::select_alpha(train, valid, spn::kAlphaGrid, a.params);
      std::cout << "selected alpha " << sel.alpha << "\n";
      return sel.model;
    }
    return spn::learn_structure(train, a.params);
  }();

  atomic_output(a.model_out, [&](const std::string& tmp) { spn::save_spn(model, tmp); });
  const spn::StructStats st = spn::structural_stats(model, spn::ScopeRanges{a.medium_hi});
  const std::string stats = spn::stats_csv(st, a.params.m_min);
  if (!a.stats_out.empty())
    atomic_output(a.stats_out, [&](const std::string& tmp) {
      std::ofstream out(tmp);
      out << stats;
    });
  std::cout << stats;
  std::cout << "model written to " << a.model_out << "\n";
}

void run_eval_ll(const std::string& model_path, const std::string& data_csv) {
  require_readable(data_csv);
  const spn::Spn model = spn::load_spn(model_path);
  const spn::DataMatrix data = spn::load_data_csv(data_csv);
  if (data.cols() != model.n_vars()) throw spn::Error("data arity does not match the model");
  double ll = 0.0;
  for (Eigen::Index r = 0; r < data.rows(); ++r) ll += spn::evaluate(model, data.row(r));
  std::printf("%.6f\n", ll / static_cast<double>(data.rows()));
}

struct EmbedArgs {
  std::string model_path;
  std::string data_csv;
  std::string scheme = "full";
  int d = 1000;
  int min_side = 2, max_side = 10;
  int height = 0, width = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out = "embeddings.csv";
  std::string meta;
  int medium_hi = 100;
};

void run_embed(EmbedArgs& a) {
  require_readable(a.data_csv);
  const spn::DataMatrix data = spn::load_data_csv(a.data_csv);

  // Scheme strings may carry comma arguments: scope-aggr,leaves and
  // rand-query,d,min,max[,seed].
  std::vector<std::string> parts;
  std::stringstream ss(a.scheme);
  std::string part;
  while (std::getline(ss, part, ',')) parts.push_back(part);
  const std::string scheme = parts.front();
  if (scheme == "rand-query" && parts.size() > 1) {
    if (parts.size() >= 2) a.d = std::stoi(parts[1]);
    if (parts.size() >= 3) a.min_side = std::stoi(parts[2]);
    if (parts.size() >= 4) a.max_side = std::stoi(parts[3]);
    if (parts.size() >= 5) {
      a.seed = std::stoull(parts[4]);
      a.seed_given = true;
    }
  }
  const bool include_leaves = parts.size() > 1 && parts[1] == "leaves";

  spn::EmbeddingMatrix emb;
  if (scheme == "rand-query") {
    if (!a.seed_given) throw spn::Error("rand-query needs --seed");
    const AnyModel model = AnyModel::load(a.model_path);
    if (model.n_vars() != data.cols()) throw spn::Error("data arity does not match the model");
    int h = a.height, w = a.width;
    if (h == 0 || w == 0) {  // square images by default
      const int n = model.n_vars();
      const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
      if (side * side != n)
        throw spn::Error("non-square variable count; pass --height and --width");
      h = w = side;
    }
    const auto templates = spn::generate_patch_queries(a.seed, a.d, h, w, a.min_side, a.max_side);
    emb = spn::query_embeddings(model.oracle(), templates, data);
  } else {
    const spn::Spn model = spn::load_spn(a.model_path);
    if (model.n_vars() != data.cols()) throw spn::Error("data arity does not match the model");
    if (scheme == "full") {
      emb = spn::extract_inner(model, data);
    } else if (scheme == "sum" || scheme == "prod") {
      emb = spn::filter_by_type(spn::extract_inner(model, data), model,
                                scheme == "sum" ? spn::NodeKind::Sum : spn::NodeKind::Product);
    } else if (scheme == "S" || scheme == "M" || scheme == "L") {
      const spn::ScopeBand band = scheme == "S"   ? spn::ScopeBand::Small
                                  : scheme == "M" ? spn::ScopeBand::Medium
                                                  : spn::ScopeBand::Large;
      emb = spn::filter_by_scope_length(spn::extract_inner(model, data), model,
                                        spn::ScopeRanges{a.medium_hi}, band);
    } else if (scheme == "scope-aggr") {
      emb = spn::aggregate_by_scope(model, data, include_leaves);
    } else {
      throw spn::Error("unknown scheme '" + a.scheme + "'");
    }
  }

  const std::string meta = a.meta.empty() ? a.out + ".meta.csv" : a.meta;
  atomic_output(a.out, [&](const std::string& tmp) {
    // The metadata sidecar is small; write it directly at its final name
    // only after the data file landed.
    spn::save_embeddings_csv(emb, data.labels, tmp, tmp + ".meta");
    fs::rename(tmp + ".meta", meta);
  });
  std::cout << a.out << ": " << emb.values.rows() << " x " << emb.values.cols() << " (scheme "
            << a.scheme << ")\n";
}

struct ClassifyArgs {
  std::string train_csv, valid_csv, test_csv;
  std::string scheme_name = "embedding";
  std::vector<double> c_grid;
  std::string out = "report.csv";
  bool raw = false;
};

void run_classify(const ClassifyArgs& a) {
  for (const auto& p : {a.train_csv, a.valid_csv, a.test_csv}) require_readable(p);
  const spn::FeatureDataset train = spn::load_features_csv(a.train_csv);
  const spn::FeatureDataset valid = spn::load_features_csv(a.valid_csv);
  const spn::FeatureDataset test = spn::load_features_csv(a.test_csv);
  if (train.labels.empty() || valid.labels.empty() || test.labels.empty())
    throw spn::Error("classify needs a label column in every split");

  const std::vector<double> grid =
      a.c_grid.empty() ? std::vector<double>(std::begin(spn::kCGrid), std::end(spn::kCGrid))
                       : a.c_grid;
  const spn::GridSelection sel =
      spn::grid_select(train.X, train.labels, valid.X, valid.labels, grid);
  const double valid_acc = spn::accuracy(sel.model, valid.X, valid.labels);
  const double test_acc = spn::accuracy(sel.model, test.X, test.labels);

  std::ostringstream row;
  row << "scheme,embedding_size,C,valid_acc,test_acc\n"
      << (a.raw ? "raw" : a.scheme_name) << ',' << train.X.cols() << ',' << sel.chosen_c << ','
      << valid_acc << ',' << test_acc << '\n';
  atomic_output(a.out, [&](const std::string& tmp) {
    std::ofstream out(tmp);
    out << row.str();
  });
  std::cout << row.str();
}

void run_sample(const std::string& model_path, int n, std::uint64_t seed, const std::string& out) {
  const spn::Spn model = spn::load_spn(model_path);
  spn::DataMatrix samples;
  samples.X = spn::sample(model, seed, n);
  atomic_output(out, [&](const std::string& tmp) { spn::save_data_csv(samples, tmp); });
  std::cout << out << ": " << n << " samples\n";
}

void run_mpe(const std::string& model_path, const std::string& evidence) {
  const spn::Spn model = spn::load_spn(model_path);
  const spn::Evidence ev = parse_evidence(evidence, model.n_vars());
  const spn::MpeResult res = spn::mpe_assign(spn::build_mpn(model), ev);
  for (std::size_t v = 0; v < res.assignment.size(); ++v)
    std::cout << (v ? "," : "") << static_cast<int>(res.assignment[v]);
  std::cout << "\n";
  std::printf("log_value %.6f\n", res.log_value);
}

struct LearnMtArgs {
  std::string train_csv;
  std::vector<int> k{3};  // standard capacities: 3, 15, 30
  double alpha = 0.1;
  spn::MixtureParams params;
  std::uint64_t seed = 0;
  std::string model_out = "model.mt";
};

void run_learn_mt(const LearnMtArgs& a) {
  require_readable(a.train_csv);
  const spn::DataMatrix train = spn::load_data_csv(a.train_csv);
  for (int k : a.k) {
    const spn::MixtureFit fit = spn::learn_mixture_traced(train, k, a.alpha, a.params, a.seed);
    std::string path = a.model_out;
    if (a.k.size() > 1) {
      const auto dot = path.rfind('.');
      path.insert(dot == std::string::npos ? path.size() : dot, "_k" + std::to_string(k));
    }
    atomic_output(path, [&](const std::string& tmp) { spn::save_mt(fit.mixture, tmp); });
    std::cout << "components " << k << ", train mean LL " << fit.ll_trace.back() << "\n"
              << "model written to " << path << "\n";
  }
}

// ---------------------------------------------------------------------------
// Visualization subcommands
// ---------------------------------------------------------------------------

void run_viz_histogram(const std::string& model_path, const std::string& out) {
  const spn::Spn model = spn::load_spn(model_path);
  const auto hist = spn::scope_length_histogram(model);
  atomic_output(out, [&](const std::string& tmp) {
    std::ofstream o(tmp);
    o << "scope_length,node_count\n";
    for (auto [len, count] : hist) o << len << ',' << count << '\n';
  });
  std::cout << out << ": " << hist.size() << " distinct lengths\n";
}

void run_viz_layers(const std::string& model_path, const std::string& out) {
  const spn::Spn model = spn::load_spn(model_path);
  const Eigen::MatrixXi flags = spn::layer_scope_matrix(model);
  atomic_output(out, [&](const std::string& tmp) {
    std::ofstream o(tmp);
    for (Eigen::Index r = 0; r < flags.rows(); ++r) {
      for (Eigen::Index c = 0; c < flags.cols(); ++c) o << (c ? "," : "") << flags(r, c);
      o << '\n';
    }
  });
  std::cout << out << ": " << flags.rows() << " layers\n";
}

struct VizFilterArgs {
  std::string model_path;
  std::vector<spn::NodeId> nodes;
  int height = 0, width = 0;
  std::string out_dir = ".";
};

void run_viz_filters(const VizFilterArgs& a) {
  const spn::Spn model = spn::load_spn(a.model_path);
  const auto images =
      spn::mpe_filter_images(model, a.nodes, spn::ImageShape{a.height, a.width});
  fs::create_directories(a.out_dir);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string path = a.out_dir + "/filter_" + model_stem(a.model_path) + "_" +
                             std::to_string(a.nodes[i]) + ".ppm";
    atomic_output(path, [&](const std::string& tmp) { spn::write_ppm(images[i], tmp); });
    std::cout << path << "\n";
  }
}

struct VizActivationArgs {
  std::string model_path;
  std::string data_csv;
  int row = 0;
  std::string evidence;
  int height = 0, width = 0;
  std::string mode = "all";
  std::string out;
  std::string pgm;
};

void run_viz_activations(const VizActivationArgs& a) {
  const spn::Spn model = spn::load_spn(a.model_path);
  spn::Evidence ev(model.n_vars());
  if (!a.evidence.empty()) {
    ev = parse_evidence(a.evidence, model.n_vars());
  } else if (!a.data_csv.empty()) {
    const spn::DataMatrix data = spn::load_data_csv(a.data_csv);
    ev = spn::Evidence::complete(data_row(data, a.row));
  }
  const spn::ActivationMode mode = a.mode == "all"        ? spn::ActivationMode::All
                                   : a.mode == "normalized" ? spn::ActivationMode::Normalized
                                   : a.mode == "sum"        ? spn::ActivationMode::SumOnly
                                   : a.mode == "product"    ? spn::ActivationMode::ProductOnly
                                                            : throw spn::Error("unknown mode");
  const spn::Grid grid =
      spn::activation_map(model, ev, spn::ImageShape{a.height, a.width}, mode);
  atomic_output(a.out, [&](const std::string& tmp) { spn::write_grid_csv(grid, tmp); });
  if (!a.pgm.empty())
    atomic_output(a.pgm, [&](const std::string& tmp) { spn::write_pgm(grid, tmp); });
  std::cout << a.out << "\n";
}

void run_viz_counts(const std::string& model_path, int height, int width, const std::string& out,
                    const std::string& pgm) {
  const spn::Spn model = spn::load_spn(model_path);
  const spn::Grid grid = spn::node_count_map(model, spn::ImageShape{height, width});
  atomic_output(out, [&](const std::string& tmp) { spn::write_grid_csv(grid, tmp); });
  if (!pgm.empty()) atomic_output(pgm, [&](const std::string& tmp) { spn::write_pgm(grid, tmp); });
  std::cout << out << "\n";
}

struct VizPatchArgs {
  std::string model_path;
  std::string data_csv;
  int row = 0;
  int height = 0, width = 0;
  int patch = 2;
  std::string out;
  std::string pgm;
};

void run_viz_patches(const VizPatchArgs& a) {
  const AnyModel model = AnyModel::load(a.model_path);
  require_readable(a.data_csv);
  const spn::DataMatrix data = spn::load_data_csv(a.data_csv);
  const auto instance = data_row(data, a.row);
  const spn::Grid grid = spn::patch_marginal_map(model.oracle(), instance,
                                                 spn::ImageShape{a.height, a.width}, a.patch);
  atomic_output(a.out, [&](const std::string& tmp) { spn::write_grid_csv(grid, tmp); });
  if (!a.pgm.empty())
    atomic_output(a.pgm, [&](const std::string& tmp) { spn::write_pgm(grid, tmp); });
  std::cout << a.out << "\n";
}

struct VizSamplesArgs {
  std::string model_path;
  std::string train_csv;
  int n = 7;
  std::uint64_t seed = 0;
  int height = 0, width = 0;
  std::string out_dir = ".";
};

void run_viz_samples_nn(const VizSamplesArgs& a) {
  const spn::Spn model = spn::load_spn(a.model_path);
  require_readable(a.train_csv);
  const spn::DataMatrix train = spn::load_data_csv(a.train_csv);
  const auto pairs = spn::samples_with_nn(model, train, a.n, a.seed);
  fs::create_directories(a.out_dir);
  const spn::ImageShape shape{a.height, a.width};
  const std::string stem = model_stem(a.model_path);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string sample_path =
        a.out_dir + "/sample_" + stem + "_" + std::to_string(i) + ".pgm";
    const std::string nn_path = a.out_dir + "/nn_" + stem + "_" + std::to_string(i) + ".pgm";
    atomic_output(sample_path, [&](const std::string& tmp) {
      spn::write_pgm(spn::to_grid(pairs[i].sample, shape), tmp);
    });
    atomic_output(nn_path, [&](const std::string& tmp) {
      spn::write_pgm(spn::to_grid(train.row(pairs[i].nn_row), shape), tmp);
    });
    std::cout << sample_path << " nn=" << pairs[i].nn_row << " hamming=" << pairs[i].hamming
              << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sum-product network toolkit: learning, inference, embeddings, visualization"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GenArgs gen;
  auto* cmd_gen = app.add_subcommand("gen-synthetic", "Generate labeled synthetic datasets");
  cmd_gen->add_option("--kind", gen.kind)->check(CLI::IsMember({"two-block", "rectangles"}));
  cmd_gen->add_option("--train", gen.train);
  cmd_gen->add_option("--valid", gen.valid);
  cmd_gen->add_option("--test", gen.test);
  cmd_gen->add_option("--height", gen.height);
  cmd_gen->add_option("--width", gen.width);
  cmd_gen->add_option("--noise", gen.noise);
  cmd_gen->add_option("--seed", gen.seed)->required();
  cmd_gen->add_option("--out-prefix", gen.out_prefix)->required();

  LearnArgs learn;
  auto* cmd_learn = app.add_subcommand("learn", "Learn a network from binary CSV data");
  cmd_learn->add_option("train", learn.train_csv)->required();
  cmd_learn->add_option("--valid", learn.valid_csv);
  cmd_learn->add_option("--m-min", learn.params.m_min);
  cmd_learn->add_option("--rho", learn.params.rho);
  cmd_learn->add_option("--alpha", learn.params.alpha);
  cmd_learn->add_flag("--alpha-grid", learn.grid_alpha,
                      "Grid-search alpha on the validation split");
  cmd_learn->add_option("--em-restarts", learn.params.em_restarts);
  cmd_learn->add_option("--em-iters", learn.params.em_iters);
  cmd_learn->add_option("--em-tol", learn.params.em_tol);
  cmd_learn->add_option("--seed", learn.seed)->required();
  cmd_learn->add_option("--model", learn.model_out);
  cmd_learn->add_option("--stats", learn.stats_out);
  cmd_learn->add_option("--medium-hi", learn.medium_hi, "Upper scope length of the M band");

  std::string eval_model, eval_data;
  auto* cmd_eval = app.add_subcommand("eval-ll", "Mean log-likelihood of a dataset");
  cmd_eval->add_option("model", eval_model)->required();
  cmd_eval->add_option("data", eval_data)->required();

  EmbedArgs embed;
  auto* cmd_embed = app.add_subcommand("embed", "Extract embeddings from a model");
  cmd_embed->add_option("model", embed.model_path)->required();
  cmd_embed->add_option("data", embed.data_csv)->required();
  cmd_embed->add_option("--scheme", embed.scheme,
                        "full|sum|prod|S|M|L|scope-aggr[,leaves]|rand-query[,d,min,max[,seed]]");
  cmd_embed->add_option("--d", embed.d);
  cmd_embed->add_option("--min-side", embed.min_side);
  cmd_embed->add_option("--max-side", embed.max_side);
  cmd_embed->add_option("--height", embed.height);
  cmd_embed->add_option("--width", embed.width);
  auto* embed_seed = cmd_embed->add_option("--seed", embed.seed);
  cmd_embed->add_option("--out", embed.out);
  cmd_embed->add_option("--meta", embed.meta);
  cmd_embed->add_option("--medium-hi", embed.medium_hi);

  ClassifyArgs classify;
  auto* cmd_classify = app.add_subcommand("classify", "Linear probe on embedding CSVs");
  cmd_classify->add_option("--train", classify.train_csv)->required();
  cmd_classify->add_option("--valid", classify.valid_csv)->required();
  cmd_classify->add_option("--test", classify.test_csv)->required();
  cmd_classify->add_option("--scheme-name", classify.scheme_name);
  cmd_classify->add_option("--c-grid", classify.c_grid);
  cmd_classify->add_option("--out", classify.out);
  cmd_classify->add_flag("--raw", classify.raw, "Report the run as the raw-input baseline");

  std::string sample_model, sample_out = "samples.csv";
  int sample_n = 100;
  std::uint64_t sample_seed = 0;
  auto* cmd_sample = app.add_subcommand("sample", "Draw samples from a model");
  cmd_sample->add_option("model", sample_model)->required();
  cmd_sample->add_option("--n", sample_n);
  cmd_sample->add_option("--seed", sample_seed)->required();
  cmd_sample->add_option("--out", sample_out);

  std::string mpe_model, mpe_evidence;
  auto* cmd_mpe = app.add_subcommand("mpe", "Most probable completion of partial evidence");
  cmd_mpe->add_option("model", mpe_model)->required();
  cmd_mpe->add_option("--evidence", mpe_evidence, "Comma list of 0, 1 or * per variable")
      ->required();

  LearnMtArgs mt;
  auto* cmd_mt = app.add_subcommand("learn-mt", "Fit a mixture of spanning trees");
  cmd_mt->add_option("train", mt.train_csv)->required();
  cmd_mt->add_option("--k", mt.k, "Component counts; one model per value (standard: 3 15 30)");
  cmd_mt->add_option("--alpha", mt.alpha);
  cmd_mt->add_option("--em-restarts", mt.params.em_restarts);
  cmd_mt->add_option("--em-iters", mt.params.em_iters);
  cmd_mt->add_option("--em-tol", mt.params.em_tol);
  cmd_mt->add_option("--seed", mt.seed)->required();
  cmd_mt->add_option("--model", mt.model_out);

  std::string hist_model, hist_out = "histogram.csv";
  auto* cmd_hist = app.add_subcommand("viz-histogram", "Scope length histogram CSV");
  cmd_hist->add_option("model", hist_model)->required();
  cmd_hist->add_option("--out", hist_out);

  std::string layers_model, layers_out = "layers.csv";
  auto* cmd_layers = app.add_subcommand("viz-layers", "Layer/scope-length presence matrix CSV");
  cmd_layers->add_option("model", layers_model)->required();
  cmd_layers->add_option("--out", layers_out);

  VizFilterArgs filters;
  auto* cmd_filters = app.add_subcommand("viz-filters", "MPE filter images per node");
  cmd_filters->add_option("model", filters.model_path)->required();
  cmd_filters->add_option("--nodes", filters.nodes)->required();
  cmd_filters->add_option("--height", filters.height)->required();
  cmd_filters->add_option("--width", filters.width)->required();
  cmd_filters->add_option("--out-dir", filters.out_dir);

  VizActivationArgs act;
  auto* cmd_act = app.add_subcommand("viz-activations", "Input-space activation map");
  cmd_act->add_option("model", act.model_path)->required();
  cmd_act->add_option("--data", act.data_csv);
  cmd_act->add_option("--row", act.row);
  cmd_act->add_option("--evidence", act.evidence);
  cmd_act->add_option("--height", act.height)->required();
  cmd_act->add_option("--width", act.width)->required();
  cmd_act->add_option("--mode", act.mode)
      ->check(CLI::IsMember({"all", "normalized", "sum", "product"}));
  cmd_act->add_option("--out", act.out)->required();
  cmd_act->add_option("--pgm", act.pgm);

  std::string counts_model, counts_out = "counts.csv", counts_pgm;
  int counts_h = 0, counts_w = 0;
  auto* cmd_counts = app.add_subcommand("viz-counts", "Per-pixel node count map");
  cmd_counts->add_option("model", counts_model)->required();
  cmd_counts->add_option("--height", counts_h)->required();
  cmd_counts->add_option("--width", counts_w)->required();
  cmd_counts->add_option("--out", counts_out);
  cmd_counts->add_option("--pgm", counts_pgm);

  VizPatchArgs patches;
  auto* cmd_patches = app.add_subcommand("viz-patches", "Patch marginal signature of an instance");
  cmd_patches->add_option("model", patches.model_path)->required();
  cmd_patches->add_option("--data", patches.data_csv)->required();
  cmd_patches->add_option("--row", patches.row);
  cmd_patches->add_option("--height", patches.height)->required();
  cmd_patches->add_option("--width", patches.width)->required();
  cmd_patches->add_option("--patch", patches.patch);
  cmd_patches->add_option("--out", patches.out)->required();
  cmd_patches->add_option("--pgm", patches.pgm);

  VizSamplesArgs snn;
  auto* cmd_snn = app.add_subcommand("viz-samples-nn", "Samples next to nearest training images");
  cmd_snn->add_option("model", snn.model_path)->required();
  cmd_snn->add_option("train", snn.train_csv)->required();
  cmd_snn->add_option("--n", snn.n);
  cmd_snn->add_option("--seed", snn.seed)->required();
  cmd_snn->add_option("--height", snn.height)->required();
  cmd_snn->add_option("--width", snn.width)->required();
  cmd_snn->add_option("--out-dir", snn.out_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (cmd_gen->parsed()) run_gen(gen);
    if (cmd_learn->parsed()) run_learn(learn);
    if (cmd_eval->parsed()) run_eval_ll(eval_model, eval_data);
    if (cmd_embed->parsed()) {
      embed.seed_given = embed_seed->count() > 0;
      run_embed(embed);
    }
    if (cmd_classify->parsed()) run_classify(classify);
    if (cmd_sample->parsed()) run_sample(sample_model, sample_n, sample_seed, sample_out);
    if (cmd_mpe->parsed()) run_mpe(mpe_model, mpe_evidence);
    if (cmd_mt->parsed()) run_learn_mt(mt);
    if (cmd_hist->parsed()) run_viz_histogram(hist_model, hist_out);
    if (cmd_layers->parsed()) run_viz_layers(layers_model, layers_out);
    if (cmd_filters->parsed()) run_viz_filters(filters);
    if (cmd_act->parsed()) run_viz_activations(act);
    if (cmd_counts->parsed()) run_viz_counts(counts_model, counts_h, counts_w, counts_out, counts_pgm);
    if (cmd_patches->parsed()) run_viz_patches(patches);
    if (cmd_snn->parsed()) run_viz_samples_nn(snn);
  } catch (const spn::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const spn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

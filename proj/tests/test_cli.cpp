#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "spn/data.hpp"
#include "spn/embeddings.hpp"
#include "spn/inference.hpp"
#include "spn/network.hpp"
#include "spn/viz.hpp"

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int exit_code;
  std::string stdout_text;
};

// Runs the binary with stdout captured in a file; stderr is left alone so
// failures stay visible in the test log.
CliRun run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const std::string cmd =
      std::string(SPNCLI_PATH) + " " + args + " > " + out.string();
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out);
  std::stringstream buf;
  buf << in.rdbuf();
  r.stdout_text = buf.str();
  return r;
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("spncli_test_" + std::to_string(::getpid()))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("full pipeline: generate, learn, evaluate, embed, classify") {
  TempDir dir;
  const std::string prefix = dir.file("tb");

  CliRun r = run_cli("gen-synthetic --kind two-block --train 400 --valid 120 --test 120 "
                     "--height 4 --width 4 --noise 0.1 --seed 7 --out-prefix " + prefix,
                     dir.path);
  REQUIRE(r.exit_code == 0);
  REQUIRE(fs::exists(prefix + "_train.csv"));

  r = run_cli("learn " + prefix + "_train.csv --m-min 40 --alpha 0.5 --seed 3 --model " +
                  dir.file("tb.spn") + " --stats " + dir.file("stats.csv"),
              dir.path);
  REQUIRE(r.exit_code == 0);
  const spn::Spn model = spn::load_spn(dir.file("tb.spn"));
  CHECK(spn::check_complete(model).empty());
  CHECK(spn::check_decomposable(model).empty());
  CHECK(spn::check_locally_normalized(model, 1e-9).empty());

  std::ifstream stats(dir.file("stats.csv"));
  std::string header;
  std::getline(stats, header);
  CHECK(header ==
        "m_min,depth,n_edges,n_sum,n_product,n_leaves,n_unique_scopes,scope_s,scope_m,scope_l");

  r = run_cli("eval-ll " + dir.file("tb.spn") + " " + prefix + "_test.csv", dir.path);
  REQUIRE(r.exit_code == 0);
  const double ll = std::stod(r.stdout_text);
  CHECK(ll < 0.0);
  CHECK(ll > -16.0 * std::log(2.0) - 4.0);

  // Library call agrees with the printed mean.
  const spn::DataMatrix test = spn::load_data_csv(prefix + "_test.csv");
  double expect = 0.0;
  for (Eigen::Index i = 0; i < test.rows(); ++i) expect += spn::evaluate(model, test.row(i));
  expect /= static_cast<double>(test.rows());
  CHECK(ll == doctest::Approx(expect).epsilon(1e-6));

  for (const char* split : {"_train.csv", "_valid.csv", "_test.csv"}) {
    const std::string tag = split[1] == 't' && split[2] == 'r' ? "tr" : split;
    r = run_cli("embed " + dir.file("tb.spn") + " " + prefix + split + " --scheme full --out " +
                    dir.file(std::string("emb") + split),
                dir.path);
    REQUIRE(r.exit_code == 0);
  }
  const spn::FeatureDataset emb = spn::load_features_csv(dir.file("emb_train.csv"));
  const spn::StructStats st = spn::structural_stats(model);
  int inner_gt1 = 0;
  for (spn::NodeId id = 0; id < model.size(); ++id)
    if (model.node(id).kind != spn::NodeKind::Leaf && model.scope_length(id) > 1) ++inner_gt1;
  CHECK(emb.X.cols() == inner_gt1);
  CHECK(st.n_sum + st.n_product >= inner_gt1);
  REQUIRE(!emb.labels.empty());

  // Type filters split the full embedding between them.
  r = run_cli("embed " + dir.file("tb.spn") + " " + prefix + "_valid.csv --scheme sum --out " +
                  dir.file("emb_sum.csv"),
              dir.path);
  REQUIRE(r.exit_code == 0);
  r = run_cli("embed " + dir.file("tb.spn") + " " + prefix + "_valid.csv --scheme prod --out " +
                  dir.file("emb_prod.csv"),
              dir.path);
  REQUIRE(r.exit_code == 0);
  CHECK(spn::load_features_csv(dir.file("emb_sum.csv")).X.cols() +
            spn::load_features_csv(dir.file("emb_prod.csv")).X.cols() ==
        emb.X.cols());

  r = run_cli("classify --train " + dir.file("emb_train.csv") + " --valid " +
                  dir.file("emb_valid.csv") + " --test " + dir.file("emb_test.csv") +
                  " --scheme-name full --out " + dir.file("report.csv"),
              dir.path);
  REQUIRE(r.exit_code == 0);
  std::ifstream report(dir.file("report.csv"));
  std::string line;
  std::getline(report, line);
  CHECK(line == "scheme,embedding_size,C,valid_acc,test_acc");
  std::getline(report, line);
  CHECK(line.rfind("full,", 0) == 0);
}

TEST_CASE("m_min larger than the data produces a fully factorized model") {
  TempDir dir;
  run_cli("gen-synthetic --kind rectangles --train 60 --height 4 --width 4 --noise 0 --seed 2 "
          "--out-prefix " + dir.file("rec"),
          dir.path);
  const CliRun r = run_cli("learn " + dir.file("rec_train.csv") +
                               " --m-min 100 --alpha 1 --seed 1 --model " + dir.file("rec.spn"),
                           dir.path);
  REQUIRE(r.exit_code == 0);
  const spn::Spn model = spn::load_spn(dir.file("rec.spn"));
  CHECK(model.node(model.root()).kind == spn::NodeKind::Product);
  CHECK(model.node(model.root()).children.size() == 16);
  CHECK(model.size() == 17);
}

TEST_CASE("sample and mpe subcommands are deterministic and well-formed") {
  TempDir dir;
  run_cli("gen-synthetic --kind two-block --train 200 --height 4 --width 4 --noise 0.1 --seed 5 "
          "--out-prefix " + dir.file("tb"),
          dir.path);
  run_cli("learn " + dir.file("tb_train.csv") + " --m-min 50 --alpha 0.5 --seed 3 --model " +
              dir.file("tb.spn"),
          dir.path);

  CliRun a = run_cli("sample " + dir.file("tb.spn") + " --n 20 --seed 9 --out " +
                         dir.file("a.csv"),
                     dir.path);
  CliRun b = run_cli("sample " + dir.file("tb.spn") + " --n 20 --seed 9 --out " +
                         dir.file("b.csv"),
                     dir.path);
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  std::ifstream fa(dir.file("a.csv")), fb(dir.file("b.csv"));
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  CHECK(sa.str() == sb.str());
  const spn::DataMatrix samples = spn::load_data_csv(dir.file("a.csv"));
  CHECK(samples.rows() == 20);
  CHECK(samples.cols() == 16);

  // Complete evidence: mpe echoes the input row.
  std::string ev = "1,0,1,1,0,0,1,0,1,1,0,1,0,0,1,1";
  const CliRun m = run_cli("mpe " + dir.file("tb.spn") + " --evidence \"" + ev + "\"", dir.path);
  REQUIRE(m.exit_code == 0);
  CHECK(m.stdout_text.rfind(ev + "\n", 0) == 0);

  // Partially observed: completed assignment agrees with the evidence.
  const CliRun p = run_cli("mpe " + dir.file("tb.spn") +
                               " --evidence \"1,*,*,1,*,*,*,0,*,*,*,*,*,*,*,*\"",
                           dir.path);
  REQUIRE(p.exit_code == 0);
  CHECK(p.stdout_text[0] == '1');
  CHECK(p.stdout_text.find("log_value") != std::string::npos);
}

TEST_CASE("learn-mt writes a loadable mixture usable for rand-query embeddings") {
  TempDir dir;
  run_cli("gen-synthetic --kind two-block --train 300 --test 50 --height 4 --width 4 "
          "--noise 0.1 --seed 4 --out-prefix " + dir.file("tb"),
          dir.path);
  const CliRun r = run_cli("learn-mt " + dir.file("tb_train.csv") +
                               " --k 3 --alpha 0.2 --seed 6 --model " + dir.file("tb.mt"),
                           dir.path);
  REQUIRE(r.exit_code == 0);
  const spn::TreeMixture m = spn::load_mt(dir.file("tb.mt"));
  CHECK(m.components.size() == 3);

  const CliRun e = run_cli("embed " + dir.file("tb.mt") + " " + dir.file("tb_test.csv") +
                               " --scheme rand-query,64,2,3 --seed 12 --out " +
                               dir.file("q.csv"),
                           dir.path);
  REQUIRE(e.exit_code == 0);
  const spn::FeatureDataset q = spn::load_features_csv(dir.file("q.csv"));
  CHECK(q.X.cols() == 64);
  CHECK(q.X.rows() == 50);
  CHECK(q.X.maxCoeff() <= 1e-12);  // log-domain marginals

  // Same flags and seed give a byte-identical file.
  const CliRun e2 = run_cli("embed " + dir.file("tb.mt") + " " + dir.file("tb_test.csv") +
                                " --scheme rand-query,64,2,3 --seed 12 --out " +
                                dir.file("q2.csv"),
                            dir.path);
  REQUIRE(e2.exit_code == 0);
  std::ifstream f1(dir.file("q.csv")), f2(dir.file("q2.csv"));
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());
}

TEST_CASE("viz subcommands write parseable artifacts") {
  TempDir dir;
  run_cli("gen-synthetic --kind two-block --train 200 --height 4 --width 4 --noise 0.1 --seed 8 "
          "--out-prefix " + dir.file("tb"),
          dir.path);
  run_cli("learn " + dir.file("tb_train.csv") + " --m-min 60 --alpha 0.5 --seed 2 --model " +
              dir.file("tb.spn"),
          dir.path);
  const spn::Spn model = spn::load_spn(dir.file("tb.spn"));

  CliRun r = run_cli("viz-histogram " + dir.file("tb.spn") + " --out " + dir.file("h.csv"),
                     dir.path);
  REQUIRE(r.exit_code == 0);
  std::ifstream h(dir.file("h.csv"));
  std::string line;
  std::getline(h, line);
  CHECK(line == "scope_length,node_count");

  r = run_cli("viz-layers " + dir.file("tb.spn") + " --out " + dir.file("l.csv"), dir.path);
  REQUIRE(r.exit_code == 0);

  r = run_cli("viz-counts " + dir.file("tb.spn") + " --height 4 --width 4 --out " +
                  dir.file("c.csv") + " --pgm " + dir.file("c.pgm"),
              dir.path);
  REQUIRE(r.exit_code == 0);
  const Eigen::MatrixXi img = spn::read_pgm(dir.file("c.pgm"));
  CHECK(img.rows() == 4);
  CHECK(img.cols() == 4);
  // The CSV matches node_count_map exactly.
  const spn::Grid counts = spn::node_count_map(model, spn::ImageShape{4, 4});
  std::ifstream ccsv(dir.file("c.csv"));
  std::getline(ccsv, line);
  std::stringstream first(line);
  std::string cell;
  std::getline(first, cell, ',');
  CHECK(std::stod(cell) == counts.values(0, 0));

  r = run_cli("viz-filters " + dir.file("tb.spn") + " --nodes " +
                  std::to_string(model.root()) + " --height 4 --width 4 --out-dir " +
                  dir.file("filters"),
              dir.path);
  REQUIRE(r.exit_code == 0);
  CHECK(fs::exists(dir.file("filters/filter_tb_" + std::to_string(model.root()) + ".ppm")));

  r = run_cli("viz-activations " + dir.file("tb.spn") + " --data " + dir.file("tb_train.csv") +
                  " --row 0 --height 4 --width 4 --mode normalized --out " + dir.file("a.csv"),
              dir.path);
  REQUIRE(r.exit_code == 0);

  r = run_cli("viz-patches " + dir.file("tb.spn") + " --data " + dir.file("tb_train.csv") +
                  " --row 0 --height 4 --width 4 --patch 2 --out " + dir.file("p.csv"),
              dir.path);
  REQUIRE(r.exit_code == 0);

  r = run_cli("viz-samples-nn " + dir.file("tb.spn") + " " + dir.file("tb_train.csv") +
                  " --n 2 --seed 3 --height 4 --width 4 --out-dir " + dir.file("nn"),
              dir.path);
  REQUIRE(r.exit_code == 0);
  CHECK(fs::exists(dir.file("nn/sample_tb_0.pgm")));
  CHECK(fs::exists(dir.file("nn/nn_tb_0.pgm")));
}

TEST_CASE("exit codes: 2 for usage and I/O trouble, 1 for domain errors") {
  TempDir dir;
  CHECK(run_cli("eval-ll missing.spn missing.csv", dir.path).exit_code == 2);
  CHECK(run_cli("no-such-subcommand", dir.path).exit_code == 2);
  CHECK(run_cli("learn", dir.path).exit_code == 2);  // missing required arguments

  // Domain error: arity mismatch between model and data.
  run_cli("gen-synthetic --kind two-block --train 100 --height 4 --width 4 --noise 0.1 --seed 1 "
          "--out-prefix " + dir.file("a"),
          dir.path);
  run_cli("gen-synthetic --kind two-block --train 100 --height 4 --width 2 --noise 0.1 --seed 1 "
          "--out-prefix " + dir.file("b"),
          dir.path);
  run_cli("learn " + dir.file("a_train.csv") + " --m-min 50 --alpha 1 --seed 1 --model " +
              dir.file("a.spn"),
          dir.path);
  CHECK(run_cli("eval-ll " + dir.file("a.spn") + " " + dir.file("b_train.csv"), dir.path)
            .exit_code == 1);

  // Seeds are mandatory wherever randomness exists.
  CHECK(run_cli("sample " + dir.file("a.spn") + " --n 3 --out " + dir.file("s.csv"), dir.path)
            .exit_code == 2);
  CHECK(run_cli("gen-synthetic --out-prefix " + dir.file("x"), dir.path).exit_code == 2);
}

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "helpers.hpp"
#include "spn/inference.hpp"
#include "spn/viz.hpp"

using namespace spn;

TEST_CASE("scope length histogram: demo counts, bounds, totals") {
  const Spn s = helpers::demo_network();
  const auto hist = scope_length_histogram(s);
  REQUIRE(hist.size() == 3);
  CHECK(hist[0] == std::pair<int, int>{1, 12});
  CHECK(hist[1] == std::pair<int, int>{2, 6});
  CHECK(hist[2] == std::pair<int, int>{4, 3});
  int total = 0;
  for (auto [len, count] : hist) {
    CHECK(len <= s.n_vars());
    total += count;
  }
  CHECK(total == static_cast<int>(s.size()));

  std::vector<Node> one;
  one.push_back(Node::leaf(0, 0.4));
  const auto single = scope_length_histogram(build_spn(std::move(one), 0, 1));
  REQUIRE(single.size() == 1);
  CHECK(single[0] == std::pair<int, int>{1, 1});
}

TEST_CASE("layer scope matrix: one row per layer, flags within histogram support") {
  std::vector<Node> nodes;
  nodes.push_back(Node::leaf(0, 0.2));
  nodes.push_back(Node::leaf(0, 0.7));
  nodes.push_back(Node::sum({0, 1}, {0.5, 0.5}));
  const Eigen::MatrixXi single = layer_scope_matrix(build_spn(std::move(nodes), 2, 1));
  CHECK(single.rows() == 1);
  CHECK(single(0, 0) == 1);

  const Spn s = helpers::demo_network();
  const Eigen::MatrixXi flags = layer_scope_matrix(s);
  REQUIRE(flags.rows() == 4);
  REQUIRE(flags.cols() == 4);
  // Hand-derived: products of lengths {2,4}; sums {2}; product {4}; root {4}.
  Eigen::MatrixXi expect(4, 4);
  expect << 0, 1, 0, 1,
            0, 1, 0, 0,
            0, 0, 0, 1,
            0, 0, 0, 1;
  CHECK(flags == expect);

  const auto hist = scope_length_histogram(s);
  for (int l = 0; l < flags.rows(); ++l)
    for (int c = 0; c < flags.cols(); ++c)
      if (flags(l, c)) {
        bool in_hist = false;
        for (auto [len, count] : hist) in_hist |= len == c + 1;
        CHECK(in_hist);
      }
}

TEST_CASE("mpe filter images: red background, leaf pixels, product union, root coverage") {
  // A 2x2 image over four variables.
  std::vector<Node> nodes;
  nodes.push_back(Node::leaf(0, 0.9));
  nodes.push_back(Node::leaf(1, 0.1));
  nodes.push_back(Node::leaf(2, 0.8));
  nodes.push_back(Node::leaf(3, 0.2));
  nodes.push_back(Node::product({0, 1}));
  nodes.push_back(Node::product({2, 3}));
  nodes.push_back(Node::product({0, 1, 2, 3}));
  nodes.push_back(Node::sum({6}, {1.0}));
  std::vector<Node> all = nodes;
  // Root: sum over [product(01,23-pair products)] and the flat product.
  all.push_back(Node::product({4, 5}));
  all.push_back(Node::sum({7, 8}, {0.5, 0.5}));
  const Spn s = build_spn(std::move(all), 9, 4);
  const ImageShape shape{2, 2};

  const std::vector<NodeId> ids{0, 4, 9};
  const auto images = mpe_filter_images(s, ids, shape);
  REQUIRE(images.size() == 3);

  // Leaf over X0 with p(1)=0.9: white at pixel 0, red elsewhere.
  const RgbImage& leaf = images[0];
  CHECK(leaf.rgb[0] == 255);
  CHECK(leaf.rgb[1] == 255);
  CHECK(leaf.rgb[2] == 255);
  for (int px = 1; px < 4; ++px) {
    CHECK(leaf.rgb[static_cast<std::size_t>(px) * 3 + 0] == 255);
    CHECK(leaf.rgb[static_cast<std::size_t>(px) * 3 + 1] == 0);
    CHECK(leaf.rgb[static_cast<std::size_t>(px) * 3 + 2] == 0);
  }

  // Product over {X0, X1}: union of its children's pixels (0.9 -> 1, 0.1 -> 0).
  const RgbImage& prod = images[1];
  CHECK(prod.rgb[0] == 255);  // X0 = 1
  CHECK(prod.rgb[3] == 0);    // X1 = 0: black
  CHECK(prod.rgb[4] == 0);
  CHECK(prod.rgb[6] == 255);  // X2 out of scope: red
  CHECK(prod.rgb[7] == 0);

  // Root: no red pixels at all.
  const RgbImage& root = images[2];
  for (int px = 0; px < 4; ++px) {
    const auto r = root.rgb[static_cast<std::size_t>(px) * 3];
    const auto g = root.rgb[static_cast<std::size_t>(px) * 3 + 1];
    CHECK(r == g);  // grayscale, never pure red
  }

  CHECK_THROWS_AS(mpe_filter_images(s, std::vector<NodeId>{99}, shape), Error);
}

TEST_CASE("activation maps: flat ones, node-count identity, single leaf") {
  const Spn s = helpers::demo_network();
  const ImageShape shape{2, 2};
  const Evidence none = Evidence::all_marginalized(4);

  const Grid ones = activation_map(s, none, shape, ActivationMode::Normalized);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) CHECK(ones.values(r, c) == 1.0);  // exactly

  const Grid all = activation_map(s, none, shape, ActivationMode::All);
  const Grid counts = node_count_map(s, shape);
  CHECK(all.values == counts.values);

  const Grid sums = activation_map(s, none, shape, ActivationMode::SumOnly);
  const Grid prods = activation_map(s, none, shape, ActivationMode::ProductOnly);
  // Every inner node outputs 1 under full marginalization; leaves are
  // excluded by both restricted modes.
  CHECK(sums.values(0, 0) == 2.0);   // S1 and the root cover X0
  CHECK(prods.values(0, 0) == 4.0);  // four products cover X0

  std::vector<Node> one;
  one.push_back(Node::leaf(0, 0.35));
  const Spn leaf = build_spn(std::move(one), 0, 1);
  Evidence ev(1);
  ev.set(0, 1);
  const Grid g = activation_map(leaf, ev, ImageShape{1, 1}, ActivationMode::All);
  CHECK(g.values(0, 0) == doctest::Approx(0.35).epsilon(1e-12));
}

TEST_CASE("node count map: minimal product network and double counting") {
  std::vector<Node> nodes;
  nodes.push_back(Node::leaf(0, 0.3));
  nodes.push_back(Node::leaf(1, 0.6));
  nodes.push_back(Node::product({0, 1}));
  const Spn s = build_spn(std::move(nodes), 2, 2);
  const Grid counts = node_count_map(s, ImageShape{1, 2});
  CHECK(counts.values(0, 0) == 2.0);  // its leaf and the product
  CHECK(counts.values(0, 1) == 2.0);

  const Spn demo = helpers::demo_network();
  const Grid dc = node_count_map(demo, ImageShape{2, 2});
  double pixel_sum = 0.0;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      CHECK(dc.values(r, c) >= 1.0);
      pixel_sum += dc.values(r, c);
    }
  double scope_sum = 0.0;
  for (NodeId id = 0; id < demo.size(); ++id) scope_sum += demo.scope_length(id);
  CHECK(pixel_sum == scope_sum);
}

TEST_CASE("patch marginal maps: whole-image tile, factorized additivity") {
  const Spn s = helpers::demo_network();
  const ImageShape shape{2, 2};
  const std::vector<std::uint8_t> x{1, 0, 1, 1};

  const Grid whole = patch_marginal_map(marginal_oracle(s), x, shape, 2);
  const double expect = evaluate(s, x);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) CHECK(whole.values(r, c) == doctest::Approx(expect).epsilon(1e-12));

  // Fully factorized model: single-pixel tiles hold leaf marginals and tile
  // values add up to the complete evidence answer.
  std::vector<Node> nodes;
  const double p[4] = {0.3, 0.8, 0.55, 0.2};
  for (int v = 0; v < 4; ++v) nodes.push_back(Node::leaf(v, p[v]));
  nodes.push_back(Node::product({0, 1, 2, 3}));
  const Spn indep = build_spn(std::move(nodes), 4, 4);
  const Grid tiles = patch_marginal_map(marginal_oracle(indep), x, shape, 1);
  double total = 0.0;
  for (int v = 0; v < 4; ++v) {
    const double leaf_marg = std::log(x[static_cast<std::size_t>(v)] ? p[v] : 1.0 - p[v]);
    CHECK(tiles.values(v / 2, v % 2) == doctest::Approx(leaf_marg).epsilon(1e-12));
    total += tiles.values(v / 2, v % 2);
  }
  CHECK(total == doctest::Approx(evaluate(indep, x)).epsilon(1e-9));

  // Ragged tiling: 2x2 patches on a 3-wide image still cover every pixel.
  std::vector<Node> six;
  for (int v = 0; v < 6; ++v) six.push_back(Node::leaf(v, 0.5));
  six.push_back(Node::product({0, 1, 2, 3, 4, 5}));
  const Spn wide = build_spn(std::move(six), 6, 6);
  const std::vector<std::uint8_t> xx{0, 1, 0, 1, 0, 1};
  const Grid ragged = patch_marginal_map(marginal_oracle(wide), xx, ImageShape{2, 3}, 2);
  CHECK(std::isfinite(ragged.values.sum()));
}

TEST_CASE("samples with nearest neighbors") {
  // A deterministic network always samples (1, 0); the training set contains it.
  std::vector<Node> det;
  det.push_back(Node::leaf(0, 1.0));
  det.push_back(Node::leaf(1, 0.0));
  det.push_back(Node::product({0, 1}));
  const Spn s = build_spn(std::move(det), 2, 2);
  DataMatrix train;
  train.X.resize(3, 2);
  train.X << 0, 0, 1, 0, 1, 1;
  const auto pairs = samples_with_nn(s, train, 4, 11);
  REQUIRE(pairs.size() == 4);
  for (const auto& p : pairs) {
    CHECK(p.sample == std::vector<std::uint8_t>{1, 0});
    CHECK(p.nn_row == 1);
    CHECK(p.hamming == 0);
    // No other row is closer.
    for (Eigen::Index r = 0; r < train.rows(); ++r) {
      int d = 0;
      for (Eigen::Index c = 0; c < 2; ++c)
        d += p.sample[static_cast<std::size_t>(c)] != train.X(r, c);
      CHECK(d >= p.hamming);
    }
  }

  const auto again = samples_with_nn(s, train, 4, 11);
  for (std::size_t i = 0; i < pairs.size(); ++i) CHECK(pairs[i].sample == again[i].sample);
}

TEST_CASE("pgm writing: scaling, degenerate grids, round trip") {
  const char* path = "/tmp/spn_viz_test.pgm";

  Grid zero(1, 1);
  zero.values(0, 0) = 0.0;
  write_pgm(zero, path);
  CHECK(read_pgm(path)(0, 0) == 0);

  Grid constant(2, 2);
  constant.values.setConstant(3.7);
  write_pgm(constant, path);
  CHECK(read_pgm(path)(1, 1) == 128);

  Grid ramp(1, 3);
  ramp.values << -1.0, 0.0, 1.0;
  write_pgm(ramp, path);
  const Eigen::MatrixXi img = read_pgm(path);
  CHECK(img(0, 0) == 0);
  CHECK(img(0, 1) == 128);
  CHECK(img(0, 2) == 255);

  Grid with_inf(1, 3);
  with_inf.values << kNegInf, 2.0, 4.0;
  write_pgm(with_inf, path);
  const Eigen::MatrixXi img2 = read_pgm(path);
  CHECK(img2(0, 0) == 0);   // -inf renders black
  CHECK(img2(0, 1) == 0);   // finite minimum also maps to 0
  CHECK(img2(0, 2) == 255);
  std::remove(path);
}

TEST_CASE("ppm writing is bit-exact P6") {
  RgbImage img;
  img.height = 1;
  img.width = 2;
  img.rgb = {255, 0, 0, 10, 20, 30};
  const char* path = "/tmp/spn_viz_test.ppm";
  write_ppm(img, path);
  std::ifstream in(path, std::ios::binary);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(content == std::string("P6\n2 1\n255\n") + std::string("\xff\x00\x00\x0a\x14\x1e", 6));
  std::remove(path);
}

TEST_CASE("grid csv uses full precision") {
  Grid g(1, 2);
  g.values << 0.1, kNegInf;
  const char* path = "/tmp/spn_viz_test.csv";
  write_grid_csv(g, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "0.10000000000000001,-inf");
  std::remove(path);
}

#include <doctest.h>

#include <cmath>

#include "spn/synthetic.hpp"

using namespace spn;

TEST_CASE("two-block generator: shape, labels, flat pixel marginals, determinism") {
  const DataMatrix d = gen_two_block(4000, 8, 8, 0.1, 42);
  CHECK(d.rows() == 4000);
  CHECK(d.cols() == 64);
  REQUIRE(d.has_labels());
  int ones = 0, zeros = 0;
  for (int y : d.labels) {
    CHECK((y == 0 || y == 1));
    (y ? ones : zeros)++;
  }
  CHECK(ones > 1000);
  CHECK(zeros > 1000);

  // Within-class pixel marginals stay near 1/2 for both classes.
  for (int cls = 0; cls < 2; ++cls) {
    double total = 0.0;
    int rows = 0;
    for (Eigen::Index r = 0; r < d.rows(); ++r) {
      if (d.labels[static_cast<std::size_t>(r)] != cls) continue;
      ++rows;
      for (Eigen::Index c = 0; c < d.cols(); ++c) total += d.X(r, c);
    }
    CHECK(total / (rows * 64.0) == doctest::Approx(0.5).epsilon(0.08));
  }

  const DataMatrix again = gen_two_block(4000, 8, 8, 0.1, 42);
  CHECK(d.X == again.X);
  CHECK(d.labels == again.labels);

  CHECK_THROWS(gen_two_block(10, 1, 4, 0.1, 1));
  CHECK_THROWS(gen_two_block(10, 8, 8, 0.6, 1));
}

TEST_CASE("rectangle generator: outlines with wide/tall labels") {
  const DataMatrix d = gen_rectangles(500, 8, 8, 0.0, 7);
  CHECK(d.cols() == 64);
  REQUIRE(d.has_labels());
  for (Eigen::Index r = 0; r < d.rows(); ++r) {
    // Recover the bounding box of the lit pixels and re-derive the label.
    int rmin = 8, rmax = -1, cmin = 8, cmax = -1;
    for (int v = 0; v < 64; ++v) {
      if (!d.X(r, v)) continue;
      rmin = std::min(rmin, v / 8);
      rmax = std::max(rmax, v / 8);
      cmin = std::min(cmin, v % 8);
      cmax = std::max(cmax, v % 8);
    }
    REQUIRE(rmax >= 0);
    const int height = rmax - rmin + 1;
    const int width = cmax - cmin + 1;
    CHECK(height != width);
    CHECK(d.labels[static_cast<std::size_t>(r)] == (width > height ? 1 : 0));
  }
}

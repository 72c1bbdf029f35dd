#include "spn/synthetic.hpp"

#include "spn/error.hpp"
#include "spn/rng.hpp"

namespace spn {

namespace {

// Fixed per-block pattern dictionary, independent of the caller's seed so
// every generated split draws from the same distribution. The dictionary is
// closed under complement, which pins every pixel's marginal at exactly 1/2
// for both labels: the classes differ only in their correlation structure.
std::uint8_t prototype_bit(int block, int prototype, int pixel) {
  const std::uint64_t z =
      derive_seed(0x7b10c2d1ULL + 977u * static_cast<std::uint64_t>(block) +
                      131u * static_cast<std::uint64_t>(prototype),
                  static_cast<std::uint64_t>(pixel));
  return static_cast<std::uint8_t>((z >> 17) & 1);
}

}  // namespace

DataMatrix gen_two_block(int rows, int height, int width, double flip_noise, std::uint64_t seed) {
  if (rows < 1 || height < 2 || width < 1) throw Error("two-block needs at least 2x1 images");
  if (flip_noise < 0.0 || flip_noise >= 0.5) throw Error("flip noise must lie in [0, 0.5)");
  const int n_vars = height * width;
  const int split = (height / 2) * width;  // first block: top half, row-major
  constexpr int kPrototypes = 4;           // per block, each also used complemented

  DataMatrix data;
  data.X.resize(rows, n_vars);
  data.labels.resize(static_cast<std::size_t>(rows));
  Rng rng(seed);
  for (int r = 0; r < rows; ++r) {
    const int label = rng.bernoulli(0.5) ? 1 : 0;
    data.labels[static_cast<std::size_t>(r)] = label;
    if (label == 0) {
      for (int block = 0; block < 2; ++block) {
        const int proto = rng.uniform_int(0, kPrototypes - 1);
        const std::uint8_t complement = rng.bernoulli(0.5) ? 1 : 0;
        const int lo = block == 0 ? 0 : split;
        const int hi = block == 0 ? split : n_vars;
        for (int v = lo; v < hi; ++v) {
          std::uint8_t bit = prototype_bit(block, proto, v - lo) ^ complement;
          if (rng.bernoulli(flip_noise)) bit ^= 1;
          data.X(r, v) = bit;
        }
      }
    } else {
      for (int v = 0; v < n_vars; ++v) data.X(r, v) = rng.bernoulli(0.5) ? 1 : 0;
    }
  }
  return data;
}

DataMatrix gen_rectangles(int rows, int height, int width, double flip_noise, std::uint64_t seed) {
  if (rows < 1 || height < 4 || width < 4) throw Error("rectangles need at least 4x4 images");
  if (flip_noise < 0.0 || flip_noise >= 0.5) throw Error("flip noise must lie in [0, 0.5)");

  DataMatrix data;
  data.X.resize(rows, height * width);
  data.labels.resize(static_cast<std::size_t>(rows));
  Rng rng(seed);
  for (int r = 0; r < rows; ++r) {
    int rh, rw;
    do {
      rh = rng.uniform_int(2, height);
      rw = rng.uniform_int(2, width);
    } while (rh == rw);
    const int top = rng.uniform_int(0, height - rh);
    const int left = rng.uniform_int(0, width - rw);
    data.labels[static_cast<std::size_t>(r)] = rw > rh ? 1 : 0;

    for (int v = 0; v < height * width; ++v) data.X(r, v) = 0;
    for (int c = left; c < left + rw; ++c) {
      data.X(r, top * width + c) = 1;
      data.X(r, (top + rh - 1) * width + c) = 1;
    }
    for (int rr = top; rr < top + rh; ++rr) {
      data.X(r, rr * width + left) = 1;
      data.X(r, rr * width + left + rw - 1) = 1;
    }
    if (flip_noise > 0.0)
      for (int v = 0; v < height * width; ++v)
        if (rng.bernoulli(flip_noise)) data.X(r, v) = 1 - data.X(r, v);
  }
  return data;
}

}  // namespace spn

#include "spn/viz.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "spn/inference.hpp"
#include "spn/layered.hpp"
#include "spn/logsum.hpp"

namespace spn {

namespace {

void check_shape(const Spn& s, ImageShape shape) {
  if (shape.height <= 0 || shape.width <= 0 || shape.height * shape.width != s.n_vars())
    throw Error("image shape does not match variable count");
}

}  // namespace

std::vector<std::pair<int, int>> scope_length_histogram(const Spn& s) {
  std::map<int, int> counts;
  for (NodeId id = 0; id < s.size(); ++id) ++counts[s.scope_length(id)];
  return {counts.begin(), counts.end()};
}

Eigen::MatrixXi layer_scope_matrix(const Spn& s) {
  const LayeredSpn layered = compile_layers(s);
  Eigen::MatrixXi flags =
      Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(layered.layers.size()), s.n_vars());
  for (std::size_t l = 0; l < layered.layers.size(); ++l)
    for (NodeId id : layered.layers[l].outputs)
      flags(static_cast<Eigen::Index>(l), s.scope_length(id) - 1) = 1;
  return flags;
}

std::vector<RgbImage> mpe_filter_images(const Spn& s, std::span<const NodeId> nodes,
                                        ImageShape shape) {
  check_shape(s, shape);
  for (NodeId id : nodes)
    if (id >= s.size()) throw Error("unknown node id " + std::to_string(id));
  const std::vector<Evidence> traces = mpe_filters_all_nodes(s);

  std::vector<RgbImage> out;
  out.reserve(nodes.size());
  for (NodeId id : nodes) {
    RgbImage img;
    img.height = shape.height;
    img.width = shape.width;
    img.rgb.resize(static_cast<std::size_t>(shape.height) * shape.width * 3);
    const Evidence& trace = traces[id];
    for (int v = 0; v < s.n_vars(); ++v) {
      std::uint8_t* px = &img.rgb[static_cast<std::size_t>(v) * 3];
      if (trace.is_marginalized(v)) {
        px[0] = 255;  // out of scope: pure red
        px[1] = 0;
        px[2] = 0;
      } else {
        const std::uint8_t g = trace.value(v) ? 255 : 0;
        px[0] = px[1] = px[2] = g;
      }
    }
    out.push_back(std::move(img));
  }
  return out;
}

Grid activation_map(const Spn& s, const Evidence& ev, ImageShape shape, ActivationMode mode) {
  check_shape(s, shape);
  const ActivationVector act = activations(s, ev);

  Eigen::VectorXd total = Eigen::VectorXd::Zero(s.n_vars());
  Eigen::VectorXd comp = Eigen::VectorXd::Zero(s.n_vars());  // Kahan compensation
  Eigen::VectorXd node_count = Eigen::VectorXd::Zero(s.n_vars());

  for (NodeId id = 0; id < s.size(); ++id) {
    const NodeKind kind = s.node(id).kind;
    const bool counted = mode == ActivationMode::SumOnly
                             ? kind == NodeKind::Sum
                             : mode == ActivationMode::ProductOnly ? kind == NodeKind::Product
                                                                   : true;
    const double value = std::exp(act[id]);
    for (int v : s.scope(id).variables()) {
      node_count[v] += 1.0;
      if (!counted) continue;
      const double y = value - comp[v];
      const double t = total[v] + y;
      comp[v] = (t - total[v]) - y;
      total[v] = t;
    }
  }
  if (mode == ActivationMode::Normalized) total.array() /= node_count.array();

  Grid grid(shape.height, shape.width);
  for (int v = 0; v < s.n_vars(); ++v) grid.values(v / shape.width, v % shape.width) = total[v];
  return grid;
}

Grid node_count_map(const Spn& s, ImageShape shape) {
  check_shape(s, shape);
  Grid grid(shape.height, shape.width);
  for (NodeId id = 0; id < s.size(); ++id)
    for (int v : s.scope(id).variables())
      grid.values(v / shape.width, v % shape.width) += 1.0;
  return grid;
}

Grid patch_marginal_map(const MarginalFn& model, std::span<const std::uint8_t> instance,
                        ImageShape shape, int patch) {
  if (patch < 1) throw Error("patch size must be positive");
  if (static_cast<int>(instance.size()) != shape.height * shape.width)
    throw Error("instance length does not match shape");

  Grid grid(shape.height, shape.width);
  for (int r0 = 0; r0 < shape.height; r0 += patch)
    for (int c0 = 0; c0 < shape.width; c0 += patch) {
      const int r1 = std::min(r0 + patch, shape.height);
      const int c1 = std::min(c0 + patch, shape.width);
      Evidence ev(shape.height * shape.width);
      for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) {
          const int v = r * shape.width + c;
          ev.set(v, instance[static_cast<std::size_t>(v)]);
        }
      const double value = model(ev);
      for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) grid.values(r, c) = value;
    }
  return grid;
}

std::vector<SampleNnPair> samples_with_nn(const Spn& s, const DataMatrix& train, int n,
                                          std::uint64_t seed) {
  if (train.rows() < 1) throw Error("empty training data");
  if (train.cols() != s.n_vars()) throw Error("training data arity mismatch");
  const BinaryMatrix samples = sample(s, seed, n);

  std::vector<SampleNnPair> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    SampleNnPair pair;
    pair.sample.assign(samples.row(i).data(), samples.row(i).data() + samples.cols());
    pair.nn_row = 0;
    pair.hamming = s.n_vars() + 1;
    for (Eigen::Index r = 0; r < train.rows(); ++r) {
      int d = 0;
      for (Eigen::Index c = 0; c < train.cols(); ++c) d += samples(i, c) != train.X(r, c);
      if (d < pair.hamming) {  // strict: ties keep the lowest row index
        pair.hamming = d;
        pair.nn_row = static_cast<int>(r);
      }
    }
    out.push_back(std::move(pair));
  }
  return out;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_pgm(const Grid& grid, const std::string& path) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < grid.height; ++r)
    for (int c = 0; c < grid.width; ++c) {
      const double v = grid.values(r, c);
      if (std::isnan(v)) throw Error("NaN in grid");
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "P2\n" << grid.width << ' ' << grid.height << "\n255\n";
  for (int r = 0; r < grid.height; ++r) {
    for (int c = 0; c < grid.width; ++c) {
      const double v = grid.values(r, c);
      int pixel;
      if (!std::isfinite(v))
        pixel = 0;
      else if (hi > lo)
        pixel = static_cast<int>(std::lround((v - lo) / (hi - lo) * 255.0));
      else
        pixel = v == 0.0 ? 0 : 128;  // degenerate range
      out << (c ? " " : "") << pixel;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_ppm(const RgbImage& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.rgb.data()),
            static_cast<std::streamsize>(image.rgb.size()));
  if (!out) throw IoError("write failed: " + path);
}

void write_grid_csv(const Grid& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (int r = 0; r < grid.height; ++r) {
    for (int c = 0; c < grid.width; ++c)
      out << (c ? "," : "") << fmt_double(grid.values(r, c));
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

Eigen::MatrixXi read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  if (!(in >> magic >> w >> h >> maxval) || magic != "P2") throw IoError("not a P2 file");
  Eigen::MatrixXi img(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (!(in >> img(r, c))) throw IoError("truncated P2 file");
  return img;
}

Grid to_grid(std::span<const std::uint8_t> instance, ImageShape shape) {
  if (static_cast<int>(instance.size()) != shape.height * shape.width)
    throw Error("instance length does not match shape");
  Grid grid(shape.height, shape.width);
  for (std::size_t v = 0; v < instance.size(); ++v)
    grid.values(static_cast<int>(v) / shape.width, static_cast<int>(v) % shape.width) =
        instance[v];
  return grid;
}

}  // namespace spn

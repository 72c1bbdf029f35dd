#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spn/data.hpp"
#include "spn/embeddings.hpp"
#include "spn/evidence.hpp"
#include "spn/network.hpp"

namespace spn {

struct ImageShape {
  int height = 0, width = 0;
};

/// Real-valued image-shaped grid; -inf entries are allowed.
struct Grid {
  int height = 0, width = 0;
  Eigen::MatrixXd values;

  Grid() = default;
  Grid(int h, int w) : height(h), width(w), values(Eigen::MatrixXd::Zero(h, w)) {}
};

struct RgbImage {
  int height = 0, width = 0;
  std::vector<std::uint8_t> rgb;  // 3 bytes per pixel, row-major
};

/// (scope length, node count) pairs in ascending length, over all nodes.
std::vector<std::pair<int, int>> scope_length_histogram(const Spn& s);

/// Rows follow the layers of compile_layers (leaves excluded); column L-1 is
/// 1 iff the layer contains a node of scope length L.
Eigen::MatrixXi layer_scope_matrix(const Spn& s);

/// Per requested node, its joint-MPE trace painted on the image grid:
/// out-of-scope pixels red, in-scope pixels white (1) or black (0).
std::vector<RgbImage> mpe_filter_images(const Spn& s, std::span<const NodeId> nodes,
                                        ImageShape shape);

enum class ActivationMode { All, Normalized, SumOnly, ProductOnly };

/// Pixel i accumulates the linear-domain outputs of every node whose scope
/// contains variable i (compensated summation; node outputs never exceed 1).
/// Normalized divides by the per-pixel node count; the Sum/Product modes
/// restrict the node set by kind.
Grid activation_map(const Spn& s, const Evidence& ev, ImageShape shape, ActivationMode mode);

/// Count of nodes covering each pixel.
Grid node_count_map(const Spn& s, ImageShape shape);

/// Disjoint k×k tiles (ragged at the right/bottom edges); every pixel of a
/// tile holds the log marginal of the instance restricted to that tile.
Grid patch_marginal_map(const MarginalFn& model, std::span<const std::uint8_t> instance,
                        ImageShape shape, int patch);

struct SampleNnPair {
  std::vector<std::uint8_t> sample;
  int nn_row = 0;       // index into the training data
  int hamming = 0;      // distance to that row
};

/// Draw n samples and pair each with its nearest training row under
/// Euclidean (= Hamming, on binary data) distance; ties go to the lowest
/// row index.
std::vector<SampleNnPair> samples_with_nn(const Spn& s, const DataMatrix& train, int n,
                                          std::uint64_t seed);

/// PGM P2, maxval 255. Finite values are min-max scaled to 0..255; -inf
/// renders 0; a constant grid renders 0 when the value is 0 and mid-gray 128
/// otherwise.
void write_pgm(const Grid& grid, const std::string& path);

/// PPM P6 (binary).
void write_ppm(const RgbImage& image, const std::string& path);

/// Row-major CSV, 17 significant digits.
void write_grid_csv(const Grid& grid, const std::string& path);

/// Parses a P2 file back into integers; used to verify written output.
Eigen::MatrixXi read_pgm(const std::string& path);

Grid to_grid(std::span<const std::uint8_t> instance, ImageShape shape);

}  // namespace spn

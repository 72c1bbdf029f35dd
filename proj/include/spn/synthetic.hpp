#pragma once

#include <cstdint>

#include "spn/data.hpp"

namespace spn {

/// Binary images split into a top and a bottom pixel block. Label 0: each
/// block independently copies one of a fixed dictionary of patterns (or its
/// complement) with flip noise, so pixels inside a block are strongly
/// correlated at several granularities. Label 1: pure coin-flip pixels.
/// Every pixel's marginal is 1/2 under both labels, so the classes are only
/// separable through the correlation pattern.
DataMatrix gen_two_block(int rows, int height, int width, double flip_noise, std::uint64_t seed);

/// Axis-aligned rectangle outlines on a dark background. Label 1 when the
/// rectangle is wider than tall, 0 otherwise (squares are re-drawn).
DataMatrix gen_rectangles(int rows, int height, int width, double flip_noise, std::uint64_t seed);

}  // namespace spn

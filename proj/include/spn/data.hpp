#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace spn {

using BinaryMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Row-major binary sample matrix with optional integer labels.
struct DataMatrix {
  BinaryMatrix X;
  std::vector<int> labels;  // empty when unlabeled; else one per row

  Eigen::Index rows() const { return X.rows(); }
  Eigen::Index cols() const { return X.cols(); }
  bool has_labels() const { return !labels.empty(); }

  std::span<const std::uint8_t> row(Eigen::Index i) const {
    return {X.row(i).data(), static_cast<std::size_t>(X.cols())};
  }

  /// Distinct label count assuming labels in [0, n_classes).
  int n_classes() const;
};

/// CSV of 0/1 integers, one row per instance. An optional header row is
/// detected automatically (any non-numeric token); a final column named
/// `label` carries integer class labels.
DataMatrix load_data_csv(const std::string& path);

/// Writes header v0,...,v{n-1}[,label].
void save_data_csv(const DataMatrix& data, const std::string& path);

}  // namespace spn

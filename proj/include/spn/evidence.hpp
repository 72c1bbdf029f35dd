#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spn/error.hpp"

namespace spn {

/// Per-variable observation state for a query: 0, 1, or marginalized.
class Evidence {
 public:
  static constexpr std::int8_t kMarginalized = -1;

  Evidence() = default;
  explicit Evidence(int n_vars) : states_(static_cast<std::size_t>(n_vars), kMarginalized) {}

  static Evidence all_marginalized(int n_vars) { return Evidence(n_vars); }

  static Evidence complete(std::span<const std::uint8_t> instance) {
    Evidence ev(static_cast<int>(instance.size()));
    for (std::size_t v = 0; v < instance.size(); ++v) {
      if (instance[v] > 1) throw Error("non-binary value in instance");
      ev.states_[v] = static_cast<std::int8_t>(instance[v]);
    }
    return ev;
  }

  int n_vars() const { return static_cast<int>(states_.size()); }

  void set(int var, int value) {
    if (value != 0 && value != 1) throw Error("evidence value must be 0 or 1");
    states_.at(static_cast<std::size_t>(var)) = static_cast<std::int8_t>(value);
  }

  void clear(int var) { states_.at(static_cast<std::size_t>(var)) = kMarginalized; }

  bool is_marginalized(int var) const {
    return states_.at(static_cast<std::size_t>(var)) == kMarginalized;
  }

  /// Observed value; only valid when not marginalized.
  int value(int var) const { return states_.at(static_cast<std::size_t>(var)); }

  int n_observed() const {
    int c = 0;
    for (auto s : states_) c += s != kMarginalized;
    return c;
  }

  bool overlaps(const Evidence& other) const {
    if (n_vars() != other.n_vars()) throw Error("evidence arity mismatch");
    for (int v = 0; v < n_vars(); ++v)
      if (!is_marginalized(v) && !other.is_marginalized(v)) return true;
    return false;
  }

  /// Union of two evidences over disjoint observed sets.
  Evidence merged_with(const Evidence& other) const {
    if (overlaps(other)) throw Error("evidence sets must be disjoint");
    Evidence out = *this;
    for (int v = 0; v < n_vars(); ++v)
      if (!other.is_marginalized(v)) out.states_[static_cast<std::size_t>(v)] = other.states_[static_cast<std::size_t>(v)];
    return out;
  }

  bool operator==(const Evidence& other) const { return states_ == other.states_; }

 private:
  std::vector<std::int8_t> states_;
};

}  // namespace spn

#pragma once

#include <bit>
#include <cstdint>
#include <functional>
#include <vector>

#include "spn/error.hpp"

namespace spn {

/// Variable-set bitmask over indices [0, n_vars). Width fixed at
/// construction; all set operations require operands of equal width.
class Scope {
 public:
  static constexpr int kMaxVars = 4096;

  Scope() = default;

  explicit Scope(int n_vars) : n_vars_(n_vars) {
    if (n_vars < 1 || n_vars > kMaxVars) throw Error("scope width out of range");
    words_.assign((static_cast<std::size_t>(n_vars) + 63) / 64, 0);
  }

  static Scope singleton(int n_vars, int var) {
    Scope s(n_vars);
    s.set(var);
    return s;
  }

  int n_vars() const { return n_vars_; }

  void set(int var) {
    check_var(var);
    words_[static_cast<std::size_t>(var) >> 6] |= std::uint64_t{1} << (var & 63);
  }

  bool test(int var) const {
    check_var(var);
    return (words_[static_cast<std::size_t>(var) >> 6] >> (var & 63)) & 1;
  }

  /// Number of variables in the scope (length).
  int count() const {
    int c = 0;
    for (std::uint64_t w : words_) c += std::popcount(w);
    return c;
  }

  Scope& unite(const Scope& other) {
    check_width(other);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
    return *this;
  }

  bool intersects(const Scope& other) const {
    check_width(other);
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & other.words_[i]) return true;
    return false;
  }

  bool operator==(const Scope& other) const {
    return n_vars_ == other.n_vars_ && words_ == other.words_;
  }
  bool operator!=(const Scope& other) const { return !(*this == other); }

  /// Lexicographic order on the word array; gives scope containers a
  /// deterministic iteration order.
  bool operator<(const Scope& other) const {
    check_width(other);
    return words_ < other.words_;
  }

  std::vector<int> variables() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(count()));
    for (int v = 0; v < n_vars_; ++v)
      if (test(v)) out.push_back(v);
    return out;
  }

  const std::vector<std::uint64_t>& words() const { return words_; }

 private:
  void check_var(int var) const {
    if (var < 0 || var >= n_vars_) throw Error("variable index out of scope range");
  }
  void check_width(const Scope& other) const {
    if (n_vars_ != other.n_vars_) throw Error("scope width mismatch");
  }

  int n_vars_ = 0;
  std::vector<std::uint64_t> words_;
};

struct ScopeHash {
  std::size_t operator()(const Scope& s) const {
    std::size_t h = std::hash<int>{}(s.n_vars());
    for (std::uint64_t w : s.words()) h = h * 0x100000001b3ULL ^ w;
    return h;
  }
};

}  // namespace spn

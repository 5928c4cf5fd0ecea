#pragma once

#include <cstddef>
#include <span>
#include <unordered_set>
#include <vector>

#include "gacem/grid.hpp"

namespace gacem::train {

/// Append-only archive of evaluated designs, deduplicated by grid coordinates.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t dims) : designs_(dims, 0) {}

  std::size_t dims() const { return designs_.dims; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  bool contains(std::span<const int> design) const;
  /// Returns false (and stores nothing) when the design is already present.
  bool insert(std::span<const int> design, double value, std::size_t iteration);

  const GridBatch& designs() const { return designs_; }
  std::span<const double> values() const { return values_; }
  std::span<const std::size_t> iterations() const { return stamps_; }
  std::span<const int> design(std::size_t i) const { return designs_.row(i); }

  GridBatch gather(std::span<const std::size_t> idx) const;
  /// Indices of entries stamped with `iteration`.
  std::vector<std::size_t> entries_of(std::size_t iteration) const;
  std::size_t satisfying_count() const;

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<int>& k) const noexcept;
  };

  GridBatch designs_;
  std::vector<double> values_;
  std::vector<std::size_t> stamps_;
  std::unordered_set<std::vector<int>, KeyHash> seen_;
};

}  // namespace gacem::train

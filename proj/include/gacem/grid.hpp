#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gacem {

/// Row-major batch of grid designs: `dims` bin indices per design.
struct GridBatch {
  std::size_t dims = 0;
  std::vector<int> bins;

  GridBatch() = default;
  GridBatch(std::size_t d, std::size_t n) : dims(d), bins(d * n, 0) {}

  std::size_t size() const { return dims == 0 ? 0 : bins.size() / dims; }
  std::span<int> row(std::size_t i) { return {bins.data() + i * dims, dims}; }
  std::span<const int> row(std::size_t i) const { return {bins.data() + i * dims, dims}; }
  void push_back(std::span<const int> design) { bins.insert(bins.end(), design.begin(), design.end()); }
};

/// Axis-aligned box discretized into `resolution` equal cells per dimension.
/// Grid points are cell centers; the normalized coordinate of cell b is
/// −1 + δ(b + ½) with δ = 2 / resolution.
class DesignSpace {
 public:
  DesignSpace() = default;
  DesignSpace(std::vector<double> lower, std::vector<double> upper, int resolution);
  static DesignSpace cube(std::size_t dims, double lower, double upper, int resolution);

  std::size_t dims() const { return lower_.size(); }
  int resolution() const { return resolution_; }
  double bin_width() const { return 2.0 / resolution_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }

  double to_normalized(std::size_t dim, double x) const;
  double from_normalized(std::size_t dim, double u) const;

  /// Original coordinate of cell `b` along `dim`.
  double coordinate(std::size_t dim, int b) const;
  /// Nearest cell to an original coordinate (clamped to the box).
  int snap(std::size_t dim, double x) const;

  std::vector<double> coordinates(std::span<const int> design) const;
  std::vector<double> normalized(std::span<const int> design) const;
  bool on_grid(std::span<const int> design) const;

  /// Number of grid points, or 0 if it does not fit in 64 bits.
  std::uint64_t grid_size() const;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
  int resolution_ = 100;
};

}  // namespace gacem

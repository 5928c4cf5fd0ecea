#include "gacem/grid.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "gacem/errors.hpp"
#include "gacem/kernels.hpp"

namespace gacem {

DesignSpace::DesignSpace(std::vector<double> lower, std::vector<double> upper, int resolution)
    : lower_(std::move(lower)), upper_(std::move(upper)), resolution_(resolution) {
  if (lower_.empty()) throw ConfigError("design space: at least one dimension required");
  if (lower_.size() != upper_.size()) throw ConfigError("design space: bound vectors differ in length");
  if (resolution_ < 1) throw ConfigError("design space: grid resolution must be positive");
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    if (!(lower_[i] < upper_[i])) {
      throw ConfigError("design space: lower bound must be below upper bound in dimension " + std::to_string(i));
    }
  }
}

DesignSpace DesignSpace::cube(std::size_t dims, double lower, double upper, int resolution) {
  return DesignSpace(std::vector<double>(dims, lower), std::vector<double>(dims, upper), resolution);
}

double DesignSpace::to_normalized(std::size_t dim, double x) const {
  return -1.0 + 2.0 * (x - lower_[dim]) / (upper_[dim] - lower_[dim]);
}

double DesignSpace::from_normalized(std::size_t dim, double u) const {
  return lower_[dim] + 0.5 * (u + 1.0) * (upper_[dim] - lower_[dim]);
}

double DesignSpace::coordinate(std::size_t dim, int b) const {
  return from_normalized(dim, kernels::bin_center(b, resolution_));
}

int DesignSpace::snap(std::size_t dim, double x) const {
  return kernels::bin_of(to_normalized(dim, x), resolution_);
}

std::vector<double> DesignSpace::coordinates(std::span<const int> design) const {
  std::vector<double> x(design.size());
  for (std::size_t i = 0; i < design.size(); ++i) x[i] = coordinate(i, design[i]);
  return x;
}

std::vector<double> DesignSpace::normalized(std::span<const int> design) const {
  std::vector<double> x(design.size());
  for (std::size_t i = 0; i < design.size(); ++i) x[i] = kernels::bin_center(design[i], resolution_);
  return x;
}

bool DesignSpace::on_grid(std::span<const int> design) const {
  if (design.size() != dims()) return false;
  for (int b : design) {
    if (b < 0 || b >= resolution_) return false;
  }
  return true;
}

std::uint64_t DesignSpace::grid_size() const {
  std::uint64_t n = 1;
  const auto r = static_cast<std::uint64_t>(resolution_);
  for (std::size_t i = 0; i < dims(); ++i) {
    if (n > std::numeric_limits<std::uint64_t>::max() / r) return 0;
    n *= r;
  }
  return n;
}

}  // namespace gacem

#include "gacem/samplers.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "gacem/errors.hpp"

namespace gacem {

GridBatch GaussianSampler::sample(std::size_t n, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  return cem::sample_gaussian(dist_, n, grid_, rng);
}

std::vector<double> GaussianSampler::log_pmf(const GridBatch& designs) const {
  return cem::gaussian_log_pmf(dist_, designs, grid_);
}

GridBatch KdeSampler::sample(std::size_t n, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  return cem::kde_sample(kde_, n, grid_, rng);
}

std::vector<double> KdeSampler::log_pmf(const GridBatch& designs) const {
  return cem::kde_log_pmf(kde_, designs, grid_);
}

GridBatch UniformSampler::sample(std::size_t n, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> cell(0, grid_ - 1);
  GridBatch out(dims_, n);
  for (int& b : out.bins) b = cell(rng);
  return out;
}

std::vector<double> UniformSampler::log_pmf(const GridBatch& designs) const {
  return std::vector<double>(designs.size(), -static_cast<double>(dims_) * std::log(static_cast<double>(grid_)));
}

GridBatch PointMassSampler::sample(std::size_t n, std::uint64_t) const {
  GridBatch out(design_.size(), 0);
  for (std::size_t i = 0; i < n; ++i) out.push_back(design_);
  return out;
}

std::vector<double> PointMassSampler::log_pmf(const GridBatch& designs) const {
  std::vector<double> out(designs.size());
  for (std::size_t i = 0; i < designs.size(); ++i) {
    const auto r = designs.row(i);
    out[i] = std::equal(r.begin(), r.end(), design_.begin()) ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  return out;
}

GridBatch ReplaySampler::sample(std::size_t n, std::uint64_t) const {
  if (designs_.size() == 0) throw ContractError("replay sampler: no designs");
  GridBatch out(designs_.dims, 0);
  for (std::size_t i = 0; i < n; ++i) out.push_back(designs_.row(i % designs_.size()));
  return out;
}

std::vector<double> ReplaySampler::log_pmf(const GridBatch&) const {
  throw UnsupportedMetric("sampler has no density");
}

}  // namespace gacem

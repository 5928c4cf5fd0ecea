#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gacem/grid.hpp"
#include "gacem/objectives.hpp"
#include "gacem/samplers.hpp"

namespace gacem::metrics {

inline constexpr std::size_t kDefaultSamples = 5000;

struct RunRecord {
  std::size_t iteration = 0;
  std::size_t evaluations = 0;
  std::size_t satisfying_count = 0;
  double top20_avg = 0.0;
  double accuracy_pct = 0.0;
  double entropy_per_dim = 0.0;
  double seconds = 0.0;
};

/// Percentage of `designs` whose constraint value is <= 0.
double accuracy_of(const objectives::ConstraintSpec& spec, const DesignSpace& space, const GridBatch& designs);
double accuracy(const Sampler& sampler, const objectives::ConstraintSpec& spec, const DesignSpace& space,
                std::size_t n, std::uint64_t seed);

/// -mean(log q(x))/d for x drawn from the sampler and scored by its own pmf.
double entropy_per_dim(const Sampler& sampler, std::size_t n, std::uint64_t seed);
/// Same quantity for given designs scored by an arbitrary sampler's pmf.
double cross_entropy_per_dim(const Sampler& scorer, const GridBatch& designs);

/// Mean of the k smallest values (all of them if fewer than k).
double top_k_average(std::span<const double> values, std::size_t k = 20);

/// Minimum satisfying samples for an orthant to count as covered.
std::size_t coverage_threshold(std::size_t satisfying, std::size_t dims);

/// Number of sign-pattern orthants holding enough satisfying samples.
/// Samples with any |x_j| <= 0.5 are discarded.
std::size_t mode_coverage_synt(const GridBatch& designs, const objectives::ConstraintSpec& spec,
                               const DesignSpace& space);

}  // namespace gacem::metrics

#include "gacem/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "gacem/errors.hpp"

namespace gacem::metrics {

double accuracy_of(const objectives::ConstraintSpec& spec, const DesignSpace& space, const GridBatch& designs) {
  if (designs.size() == 0) throw ContractError("accuracy: no designs");
  const auto c = objectives::evaluate(spec, space, designs);
  const auto hits = std::count_if(c.begin(), c.end(), objectives::satisfied);
  return 100.0 * static_cast<double>(hits) / static_cast<double>(c.size());
}

double accuracy(const Sampler& sampler, const objectives::ConstraintSpec& spec, const DesignSpace& space,
                std::size_t n, std::uint64_t seed) {
  return accuracy_of(spec, space, sampler.sample(n, seed));
}

double cross_entropy_per_dim(const Sampler& scorer, const GridBatch& designs) {
  if (!scorer.has_density()) throw UnsupportedMetric("entropy: sampler exposes no log-probability");
  if (designs.size() == 0) throw ContractError("entropy: no designs");
  const auto lp = scorer.log_pmf(designs);
  double total = 0.0;
  for (double v : lp) total += v;
  return -total / static_cast<double>(lp.size()) / static_cast<double>(designs.dims);
}

double entropy_per_dim(const Sampler& sampler, std::size_t n, std::uint64_t seed) {
  if (!sampler.has_density()) throw UnsupportedMetric("entropy: sampler exposes no log-probability");
  return cross_entropy_per_dim(sampler, sampler.sample(n, seed));
}

double top_k_average(std::span<const double> values, std::size_t k) {
  if (values.empty()) throw ContractError("top-k average: empty input");
  std::vector<double> v(values.begin(), values.end());
  const std::size_t m = std::min(k, v.size());
  std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m), v.end());
  return std::accumulate(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m), 0.0) / static_cast<double>(m);
}

std::size_t coverage_threshold(std::size_t satisfying, std::size_t dims) {
  const auto one_percent = static_cast<std::size_t>(std::ceil(0.01 * static_cast<double>(satisfying)));
  const std::size_t base = std::max<std::size_t>(5, one_percent);
  // Capped at an even split over the orthants.
  const double orthants = std::ldexp(1.0, static_cast<int>(std::min<std::size_t>(dims, 60)));
  const auto even = static_cast<std::size_t>(std::ceil(static_cast<double>(satisfying) / orthants));
  return std::max<std::size_t>(1, std::min(base, even));
}

std::size_t mode_coverage_synt(const GridBatch& designs, const objectives::ConstraintSpec& spec,
                               const DesignSpace& space) {
  if (spec.objective != objectives::Objective::Synt) {
    throw UnsupportedMetric("mode coverage is defined for the synt objective only");
  }
  const auto c = objectives::evaluate(spec, space, designs);
  std::map<std::vector<bool>, std::size_t> counts;
  std::size_t satisfying = 0;
  for (std::size_t i = 0; i < designs.size(); ++i) {
    if (!objectives::satisfied(c[i])) continue;
    const auto x = space.coordinates(designs.row(i));
    if (std::any_of(x.begin(), x.end(), [](double v) { return std::abs(v) <= 0.5; })) continue;
    std::vector<bool> signs(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) signs[j] = x[j] > 0.0;
    ++counts[signs];
    ++satisfying;
  }
  const std::size_t need = coverage_threshold(satisfying, designs.dims);
  std::size_t covered = 0;
  for (const auto& [key, count] : counts) covered += count >= need ? 1 : 0;
  return covered;
}

}  // namespace gacem::metrics

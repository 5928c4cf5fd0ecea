#include "gacem/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gacem/errors.hpp"

namespace gacem::train {

double compute_weight(double f, double f_bar) {
  if (f <= 0.0) return 1.0;
  if (f == f_bar) return 0.0;
  const double gap = std::abs(f - f_bar);
  if (f < f_bar) return std::exp(-std::abs(f) / gap);
  return -std::exp(-1.0 / gap);
}

double rank_value(std::span<const double> f_values, double rho) {
  if (f_values.empty()) throw ContractError("rank threshold: empty population");
  if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("rank threshold: rho must lie in (0, 1]");
  const auto n = f_values.size();
  auto m = static_cast<std::size_t>(std::ceil(rho * static_cast<double>(n) - 1e-9));
  m = std::clamp<std::size_t>(m, 1, n);
  std::vector<double> v(f_values.begin(), f_values.end());
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m - 1), v.end());
  return v[m - 1];
}

WeightState::WeightState(double rho) : rho_(rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("weight state: rho must lie in (0, 1]");
}

double WeightState::update(std::span<const double> f_values) {
  threshold_ = std::min(threshold_, rank_value(f_values, rho_));
  return threshold_;
}

}  // namespace gacem::train

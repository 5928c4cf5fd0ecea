#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gacem/grid.hpp"

namespace gacem::cem {

inline constexpr double kBandwidthFloor = 1e-3;

/// Gaussian-kernel density with a diagonal bandwidth.
struct KdeModel {
  Eigen::MatrixXd points;     // [n, d], normalized coordinates
  Eigen::VectorXd bandwidth;  // [d]
};

/// n^(-1/(d+4)).
double scott_factor(std::size_t n, std::size_t d);

/// Bandwidth h_j = scott_factor · σ̂_j (sample standard deviation), floored.
KdeModel kde_fit(const Eigen::MatrixXd& points);

/// log of the average kernel density at a normalized point.
double kde_logpdf(const KdeModel& model, std::span<const double> x);

/// Uniform support point plus kernel noise, clamped and snapped to the grid.
GridBatch kde_sample(const KdeModel& model, std::size_t n, int grid, std::mt19937_64& rng);

/// log-probability of grid designs under kde_sample (edge cells extend to ±∞).
std::vector<double> kde_log_pmf(const KdeModel& model, const GridBatch& designs, int grid);

}  // namespace gacem::cem

#pragma once

// Cross-entropy-method baselines over the normalized design cube.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gacem/grid.hpp"

namespace gacem::cem {

struct GaussianSearchDist {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

enum class Weighting { Equal, Rank };

struct CemConfig {
  double elite_percentile = 40.0;
  double fixed_sigma = 0.05;
  double sigma_init = 0.5;
  double sigma_end = 0.01;
  Weighting weighting = Weighting::Equal;

  void validate() const;
};

/// Indices of the best floor(q·n/100) samples (at least one) by ascending f,
/// ties broken by original index.
std::vector<std::size_t> select_elites(std::span<const double> f_values, double percentile);
std::size_t elite_count(std::size_t n, double percentile);

/// λ for `count` elites sorted best-first: 1/count each, or log-rank weights.
std::vector<double> elite_weights(std::size_t count, Weighting mode);

/// Linear decay from sigma_init (iteration 0) to sigma_end (iteration total-1).
double jitter_schedule(const CemConfig& config, std::size_t iteration, std::size_t total);

/// μ̂ = Σλ_i x_i, Σ̂ = Σλ_i (x_i-μ̂)(x_i-μ̂)ᵀ + σ_t²·I. `elites` is [n, d] row-major.
GaussianSearchDist cem_update(const Eigen::MatrixXd& elites, std::span<const double> weights, double jitter);

/// Mean update of cem_update with the covariance held at σ²·I.
GaussianSearchDist cem_fixed_variance_update(const Eigen::MatrixXd& elites, std::span<const double> weights,
                                             double fixed_sigma);

/// Elites drawn from the whole buffer (rows of `points`), then cem_update with σ_t = 0.
GaussianSearchDist cempp_update(const Eigen::MatrixXd& points, std::span<const double> f_values, double percentile,
                                Weighting mode = Weighting::Equal);

/// Draws in normalized space, clamps to [-1,1] and snaps to the grid.
GridBatch sample_gaussian(const GaussianSearchDist& dist, std::size_t n, int grid, std::mt19937_64& rng);

/// log-probability of grid designs under sample_gaussian: per-dimension
/// conditionals (chain rule on the Cholesky factor, conditioning on the cell
/// centers) integrated over each cell, edge cells extending to ±∞.
std::vector<double> gaussian_log_pmf(const GaussianSearchDist& dist, const GridBatch& designs, int grid);

/// Rows of `designs` in normalized coordinates.
Eigen::MatrixXd to_matrix(const GridBatch& designs, int grid);
Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, std::span<const std::size_t> idx);

}  // namespace gacem::cem

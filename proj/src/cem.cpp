#include "gacem/cem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gacem/errors.hpp"
#include "gacem/kernels.hpp"
#include "gacem/normal.hpp"

namespace gacem::cem {

void CemConfig::validate() const {
  if (!(elite_percentile > 0.0 && elite_percentile <= 100.0)) {
    throw ConfigError("cem: elite percentile must lie in (0, 100]");
  }
  if (!(fixed_sigma > 0.0)) throw ConfigError("cem: fixed sigma must be positive");
  if (!(sigma_init >= sigma_end && sigma_end >= 0.0)) throw ConfigError("cem: need sigma_init >= sigma_end >= 0");
}

std::size_t elite_count(std::size_t n, double percentile) {
  const auto k = static_cast<std::size_t>(std::floor(percentile * static_cast<double>(n) / 100.0 + 1e-9));
  return std::clamp<std::size_t>(k, 1, n);
}

std::vector<std::size_t> select_elites(std::span<const double> f_values, double percentile) {
  if (f_values.empty()) throw ContractError("select_elites: no samples");
  std::vector<std::size_t> idx(f_values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return f_values[a] < f_values[b]; });
  idx.resize(elite_count(f_values.size(), percentile));
  return idx;
}

std::vector<double> elite_weights(std::size_t count, Weighting mode) {
  std::vector<double> w(count, 1.0 / static_cast<double>(count));
  if (mode == Weighting::Rank) {
    double total = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      w[i] = std::log(static_cast<double>(count) + 0.5) - std::log(static_cast<double>(i) + 1.0);
      total += w[i];
    }
    for (double& v : w) v /= total;
  }
  return w;
}

double jitter_schedule(const CemConfig& config, std::size_t iteration, std::size_t total) {
  if (total <= 1) return config.sigma_init;
  const double t = static_cast<double>(std::min(iteration, total - 1)) / static_cast<double>(total - 1);
  return config.sigma_init + (config.sigma_end - config.sigma_init) * t;
}

namespace {

Eigen::VectorXd weighted_mean(const Eigen::MatrixXd& elites, std::span<const double> weights) {
  if (elites.rows() == 0) throw ContractError("cem update: no elites");
  if (static_cast<std::size_t>(elites.rows()) != weights.size()) {
    throw DimensionError("cem update: one weight per elite required");
  }
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ContractError("cem update: weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ContractError("cem update: weights must sum to 1");
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(elites.cols());
  for (Eigen::Index i = 0; i < elites.rows(); ++i) mu += weights[static_cast<std::size_t>(i)] * elites.row(i).transpose();
  return mu;
}

}  // namespace

GaussianSearchDist cem_update(const Eigen::MatrixXd& elites, std::span<const double> weights, double jitter) {
  GaussianSearchDist out;
  out.mean = weighted_mean(elites, weights);
  const Eigen::Index d = elites.cols();
  out.cov = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < elites.rows(); ++i) {
    const Eigen::VectorXd c = elites.row(i).transpose() - out.mean;
    out.cov += weights[static_cast<std::size_t>(i)] * (c * c.transpose());
  }
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  out.cov.diagonal().array() += jitter * jitter;
  return out;
}

GaussianSearchDist cem_fixed_variance_update(const Eigen::MatrixXd& elites, std::span<const double> weights,
                                             double fixed_sigma) {
  GaussianSearchDist out;
  out.mean = weighted_mean(elites, weights);
  out.cov = Eigen::MatrixXd::Identity(elites.cols(), elites.cols()) * (fixed_sigma * fixed_sigma);
  return out;
}

GaussianSearchDist cempp_update(const Eigen::MatrixXd& points, std::span<const double> f_values, double percentile,
                                Weighting mode) {
  if (points.rows() == 0) throw ContractError("cempp update: empty buffer");
  if (static_cast<std::size_t>(points.rows()) != f_values.size()) {
    throw DimensionError("cempp update: one value per buffer entry required");
  }
  const auto idx = select_elites(f_values, percentile);
  const auto w = elite_weights(idx.size(), mode);
  return cem_update(rows_of(points, idx), w, 0.0);
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, std::span<const std::size_t> idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

Eigen::MatrixXd to_matrix(const GridBatch& designs, int grid) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(designs.size()), static_cast<Eigen::Index>(designs.dims));
  for (std::size_t r = 0; r < designs.size(); ++r)
    for (std::size_t j = 0; j < designs.dims; ++j)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = kernels::bin_center(designs.bins[r * designs.dims + j], grid);
  return m;
}

GridBatch sample_gaussian(const GaussianSearchDist& dist, std::size_t n, int grid, std::mt19937_64& rng) {
  const Eigen::Index d = dist.mean.size();
  // Symmetric square root tolerates singular covariances.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dist.cov);
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd A = eig.eigenvectors() * root.asDiagonal();
  std::normal_distribution<double> gauss(0.0, 1.0);
  GridBatch out(static_cast<std::size_t>(d), n);
  Eigen::VectorXd z(d);
  for (std::size_t r = 0; r < n; ++r) {
    for (Eigen::Index j = 0; j < d; ++j) z(j) = gauss(rng);
    const Eigen::VectorXd x = dist.mean + A * z;
    for (Eigen::Index j = 0; j < d; ++j) out.bins[r * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)] = kernels::bin_of(x(j), grid);
  }
  return out;
}

std::vector<double> gaussian_log_pmf(const GaussianSearchDist& dist, const GridBatch& designs, int grid) {
  const Eigen::Index d = dist.mean.size();
  if (static_cast<std::size_t>(d) != designs.dims) throw DimensionError("gaussian pmf: dimensionality mismatch");
  Eigen::MatrixXd cov = dist.cov;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  double ridge = 1e-14;
  while (llt.info() != Eigen::Success) {
    cov = dist.cov;
    cov.diagonal().array() += ridge;
    llt.compute(cov);
    ridge *= 10.0;
  }
  const Eigen::MatrixXd L = llt.matrixL();
  constexpr double inf = std::numeric_limits<double>::infinity();
  const long n = static_cast<long>(designs.size());
  std::vector<double> out(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static) if (n >= 256)
  for (long r = 0; r < n; ++r) {
    std::vector<double> z(static_cast<std::size_t>(d));
    double total = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      double cond_mean = dist.mean(i);
      for (Eigen::Index j = 0; j < i; ++j) cond_mean += L(i, j) * z[static_cast<std::size_t>(j)];
      const double sd = std::max(L(i, i), 1e-12);
      const int b = designs.bins[static_cast<std::size_t>(r) * designs.dims + static_cast<std::size_t>(i)];
      const double lo = b == 0 ? -inf : (kernels::bin_edge(b, grid) - cond_mean) / sd;
      const double hi = b == grid - 1 ? inf : (kernels::bin_edge(b + 1, grid) - cond_mean) / sd;
      total += normal::log_mass(lo, hi).value;
      z[static_cast<std::size_t>(i)] = (kernels::bin_center(b, grid) - cond_mean) / sd;
    }
    out[static_cast<std::size_t>(r)] = total;
  }
  return out;
}

}  // namespace gacem::cem

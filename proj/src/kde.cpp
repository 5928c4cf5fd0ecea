#include "gacem/kde.hpp"

#include <cmath>
#include <limits>

#include "gacem/errors.hpp"
#include "gacem/kernels.hpp"
#include "gacem/normal.hpp"

namespace gacem::cem {

double scott_factor(std::size_t n, std::size_t d) {
  return std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + 4.0));
}

KdeModel kde_fit(const Eigen::MatrixXd& points) {
  if (points.rows() == 0) throw ContractError("kde: at least one point required");
  const auto n = static_cast<std::size_t>(points.rows());
  const auto d = static_cast<std::size_t>(points.cols());
  KdeModel m;
  m.points = points;
  m.bandwidth.resize(points.cols());
  const double factor = scott_factor(n, d);
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    double sd = 0.0;
    if (n > 1) {
      const double mean = points.col(j).mean();
      sd = std::sqrt((points.col(j).array() - mean).square().sum() / static_cast<double>(n - 1));
    }
    m.bandwidth(j) = std::max(factor * sd, kBandwidthFloor);
  }
  return m;
}

double kde_logpdf(const KdeModel& model, std::span<const double> x) {
  const Eigen::Index n = model.points.rows(), d = model.points.cols();
  if (static_cast<Eigen::Index>(x.size()) != d) throw DimensionError("kde: dimensionality mismatch");
  std::vector<double> terms(static_cast<std::size_t>(n));
  for (Eigen::Index p = 0; p < n; ++p) {
    double t = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) t += normal::log_pdf(x[static_cast<std::size_t>(j)], model.points(p, j), model.bandwidth(j));
    terms[static_cast<std::size_t>(p)] = t;
  }
  return normal::log_sum_exp(terms.data(), terms.size()) - std::log(static_cast<double>(n));
}

GridBatch kde_sample(const KdeModel& model, std::size_t n, int grid, std::mt19937_64& rng) {
  const auto d = static_cast<std::size_t>(model.points.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, model.points.rows() - 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  GridBatch out(d, n);
  for (std::size_t r = 0; r < n; ++r) {
    const Eigen::Index p = pick(rng);
    for (std::size_t j = 0; j < d; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      out.bins[r * d + j] = kernels::bin_of(model.points(p, jj) + model.bandwidth(jj) * gauss(rng), grid);
    }
  }
  return out;
}

std::vector<double> kde_log_pmf(const KdeModel& model, const GridBatch& designs, int grid) {
  const Eigen::Index np = model.points.rows(), d = model.points.cols();
  if (static_cast<std::size_t>(d) != designs.dims) throw DimensionError("kde pmf: dimensionality mismatch");
  constexpr double inf = std::numeric_limits<double>::infinity();
  const long n = static_cast<long>(designs.size());
  const double log_np = std::log(static_cast<double>(np));
  std::vector<double> out(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static) if (n >= 64)
  for (long r = 0; r < n; ++r) {
    std::vector<double> terms(static_cast<std::size_t>(np));
    for (Eigen::Index p = 0; p < np; ++p) {
      double t = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        const int b = designs.bins[static_cast<std::size_t>(r) * designs.dims + static_cast<std::size_t>(j)];
        const double h = model.bandwidth(j), c = model.points(p, j);
        const double lo = b == 0 ? -inf : (kernels::bin_edge(b, grid) - c) / h;
        const double hi = b == grid - 1 ? inf : (kernels::bin_edge(b + 1, grid) - c) / h;
        t += normal::log_mass(lo, hi).value;
      }
      terms[static_cast<std::size_t>(p)] = t;
    }
    out[static_cast<std::size_t>(r)] = normal::log_sum_exp(terms.data(), terms.size()) - log_np;
  }
  return out;
}

}  // namespace gacem::cem

#include <omp.h>

#include <Eigen/Dense>

#include <vector>

#include "kernels_common.hpp"

namespace gacem::kernels::omp {

namespace {
// Below this many rows the fork/join cost dominates.
constexpr long kMinParallelRows = 64;

// Dense products go through Eigen on fixed row chunks. The chunking does not
// depend on the thread count, so results are reproducible for any team size.
constexpr long kChunkRows = 64;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

long chunks(std::size_t rows) { return (static_cast<long>(rows) + kChunkRows - 1) / kChunkRows; }

std::pair<long, long> chunk_range(long c, std::size_t rows) {
  const long lo = c * kChunkRows;
  return {lo, std::min<long>(lo + kChunkRows, static_cast<long>(rows)) - lo};
}

}  // namespace

void linear_forward(const LinearShape& s, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> y) {
  const auto in = static_cast<Eigen::Index>(s.in), out = static_cast<Eigen::Index>(s.out);
  const ConstMap W(w.data(), out, in);
  const Eigen::Map<const Eigen::RowVectorXd> b(bias.data(), out);
  const long nc = chunks(s.batch);
#pragma omp parallel for schedule(static) if (nc > 1)
  for (long c = 0; c < nc; ++c) {
    const auto [r0, nr] = chunk_range(c, s.batch);
    const ConstMap X(x.data() + r0 * in, nr, in);
    Map Y(y.data() + r0 * out, nr, out);
    Y.noalias() = X * W.transpose();
    Y.rowwise() += b;
  }
}

void linear_backward_input(const LinearShape& s, std::span<const double> dy, std::span<const double> w,
                           std::span<double> dx) {
  const auto in = static_cast<Eigen::Index>(s.in), out = static_cast<Eigen::Index>(s.out);
  const ConstMap W(w.data(), out, in);
  const long nc = chunks(s.batch);
#pragma omp parallel for schedule(static) if (nc > 1)
  for (long c = 0; c < nc; ++c) {
    const auto [r0, nr] = chunk_range(c, s.batch);
    const ConstMap DY(dy.data() + r0 * out, nr, out);
    Map DX(dx.data() + r0 * in, nr, in);
    DX.noalias() += DY * W;
  }
}

void linear_backward_params(const LinearShape& s, std::span<const double> dy, std::span<const double> x,
                            std::span<const double> mask, std::span<double> dw, std::span<double> db) {
  const auto in = static_cast<Eigen::Index>(s.in), out = static_cast<Eigen::Index>(s.out);
  const auto n = static_cast<Eigen::Index>(s.batch);
  const ConstMap DY(dy.data(), n, out);
  const ConstMap X(x.data(), n, in);
  const ConstMap M(mask.data(), out, in);
  // Chunks over output rows: each weight row is summed over the whole batch by one thread.
  const long nc = chunks(s.out);
#pragma omp parallel for schedule(static) if (nc > 1 && s.batch >= static_cast<std::size_t>(kMinParallelRows))
  for (long c = 0; c < nc; ++c) {
    const auto [o0, no] = chunk_range(c, s.out);
    const RowMat g = DY.middleCols(o0, no).transpose() * X;
    Map DW(dw.data() + o0 * in, no, in);
    DW += g.cwiseProduct(M.middleRows(o0, no));
    Eigen::Map<Eigen::RowVectorXd>(db.data() + o0, no) += DY.middleCols(o0, no).colwise().sum();
  }
}

void mixture_log_prob(const MixtureShape& s, std::span<const double> logits, std::span<const double> mu,
                      std::span<const double> sigma, std::span<const int> bins, std::span<double> lp,
                      const MixtureJacobian* jac) {
  const std::size_t K = s.components;
  const long n = static_cast<long>(s.batch);
#pragma omp parallel for schedule(static) if (n >= kMinParallelRows / 4)
  for (long r = 0; r < n; ++r) {
    const std::size_t off = static_cast<std::size_t>(r) * K;
    lp[r] = detail::mixture_row_log_prob(K, s.num_bins, logits.data() + off, mu.data() + off,
                                         sigma.data() + off, bins[r],
                                         jac ? jac->d_logits.data() + off : nullptr,
                                         jac ? jac->d_mu.data() + off : nullptr,
                                         jac ? jac->d_sigma.data() + off : nullptr);
  }
}

void mixture_sample(const MixtureShape& s, std::span<const double> logits, std::span<const double> mu,
                    std::span<const double> sigma, std::span<const double> uniforms, std::span<int> bins) {
  const std::size_t K = s.components;
  const long n = static_cast<long>(s.batch);
#pragma omp parallel for schedule(static) if (n >= kMinParallelRows)
  for (long r = 0; r < n; ++r) {
    const std::size_t off = static_cast<std::size_t>(r) * K;
    bins[r] = detail::mixture_row_sample(K, s.num_bins, logits.data() + off, mu.data() + off,
                                         sigma.data() + off, uniforms[2 * r], uniforms[2 * r + 1]);
  }
}

void mixture_pmf(const MixtureShape& s, std::span<const double> logits, std::span<const double> mu,
                 std::span<const double> sigma, std::span<double> pmf) {
  const std::size_t K = s.components;
  const auto bins = static_cast<std::size_t>(s.num_bins);
  const long n = static_cast<long>(s.batch);
#pragma omp parallel for schedule(static) if (n >= 8)
  for (long r = 0; r < n; ++r) {
    const std::size_t off = static_cast<std::size_t>(r) * K;
    detail::mixture_row_pmf(K, s.num_bins, logits.data() + off, mu.data() + off, sigma.data() + off,
                            pmf.data() + r * bins);
  }
}

}  // namespace gacem::kernels::omp

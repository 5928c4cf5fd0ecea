#include <cmath>
#include <vector>

#include "kernels_common.hpp"

namespace gacem::kernels {

int bin_of(double normalized, int num_bins) {
  const int b = static_cast<int>(std::floor((normalized + 1.0) * 0.5 * num_bins));
  return b < 0 ? 0 : (b >= num_bins ? num_bins - 1 : b);
}

namespace serial {

void linear_forward(const LinearShape& s, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> y) {
  std::vector<double> wt;
  detail::transpose(w, s.out, s.in, wt);
  for (std::size_t r = 0; r < s.batch; ++r)
    detail::linear_row(s, x.data() + r * s.in, wt.data(), bias.data(), y.data() + r * s.out);
}

void linear_backward_input(const LinearShape& s, std::span<const double> dy, std::span<const double> w,
                           std::span<double> dx) {
  for (std::size_t r = 0; r < s.batch; ++r)
    detail::linear_input_row(s, dy.data() + r * s.out, w.data(), dx.data() + r * s.in);
}

void linear_backward_params(const LinearShape& s, std::span<const double> dy, std::span<const double> x,
                            std::span<const double> mask, std::span<double> dw, std::span<double> db) {
  for (std::size_t o = 0; o < s.out; ++o)
    detail::linear_params_row(s, o, dy.data(), x.data(), mask.data(), dw.data(), db.data());
}

void mixture_log_prob(const MixtureShape& s, std::span<const double> logits, std::span<const double> mu,
                      std::span<const double> sigma, std::span<const int> bins, std::span<double> lp,
                      const MixtureJacobian* jac) {
  const std::size_t K = s.components;
  for (std::size_t r = 0; r < s.batch; ++r) {
    const std::size_t off = r * K;
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
  for (std::size_t r = 0; r < s.batch; ++r) {
    const std::size_t off = r * K;
    bins[r] = detail::mixture_row_sample(K, s.num_bins, logits.data() + off, mu.data() + off,
                                         sigma.data() + off, uniforms[2 * r], uniforms[2 * r + 1]);
  }
}

void mixture_pmf(const MixtureShape& s, std::span<const double> logits, std::span<const double> mu,
                 std::span<const double> sigma, std::span<double> pmf) {
  const std::size_t K = s.components;
  const auto n = static_cast<std::size_t>(s.num_bins);
  for (std::size_t r = 0; r < s.batch; ++r) {
    const std::size_t off = r * K;
    detail::mixture_row_pmf(K, s.num_bins, logits.data() + off, mu.data() + off, sigma.data() + off,
                            pmf.data() + r * n);
  }
}

}  // namespace serial
}  // namespace gacem::kernels

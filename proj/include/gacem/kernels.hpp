#pragma once

// Hot loops of the density model. Two implementations share one signature:
// `serial` is the straightforward reference, `omp` is the production path.
// The mixture kernels share their per-row bodies and are bitwise identical;
// the dense products in `omp` use Eigen on fixed row chunks and agree with the
// reference to rounding. Every output element is written by exactly one
// thread, so `omp` results do not depend on the thread count. Library code
// calls the functions in the top-level `kernels` namespace, which forward to `omp`.

#include <cstddef>
#include <span>

namespace gacem::kernels {

struct LinearShape {
  std::size_t batch;
  std::size_t in;
  std::size_t out;
};

struct MixtureShape {
  std::size_t batch;
  std::size_t components;
  int num_bins;
};

/// Per-row partial derivatives of the binned mixture log-probability.
struct MixtureJacobian {
  std::span<double> d_logits;
  std::span<double> d_mu;
  std::span<double> d_sigma;
};

#define GACEM_KERNEL_DECLS                                                                                  \
  /* y = x·wᵀ + bias; x [batch,in], w [out,in], y [batch,out] */                                            \
  void linear_forward(const LinearShape& s, std::span<const double> x, std::span<const double> w,           \
                      std::span<const double> bias, std::span<double> y);                                 \
  /* dx += dy·w */                                                                                           \
  void linear_backward_input(const LinearShape& s, std::span<const double> dy, std::span<const double> w,   \
                             std::span<double> dx);                                                          \
  /* dw += (dyᵀ·x)∘mask, db += Σ_rows dy */                                                                  \
  void linear_backward_params(const LinearShape& s, std::span<const double> dy, std::span<const double> x,  \
                              std::span<const double> mask, std::span<double> dw, std::span<double> db);     \
  /* lp[r] = log P(bin[r]) under the binned mixture of row r; fills jac when non-empty */                   \
  void mixture_log_prob(const MixtureShape& s, std::span<const double> logits, std::span<const double> mu,  \
                        std::span<const double> sigma, std::span<const int> bins, std::span<double> lp,     \
                        const MixtureJacobian* jac);                                                         \
  /* Exact draw of one bin per row; uniforms holds two U(0,1) per row */                                      \
  void mixture_sample(const MixtureShape& s, std::span<const double> logits, std::span<const double> mu,    \
                      std::span<const double> sigma, std::span<const double> uniforms, std::span<int> bins); \
  /* Full per-bin pmf, out [batch, num_bins] */                                                              \
  void mixture_pmf(const MixtureShape& s, std::span<const double> logits, std::span<const double> mu,       \
                   std::span<const double> sigma, std::span<double> pmf);

namespace serial {
GACEM_KERNEL_DECLS
}
namespace omp {
GACEM_KERNEL_DECLS
}

#undef GACEM_KERNEL_DECLS

using omp::linear_backward_input;
using omp::linear_backward_params;
using omp::linear_forward;
using omp::mixture_log_prob;
using omp::mixture_pmf;
using omp::mixture_sample;

/// Bin index of a point on the normalized axis, clamped to [0, num_bins).
int bin_of(double normalized, int num_bins);
/// Center of bin b on the normalized axis.
inline double bin_center(int b, int num_bins) { return -1.0 + (2.0 / num_bins) * (b + 0.5); }
inline double bin_edge(int j, int num_bins) { return -1.0 + (2.0 / num_bins) * j; }

}  // namespace gacem::kernels

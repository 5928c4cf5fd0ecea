#pragma once

// Per-row bodies shared by the serial and OpenMP kernels.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "gacem/kernels.hpp"
#include "gacem/normal.hpp"

namespace gacem::kernels::detail {

constexpr int kMaxStackComponents = 256;

inline void transpose(std::span<const double> w, std::size_t out, std::size_t in, std::vector<double>& wt) {
  wt.resize(out * in);
  for (std::size_t o = 0; o < out; ++o)
    for (std::size_t i = 0; i < in; ++i) wt[i * out + o] = w[o * in + i];
}

inline void linear_row(const LinearShape& s, const double* __restrict__ x, const double* __restrict__ wt,
                       const double* __restrict__ bias, double* __restrict__ y) {
  std::copy(bias, bias + s.out, y);
  for (std::size_t i = 0; i < s.in; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* __restrict__ col = wt + i * s.out;
    for (std::size_t o = 0; o < s.out; ++o) y[o] += xi * col[o];
  }
}

inline void linear_input_row(const LinearShape& s, const double* __restrict__ dy, const double* __restrict__ w,
                             double* __restrict__ dx) {
  for (std::size_t o = 0; o < s.out; ++o) {
    const double g = dy[o];
    if (g == 0.0) continue;
    const double* __restrict__ row = w + o * s.in;
    for (std::size_t i = 0; i < s.in; ++i) dx[i] += g * row[i];
  }
}

inline void linear_params_row(const LinearShape& s, std::size_t o, const double* dy, const double* x,
                              const double* mask, double* dw, double* db) {
  double* __restrict__ dwo = dw + o * s.in;
  const double* __restrict__ mo = mask + o * s.in;
  double bias_acc = 0.0;
  for (std::size_t r = 0; r < s.batch; ++r) {
    const double g = dy[r * s.out + o];
    bias_acc += g;
    if (g == 0.0) continue;
    const double* __restrict__ xr = x + r * s.in;
    for (std::size_t i = 0; i < s.in; ++i) dwo[i] += g * xr[i] * mo[i];
  }
  db[o] += bias_acc;
}

// log P(bin) for one row and, optionally, its partials.
//   log P = lse_k(l_k + A_k) - lse_k(l_k + C_k)
// with A_k the log mass of component k inside the bin and C_k its log mass
// inside [-1, 1]. The softmax normalizer of the logits cancels.
inline double mixture_row_log_prob(std::size_t K, int num_bins, const double* logits, const double* mu,
                                   const double* sigma, int bin, double* d_logits, double* d_mu,
                                   double* d_sigma) {
  const double lo_edge = bin_edge(bin, num_bins);
  const double hi_edge = bin_edge(bin + 1, num_bins);
  double a_terms[kMaxStackComponents];
  double c_terms[kMaxStackComponents];
  normal::LogMass a_mass[kMaxStackComponents];
  normal::LogMass c_mass[kMaxStackComponents];
  for (std::size_t k = 0; k < K; ++k) {
    const double inv = 1.0 / sigma[k];
    a_mass[k] = normal::log_mass((lo_edge - mu[k]) * inv, (hi_edge - mu[k]) * inv);
    c_mass[k] = normal::log_mass((-1.0 - mu[k]) * inv, (1.0 - mu[k]) * inv);
    a_terms[k] = logits[k] + a_mass[k].value;
    c_terms[k] = logits[k] + c_mass[k].value;
  }
  const double lse_a = normal::log_sum_exp(a_terms, K);
  const double lse_c = normal::log_sum_exp(c_terms, K);
  if (d_logits != nullptr) {
    for (std::size_t k = 0; k < K; ++k) {
      const double r = std::exp(a_terms[k] - lse_a);
      const double q = std::exp(c_terms[k] - lse_c);
      const double inv = 1.0 / sigma[k];
      const double alo = (lo_edge - mu[k]) * inv;
      const double ahi = (hi_edge - mu[k]) * inv;
      const double clo = (-1.0 - mu[k]) * inv;
      const double chi = (1.0 - mu[k]) * inv;
      d_logits[k] = r - q;
      d_mu[k] = -inv * (r * (a_mass[k].d_lo + a_mass[k].d_hi) - q * (c_mass[k].d_lo + c_mass[k].d_hi));
      d_sigma[k] = -inv * (r * (a_mass[k].d_lo * alo + a_mass[k].d_hi * ahi) -
                           q * (c_mass[k].d_lo * clo + c_mass[k].d_hi * chi));
    }
  }
  return lse_a - lse_c;
}

inline void mixture_row_pmf(std::size_t K, int num_bins, const double* logits, const double* mu,
                            const double* sigma, double* pmf) {
  double terms[kMaxStackComponents];
  for (int b = 0; b < num_bins; ++b) {
    const double lo = bin_edge(b, num_bins);
    const double hi = bin_edge(b + 1, num_bins);
    for (std::size_t k = 0; k < K; ++k) {
      terms[k] = logits[k] + normal::log_mass((lo - mu[k]) / sigma[k], (hi - mu[k]) / sigma[k]).value;
    }
    pmf[b] = normal::log_sum_exp(terms, K);
  }
  const double z = normal::log_sum_exp(pmf, static_cast<std::size_t>(num_bins));
  for (int b = 0; b < num_bins; ++b) pmf[b] = std::exp(pmf[b] - z);
}

// Pick a component with probability ∝ π_k·mass_k([-1,1]), then invert that
// component's truncated CDF. Components whose mass in [-1,1] is too small for
// the inversion fall back to the explicit per-bin pmf.
inline int mixture_row_sample(std::size_t K, int num_bins, const double* logits, const double* mu,
                              const double* sigma, double u_component, double u_value) {
  double terms[kMaxStackComponents];
  for (std::size_t k = 0; k < K; ++k) {
    terms[k] = logits[k] + normal::log_mass((-1.0 - mu[k]) / sigma[k], (1.0 - mu[k]) / sigma[k]).value;
  }
  const double z = normal::log_sum_exp(terms, K);
  std::size_t pick = K - 1;
  double acc = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    acc += std::exp(terms[k] - z);
    if (u_component < acc) {
      pick = k;
      break;
    }
  }
  const double lo = (-1.0 - mu[pick]) / sigma[pick];
  const double hi = (1.0 - mu[pick]) / sigma[pick];
  if (terms[pick] - logits[pick] > -600.0) {
    const double t = normal::truncated_inverse(lo, hi, u_value);
    return bin_of(mu[pick] + sigma[pick] * t, num_bins);
  }
  std::vector<double> pmf(static_cast<std::size_t>(num_bins));
  const double one_logit = 0.0;
  mixture_row_pmf(1, num_bins, &one_logit, &mu[pick], &sigma[pick], pmf.data());
  double c = 0.0;
  for (int b = 0; b < num_bins; ++b) {
    c += pmf[b];
    if (u_value < c) return b;
  }
  return num_bins - 1;
}

}  // namespace gacem::kernels::detail

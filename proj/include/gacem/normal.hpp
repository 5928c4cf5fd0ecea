#pragma once

// Scalar standard-normal helpers shared by the density model, the Gaussian
// baselines and the metrics. Everything here is thread-safe and allocation-free.

#include <cmath>
#include <cstddef>
#include <numbers>

namespace gacem::normal {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log √(2π)

/// log N(x; mu, sigma). Throws DomainError for sigma <= 0.
double log_pdf(double x, double mu, double sigma);

inline double std_log_pdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }
inline double std_pdf(double z) { return std::exp(std_log_pdf(z)); }

/// Φ(z).
inline double cdf(double z) { return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0); }

/// log Φ(z), accurate deep into the lower tail.
double log_cdf(double z);

/// Partials of log(Φ(b) - Φ(a)) with respect to a and b.
struct LogMass {
  double value;
  double d_lo;
  double d_hi;
};

/// log(Φ(hi) - Φ(lo)) for lo < hi. Either bound may be infinite.
LogMass log_mass(double lo, double hi);

/// Φ⁻¹(p) for p in (0, 1).
double quantile(double p);

/// Draws from N(0,1) truncated to [lo, hi] by inversion, given u ~ U(0,1).
double truncated_inverse(double lo, double hi, double u);

/// log Σ exp(v_i), stable for any finite input. Empty input gives -inf.
double log_sum_exp(const double* v, std::size_t n);

}  // namespace gacem::normal

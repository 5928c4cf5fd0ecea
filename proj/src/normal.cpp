#include "gacem/normal.hpp"

#include <algorithm>
#include <limits>

#include "gacem/errors.hpp"

namespace gacem::normal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Mills-ratio series for log Φ(z), z ≪ 0.
double log_cdf_asymptotic(double z) {
  const double z2 = z * z;
  double term = 1.0;
  double series = 1.0;
  for (int k = 1; k <= 5; ++k) {
    term *= -(2.0 * k - 1.0) / z2;
    series += term;
  }
  return std_log_pdf(z) - std::log(-z) + std::log(series);
}

}  // namespace

double log_pdf(double x, double mu, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("gaussian log pdf: sigma must be positive");
  const double z = (x - mu) / sigma;
  return -std::log(sigma) - kLogSqrt2Pi - 0.5 * z * z;
}

double log_cdf(double z) {
  if (z == -kInf) return -kInf;
  if (z > 6.0) return std::log1p(-0.5 * std::erfc(z / std::numbers::sqrt2));
  if (z > -30.0) return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2));
  return log_cdf_asymptotic(z);
}

LogMass log_mass(double lo, double hi) {
  LogMass out{};
  if (hi <= 0.0) {
    const double la = log_cdf(lo);
    const double lb = log_cdf(hi);
    out.value = lb + std::log1p(-std::exp(la - lb));
  } else if (lo >= 0.0) {
    const double la = log_cdf(-lo);
    const double lb = log_cdf(-hi);
    out.value = la + std::log1p(-std::exp(lb - la));
  } else {
    const double m = 0.5 * (std::erf(hi / std::numbers::sqrt2) - std::erf(lo / std::numbers::sqrt2));
    out.value = std::log(m);
  }
  out.d_lo = std::isfinite(lo) ? -std::exp(std_log_pdf(lo) - out.value) : 0.0;
  out.d_hi = std::isfinite(hi) ? std::exp(std_log_pdf(hi) - out.value) : 0.0;
  return out;
}

double quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) throw DomainError("normal quantile: p must lie in (0, 1)");
  // Acklam's rational approximation followed by one Halley step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double truncated_inverse(double lo, double hi, double u) {
  // Work in whichever tail keeps the CDF values representable.
  double t;
  if (lo >= 0.0) {
    const double plo = cdf(-hi);
    const double phi = cdf(-lo);
    const double p = phi - u * (phi - plo);
    t = (p > 0.0 && p < 1.0) ? -quantile(p) : lo;
  } else {
    const double plo = cdf(lo);
    const double phi = cdf(hi);
    const double p = plo + u * (phi - plo);
    t = (p > 0.0 && p < 1.0) ? quantile(p) : (p <= 0.0 ? lo : hi);
  }
  return std::clamp(t, lo, hi);
}

double log_sum_exp(const double* v, std::size_t n) {
  if (n == 0) return -kInf;
  const double m = *std::max_element(v, v + n);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

}  // namespace gacem::normal

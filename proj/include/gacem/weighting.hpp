#pragma once

#include <limits>
#include <span>

namespace gacem::train {

/// Shaped reward of a constraint value against the rank threshold f̄:
/// 1 when satisfied, exp(-|f|/|f-f̄|) between 0 and f̄, -exp(-1/|f-f̄|) above f̄.
double compute_weight(double f, double f_bar);

/// The ⌈ρ·n⌉-th smallest value.
double rank_value(std::span<const double> f_values, double rho);

/// Monotone rank threshold: min(previous, rank_value).
class WeightState {
 public:
  explicit WeightState(double rho = 0.4);

  double rho() const { return rho_; }
  double threshold() const { return threshold_; }
  bool initialized() const { return threshold_ < std::numeric_limits<double>::infinity(); }

  double update(std::span<const double> f_values);

 private:
  double rho_;
  double threshold_ = std::numeric_limits<double>::infinity();
};

}  // namespace gacem::train

#pragma once

// Benchmark constraint functions and the constraint wrapper f(x) - γ ≤ 0.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gacem/grid.hpp"

namespace gacem::objectives {

enum class Objective { Ackley, Styblinski, Levy, Synt };

Objective parse_objective(std::string_view name);
std::string_view objective_name(Objective o);
std::vector<std::string> objective_names();

double ackley(std::span<const double> x);
double styblinski(std::span<const double> x);
double levy(std::span<const double> x);
double synt(std::span<const double> x);

double eval(Objective o, std::span<const double> x);

/// Default box and goal threshold for each benchmark.
struct ObjectiveDefaults {
  double lower;
  double upper;
  double threshold;
};
ObjectiveDefaults defaults(Objective o);

struct ConstraintSpec {
  Objective objective;
  double threshold;
};

/// f(x) - γ; the design is satisfying iff this is <= 0.
double constraint_value(const ConstraintSpec& spec, std::span<const double> x);
inline bool satisfied(double constraint) { return constraint <= 0.0; }

/// max_i f_i(x): one constraint equivalent to all of them holding.
double max_aggregate(std::span<const ConstraintSpec> constraints, std::span<const double> x);
double max_aggregate(std::span<const double> constraint_values);

/// Constraint values of every design in a batch (parallel over designs).
std::vector<double> evaluate(const ConstraintSpec& spec, const DesignSpace& space, const GridBatch& designs);

inline constexpr std::uint64_t kMaxEnumeration = 1'000'000;

/// Exact fraction of grid points that satisfy the constraint, by enumeration.
/// Throws CapacityError when the grid has more than kMaxEnumeration points.
double satisfying_fraction(const ConstraintSpec& spec, const DesignSpace& space);
double satisfying_fraction_serial(const ConstraintSpec& spec, const DesignSpace& space);

}  // namespace gacem::objectives

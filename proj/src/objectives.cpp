#include "gacem/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "gacem/errors.hpp"

namespace gacem::objectives {

namespace {

constexpr std::string_view kNames[] = {"ackley", "styblinski", "levy", "synt"};

std::vector<double> point_at(const DesignSpace& space, std::uint64_t index) {
  std::vector<double> x(space.dims());
  const auto r = static_cast<std::uint64_t>(space.resolution());
  for (std::size_t i = 0; i < space.dims(); ++i) {
    x[i] = space.coordinate(i, static_cast<int>(index % r));
    index /= r;
  }
  return x;
}

std::uint64_t enumerable_size(const DesignSpace& space) {
  const std::uint64_t n = space.grid_size();
  if (n == 0 || n > kMaxEnumeration) {
    throw CapacityError("satisfying fraction: grid too large to enumerate (limit " +
                        std::to_string(kMaxEnumeration) + " points)");
  }
  return n;
}

}  // namespace

Objective parse_objective(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kNames); ++i) {
    if (name == kNames[i]) return static_cast<Objective>(i);
  }
  throw ConfigError("unknown objective '" + std::string(name) + "' (expected ackley, styblinski, levy or synt)");
}

std::string_view objective_name(Objective o) { return kNames[static_cast<int>(o)]; }

std::vector<std::string> objective_names() { return {std::begin(kNames), std::end(kNames)}; }

double ackley(std::span<const double> x) {
  const double d = static_cast<double>(x.size());
  double sq = 0.0, cs = 0.0;
  for (double v : x) {
    sq += v * v;
    cs += std::cos(2.0 * std::numbers::pi * v);
  }
  return -20.0 * std::exp(-0.2 * std::sqrt(sq / d)) - std::exp(cs / d) + 20.0 + std::numbers::e;
}

double styblinski(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) {
    const double v2 = v * v;
    s += v2 * v2 - 16.0 * v2 + 5.0 * v;
  }
  return s / static_cast<double>(x.size()) + 50.0;
}

double levy(std::span<const double> x) {
  const double pi = std::numbers::pi;
  const std::size_t d = x.size();
  auto w = [&](std::size_t i) { return 1.0 + (x[i] - 1.0) / 4.0; };
  const double s1 = std::sin(pi * w(0));
  double f = s1 * s1;
  for (std::size_t i = 0; i + 1 < d; ++i) {
    const double wi = w(i);
    const double s = std::sin(pi * wi + 1.0);
    f += (wi - 1.0) * (wi - 1.0) * (1.0 + 10.0 * s * s);
  }
  const double wd = w(d - 1);
  const double sd = std::sin(2.0 * pi * wd);
  f += (wd - 1.0) * (wd - 1.0) * (1.0 + sd * sd);
  return f;
}

double synt(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) {
    const double v2 = v * v;
    s += 0.25 * v2 * v2 - 2.0 * v2 + 5.0;
  }
  return s / static_cast<double>(x.size());
}

double eval(Objective o, std::span<const double> x) {
  if (x.empty()) throw ConfigError("objective: empty design");
  switch (o) {
    case Objective::Ackley: return ackley(x);
    case Objective::Styblinski: return styblinski(x);
    case Objective::Levy: return levy(x);
    case Objective::Synt: return synt(x);
  }
  throw ConfigError("objective: unknown identifier");
}

ObjectiveDefaults defaults(Objective o) {
  switch (o) {
    case Objective::Ackley: return {-5.0, 5.0, 3.5};
    case Objective::Styblinski: return {-5.0, 5.0, 20.0};
    case Objective::Levy: return {-10.0, 10.0, 0.4};
    case Objective::Synt: return {-5.0, 5.0, 2.0};
  }
  throw ConfigError("objective: unknown identifier");
}

double constraint_value(const ConstraintSpec& spec, std::span<const double> x) {
  return eval(spec.objective, x) - spec.threshold;
}

double max_aggregate(std::span<const double> constraint_values) {
  if (constraint_values.empty()) throw ConfigError("max aggregate: at least one constraint required");
  return *std::max_element(constraint_values.begin(), constraint_values.end());
}

double max_aggregate(std::span<const ConstraintSpec> constraints, std::span<const double> x) {
  if (constraints.empty()) throw ConfigError("max aggregate: at least one constraint required");
  std::vector<double> v;
  v.reserve(constraints.size());
  for (const auto& c : constraints) v.push_back(constraint_value(c, x));
  return max_aggregate(v);
}

std::vector<double> evaluate(const ConstraintSpec& spec, const DesignSpace& space, const GridBatch& designs) {
  const long n = static_cast<long>(designs.size());
  std::vector<double> out(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static) if (n >= 256)
  for (long i = 0; i < n; ++i) {
    const std::vector<double> x = space.coordinates(designs.row(static_cast<std::size_t>(i)));
    out[static_cast<std::size_t>(i)] = constraint_value(spec, x);
  }
  return out;
}

double satisfying_fraction(const ConstraintSpec& spec, const DesignSpace& space) {
  const std::uint64_t n = enumerable_size(space);
  long long hits = 0;
  const long long total = static_cast<long long>(n);
#pragma omp parallel for schedule(static) reduction(+ : hits)
  for (long long i = 0; i < total; ++i) {
    if (satisfied(constraint_value(spec, point_at(space, static_cast<std::uint64_t>(i))))) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

double satisfying_fraction_serial(const ConstraintSpec& spec, const DesignSpace& space) {
  const std::uint64_t n = enumerable_size(space);
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    if (satisfied(constraint_value(spec, point_at(space, i)))) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

}  // namespace gacem::objectives

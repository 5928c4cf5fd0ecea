#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "gacem/errors.hpp"
#include "gacem/objectives.hpp"

using namespace gacem;
using namespace gacem::objectives;

TEST_CASE("closed-form values") {
  const std::vector<double> zeros(5, 0.0), ones(4, 1.0);
  CHECK(std::abs(ackley(zeros)) < 1e-12);
  CHECK(std::abs(levy(ones)) < 1e-12);
  for (std::vector<double> x : {std::vector<double>{2, 2}, {-2, 2}, {2, -2, -2}, {-2}})
    CHECK(synt(x) == doctest::Approx(1.0).epsilon(1e-15));
  // Per-dimension quartic at its minimizer, in extended precision.
  const long double s = -2.903534L;
  const double oracle = static_cast<double>(s * s * s * s - 16 * s * s + 5 * s + 50);
  const std::vector<double> st(3, -2.903534);
  CHECK(styblinski(st) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(std::abs(styblinski(st) - (-28.3320)) < 1e-3);
}

TEST_CASE("names and errors") {
  for (const auto& n : objective_names()) CHECK(objective_name(parse_objective(n)) == n);
  CHECK(parse_objective("synt") == Objective::Synt);
  CHECK_THROWS_AS(parse_objective("rosenbrock"), ConfigError);
  CHECK_THROWS_AS(eval(static_cast<Objective>(17), std::vector<double>{1.0}), ConfigError);
  CHECK_THROWS_AS(eval(Objective::Synt, std::vector<double>{}), ConfigError);
}

TEST_CASE("constraint values") {
  CHECK(constraint_value({Objective::Synt, 2.0}, std::vector<double>{2, 2}) == doctest::Approx(-1.0));
  CHECK(constraint_value({Objective::Ackley, 3.5}, std::vector<double>{0, 0}) == doctest::Approx(-3.5));
  CHECK(constraint_value({Objective::Levy, 0.4}, std::vector<double>{1, 1, 1}) == doctest::Approx(-0.4));
  CHECK(satisfied(0.0));
  CHECK(satisfied(-1.0));
  CHECK_FALSE(satisfied(1e-12));
}

TEST_CASE("max aggregation") {
  CHECK(max_aggregate(std::vector<double>{-1, -2}) == -1);
  CHECK(max_aggregate(std::vector<double>{-1, 3}) == 3);
  CHECK_THROWS_AS(max_aggregate(std::vector<double>{}), ConfigError);
  const std::vector<double> x{0.3, -1.2};
  const ConstraintSpec one[] = {{Objective::Ackley, 3.5}};
  CHECK(max_aggregate(one, x) == constraint_value(one[0], x));
  const ConstraintSpec two[] = {{Objective::Ackley, 3.5}, {Objective::Synt, 2.0}};
  CHECK(max_aggregate(two, x) == std::max(constraint_value(two[0], x), constraint_value(two[1], x)));
  CHECK_THROWS_AS(max_aggregate(std::span<const ConstraintSpec>{}, x), ConfigError);
}

TEST_CASE("satisfying fraction") {
  const DesignSpace sq = DesignSpace::cube(2, -5, 5, 100);
  CHECK(satisfying_fraction({Objective::Synt, 0.5}, sq) == 0.0);
  CHECK(satisfying_fraction({Objective::Synt, 1e6}, sq) == 1.0);
  // Frozen from an exhaustive enumeration of the 100x100 grid.
  const double frozen = 0.0696;
  CHECK(satisfying_fraction({Objective::Synt, 2.0}, sq) == doctest::Approx(frozen).epsilon(1e-12));
  // Independent enumeration with the closed form written out.
  int count = 0;
  for (int a = 0; a < 100; ++a)
    for (int b = 0; b < 100; ++b) {
      const double x = -5 + 0.1 * (a + 0.5), y = -5 + 0.1 * (b + 0.5);
      const double f = 0.5 * ((0.25 * x * x * x * x - 2 * x * x + 5) + (0.25 * y * y * y * y - 2 * y * y + 5));
      count += f - 2.0 <= 0.0;
    }
  CHECK(count == 696);
  for (auto o : {Objective::Ackley, Objective::Styblinski, Objective::Levy}) {
    const auto d = defaults(o);
    const DesignSpace s = DesignSpace::cube(2, d.lower, d.upper, 100);
    CHECK(satisfying_fraction({o, d.threshold}, s) == satisfying_fraction_serial({o, d.threshold}, s));
  }
  CHECK_THROWS_AS(satisfying_fraction({Objective::Synt, 2.0}, DesignSpace::cube(4, -5, 5, 100)), CapacityError);
}

TEST_CASE("permutation invariance") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> x(4);
    for (double& v : x) v = u(rng);
    std::vector<double> y = x;
    std::shuffle(y.begin(), y.end(), rng);
    CHECK(ackley(x) == doctest::Approx(ackley(y)).epsilon(1e-13));
    CHECK(styblinski(x) == doctest::Approx(styblinski(y)).epsilon(1e-13));
    CHECK(synt(x) == doctest::Approx(synt(y)).epsilon(1e-13));
  }
}

TEST_CASE("minimizers bound random points from below") {
  std::mt19937_64 rng(2);
  const std::size_t d = 3;
  const double floor_ackley = ackley(std::vector<double>(d, 0.0));
  const double floor_levy = levy(std::vector<double>(d, 1.0));
  const double floor_synt = synt(std::vector<double>(d, 2.0));
  const double floor_sty = styblinski(std::vector<double>(d, -2.903534));
  std::uniform_real_distribution<double> u5(-5, 5), u10(-10, 10);
  std::size_t violations = 0;
  std::vector<double> x(d);
  for (int t = 0; t < 1000000; ++t) {
    for (double& v : x) v = u5(rng);
    violations += ackley(x) < floor_ackley;
    violations += synt(x) < floor_synt - 1e-12;
    violations += styblinski(x) < floor_sty - 1e-9;
    for (double& v : x) v = u10(rng);
    violations += levy(x) < floor_levy;
  }
  CHECK(violations == 0);
}

TEST_CASE("batch evaluation matches pointwise") {
  const DesignSpace s = DesignSpace::cube(3, -10, 10, 50);
  GridBatch g(3, 0);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> b(0, 49);
  for (int i = 0; i < 500; ++i) {
    const int row[] = {b(rng), b(rng), b(rng)};
    g.push_back(row);
  }
  const ConstraintSpec spec{Objective::Levy, 0.4};
  const auto v = evaluate(spec, s, g);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(v[i] == constraint_value(spec, s.coordinates(g.row(i))));
}

TEST_CASE("design space") {
  const DesignSpace s({-5, 0}, {5, 2}, 100);
  for (std::size_t dim = 0; dim < 2; ++dim)
    for (int b = 0; b < 100; ++b) {
      const double x = s.coordinate(dim, b);
      CHECK(s.snap(dim, x) == b);
      CHECK(std::abs(s.from_normalized(dim, s.to_normalized(dim, x)) - x) < 1e-12);
      CHECK(x > s.lower()[dim]);
      CHECK(x < s.upper()[dim]);
    }
  CHECK(s.bin_width() * s.resolution() == 2.0);
  CHECK(s.snap(0, -100) == 0);
  CHECK(s.snap(0, 100) == 99);
  CHECK(s.grid_size() == 10000);
  CHECK(DesignSpace::cube(20, -5, 5, 100).grid_size() == 0);
  CHECK(s.on_grid(std::vector<int>{0, 99}));
  CHECK_FALSE(s.on_grid(std::vector<int>{0, 100}));
  CHECK_FALSE(s.on_grid(std::vector<int>{0}));
  CHECK_THROWS_AS(DesignSpace({1}, {1}, 10), ConfigError);
  CHECK_THROWS_AS(DesignSpace({0, 0}, {1}, 10), ConfigError);
  CHECK_THROWS_AS(DesignSpace({}, {}, 10), ConfigError);
}

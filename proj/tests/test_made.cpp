#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include "gacem/checkpoint.hpp"
#include "gacem/errors.hpp"
#include "gacem/kernels.hpp"
#include "gacem/made.hpp"

using namespace gacem;
using namespace gacem::model;
using ad::Tensor;

namespace {

ModelConfig tiny(std::size_t d, std::size_t K, bool learned_sigma = true) {
  ModelConfig c;
  c.dims = d;
  c.num_mixtures = K;
  c.hidden = {8, 8};
  c.first_unit_hidden = {4};
  if (!learned_sigma) c.fixed_sigma = 0.2;
  c.grid = 20;
  return c;
}

void randomize(MadeModel& m, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  for (ad::Parameter* p : m.parameters())
    for (double& v : p->value.storage()) v = u(rng);
}

ad::Parameter& head_bias(MadeModel& m) {
  const std::string name = "net." + std::to_string(m.config().hidden.size()) + ".bias";
  for (ad::Parameter* p : m.parameters())
    if (p->name == name) return *p;
  throw std::runtime_error("no head bias");
}

Tensor random_inputs(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Tensor x = Tensor::matrix(n, d);
  for (double& v : x.storage()) v = u(rng);
  return x;
}

// Every design of a d-dimensional grid with N cells per axis.
GridBatch enumerate(std::size_t d, int N) {
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= static_cast<std::size_t>(N);
  GridBatch g(d, total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    for (std::size_t j = 0; j < d; ++j) {
      g.bins[idx * d + j] = static_cast<int>(rest % N);
      rest /= N;
    }
  }
  return g;
}

// Boolean reachability through the mask chain, independent of the library.
std::vector<std::vector<bool>> reach(const MaskSet& masks) {
  const Tensor& first = masks.layers.front();
  std::vector<std::vector<bool>> r(first.rows(), std::vector<bool>(first.cols()));
  for (std::size_t o = 0; o < first.rows(); ++o)
    for (std::size_t j = 0; j < first.cols(); ++j) r[o][j] = first.at(o, j) != 0.0;
  for (std::size_t l = 1; l < masks.layers.size(); ++l) {
    const Tensor& m = masks.layers[l];
    std::vector<std::vector<bool>> next(m.rows(), std::vector<bool>(first.cols()));
    for (std::size_t o = 0; o < m.rows(); ++o)
      for (std::size_t h = 0; h < m.cols(); ++h)
        if (m.at(o, h) != 0.0)
          for (std::size_t j = 0; j < first.cols(); ++j) next[o][j] = next[o][j] || r[h][j];
    r = std::move(next);
  }
  return r;
}

}  // namespace

TEST_CASE("masks") {
  SUBCASE("d=3") {
    ModelConfig c = tiny(3, 2);
    const MaskSet m = build_masks(c);
    const auto r = reach(m);
    const std::size_t w = c.block_width();
    for (std::size_t o = 0; o < 3 * w; ++o) {
      const std::size_t block = o / w;
      CHECK_FALSE(r[o][0] != (block >= 1));
      CHECK_FALSE(r[o][1] != (block >= 2));
      CHECK_FALSE(r[o][2]);
    }
  }
  SUBCASE("d=1 has no input connectivity") {
    const auto r = reach(build_masks(tiny(1, 3)));
    for (const auto& row : r) CHECK_FALSE(row[0]);
  }
  SUBCASE("d=5, hidden 100: block lower-triangular") {
    ModelConfig c;
    c.dims = 5;
    c.num_mixtures = 3;
    c.hidden = {100, 100, 100};
    const MaskSet m = build_masks(c);
    const auto r = reach(m);
    const Tensor lib = composite_connectivity(m);
    const std::size_t w = c.block_width();
    for (std::size_t o = 0; o < 5 * w; ++o)
      for (std::size_t j = 0; j < 5; ++j) {
        REQUIRE(r[o][j] == (j < o / w));
        REQUIRE((lib.at(o, j) != 0.0) == r[o][j]);
      }
    CHECK(m.hidden_degrees_first[0] == 1);
    CHECK(m.hidden_degrees_first[3] == 4);
    CHECK(m.hidden_degrees_first[4] == 1);
  }
  SUBCASE("invalid configs") {
    ModelConfig c = tiny(0, 2);
    CHECK_THROWS_AS(build_masks(c), ConfigError);
    c = tiny(2, 0);
    CHECK_THROWS_AS(build_masks(c), ConfigError);
    c = tiny(2, 2);
    c.hidden = {4, 0};
    CHECK_THROWS_AS(build_masks(c), ConfigError);
  }
}

TEST_CASE("autoregressive property under perturbation") {
  std::mt19937_64 rng(1);
  for (std::size_t d : {2, 3, 5}) {
    MadeModel m(tiny(d, 3), 7);
    randomize(m, rng, 0.8);
    const Tensor x = random_inputs(6, d, rng);
    const MixtureParams base = m.mixture_params(x);
    for (std::size_t j = 0; j < d; ++j) {
      Tensor y = x;
      for (std::size_t r = 0; r < 6; ++r) y.at(r, j) = -0.9 * y.at(r, j) + 0.05;
      const MixtureParams moved = m.mixture_params(y);
      for (std::size_t dim = 0; dim <= j; ++dim)
        for (std::size_t r = 0; r < 6; ++r)
          for (std::size_t k = 0; k < 3; ++k) {
            const std::size_t o = base.offset(dim, r) + k;
            REQUIRE(base.logits[o] == moved.logits[o]);
            REQUIRE(base.mu[o] == moved.mu[o]);
            REQUIRE(base.sigma[o] == moved.sigma[o]);
          }
      if (j + 1 < d) {
        bool changed = false;
        for (std::size_t i = base.offset(j + 1, 0); i < base.offset(j + 1, 0) + 6 * 3; ++i)
          changed = changed || base.mu[i] != moved.mu[i];
        CHECK(changed);
      }
    }
  }
}

TEST_CASE("fresh model has uniform mixing weights") {
  ModelConfig c;
  c.dims = 3;
  MadeModel m(c, 123);
  std::mt19937_64 rng(2);
  const MixtureParams p = m.mixture_params(random_inputs(10, 3, rng));
  for (std::size_t dim = 0; dim < 3; ++dim)
    for (std::size_t r = 0; r < 10; ++r)
      for (double w : p.weights(dim, r)) REQUIRE(std::abs(w - 1.0 / 40) < 1e-6);
}

TEST_CASE("batch forward equals per-sample forward") {
  std::mt19937_64 rng(3);
  MadeModel m(tiny(3, 4), 5);
  randomize(m, rng, 0.6);
  const Tensor x = random_inputs(70, 3, rng);
  const MixtureParams batch = m.mixture_params(x);
  for (std::size_t r = 0; r < 70; ++r) {
    Tensor one = Tensor::matrix(1, 3);
    for (std::size_t j = 0; j < 3; ++j) one.at(0, j) = x.at(r, j);
    const MixtureParams single = m.mixture_params(one);
    for (std::size_t dim = 0; dim < 3; ++dim)
      for (std::size_t k = 0; k < 4; ++k) {
        REQUIRE(std::abs(batch.logits[batch.offset(dim, r) + k] - single.logits[single.offset(dim, 0) + k]) <= 1e-12);
        REQUIRE(std::abs(batch.mu[batch.offset(dim, r) + k] - single.mu[single.offset(dim, 0) + k]) <= 1e-12);
        REQUIRE(std::abs(batch.sigma[batch.offset(dim, r) + k] - single.sigma[single.offset(dim, 0) + k]) <= 1e-12);
      }
  }
}

TEST_CASE("inputs outside the box are rejected") {
  MadeModel m(tiny(2, 2), 1);
  CHECK_THROWS_AS(m.mixture_params(Tensor({1, 2}, {0.0, 1.1})), DomainError);
  CHECK_THROWS_AS(m.mixture_params(Tensor({1, 3}, {0.0, 0.1, 0.2})), DimensionError);
  GridBatch off(2, 1);
  off.bins = {3, 20};
  CHECK_THROWS_AS(m.log_prob(off), ContractError);
}

TEST_CASE("discrete pmf is normalized") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    MadeModel m(tiny(2, 3, trial % 2 == 0), 9 + trial);
    randomize(m, rng, 1.0);
    const Tensor x = random_inputs(5, 2, rng);
    for (std::size_t dim = 0; dim < 2; ++dim) {
      const auto pmf = m.conditional_pmf(x, dim);
      for (std::size_t r = 0; r < 5; ++r) {
        double t = 0.0;
        for (int b = 0; b < 20; ++b) {
          REQUIRE(pmf[r * 20 + b] >= 0.0);
          t += pmf[r * 20 + b];
        }
        REQUIRE(std::abs(t - 1.0) < 1e-6);
      }
    }
    const GridBatch all = enumerate(2, 20);
    double total = 0.0;
    for (double lp : m.log_prob(all)) total += std::exp(lp);
    CHECK(std::abs(total - 1.0) < 1e-6);
  }
}

TEST_CASE("flat and concentrated limits") {
  SUBCASE("K=1, sigma=10: flat within 2%") {
    ModelConfig c = tiny(1, 1);
    c.fixed_sigma = 10.0;
    c.grid = 100;
    MadeModel m(c, 1);
    const auto lp = m.log_prob(enumerate(1, 100));
    // Numeric integration of a unit-mass Gaussian over each cell, renormalized on [-1, 1].
    std::vector<double> oracle(100);
    double total = 0.0;
    for (int b = 0; b < 100; ++b) {
      const double lo = kernels::bin_edge(b, 100), hi = kernels::bin_edge(b + 1, 100);
      double acc = 0.0;
      for (int s = 0; s < 200; ++s) {
        const double t = lo + (hi - lo) * (s + 0.5) / 200;
        acc += std::exp(-0.5 * t * t / 100.0) * (hi - lo) / 200;
      }
      oracle[b] = acc;
      total += acc;
    }
    for (int b = 0; b < 100; ++b) {
      CHECK(std::abs(std::exp(lp[b]) * 100 - 1.0) < 0.02);
      CHECK(std::exp(lp[b]) == doctest::Approx(oracle[b] / total).epsilon(1e-6));
    }
  }
  SUBCASE("K=1, sigma=1e-4 at a bin center") {
    ModelConfig c = tiny(1, 1);
    c.fixed_sigma = 1e-4;
    c.grid = 100;
    MadeModel m(c, 1);
    head_bias(m).value[1] = kernels::bin_center(37, 100);
    const auto lp = m.log_prob(enumerate(1, 100));
    CHECK(std::exp(lp[37]) > 0.999);
  }
}

TEST_CASE("sampling") {
  std::mt19937_64 rng(5);
  SUBCASE("samples are on the grid and deterministic") {
    MadeModel m(tiny(3, 3), 6);
    randomize(m, rng, 0.7);
    const GridBatch a = m.sample(500, 11), b = m.sample(500, 11), c = m.sample(500, 12);
    CHECK(a.bins == b.bins);
    CHECK(a.bins != c.bins);
    for (int v : a.bins) {
      REQUIRE(v >= 0);
      REQUIRE(v < 20);
    }
  }
  SUBCASE("d=1 histogram matches the pmf") {
    ModelConfig c = tiny(1, 3);
    c.grid = 100;
    MadeModel m(c, 6);
    randomize(m, rng, 1.0);
    const std::size_t n = 100000;
    const GridBatch s = m.sample(n, 99);
    std::vector<double> hist(100, 0.0);
    for (int b : s.bins) hist[b] += 1.0 / n;
    const auto lp = m.log_prob(enumerate(1, 100));
    double tv = 0.0;
    for (int b = 0; b < 100; ++b) tv += 0.5 * std::abs(hist[b] - std::exp(lp[b]));
    CHECK(tv < 0.02);
  }
  SUBCASE("d=2 sample frequencies follow the joint pmf") {
    ModelConfig c = tiny(2, 2);
    c.grid = 6;
    MadeModel m(c, 6);
    randomize(m, rng, 1.0);
    const std::size_t n = 100000;
    const GridBatch s = m.sample(n, 5);
    std::vector<double> hist(36, 0.0);
    for (std::size_t i = 0; i < n; ++i) hist[s.bins[2 * i] + 6 * s.bins[2 * i + 1]] += 1.0 / n;
    const auto lp = m.log_prob(enumerate(2, 6));
    double tv = 0.0;
    for (int i = 0; i < 36; ++i) tv += 0.5 * std::abs(hist[i] - std::exp(lp[i]));
    CHECK(tv < 0.02);
  }
}

TEST_CASE("entropy estimate") {
  ModelConfig flat;
  flat.dims = 1;
  flat.num_mixtures = 1;
  flat.hidden = {8};
  flat.first_unit_hidden = {4};
  flat.fixed_sigma = 1e4;
  MadeModel uniform1(flat, 1);
  const double h1 = uniform1.entropy_estimate(5000, 1);
  CHECK(std::abs(h1 - std::log(100.0)) < 0.01);

  flat.dims = 2;
  MadeModel uniform2(flat, 1);
  CHECK(std::abs(uniform2.entropy_estimate(5000, 2) - h1) < 0.02);

  ModelConfig point = flat;
  point.dims = 1;
  point.fixed_sigma = 1e-4;
  MadeModel spike(point, 1);
  head_bias(spike).value[1] = kernels::bin_center(60, 100);
  const double h0 = spike.entropy_estimate(5000, 3);
  CHECK(h0 >= 0.0);
  CHECK(h0 < 0.05);
  CHECK_THROWS_AS(spike.entropy_estimate(0, 1), ContractError);
}

TEST_CASE("log-prob gradients agree with finite differences") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 1 + trial % 3, K = 1 + (trial / 3) % 3;
    ModelConfig c = tiny(d, K);
    c.hidden = {1 + static_cast<std::size_t>(trial) % 8, 8};
    MadeModel m(c, 100 + trial);
    randomize(m, rng, 0.5);
    const GridBatch x = m.sample(6, trial);
    std::vector<double> coeffs(6);
    for (double& v : coeffs) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    for (ad::Parameter* p : m.parameters()) p->zero_grad();
    {
      ad::Tape tape;
      tape.backward(ad::weighted_sum(m.log_prob(tape, x), coeffs));
    }
    auto value = [&] {
      const auto lp = m.log_prob(x);
      double s = 0.0;
      for (std::size_t i = 0; i < 6; ++i) s += coeffs[i] * lp[i];
      return s;
    };
    double worst = 0.0;
    for (ad::Parameter* p : m.parameters()) {
      for (std::size_t i = 0; i < p->value.size(); ++i) {
        const double x0 = p->value[i];
        p->value[i] = x0 + 1e-5;
        const double up = value();
        p->value[i] = x0 - 1e-5;
        const double dn = value();
        p->value[i] = x0;
        const double num = (up - dn) / 2e-5;
        worst = std::max(worst, std::abs(num - p->grad[i]) / std::max({std::abs(num), std::abs(p->grad[i]), 1e-6}));
      }
    }
    INFO("trial " << trial);
    CHECK(worst < 1e-3);
  }
}

TEST_CASE("taped and untaped log-prob agree") {
  std::mt19937_64 rng(7);
  MadeModel m(tiny(3, 3), 8);
  randomize(m, rng, 0.7);
  const GridBatch x = m.sample(40, 3);
  ad::Tape tape;
  const ad::Tensor t = m.log_prob(tape, x).value();
  const auto u = m.log_prob(x);
  for (std::size_t i = 0; i < 40; ++i) CHECK(t[i] == doctest::Approx(u[i]).epsilon(1e-12));

  const Tensor pts = random_inputs(10, 3, rng);
  ad::Tape tape2;
  const ad::Tensor ct = m.log_prob_continuous(tape2, pts).value();
  const auto cu = m.log_prob_continuous(pts);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(std::isfinite(cu[i]));
    CHECK(ct[i] == doctest::Approx(cu[i]).epsilon(1e-12));
  }
}

TEST_CASE("fixed sigma is constant everywhere") {
  std::mt19937_64 rng(8);
  ModelConfig c = tiny(3, 4, false);
  c.fixed_sigma = 0.05;
  MadeModel m(c, 2);
  randomize(m, rng, 2.0);
  CHECK(c.block_width() == 8);
  const MixtureParams p = m.mixture_params(random_inputs(25, 3, rng));
  for (double s : p.sigma) REQUIRE(s == 0.05);
}

TEST_CASE("learned sigma is clamped") {
  std::mt19937_64 rng(9);
  MadeModel m(tiny(2, 2), 2);
  randomize(m, rng, 30.0);
  const MixtureParams p = m.mixture_params(random_inputs(25, 2, rng));
  for (double s : p.sigma) {
    REQUIRE(s >= kMinSigma);
    REQUIRE(s <= kMaxSigma);
  }
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  std::mt19937_64 rng(10);
  ModelConfig c = tiny(3, 3);
  MadeModel m(c, 4);
  randomize(m, rng, 1.0);
  const auto path = std::filesystem::temp_directory_path() / "gacem_test_made.ckpt";
  checkpoint::save(checkpoint::from_model(m), path);
  const MadeModel back = checkpoint::to_model(checkpoint::load(path));
  std::filesystem::remove(path);
  const auto a = m.parameters();
  const auto b = back.parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i]->name == b[i]->name);
    CHECK(a[i]->value.storage() == b[i]->value.storage());
  }
  const GridBatch x = m.sample(100, 1);
  CHECK(m.log_prob(x) == back.log_prob(x));
  CHECK(back.sample(100, 1).bins == x.bins);
  CHECK(back.config().hidden == c.hidden);
  CHECK(back.config().fixed_sigma == c.fixed_sigma);

  auto j = checkpoint::to_json(checkpoint::from_model(m));
  j["format"] = "other";
  CHECK_THROWS_AS(checkpoint::from_json(j), ConfigError);
  CHECK_THROWS_AS(checkpoint::load("/nonexistent/model.ckpt"), ConfigError);
}

TEST_CASE("copy_parameters_from") {
  MadeModel a(tiny(2, 2), 1), b(tiny(2, 2), 2);
  std::mt19937_64 rng(11);
  randomize(a, rng, 1.0);
  b.copy_parameters_from(a);
  const GridBatch x = a.sample(20, 1);
  CHECK(a.log_prob(x) == b.log_prob(x));
  MadeModel other(tiny(3, 2), 1);
  CHECK_THROWS_AS(other.copy_parameters_from(a), ConfigError);
}

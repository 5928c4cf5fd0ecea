// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. Optional arguments select criteria by number.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gacem/cem.hpp"
#include "gacem/config.hpp"
#include "gacem/harness.hpp"
#include "gacem/metrics.hpp"
#include "gacem/samplers.hpp"
#include "gacem/trainer.hpp"
#include "gacem/weighting.hpp"

using namespace gacem;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

fs::path work_dir() {
  static const fs::path p = fs::temp_directory_path() / ("gacem-accept-" + std::to_string(::getpid()));
  return p;
}

std::string fmt(double v, int prec = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json full_run(const std::string& objective, const std::string& algo, std::uint64_t seed,
                        std::size_t iters = 60) {
  config::RunConfig cfg;
  cfg.objective = objective;
  cfg.dims = 2;
  cfg.algorithm = algo;
  cfg.seed = seed;
  cfg.max_iterations = iters;
  cfg.out = (work_dir() / (objective + "-" + algo + "-" + std::to_string(seed))).string();
  std::ostringstream quiet;
  const auto out = harness::cmd_run(cfg, quiet);
  std::printf("    %s %s seed %llu: accuracy %s entropy %s coverage %s\n", objective.c_str(), algo.c_str(),
              static_cast<unsigned long long>(seed), fmt(out.metrics["accuracy_pct"].get<double>(), 2).c_str(),
              out.metrics["entropy_per_dim"].is_null() ? "n/a"
                                                       : fmt(out.metrics["entropy_per_dim"].get<double>()).c_str(),
              out.metrics["mode_coverage"].is_null() ? "n/a"
                                                     : std::to_string(out.metrics["mode_coverage"].get<int>()).c_str());
  std::fflush(stdout);
  return out.metrics;
}

const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4, 5};

// 1. Every algorithm spends n_init + T·n_s evaluations by iteration T.
Verdict budget() {
  Verdict v{true, ""};
  for (const auto& name : train::algorithm_names()) {
    config::RunConfig cfg;
    cfg.algorithm = name;
    cfg.max_iterations = 3;
    cfg.record_samples = 100;
    train::Runner r(cfg.to_setup());
    const auto recs = r.run();
    for (const auto& rec : recs) {
      if (rec.evaluations != 50 + 25 * rec.iteration) {
        v.pass = false;
        v.detail += name + " has " + std::to_string(rec.evaluations) + " evals at iteration " +
                    std::to_string(rec.iteration) + "; ";
      }
    }
  }
  if (v.pass) v.detail = "all algorithms at 50+25T for T = 1..3";
  return v;
}

// 2. Off-policy GACEM keeps all four Synt-2D modes.
Verdict synt_modes() {
  int four = 0, three_plus = 0;
  std::string cov;
  for (auto s : kSeeds) {
    const int c = full_run("synt", "gacem-off", s)["mode_coverage"].get<int>();
    four += c == 4;
    three_plus += c >= 3;
    cov += std::to_string(c) + " ";
  }
  return {four >= 3 && three_plus == 5,
          "coverage per seed " + cov + "(need 4 in >= 3 seeds and >= 3 in all 5)"};
}

// 3. Fixed-variance CEM settles on one mode.
Verdict cem_collapse() {
  int ones = 0;
  std::string cov;
  for (auto s : kSeeds) {
    const int c = full_run("synt", "cem-fixed", s)["mode_coverage"].get<int>();
    ones += c == 1;
    cov += std::to_string(c) + " ";
  }
  return {ones >= 4, "coverage per seed " + cov + "(need 1 in >= 4 seeds)"};
}

// 4. Ackley-2D snapshot bands on the median of five seeds.
Verdict ackley_snapshot() {
  std::vector<double> ga, ge, ca, ce;
  for (auto s : kSeeds) {
    const auto g = full_run("ackley", "gacem-off", s);
    ga.push_back(g["accuracy_pct"].get<double>());
    ge.push_back(g["entropy_per_dim"].get<double>());
    const auto c = full_run("ackley", "cem-fixed", s);
    ca.push_back(c["accuracy_pct"].get<double>());
    ce.push_back(c["entropy_per_dim"].get<double>());
  }
  const double mga = median(ga), mge = median(ge), mca = median(ca), mce = median(ce);
  const bool g_ok = mga >= 55.0 && mge >= 1.8 && mge <= 3.2;
  const bool c_ok = mca >= 90.0 && mce <= 1.0;
  return {g_ok && c_ok, "gacem-off median accuracy " + fmt(mga, 2) + " entropy " + fmt(mge) +
                            " (need >= 55, [1.8, 3.2]); cem-fixed median accuracy " + fmt(mca, 2) + " entropy " +
                            fmt(mce) + " (need >= 90, <= 1.0)"};
}

// 5. Uniform distribution entropy.
Verdict entropy_calibration() {
  Verdict v{true, ""};
  for (std::size_t d : {1, 2, 5}) {
    const double h = metrics::entropy_per_dim(UniformSampler(d, 100), metrics::kDefaultSamples, 1);
    v.pass = v.pass && std::abs(h - 4.605) <= 0.02;
    v.detail += "d=" + std::to_string(d) + ": " + fmt(h, 4) + " ";
  }
  v.detail += "(target 4.605 +- 0.02)";
  return v;
}

// 6. Log-prob gradients versus finite differences, and the score function's zero mean.
Verdict gradients() {
  std::mt19937_64 rng(6);
  double worst_all = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    model::ModelConfig c;
    c.dims = 1 + trial % 3;
    c.num_mixtures = 1 + (trial / 3) % 3;
    c.hidden = {1 + static_cast<std::size_t>(trial) % 8, 8};
    c.first_unit_hidden = {4};
    c.grid = 20;
    model::MadeModel m(c, 100 + trial);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (ad::Parameter* p : m.parameters())
      for (double& x : p->value.storage()) x = u(rng);
    const GridBatch x = m.sample(6, trial);
    std::vector<double> coeffs(6);
    for (double& w : coeffs) w = std::uniform_real_distribution<double>(-1, 1)(rng);
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
    for (ad::Parameter* p : m.parameters()) {
      for (std::size_t i = 0; i < p->value.size(); ++i) {
        const double x0 = p->value[i];
        p->value[i] = x0 + 1e-5;
        const double up = value();
        p->value[i] = x0 - 1e-5;
        const double dn = value();
        p->value[i] = x0;
        const double num = (up - dn) / 2e-5;
        worst_all =
            std::max(worst_all, std::abs(num - p->grad[i]) / std::max({std::abs(num), std::abs(p->grad[i]), 1e-6}));
      }
    }
  }

  model::ModelConfig c;
  c.dims = 2;
  c.num_mixtures = 3;
  c.hidden = {8, 8};
  c.first_unit_hidden = {4};
  c.grid = 12;
  model::MadeModel m(c, 7);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  for (ad::Parameter* p : m.parameters())
    for (double& x : p->value.storage()) x = u(rng);
  const std::size_t n = 20000;
  const GridBatch xs = m.sample(n, 5);
  std::vector<double> sum, sq;
  for (std::size_t i = 0; i < n; ++i) {
    GridBatch one(2, 0);
    one.push_back(xs.row(i));
    for (ad::Parameter* p : m.parameters()) p->zero_grad();
    {
      ad::Tape tape;
      tape.backward(ad::sum(m.log_prob(tape, one)));
    }
    std::size_t k = 0;
    for (ad::Parameter* p : m.parameters()) {
      if (sum.empty() || sum.size() < k + p->grad.size()) sum.resize(k + p->grad.size()), sq.resize(k + p->grad.size());
      for (double g : p->grad.storage()) {
        sum[k] += g;
        sq[k] += g * g;
        ++k;
      }
    }
  }
  double mean_norm = 0.0, var_total = 0.0;
  for (std::size_t j = 0; j < sum.size(); ++j) {
    const double mu = sum[j] / n;
    mean_norm += mu * mu;
    var_total += sq[j] / n - mu * mu;
  }
  const double ratio = std::sqrt(mean_norm) / std::sqrt(var_total);
  return {worst_all < 1e-3 && ratio < 0.05, "worst relative FD error " + fmt(worst_all * 1e6, 3) +
                                                "e-6 over 20 models (need < 1e-3); score mean/std " + fmt(ratio, 4) +
                                                " (need < 0.05)"};
}

// 7. Weight function properties.
Verdict weights() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> fbar_pos(0.01, 10.0), fbar_any(-10.0, 10.0), fx(-20.0, 40.0), unit(0, 1);
  std::size_t failures = 0;
  for (int t = 0; t < 10000; ++t) {
    const double fb = t % 4 == 0 ? fbar_any(rng) : fbar_pos(rng);
    const double a = fx(rng), b = fx(rng);
    const double lo = std::min(a, b), hi = std::max(a, b);
    const double wl = train::compute_weight(lo, fb), wh = train::compute_weight(hi, fb);
    failures += !(wl > -1.0 && wl <= 1.0);
    failures += !(wh > -1.0 && wh <= 1.0);
    failures += wh > wl;
    if (fb > 0) {
      const double eps = 1e-9 * unit(rng) + 1e-12;
      failures += std::abs(train::compute_weight(eps, fb) - train::compute_weight(0.0, fb)) > 1e-6;
      failures += std::abs(train::compute_weight(-eps, fb) - train::compute_weight(0.0, fb)) > 1e-6;
      failures += std::abs(train::compute_weight(fb - eps, fb) - train::compute_weight(fb, fb)) > 1e-6;
      failures += std::abs(train::compute_weight(fb + eps, fb) - train::compute_weight(fb, fb)) > 1e-6;
    }
  }
  return {failures == 0, std::to_string(failures) + " failures in 10000 cases"};
}

// Moments of equally weighted rows.
void moments(const std::vector<std::vector<double>>& rows, std::vector<double>& mu,
             std::vector<std::vector<double>>& cov) {
  const std::size_t n = rows.size(), d = rows[0].size();
  mu.assign(d, 0.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) mu[j] += r[j] / n;
  cov.assign(d, std::vector<double>(d, 0.0));
  for (const auto& r : rows)
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = 0; q < d; ++q) cov[p][q] += (r[p] - mu[p]) * (r[q] - mu[q]) / n;
}

// 8. Oracle equivalences.
Verdict oracles() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  std::string detail;
  bool ok = true;

  // cem_update against a hand-built weighted outer product.
  double cem_err = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + t % 9, d = 1 + t % 4;
    Eigen::MatrixXd e(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) e(i, j) = u(rng);
    const auto w = cem::elite_weights(n, t % 2 ? cem::Weighting::Rank : cem::Weighting::Equal);
    const double jitter = 0.1 * (t % 3);
    const auto g = cem::cem_update(e, w, jitter);
    std::vector<double> mu(d, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) mu[j] += w[i] * e(i, j);
    for (int p = 0; p < d; ++p) {
      cem_err = std::max(cem_err, std::abs(g.mean(p) - mu[p]));
      for (int q = 0; q < d; ++q) {
        double c = p == q ? jitter * jitter : 0.0;
        for (int i = 0; i < n; ++i) c += w[i] * (e(i, p) - mu[p]) * (e(i, q) - mu[q]);
        cem_err = std::max(cem_err, std::abs(g.cov(p, q) - c));
      }
    }
  }
  ok = ok && cem_err < 1e-12;
  detail += "cem_update err " + fmt(cem_err * 1e15, 1) + "e-15; ";

  // cempp_update against concatenating both batches and recomputing.
  double pp_err = 0.0;
  for (int t = 0; t < 20; ++t) {
    Eigen::MatrixXd buf(50, 2);
    std::vector<double> f(50);
    std::vector<std::pair<double, std::vector<double>>> all;
    for (int i = 0; i < 50; ++i) {
      buf(i, 0) = u(rng);
      buf(i, 1) = u(rng);
      f[i] = buf.row(i).squaredNorm();
      all.push_back({f[i], {buf(i, 0), buf(i, 1)}});
    }
    std::stable_sort(all.begin(), all.end(), [](auto& a, auto& b) { return a.first < b.first; });
    std::vector<std::vector<double>> top;
    for (int i = 0; i < 20; ++i) top.push_back(all[i].second);
    std::vector<double> mu;
    std::vector<std::vector<double>> cov;
    moments(top, mu, cov);
    const auto g = cem::cempp_update(buf, f, 40);
    for (int p = 0; p < 2; ++p) {
      pp_err = std::max(pp_err, std::abs(g.mean(p) - mu[p]));
      for (int q = 0; q < 2; ++q) pp_err = std::max(pp_err, std::abs(g.cov(p, q) - cov[p][q]));
    }
  }
  ok = ok && pp_err < 1e-12;
  detail += "cempp_update err " + fmt(pp_err * 1e15, 1) + "e-15; ";

  // Sampled accuracy of the uniform distribution against the exhaustive fraction.
  const DesignSpace sq = DesignSpace::cube(2, -5, 5, 100);
  const objectives::ConstraintSpec synt{objectives::Objective::Synt, 2.0};
  const double exact = 100.0 * objectives::satisfying_fraction(synt, sq);
  const double sampled = metrics::accuracy(UniformSampler(2, 100), synt, sq, metrics::kDefaultSamples, 1);
  ok = ok && std::abs(sampled - exact) <= 2.0;
  detail += "uniform accuracy " + fmt(sampled, 2) + " vs exhaustive " + fmt(exact, 2) + "; ";

  // Sample histograms against the exact pmf.
  auto tv_of = [](const Sampler& s, std::size_t n) {
    const GridBatch draws = s.sample(n, 3);
    std::map<std::vector<int>, double> hist;
    for (std::size_t i = 0; i < draws.size(); ++i) {
      const auto r = draws.row(i);
      hist[std::vector<int>(r.begin(), r.end())] += 1.0 / static_cast<double>(n);
    }
    // Every grid point for the exact side.
    const std::size_t d = s.dims();
    const int N = s.grid();
    std::size_t total = 1;
    for (std::size_t j = 0; j < d; ++j) total *= static_cast<std::size_t>(N);
    GridBatch all(d, total);
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::size_t rest = idx;
      for (std::size_t j = 0; j < d; ++j) {
        all.bins[idx * d + j] = static_cast<int>(rest % N);
        rest /= N;
      }
    }
    const auto lp = s.log_pmf(all);
    double tv = 0.0;
    for (std::size_t idx = 0; idx < total; ++idx) {
      const auto r = all.row(idx);
      const auto it = hist.find(std::vector<int>(r.begin(), r.end()));
      tv += 0.5 * std::abs((it == hist.end() ? 0.0 : it->second) - std::exp(lp[idx]));
    }
    return tv;
  };
  model::ModelConfig mc;
  mc.dims = 2;
  mc.num_mixtures = 3;
  mc.hidden = {8, 8};
  mc.first_unit_hidden = {4};
  mc.grid = 20;
  mc.fixed_sigma.reset();
  model::MadeModel m(mc, 4);
  std::uniform_real_distribution<double> w(-0.7, 0.7);
  for (ad::Parameter* p : m.parameters())
    for (double& x : p->value.storage()) x = w(rng);
  const double tv_made = tv_of(MadeSampler(m), 1000000);
  const GaussianSampler gs({Eigen::Vector2d(0.2, -0.1), Eigen::Vector2d(0.3 * 0.3, 0.2 * 0.2).asDiagonal()}, 20);
  const double tv_gauss = tv_of(gs, 1000000);
  ok = ok && tv_made < 0.02 && tv_gauss < 0.02;
  detail += "sampler TV density model " + fmt(tv_made, 4) + ", gaussian " + fmt(tv_gauss, 4) + " (need < 0.02)";
  return {ok, detail};
}

// 9. Same config and seed, same run.csv bytes.
Verdict determinism() {
  std::string csv[2];
  for (int k = 0; k < 2; ++k) {
    config::RunConfig cfg;
    cfg.algorithm = "gacem-off";
    cfg.max_iterations = 5;
    cfg.seed = 11;
    cfg.out = (work_dir() / ("determinism-" + std::to_string(k))).string();
    std::ostringstream quiet;
    harness::cmd_run(cfg, quiet);
    csv[k] = slurp(fs::path(cfg.out) / "run.csv");
  }
  return {!csv[0].empty() && csv[0] == csv[1],
          "run.csv " + std::to_string(csv[0].size()) + " bytes, " + (csv[0] == csv[1] ? "identical" : "different")};
}

// 20-D path runs three iterations with finite records.
Verdict smoke_20d() {
  config::RunConfig cfg;
  cfg.objective = "ackley";
  cfg.dims = 20;
  cfg.algorithm = "gacem-off";
  cfg.max_iterations = 3;
  cfg.out = (work_dir() / "smoke-20d").string();
  std::ostringstream quiet;
  const auto out = harness::cmd_run(cfg, quiet);
  bool finite = out.records.size() == 3;
  for (const auto& r : out.records)
    finite = finite && std::isfinite(r.top20_avg) && std::isfinite(r.accuracy_pct) && std::isfinite(r.entropy_per_dim);
  return {finite, std::to_string(out.records.size()) + " iterations, entropy " +
                      fmt(out.records.empty() ? NAN : out.records.back().entropy_per_dim)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"1 budget arithmetic", budget},
      {"2 synt-2d mode discovery", synt_modes},
      {"3 cem single-mode collapse", cem_collapse},
      {"4 ackley-2d snapshot", ackley_snapshot},
      {"5 entropy calibration", entropy_calibration},
      {"6 gradient integrity", gradients},
      {"7 weight-function suite", weights},
      {"8 oracle equivalences", oracles},
      {"9 determinism", determinism},
      {"smoke 20-d run", smoke_20d},
  };
  std::set<std::string> only;
  for (int i = 1; i < argc; ++i) only.insert(argv[i]);
  fs::create_directories(work_dir());
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const std::string id = name.substr(0, name.find(' '));
    if (!only.empty() && !only.count(id)) continue;
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("criterion %s: %s: %s\n", name.c_str(), v.pass ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(work_dir());
  return failed == 0 ? 0 : 1;
}

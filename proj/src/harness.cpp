#include "gacem/harness.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "gacem/checkpoint.hpp"
#include "gacem/errors.hpp"
#include "gacem/trainer.hpp"

namespace gacem::harness {

using config::format_double;
using nlohmann::json;

namespace {

constexpr std::uint64_t kFinalSampleStream = 100;

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + p.string());
  return f;
}

std::string csv_row(const metrics::RunRecord& r, bool with_time) {
  std::string s = std::to_string(r.iteration) + "," + std::to_string(r.evaluations) + "," +
                  std::to_string(r.satisfying_count) + "," + format_double(r.top20_avg) + "," +
                  format_double(r.accuracy_pct) + "," + format_double(r.entropy_per_dim) + ",";
  s += with_time ? format_double(r.seconds) : std::string("0");
  return s;
}

struct SampleReport {
  GridBatch designs;
  json metrics;
};

SampleReport score_sampler(const Sampler& sampler, const train::RunSetup& setup, std::size_t n, std::uint64_t seed) {
  SampleReport out;
  out.designs = sampler.sample(n, seed);
  json& m = out.metrics;
  m["accuracy_pct"] = metrics::accuracy_of(setup.constraint, setup.space, out.designs);
  m["entropy_per_dim"] = sampler.has_density() ? json(metrics::cross_entropy_per_dim(sampler, out.designs)) : json();
  m["mode_coverage"] = setup.constraint.objective == objectives::Objective::Synt
                           ? json(metrics::mode_coverage_synt(out.designs, setup.constraint, setup.space))
                           : json();
  m["samples"] = n;
  m["sample_seed"] = seed;
  return out;
}

std::string samples_csv(const GridBatch& designs, const train::RunSetup& setup) {
  std::string s;
  for (std::size_t j = 0; j < designs.dims; ++j) s += "x" + std::to_string(j + 1) + ",";
  s += "objective,f\n";
  const auto c = objectives::evaluate(setup.constraint, setup.space, designs);
  for (std::size_t i = 0; i < designs.size(); ++i) {
    const auto x = setup.space.coordinates(designs.row(i));
    for (double v : x) s += format_double(v) + ",";
    s += format_double(c[i] + setup.constraint.threshold) + "," + format_double(c[i]) + "\n";
  }
  return s;
}

std::unique_ptr<Sampler> load_sampler(const fs::path& run_dir) {
  const fs::path ck = run_dir / "model.ckpt";
  if (!fs::exists(ck)) throw ConfigError("no checkpoint at " + ck.string());
  return train::sampler_from_checkpoint(checkpoint::load(ck));
}

}  // namespace

config::RunConfig load_run_config(const fs::path& run_dir) {
  const fs::path p = run_dir / "config.toml";
  if (!fs::exists(p)) throw ConfigError("no config snapshot at " + p.string());
  config::RunConfig cfg;
  cfg.apply(config::parse_file(p));
  return cfg;
}

RunOutcome cmd_run(const config::RunConfig& cfg, std::ostream& log) {
  const train::RunSetup setup = cfg.to_setup();
  RunOutcome out;
  out.dir = cfg.out;
  fs::create_directories(out.dir);
  open_out(out.dir / "config.toml") << cfg.to_text();

  train::Runner runner(setup);
  auto run_csv = open_out(out.dir / "run.csv");
  auto timing_csv = open_out(out.dir / "timing.csv");
  run_csv << kRunCsvHeader << "\n" << std::flush;
  timing_csv << "iteration,evals,seconds\n" << std::flush;
  out.records = runner.run([&](const metrics::RunRecord& r) {
    run_csv << csv_row(r, cfg.record_time) << "\n" << std::flush;
    timing_csv << r.iteration << "," << r.evaluations << "," << format_double(r.seconds) << "\n" << std::flush;
    log << cfg.algorithm << " iter " << r.iteration << " evals " << r.evaluations << " sat " << r.satisfying_count
        << " acc " << r.accuracy_pct << " ent " << r.entropy_per_dim << "\n";
  });

  checkpoint::save(runner.make_checkpoint(), out.dir / "model.ckpt");
  const auto report = score_sampler(runner.sampler(), setup, cfg.eval_samples,
                                    train::derive_seed(cfg.seed, kFinalSampleStream));
  open_out(out.dir / "samples.csv") << samples_csv(report.designs, setup);

  json m = report.metrics;
  m["algorithm"] = cfg.algorithm;
  m["objective"] = cfg.objective;
  m["dims"] = cfg.dims;
  m["seed"] = cfg.seed;
  m["iterations"] = runner.iteration();
  m["evaluations"] = runner.evaluations();
  m["satisfying_count"] = runner.buffer().satisfying_count();
  m["top20_avg"] = metrics::top_k_average(runner.buffer().values(), 20);
  open_out(out.dir / "metrics.json") << m.dump(2) << "\n";
  out.metrics = std::move(m);
  return out;
}

json cmd_eval(const fs::path& run_dir, std::uint64_t seed, std::size_t n) {
  const config::RunConfig cfg = load_run_config(run_dir);
  const auto sampler = load_sampler(run_dir);
  const train::RunSetup setup = cfg.to_setup();
  if (sampler->dims() != setup.space.dims()) throw ConfigError("checkpoint does not match the run config");
  json m = score_sampler(*sampler, setup, n == 0 ? cfg.eval_samples : n, seed).metrics;
  m["algorithm"] = cfg.algorithm;
  m["objective"] = cfg.objective;
  m["dims"] = cfg.dims;
  return m;
}

std::string cmd_sample(const fs::path& run_dir, std::size_t n, std::uint64_t seed) {
  const config::RunConfig cfg = load_run_config(run_dir);
  const auto sampler = load_sampler(run_dir);
  const train::RunSetup setup = cfg.to_setup();
  if (n == 0) throw ConfigError("sample count must be positive");
  return samples_csv(sampler->sample(n, seed), setup);
}

Problem parse_problem(std::string_view text) {
  const auto dash = text.rfind('-');
  if (dash == std::string_view::npos || text.size() < dash + 3 || text.back() != 'd') {
    throw ConfigError("problem must look like name-<dims>d, got '" + std::string(text) + "'");
  }
  Problem p;
  p.objective = std::string(text.substr(0, dash));
  objectives::parse_objective(p.objective);
  p.dims = config::as_count("problems", text.substr(dash + 1, text.size() - dash - 2));
  if (p.dims == 0) throw ConfigError("problem dims must be positive");
  return p;
}

Suite parse_suite(const config::KeyValues& kv) {
  Suite s;
  for (const auto& [k, v] : kv.entries) {
    if (k == "problems") {
      for (const auto& item : config::as_list(k, v)) s.problems.push_back(parse_problem(item));
    } else if (k == "algorithms") {
      s.algorithms = config::as_list(k, v);
      for (const auto& a : s.algorithms) train::parse_algorithm(a);
    } else if (k == "seeds") {
      for (const auto& item : config::as_list(k, v)) s.seeds.push_back(config::as_count(k, item));
    } else if (k == "objective" || k == "dims" || k == "algorithm" || k == "seed" || k == "out") {
      throw ConfigError("suite key '" + k + "' is set per member; use problems/algorithms/seeds");
    } else {
      config::RunConfig probe;
      probe.apply(k, v);
      s.base.set(k, v);
    }
  }
  if (s.problems.empty()) throw ConfigError("suite: empty problem list");
  if (s.algorithms.empty()) throw ConfigError("suite: empty algorithm list");
  if (s.seeds.empty()) throw ConfigError("suite: empty seed list");
  return s;
}

namespace {

struct Stat {
  double mean = 0.0;
  double stderr_ = 0.0;
};

Stat stat_of(const std::vector<double>& v) {
  Stat s;
  if (v.empty()) return {std::nan(""), std::nan("")};
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.stderr_ = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return s;
}

std::string fmt(double v) { return std::isnan(v) ? std::string("nan") : format_double(v); }

}  // namespace

BenchReport cmd_bench(const Suite& suite, const fs::path& out, std::ostream& log) {
  fs::create_directories(out);
  BenchReport rep;
  auto summary = open_out(out / "summary.csv");
  auto curves = open_out(out / "curves.csv");
  summary << "objective,dims,algorithm,runs,failures,accuracy_mean,accuracy_stderr,entropy_mean,entropy_stderr,"
             "satisfying_mean,satisfying_stderr,top20_mean,top20_stderr,mode_coverage_mean\n";
  curves << "objective,dims,algorithm,iteration,evals,satisfying_mean,satisfying_stderr,top20_mean,top20_stderr\n";
  std::ostringstream table;

  for (const auto& prob : suite.problems) {
    table << "## " << prob.objective << " " << prob.dims << "D\n\n| algorithm | accuracy | entropy |\n|---|---|---|\n";
    for (const auto& algo : suite.algorithms) {
      std::vector<double> acc, ent, sat, top, cov;
      std::map<std::size_t, std::vector<metrics::RunRecord>> by_iter;
      std::size_t failures = 0;
      for (const auto seed : suite.seeds) {
        config::RunConfig cfg;
        cfg.apply(suite.base);
        cfg.objective = prob.objective;
        cfg.dims = prob.dims;
        cfg.algorithm = algo;
        cfg.seed = seed;
        cfg.out = (out / (prob.objective + "-" + std::to_string(prob.dims) + "d") / algo /
                   ("seed-" + std::to_string(seed))).string();
        ++rep.runs;
        try {
          std::ostringstream quiet;
          const RunOutcome r = cmd_run(cfg, quiet);
          const json& m = r.metrics;
          acc.push_back(m["accuracy_pct"].get<double>());
          if (!m["entropy_per_dim"].is_null()) ent.push_back(m["entropy_per_dim"].get<double>());
          if (!m["mode_coverage"].is_null()) cov.push_back(m["mode_coverage"].get<double>());
          sat.push_back(m["satisfying_count"].get<double>());
          top.push_back(m["top20_avg"].get<double>());
          for (const auto& rec : r.records) by_iter[rec.iteration].push_back(rec);
          log << "ok   " << cfg.out << "\n";
        } catch (const std::exception& e) {
          ++failures;
          ++rep.failures;
          log << "FAIL " << cfg.out << ": " << e.what() << "\n";
        }
      }
      const Stat a = stat_of(acc), e = stat_of(ent), s = stat_of(sat), t = stat_of(top), c = stat_of(cov);
      summary << prob.objective << "," << prob.dims << "," << algo << "," << suite.seeds.size() << "," << failures
              << "," << fmt(a.mean) << "," << fmt(a.stderr_) << "," << fmt(e.mean) << "," << fmt(e.stderr_) << ","
              << fmt(s.mean) << "," << fmt(s.stderr_) << "," << fmt(t.mean) << "," << fmt(t.stderr_) << ","
              << fmt(c.mean) << "\n";
      for (const auto& [iter, recs] : by_iter) {
        std::vector<double> sv, tv;
        for (const auto& r : recs) {
          sv.push_back(static_cast<double>(r.satisfying_count));
          tv.push_back(r.top20_avg);
        }
        const Stat ss = stat_of(sv), ts = stat_of(tv);
        curves << prob.objective << "," << prob.dims << "," << algo << "," << iter << "," << recs.front().evaluations
               << "," << fmt(ss.mean) << "," << fmt(ss.stderr_) << "," << fmt(ts.mean) << "," << fmt(ts.stderr_)
               << "\n";
      }
      char row[160];
      std::snprintf(row, sizeof row, "| %s | %.1f | %.2f |\n", algo.c_str(), a.mean, e.mean);
      table << row;
    }
    table << "\n";
  }
  open_out(out / "table.md") << table.str();
  rep.summary = out / "summary.csv";
  rep.curves = out / "curves.csv";
  rep.table = out / "table.md";
  return rep;
}

}  // namespace gacem::harness

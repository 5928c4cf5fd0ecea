#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gacem/config.hpp"
#include "gacem/errors.hpp"
#include "gacem/harness.hpp"

namespace {

enum Exit { kOk = 0, kRuntime = 1, kUsage = 2 };

struct RunFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out, algo, objective;
  std::optional<std::size_t> dims, iters;
  std::vector<std::string> sets;
};

gacem::config::RunConfig build_config(const RunFlags& f) {
  gacem::config::RunConfig cfg;
  if (!f.config_path.empty()) cfg.apply(gacem::config::parse_file(f.config_path));
  for (const auto& s : f.sets) {
    const auto [k, v] = gacem::config::parse_assignment(s);
    cfg.apply(k, v);
  }
  if (f.seed) cfg.seed = *f.seed;
  if (f.out) cfg.out = *f.out;
  if (f.algo) cfg.algorithm = *f.algo;
  if (f.objective) cfg.objective = *f.objective;
  if (f.dims) cfg.dims = *f.dims;
  if (f.iters) cfg.max_iterations = *f.iters;
  cfg.to_setup();  // validate before touching the filesystem
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constraint-satisfying design sampling: GACEM and CEM baselines"};
  app.require_subcommand(1);

  RunFlags rf;
  auto* run = app.add_subcommand("run", "train one (algorithm, objective, seed) and write a run directory");
  run->add_option("--config", rf.config_path, "flat key = value config file");
  run->add_option("--seed", rf.seed, "run seed");
  run->add_option("--out", rf.out, "output directory");
  run->add_option("--algo", rf.algo, "cem | cem-fixed | cempp-sg | cempp-kde | gacem-on | gacem-off");
  run->add_option("--objective", rf.objective, "ackley | styblinski | levy | synt");
  run->add_option("--dims", rf.dims, "number of design variables");
  run->add_option("--iters", rf.iters, "max iterations");
  run->add_option("--set", rf.sets, "override any config key: --set key=value");
  bool quiet = false;
  run->add_flag("--quiet", quiet, "no per-iteration log");

  std::string suite_path, bench_out = "runs/bench";
  auto* bench = app.add_subcommand("bench", "run a suite grid and aggregate over seeds");
  bench->add_option("suite", suite_path, "suite file")->required();
  bench->add_option("--out", bench_out, "output directory");

  std::string eval_dir;
  std::uint64_t eval_seed = 1;
  std::size_t eval_n = 0;
  auto* eval = app.add_subcommand("eval", "recompute metrics from a run directory");
  eval->add_option("run_dir", eval_dir, "run directory")->required();
  eval->add_option("--seed", eval_seed, "sampling seed");
  eval->add_option("-n,--samples", eval_n, "number of samples (default: the run's eval_samples)");

  std::string sample_dir, sample_out;
  std::uint64_t sample_seed = 1;
  std::size_t sample_n = 10;
  auto* sample = app.add_subcommand("sample", "draw designs from a run's checkpoint");
  sample->add_option("run_dir", sample_dir, "run directory")->required();
  sample->add_option("-n", sample_n, "number of designs");
  sample->add_option("--seed", sample_seed, "sampling seed");
  sample->add_option("--out", sample_out, "write CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) {
      const auto cfg = build_config(rf);
      std::ostream null_stream(nullptr);
      const auto outcome = gacem::harness::cmd_run(cfg, quiet ? null_stream : std::cerr);
      std::cout << outcome.metrics.dump(2) << "\n";
    } else if (*bench) {
      const auto suite = gacem::harness::parse_suite(gacem::config::parse_file(suite_path));
      const auto rep = gacem::harness::cmd_bench(suite, bench_out, std::cerr);
      std::cout << "runs " << rep.runs << ", failures " << rep.failures << "\n" << rep.summary.string() << "\n";
      return rep.failures == 0 ? kOk : kRuntime;
    } else if (*eval) {
      std::cout << gacem::harness::cmd_eval(eval_dir, eval_seed, eval_n).dump(2) << "\n";
    } else if (*sample) {
      const std::string csv = gacem::harness::cmd_sample(sample_dir, sample_n, sample_seed);
      if (sample_out.empty()) {
        std::cout << csv;
      } else {
        std::ofstream(sample_out) << csv;
      }
    }
  } catch (const gacem::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}

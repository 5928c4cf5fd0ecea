#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "gacem/config.hpp"
#include "gacem/metrics.hpp"

namespace gacem::harness {

namespace fs = std::filesystem;

inline constexpr const char* kRunCsvHeader =
    "iteration,evals,satisfying_count,top20_avg,accuracy_pct,entropy_per_dim,seconds";

struct RunOutcome {
  fs::path dir;
  std::vector<metrics::RunRecord> records;
  nlohmann::json metrics;
};

/// Executes one run and writes config.toml, run.csv, timing.csv, metrics.json,
/// model.ckpt and samples.csv into cfg.out. Files written before a failure are kept.
RunOutcome cmd_run(const config::RunConfig& cfg, std::ostream& log);

/// Metrics of the checkpoint in `run_dir`, from `n` fresh samples (n = 0 uses
/// the run's eval_samples).
nlohmann::json cmd_eval(const fs::path& run_dir, std::uint64_t seed, std::size_t n = 0);

/// CSV of n samples in original coordinates with objective and constraint values.
std::string cmd_sample(const fs::path& run_dir, std::size_t n, std::uint64_t seed);

struct Problem {
  std::string objective;
  std::size_t dims;
};

struct Suite {
  std::vector<Problem> problems;
  std::vector<std::string> algorithms;
  std::vector<std::uint64_t> seeds;
  config::KeyValues base;  // applied to every member run
};

/// Parses "name-<d>d", e.g. "ackley-2d".
Problem parse_problem(std::string_view text);
Suite parse_suite(const config::KeyValues& kv);

struct BenchReport {
  std::size_t runs = 0;
  std::size_t failures = 0;
  fs::path summary;
  fs::path curves;
  fs::path table;
};

/// Runs the suite grid into out/<problem>/<algorithm>/seed-<s> and writes
/// summary.csv, curves.csv and table.md into `out`. Member failures are logged
/// and counted; the suite continues.
BenchReport cmd_bench(const Suite& suite, const fs::path& out, std::ostream& log);

/// Loads config.toml from a run directory.
config::RunConfig load_run_config(const fs::path& run_dir);

}  // namespace gacem::harness

#pragma once

// Flat key = value run configuration (TOML subset: numbers, booleans,
// quoted or bare strings, and one-line arrays; `#` starts a comment).

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gacem/trainer.hpp"

namespace gacem::config {

/// Raw key → value text, in file order of first appearance.
struct KeyValues {
  std::vector<std::pair<std::string, std::string>> entries;

  void set(std::string key, std::string value);
  const std::string* find(std::string_view key) const;
};

KeyValues parse_text(std::string_view text);
KeyValues parse_file(const std::filesystem::path& path);

/// Splits "key=value".
std::pair<std::string, std::string> parse_assignment(std::string_view text);

/// Value helpers; all throw ConfigError naming `key` on malformed input.
std::string as_string(std::string_view key, std::string_view raw);
double as_double(std::string_view key, std::string_view raw);
std::int64_t as_int(std::string_view key, std::string_view raw);
std::size_t as_count(std::string_view key, std::string_view raw);
bool as_bool(std::string_view key, std::string_view raw);
std::vector<std::string> as_list(std::string_view key, std::string_view raw);

struct RunConfig {
  std::string objective = "synt";
  std::size_t dims = 2;
  std::optional<double> threshold;
  std::optional<double> lower;
  std::optional<double> upper;
  int grid = 100;
  std::string algorithm = "gacem-off";
  std::size_t max_iterations = 60;
  std::uint64_t seed = 0;
  std::string out = "runs/run";

  // density model
  std::size_t num_mixtures = 40;
  std::vector<std::size_t> hidden{100, 100, 100};
  std::vector<std::size_t> first_unit_hidden{100};
  std::optional<double> fixed_sigma = 0.05;

  // trainer
  double beta = 10.0;
  std::size_t n_init = 50;
  std::size_t n_samples = 25;
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  double learning_rate = 5e-3;
  std::string ratio = "off";
  double ratio_lo = 0.1;
  double ratio_hi = 10.0;
  double rank_fraction = 0.4;
  std::size_t collision_attempts = 100;
  std::size_t record_samples = 1000;

  // cem family
  double elite_percentile = 40.0;
  double cem_fixed_sigma = 0.05;
  double sigma_init = 0.5;
  double sigma_end = 0.01;
  std::string weighting = "equal";

  // reporting
  std::size_t eval_samples = 5000;
  bool record_time = false;

  void apply(std::string_view key, std::string_view raw);
  void apply(const KeyValues& kv);

  /// Bounds and threshold with objective defaults filled in.
  double resolved_threshold() const;
  double resolved_lower() const;
  double resolved_upper() const;

  /// Builds the trainer setup; throws ConfigError on invalid combinations.
  train::RunSetup to_setup() const;
  /// Snapshot in the same format parse_text accepts, with every key resolved.
  std::string to_text() const;
};

std::vector<std::string> known_keys();

/// Shortest text that parses back to the same double.
std::string format_double(double v);

}  // namespace gacem::config

#include "gacem/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "gacem/errors.hpp"

namespace gacem::config {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Strips a trailing comment that is not inside quotes.
std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

[[noreturn]] void bad(std::string_view key, std::string_view raw, std::string_view expected) {
  throw ConfigError("config key '" + std::string(key) + "': expected " + std::string(expected) + ", got '" +
                    std::string(raw) + "'");
}

std::vector<std::size_t> as_sizes(std::string_view key, std::string_view raw) {
  std::vector<std::size_t> out;
  for (const auto& item : as_list(key, raw)) out.push_back(as_count(key, item));
  return out;
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s + "]";
}

std::string quoted(std::string_view s) { return "\"" + std::string(s) + "\""; }

}  // namespace

void KeyValues::set(std::string key, std::string value) {
  for (auto& [k, v] : entries) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries.emplace_back(std::move(key), std::move(value));
}

const std::string* KeyValues::find(std::string_view key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return &v;
  return nullptr;
}

std::pair<std::string, std::string> parse_assignment(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) throw ConfigError("expected key = value, got '" + std::string(text) + "'");
  const auto key = trim(text.substr(0, eq));
  const auto value = trim(text.substr(eq + 1));
  if (key.empty()) throw ConfigError("missing key in '" + std::string(text) + "'");
  if (value.empty()) throw ConfigError("missing value for key '" + std::string(key) + "'");
  return {std::string(key), std::string(value)};
}

KeyValues parse_text(std::string_view text) {
  KeyValues kv;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const auto line = trim(strip_comment(text.substr(0, nl)));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '[' && line.find('=') == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": tables are not supported");
    }
    try {
      auto [k, v] = parse_assignment(line);
      kv.set(std::move(k), std::move(v));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return kv;
}

KeyValues parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

std::string as_string(std::string_view key, std::string_view raw) {
  raw = trim(raw);
  if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') return std::string(raw.substr(1, raw.size() - 2));
  if (raw.empty() || raw.find_first_of("\"[],") != std::string_view::npos) bad(key, raw, "a string");
  return std::string(raw);
}

double as_double(std::string_view key, std::string_view raw) {
  raw = trim(raw);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
  if (ec != std::errc() || ptr != raw.data() + raw.size()) bad(key, raw, "a number");
  return v;
}

std::int64_t as_int(std::string_view key, std::string_view raw) {
  raw = trim(raw);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
  if (ec != std::errc() || ptr != raw.data() + raw.size()) bad(key, raw, "an integer");
  return v;
}

std::size_t as_count(std::string_view key, std::string_view raw) {
  const auto v = as_int(key, raw);
  if (v < 0) bad(key, raw, "a nonnegative integer");
  return static_cast<std::size_t>(v);
}

bool as_bool(std::string_view key, std::string_view raw) {
  raw = trim(raw);
  if (raw == "true") return true;
  if (raw == "false") return false;
  bad(key, raw, "true or false");
}

std::vector<std::string> as_list(std::string_view key, std::string_view raw) {
  raw = trim(raw);
  if (raw.size() < 2 || raw.front() != '[' || raw.back() != ']') bad(key, raw, "an array [a, b, ...]");
  raw = trim(raw.substr(1, raw.size() - 2));
  std::vector<std::string> out;
  if (raw.empty()) return out;
  while (true) {
    const auto comma = raw.find(',');
    const auto item = trim(raw.substr(0, comma));
    if (item.empty()) bad(key, raw, "a nonempty array item");
    out.push_back(as_string(key, item));
    if (comma == std::string_view::npos) break;
    raw = raw.substr(comma + 1);
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, ptr);
  // Keep floats recognisable as such in the snapshot.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::vector<std::string> known_keys() {
  return {"objective",    "dims",          "threshold",    "lower",        "upper",
          "grid",         "algorithm",     "max_iterations", "seed",       "out",
          "num_mixtures", "hidden",        "first_unit_hidden", "fixed_sigma", "beta",
          "n_init",       "n_samples",     "epochs",       "batch_size",   "learning_rate",
          "ratio",        "ratio_lo",      "ratio_hi",     "rank_fraction", "collision_attempts",
          "record_samples", "elite_percentile", "cem_fixed_sigma", "sigma_init", "sigma_end",
          "weighting",    "eval_samples",  "record_time"};
}

void RunConfig::apply(std::string_view key, std::string_view raw) {
  auto opt_double = [&](std::optional<double>& slot) {
    const auto t = trim(raw);
    if (t == "none" || t == "\"none\"") {
      slot.reset();
    } else {
      slot = as_double(key, t);
    }
  };
  if (key == "objective") objective = as_string(key, raw);
  else if (key == "dims") dims = as_count(key, raw);
  else if (key == "threshold") opt_double(threshold);
  else if (key == "lower") opt_double(lower);
  else if (key == "upper") opt_double(upper);
  else if (key == "grid") grid = static_cast<int>(as_count(key, raw));
  else if (key == "algorithm") algorithm = as_string(key, raw);
  else if (key == "max_iterations") max_iterations = as_count(key, raw);
  else if (key == "seed") seed = static_cast<std::uint64_t>(as_count(key, raw));
  else if (key == "out") out = as_string(key, raw);
  else if (key == "num_mixtures") num_mixtures = as_count(key, raw);
  else if (key == "hidden") hidden = as_sizes(key, raw);
  else if (key == "first_unit_hidden") first_unit_hidden = as_sizes(key, raw);
  else if (key == "fixed_sigma") opt_double(fixed_sigma);
  else if (key == "beta") beta = as_double(key, raw);
  else if (key == "n_init") n_init = as_count(key, raw);
  else if (key == "n_samples") n_samples = as_count(key, raw);
  else if (key == "epochs") epochs = as_count(key, raw);
  else if (key == "batch_size") batch_size = as_count(key, raw);
  else if (key == "learning_rate") learning_rate = as_double(key, raw);
  else if (key == "ratio") ratio = as_string(key, raw);
  else if (key == "ratio_lo") ratio_lo = as_double(key, raw);
  else if (key == "ratio_hi") ratio_hi = as_double(key, raw);
  else if (key == "rank_fraction") rank_fraction = as_double(key, raw);
  else if (key == "collision_attempts") collision_attempts = as_count(key, raw);
  else if (key == "record_samples") record_samples = as_count(key, raw);
  else if (key == "elite_percentile") elite_percentile = as_double(key, raw);
  else if (key == "cem_fixed_sigma") cem_fixed_sigma = as_double(key, raw);
  else if (key == "sigma_init") sigma_init = as_double(key, raw);
  else if (key == "sigma_end") sigma_end = as_double(key, raw);
  else if (key == "weighting") weighting = as_string(key, raw);
  else if (key == "eval_samples") eval_samples = as_count(key, raw);
  else if (key == "record_time") record_time = as_bool(key, raw);
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void RunConfig::apply(const KeyValues& kv) {
  for (const auto& [k, v] : kv.entries) apply(k, v);
}

double RunConfig::resolved_threshold() const {
  return threshold.value_or(objectives::defaults(objectives::parse_objective(objective)).threshold);
}
double RunConfig::resolved_lower() const {
  return lower.value_or(objectives::defaults(objectives::parse_objective(objective)).lower);
}
double RunConfig::resolved_upper() const {
  return upper.value_or(objectives::defaults(objectives::parse_objective(objective)).upper);
}

train::RunSetup RunConfig::to_setup() const {
  train::RunSetup s;
  s.algorithm = train::parse_algorithm(algorithm);
  const auto obj = objectives::parse_objective(objective);
  if (dims == 0) throw ConfigError("dims must be positive");
  if (grid < 2) throw ConfigError("grid must be at least 2");
  s.space = DesignSpace::cube(dims, resolved_lower(), resolved_upper(), grid);
  s.constraint = {obj, resolved_threshold()};

  s.model.dims = dims;
  s.model.grid = grid;
  s.model.num_mixtures = num_mixtures;
  s.model.hidden = hidden;
  s.model.first_unit_hidden = first_unit_hidden;
  s.model.fixed_sigma = fixed_sigma;
  s.model.validate();

  auto& t = s.train;
  t.beta = beta;
  t.n_init = n_init;
  t.n_samples = n_samples;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.learning_rate = learning_rate;
  t.max_iterations = max_iterations;
  if (ratio == "off") t.ratio.mode = train::RatioMode::Off;
  else if (ratio == "clipped") t.ratio.mode = train::RatioMode::Clipped;
  else if (ratio == "exact") t.ratio.mode = train::RatioMode::Exact;
  else throw ConfigError("ratio must be off, clipped or exact, got '" + ratio + "'");
  t.ratio.lo = ratio_lo;
  t.ratio.hi = ratio_hi;
  t.rank_fraction = rank_fraction;
  t.collision_attempts = collision_attempts;
  t.record_samples = record_samples;
  t.seed = seed;
  t.validate();

  s.cem.elite_percentile = elite_percentile;
  s.cem.fixed_sigma = cem_fixed_sigma;
  s.cem.sigma_init = sigma_init;
  s.cem.sigma_end = sigma_end;
  if (weighting == "equal") s.cem.weighting = cem::Weighting::Equal;
  else if (weighting == "rank") s.cem.weighting = cem::Weighting::Rank;
  else throw ConfigError("weighting must be equal or rank, got '" + weighting + "'");
  s.cem.validate();
  if (eval_samples == 0) throw ConfigError("eval_samples must be positive");
  return s;
}

std::string RunConfig::to_text() const {
  std::ostringstream o;
  o << "objective = " << quoted(objective) << "\n"
    << "dims = " << dims << "\n"
    << "threshold = " << format_double(resolved_threshold()) << "\n"
    << "lower = " << format_double(resolved_lower()) << "\n"
    << "upper = " << format_double(resolved_upper()) << "\n"
    << "grid = " << grid << "\n"
    << "algorithm = " << quoted(algorithm) << "\n"
    << "max_iterations = " << max_iterations << "\n"
    << "seed = " << seed << "\n"
    << "out = " << quoted(out) << "\n"
    << "\n# density model\n"
    << "num_mixtures = " << num_mixtures << "\n"
    << "hidden = " << join_sizes(hidden) << "\n"
    << "first_unit_hidden = " << join_sizes(first_unit_hidden) << "\n"
    << "fixed_sigma = " << (fixed_sigma ? format_double(*fixed_sigma) : std::string("none")) << "\n"
    << "\n# trainer\n"
    << "beta = " << format_double(beta) << "\n"
    << "n_init = " << n_init << "\n"
    << "n_samples = " << n_samples << "\n"
    << "epochs = " << epochs << "\n"
    << "batch_size = " << batch_size << "\n"
    << "learning_rate = " << format_double(learning_rate) << "\n"
    << "ratio = " << quoted(ratio) << "\n"
    << "ratio_lo = " << format_double(ratio_lo) << "\n"
    << "ratio_hi = " << format_double(ratio_hi) << "\n"
    << "rank_fraction = " << format_double(rank_fraction) << "\n"
    << "collision_attempts = " << collision_attempts << "\n"
    << "record_samples = " << record_samples << "\n"
    << "\n# cem family\n"
    << "elite_percentile = " << format_double(elite_percentile) << "\n"
    << "cem_fixed_sigma = " << format_double(cem_fixed_sigma) << "\n"
    << "sigma_init = " << format_double(sigma_init) << "\n"
    << "sigma_end = " << format_double(sigma_end) << "\n"
    << "weighting = " << quoted(weighting) << "\n"
    << "\n# reporting\n"
    << "eval_samples = " << eval_samples << "\n"
    << "record_time = " << (record_time ? "true" : "false") << "\n";
  return o.str();
}

}  // namespace gacem::config

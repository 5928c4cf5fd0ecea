#include "gacem/checkpoint.hpp"

#include <fstream>
#include <numeric>

#include "gacem/errors.hpp"

namespace gacem::checkpoint {

using nlohmann::json;

json to_json(const Checkpoint& ckpt) {
  json arrays = json::object();
  for (const auto& [name, t] : ckpt.arrays) {
    arrays[name] = {{"shape", t.shape()}, {"values", t.storage()}};
  }
  return {{"format", kFormat}, {"version", kVersion}, {"kind", ckpt.kind}, {"meta", ckpt.meta}, {"arrays", arrays}};
}

Checkpoint from_json(const json& doc) {
  if (!doc.is_object() || doc.value("format", "") != kFormat) throw ConfigError("checkpoint: not a gacem checkpoint");
  if (doc.value("version", 0) != kVersion) throw ConfigError("checkpoint: unsupported version");
  Checkpoint c;
  c.kind = doc.at("kind").get<std::string>();
  c.meta = doc.value("meta", json::object());
  for (const auto& [name, a] : doc.at("arrays").items()) {
    c.arrays.emplace(name, ad::Tensor(a.at("shape").get<ad::Shape>(), a.at("values").get<std::vector<double>>()));
  }
  return c;
}

void save(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("checkpoint: cannot write " + path.string());
  os << to_json(ckpt).dump() << '\n';
  if (!os) throw Error("checkpoint: write failed for " + path.string());
}

Checkpoint load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("checkpoint: cannot open " + path.string());
  json doc;
  try {
    is >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("checkpoint: malformed file " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

json model_config_to_json(const model::ModelConfig& config) {
  json j = {{"dims", config.dims},
            {"num_mixtures", config.num_mixtures},
            {"hidden", config.hidden},
            {"first_unit_hidden", config.first_unit_hidden},
            {"grid", config.grid}};
  j["fixed_sigma"] = config.fixed_sigma ? json(*config.fixed_sigma) : json(nullptr);
  return j;
}

model::ModelConfig model_config_from_json(const json& j) {
  model::ModelConfig c;
  c.dims = j.at("dims").get<std::size_t>();
  c.num_mixtures = j.at("num_mixtures").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  c.first_unit_hidden = j.at("first_unit_hidden").get<std::vector<std::size_t>>();
  c.grid = j.at("grid").get<int>();
  if (!j.at("fixed_sigma").is_null()) c.fixed_sigma = j.at("fixed_sigma").get<double>();
  return c;
}

Checkpoint from_model(const model::MadeModel& m) {
  Checkpoint c;
  c.kind = "made";
  c.meta["model"] = model_config_to_json(m.config());
  std::vector<std::size_t> ordering(m.dims());
  std::iota(ordering.begin(), ordering.end(), std::size_t{0});
  c.meta["ordering"] = ordering;
  for (const ad::Parameter* p : m.parameters()) c.arrays.emplace(p->name, p->value);
  return c;
}

model::MadeModel to_model(const Checkpoint& ckpt) {
  if (ckpt.kind != "made") throw ConfigError("checkpoint: expected a made checkpoint, got '" + ckpt.kind + "'");
  model::MadeModel m(model_config_from_json(ckpt.meta.at("model")), 0);
  const auto ordering = ckpt.meta.at("ordering").get<std::vector<std::size_t>>();
  for (std::size_t i = 0; i < ordering.size(); ++i) {
    if (ordering[i] != i) throw ConfigError("checkpoint: only the natural variable ordering is supported");
  }
  for (ad::Parameter* p : m.parameters()) {
    auto it = ckpt.arrays.find(p->name);
    if (it == ckpt.arrays.end()) throw ConfigError("checkpoint: missing array " + p->name);
    if (!it->second.same_shape(p->value)) throw DimensionError("checkpoint: shape mismatch for " + p->name);
    p->value = it->second;
    p->zero_grad();
  }
  return m;
}

}  // namespace gacem::checkpoint

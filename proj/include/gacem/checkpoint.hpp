#pragma once

// Self-describing checkpoint files: a JSON document holding a kind tag,
// free-form metadata, and named arrays with explicit shapes. Doubles are
// written in shortest round-trip form, so save → load is bit-exact.

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "gacem/made.hpp"
#include "gacem/tensor.hpp"

namespace gacem::checkpoint {

inline constexpr const char* kFormat = "gacem-checkpoint";
inline constexpr int kVersion = 1;

struct Checkpoint {
  std::string kind;
  nlohmann::json meta = nlohmann::json::object();
  std::map<std::string, ad::Tensor> arrays;
};

nlohmann::json to_json(const Checkpoint& ckpt);
Checkpoint from_json(const nlohmann::json& doc);

void save(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load(const std::filesystem::path& path);

nlohmann::json model_config_to_json(const model::ModelConfig& config);
model::ModelConfig model_config_from_json(const nlohmann::json& j);

Checkpoint from_model(const model::MadeModel& m);
model::MadeModel to_model(const Checkpoint& ckpt);

}  // namespace gacem::checkpoint

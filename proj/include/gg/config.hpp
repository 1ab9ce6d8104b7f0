#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "gg/harness.hpp"
#include "gg/report.hpp"

namespace gg {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckSpec {
  std::string name;
  nlohmann::json options;  // check-specific keys
};

// Parsed experiment config. Seeds are explicit; there is no wall-clock
// default anywhere.
struct ExperimentConfig {
  ModelSpec model;
  std::vector<int> n_list;
  std::vector<CheckSpec> checks;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  nlohmann::json raw;

  std::string hash() const { return hex64(fnv1a(raw.dump())); }

  std::string hash_base() const {
    nlohmann::json j = raw;
    j.erase("N_list");
    return hex64(fnv1a(j.dump()));
  }
};

inline ModelSpec model_spec_from_json(const nlohmann::json& j) {
  ModelSpec m;
  m.kind = j.value("model", "sk");
  m.n = j.value("N", 8);
  if (j.contains("dims")) m.dims = j.at("dims").get<std::vector<int>>();
  m.periodic = j.value("periodic", true);
  m.beta = j.value("beta", 0.0);
  m.gamma = j.value("gamma", 0.0);
  m.h = j.value("h", 0.0);
  m.coupling = j.value("coupling", 1.0);
  m.p = j.value("p", 3);
  if ((m.kind == "ea" || m.kind == "rfim") && m.dims.empty()) m.dims = {m.n};
  return m;
}

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.raw = j;
  if (!j.contains("model"))
    throw ConfigError("config is missing the model block");
  cfg.model = model_spec_from_json(j.at("model"));
  if (j.contains("N_list"))
    cfg.n_list = j.at("N_list").get<std::vector<int>>();
  else
    cfg.n_list = {n_sites(cfg.model)};
  if (!j.contains("seed"))
    throw ConfigError("config must set an explicit seed");
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.out_dir = j.value("out_dir", ".");
  if (!j.contains("checks") || !j.at("checks").is_array() ||
      j.at("checks").empty())
    throw ConfigError("config must list at least one check");
  for (const auto& c : j.at("checks")) {
    CheckSpec spec;
    if (c.is_string()) {
      spec.name = c.get<std::string>();
      spec.options = nlohmann::json::object();
    } else {
      spec.name = c.at("name").get<std::string>();
      spec.options = c;
      spec.options.erase("name");
    }
    cfg.checks.push_back(std::move(spec));
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace gg

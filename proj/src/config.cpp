#include "kinetraf/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace kinetraf {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

double get_number(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) fail(path + "." + key, "missing");
  if (!j.at(key).is_number()) fail(path + "." + key, "must be a number");
  return j.at(key).get<double>();
}

double get_number_or(const json& j, const std::string& key, const std::string& path,
                     double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) fail(path + "." + key, "must be a number");
  return j.at(key).get<double>();
}

int get_int_or(const json& j, const std::string& key, const std::string& path, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) fail(path + "." + key, "must be an integer");
  return j.at(key).get<int>();
}

std::string get_string(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) fail(path + "." + key, "missing");
  if (!j.at(key).is_string()) fail(path + "." + key, "must be a string");
  return j.at(key).get<std::string>();
}

RunConfig parse_json(const json& root) {
  if (!root.is_object()) throw ConfigError("config: top level must be an object");
  RunConfig config;

  if (!root.contains("classes") || !root.at("classes").is_array() ||
      root.at("classes").empty()) {
    throw ConfigError("classes: must be a non-empty array");
  }
  config.delta_v_kmh = get_number_or(root, "delta_v_kmh", "config", 40.0);

  std::set<std::string> names;
  int index = 0;
  for (const json& jc : root.at("classes")) {
    std::ostringstream path;
    path << "classes[" << index << "]";
    if (!jc.is_object()) fail(path.str(), "must be an object");
    ClassConfig cc;
    cc.name = get_string(jc, "name", path.str());
    if (cc.name.empty()) fail(path.str() + ".name", "must not be empty");
    if (!names.insert(cc.name).second) fail(path.str() + ".name", "duplicate class name");
    cc.length_m = get_number(jc, "length_m", path.str());
    cc.vmax_kmh = get_number(jc, "vmax_kmh", path.str());
    if (jc.contains("delta_v_kmh")) {
      cc.delta_v_kmh = get_number(jc, "delta_v_kmh", path.str());
    }
    config.classes.push_back(std::move(cc));
    ++index;
  }

  if (root.contains("law")) {
    const json& jl = root.at("law");
    if (!jl.is_object()) throw ConfigError("law: must be an object");
    config.law.type = get_string(jl, "type", "law");
    if (config.law.type == "gamma") {
      config.law.gamma = get_number_or(jl, "gamma", "law", 1.0);
    } else if (config.law.type == "piecewise") {
      config.law.s_cr = get_number(jl, "s_cr", "law");
      config.law.mu = get_number(jl, "mu", "law");
    } else {
      fail("law.type", "must be \"gamma\" or \"piecewise\"");
    }
  }

  if (root.contains("rates")) {
    const json& jr = root.at("rates");
    if (!jr.is_object()) throw ConfigError("rates: must be an object");
    config.default_rate = get_number_or(jr, "default", "rates", 1.0);
    if (jr.contains("self")) {
      for (const auto& [name, value] : jr.at("self").items()) {
        if (!value.is_number()) fail("rates.self." + name, "must be a number");
        config.self_rates[name] = value.get<double>();
      }
    }
    if (jr.contains("cross")) {
      for (const auto& [key, value] : jr.at("cross").items()) {
        if (!value.is_number()) fail("rates.cross." + key, "must be a number");
        config.cross_rates[key] = value.get<double>();
      }
    }
  }

  config.grid_r = get_int_or(root, "grid_r", "config", 1);
  config.s_points = get_int_or(root, "s_points", "config", 200);
  config.samples_per_s = get_int_or(root, "samples_per_s", "config", 3);
  if (root.contains("seed")) {
    if (!root.at("seed").is_number_integer()) throw ConfigError("seed: must be an integer");
    config.seed = root.at("seed").get<std::uint64_t>();
  }
  config.tolerance = get_number_or(root, "tolerance", "config", 1e-12);
  config.t_max = get_number_or(root, "t_max", "config", 1e4);
  if (root.contains("test_hooks")) {
    const json& jh = root.at("test_hooks");
    if (jh.contains("corrupt_matrix")) {
      config.corrupt_matrix_hook = jh.at("corrupt_matrix").get<bool>();
    }
  }

  // Admissibility of the derived model objects, reported per field.
  if (config.grid_r < 1) throw ConfigError("grid_r: must be >= 1");
  if (config.s_points < 2) throw ConfigError("s_points: must be >= 2");
  if (config.samples_per_s < 1) throw ConfigError("samples_per_s: must be >= 1");
  if (!(config.tolerance > 0.0)) throw ConfigError("tolerance: must be > 0");
  if (!(config.t_max > 0.0)) throw ConfigError("t_max: must be > 0");
  if (!(config.default_rate > 0.0)) throw ConfigError("rates.default: must be > 0");
  for (const auto& [name, value] : config.self_rates) {
    if (!names.count(name)) fail("rates.self." + name, "unknown class");
    if (!(value > 0.0)) fail("rates.self." + name, "must be > 0");
  }
  for (const auto& [key, value] : config.cross_rates) {
    const auto sep = key.find(':');
    if (sep == std::string::npos) fail("rates.cross." + key, "key must be \"p:q\"");
    if (!names.count(key.substr(0, sep)) || !names.count(key.substr(sep + 1))) {
      fail("rates.cross." + key, "unknown class");
    }
    if (!(value > 0.0)) fail("rates.cross." + key, "must be > 0");
  }
  try {
    make_classes(config);
    make_law(config);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return config;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_json(root);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

std::string dump_config(const RunConfig& config) {
  json root;
  json classes = json::array();
  for (const ClassConfig& cc : config.classes) {
    json jc;
    jc["name"] = cc.name;
    jc["length_m"] = cc.length_m;
    jc["vmax_kmh"] = cc.vmax_kmh;
    if (cc.delta_v_kmh) jc["delta_v_kmh"] = *cc.delta_v_kmh;
    classes.push_back(std::move(jc));
  }
  root["classes"] = std::move(classes);
  root["delta_v_kmh"] = config.delta_v_kmh;
  json law;
  law["type"] = config.law.type;
  if (config.law.type == "gamma") {
    law["gamma"] = config.law.gamma;
  } else {
    law["s_cr"] = config.law.s_cr;
    law["mu"] = config.law.mu;
  }
  root["law"] = std::move(law);
  json rates;
  rates["default"] = config.default_rate;
  if (!config.self_rates.empty()) rates["self"] = config.self_rates;
  if (!config.cross_rates.empty()) rates["cross"] = config.cross_rates;
  root["rates"] = std::move(rates);
  root["grid_r"] = config.grid_r;
  root["s_points"] = config.s_points;
  root["samples_per_s"] = config.samples_per_s;
  root["seed"] = config.seed;
  root["tolerance"] = config.tolerance;
  root["t_max"] = config.t_max;
  if (config.corrupt_matrix_hook) {
    root["test_hooks"] = json{{"corrupt_matrix", true}};
  }
  return root.dump(2) + "\n";
}

std::string preset_config_text(const std::string& name) {
  if (name == "table1-cfcst") {
    return R"({
  // Fast Cars - Slow Cars - Trucks
  "classes": [
    {"name": "fast-cars", "length_m": 4.0, "vmax_kmh": 120.0},
    {"name": "slow-cars", "length_m": 4.0, "vmax_kmh": 80.0},
    {"name": "trucks", "length_m": 12.0, "vmax_kmh": 80.0}
  ],
  "delta_v_kmh": 40.0,
  "law": {"type": "gamma", "gamma": 1.0},
  "grid_r": 1,
  "s_points": 200,
  "samples_per_s": 3,
  "seed": 42,
  "tolerance": 1e-12,
  "t_max": 10000.0
}
)";
  }
  if (name == "table1-cfvt") {
    return R"({
  // Fast Cars - Vans - Trucks
  "classes": [
    {"name": "fast-cars", "length_m": 4.0, "vmax_kmh": 120.0},
    {"name": "vans", "length_m": 6.0, "vmax_kmh": 120.0},
    {"name": "trucks", "length_m": 12.0, "vmax_kmh": 80.0}
  ],
  "delta_v_kmh": 40.0,
  "law": {"type": "gamma", "gamma": 1.0},
  "grid_r": 1,
  "s_points": 200,
  "samples_per_s": 3,
  "seed": 42,
  "tolerance": 1e-12,
  "t_max": 10000.0
}
)";
  }
  throw ConfigError("unknown preset: " + name +
                    " (available: table1-cfcst, table1-cfvt)");
}

std::vector<VehicleClass> make_classes(const RunConfig& config) {
  std::vector<VehicleClass> classes;
  classes.reserve(config.classes.size());
  for (const ClassConfig& cc : config.classes) {
    const double delta_v = cc.delta_v_kmh.value_or(config.delta_v_kmh);
    classes.emplace_back(cc.name, cc.length_m / 1000.0, cc.vmax_kmh, delta_v);
  }
  return classes;
}

ProbabilityLaw make_law(const RunConfig& config) {
  if (config.law.type == "gamma") {
    return ProbabilityLaw::gamma(config.law.gamma);
  }
  return ProbabilityLaw::piecewise(config.law.s_cr, config.law.mu);
}

Mixture make_mixture(const RunConfig& config, const std::vector<double>& densities) {
  const auto classes = make_classes(config);
  if (densities.size() != classes.size()) {
    throw ConfigError("one density per configured class required");
  }
  const std::size_t n = classes.size();
  std::vector<std::vector<double>> rates(n, std::vector<double>(n, config.default_rate));
  for (std::size_t p = 0; p < n; ++p) {
    const auto self = config.self_rates.find(classes[p].id);
    if (self != config.self_rates.end()) rates[p][p] = self->second;
    for (std::size_t q = 0; q < n; ++q) {
      if (q == p) continue;
      const auto cross = config.cross_rates.find(classes[p].id + ":" + classes[q].id);
      if (cross != config.cross_rates.end()) rates[p][q] = cross->second;
    }
  }
  try {
    return Mixture(classes, densities, std::move(rates));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::vector<double> densities_for_occupancy(const RunConfig& config, double s) {
  if (!(s >= 0.0 && s <= 1.0)) {
    throw ConfigError("occupancy s must lie in [0, 1]");
  }
  const auto classes = make_classes(config);
  std::vector<double> densities(classes.size());
  for (std::size_t p = 0; p < classes.size(); ++p) {
    densities[p] = s * classes[p].rho_max() / static_cast<double>(classes.size());
  }
  return densities;
}

}  // namespace kinetraf

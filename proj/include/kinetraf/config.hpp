#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kinetraf/model.hpp"

namespace kinetraf {

/// Raised on malformed or inadmissible configuration input; the CLI maps it
/// to its own exit status.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct ClassConfig {
  std::string name;
  double length_m = 0.0;
  double vmax_kmh = 0.0;
  std::optional<double> delta_v_kmh;  // falls back to the global jump
};

struct LawConfig {
  std::string type = "gamma";  // "gamma" | "piecewise"
  double gamma = 1.0;
  double s_cr = 0.5;
  double mu = -0.125;
};

/// A full run description as read from a JSON config file (comments
/// allowed). Lengths are given in meters and converted to km internally.
struct RunConfig {
  std::vector<ClassConfig> classes;
  double delta_v_kmh = 40.0;
  LawConfig law;
  double default_rate = 1.0;
  std::map<std::string, double> self_rates;   // per class name
  std::map<std::string, double> cross_rates;  // "candidate:field"
  int grid_r = 1;
  int s_points = 200;
  int samples_per_s = 3;
  std::uint64_t seed = 0;
  double tolerance = 1e-12;
  double t_max = 1e4;
  bool corrupt_matrix_hook = false;  // test hook for the validation command
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);
std::string dump_config(const RunConfig& config);

/// Bundled parameter sets; name is "table1-cfcst" or "table1-cfvt".
std::string preset_config_text(const std::string& name);

std::vector<VehicleClass> make_classes(const RunConfig& config);
ProbabilityLaw make_law(const RunConfig& config);

/// Mixture at explicit per-class densities (veh/km), with the config's rates.
Mixture make_mixture(const RunConfig& config, const std::vector<double>& densities);

/// Densities giving occupancy s with equal occupancy shares per class.
std::vector<double> densities_for_occupancy(const RunConfig& config, double s);

}  // namespace kinetraf

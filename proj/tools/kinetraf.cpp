#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kinetraf/config.hpp"
#include "kinetraf/csv.hpp"
#include "kinetraf/diagrams.hpp"
#include "kinetraf/equilibria.hpp"
#include "kinetraf/kinetics.hpp"
#include "kinetraf/model.hpp"
#include "kinetraf/relaxation.hpp"
#include "kinetraf/validate.hpp"

namespace {

using namespace kinetraf;

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kConfigError = 2,
  kConvergenceError = 3,
  kIoError = 4,
  kValidationError = 5,
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct CommonArgs {
  std::string config_path;
  std::string preset;
  std::string out_path;
  double s_value = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> rho_args;
  std::optional<std::uint64_t> seed;
};

void add_common_options(CLI::App* cmd, CommonArgs& args, bool with_densities) {
  cmd->add_option("--config", args.config_path, "path to a JSON config file");
  cmd->add_option("--preset", args.preset,
                  "bundled config: table1-cfcst or table1-cfvt");
  cmd->add_option("--out", args.out_path, "write CSV output to this file");
  cmd->add_option("--seed", args.seed, "override the config seed");
  if (with_densities) {
    cmd->add_option("--s", args.s_value,
                    "occupancy in [0, 1]; classes share it equally");
    cmd->add_option("--rho", args.rho_args,
                    "per-class density CLASS=VEH_PER_KM (repeatable)");
  }
}

RunConfig resolve_config(const CommonArgs& args) {
  if (!args.preset.empty() && !args.config_path.empty()) {
    throw ConfigError("give either --config or --preset, not both");
  }
  RunConfig config;
  if (!args.preset.empty()) {
    config = parse_config_text(preset_config_text(args.preset));
  } else if (!args.config_path.empty()) {
    config = load_config(args.config_path);
  } else {
    throw ConfigError("a config is required: pass --config <file> or --preset <name>");
  }
  if (args.seed) config.seed = *args.seed;
  return config;
}

std::vector<double> resolve_densities(const RunConfig& config, const CommonArgs& args) {
  const bool have_rho = !args.rho_args.empty();
  const bool have_s = !std::isnan(args.s_value);
  if (have_rho && have_s) {
    throw ConfigError("give either --s or --rho, not both");
  }
  if (have_s) {
    return densities_for_occupancy(config, args.s_value);
  }
  if (!have_rho) {
    throw ConfigError("densities are required: pass --s <value> or --rho CLASS=VALUE");
  }
  std::vector<double> densities(config.classes.size(), 0.0);
  for (const std::string& arg : args.rho_args) {
    const auto sep = arg.find('=');
    if (sep == std::string::npos) {
      throw ConfigError("--rho expects CLASS=VALUE, got: " + arg);
    }
    const std::string name = arg.substr(0, sep);
    std::size_t parsed = 0;
    double value = 0.0;
    try {
      value = std::stod(arg.substr(sep + 1), &parsed);
    } catch (const std::exception&) {
      throw ConfigError("--rho " + name + ": not a number");
    }
    if (parsed != arg.size() - sep - 1) {
      throw ConfigError("--rho " + name + ": not a number");
    }
    bool found = false;
    for (std::size_t p = 0; p < config.classes.size(); ++p) {
      if (config.classes[p].name == name) {
        densities[p] = value;
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError("--rho: unknown class '" + name + "'");
  }
  return densities;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open output file: " + path);
  return out;
}

int diagram_threads() {
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("KINETRAF_THREADS")) {
    char* end = nullptr;
    const long parsed = std::strtol(env, &end, 10);
    if (end == env || parsed < 1) {
      throw ConfigError("KINETRAF_THREADS must be a positive integer");
    }
    threads = std::min<unsigned>(threads, static_cast<unsigned>(parsed));
  }
  return static_cast<int>(threads);
}

int cmd_equilibrium(const CommonArgs& args) {
  const RunConfig config = resolve_config(args);
  const auto densities = resolve_densities(config, args);
  const Mixture mixture = make_mixture(config, densities);
  const ProbabilityLaw law = make_law(config);

  const MixtureEquilibrium eq =
      equilibrium_for_mixture(mixture, law, config.tolerance, config.t_max);
  if (eq.via_relaxation) {
    std::cerr << "note: no closed form for this mixture; using numerical relaxation "
                 "(r=1)\n";
  } else if (mixture.size() > 2) {
    std::cerr << "note: " << mixture.size()
              << " classes pooled into velocity groups; closed form applies\n";
  }
  if (!eq.converged) {
    std::cerr << "error: relaxation did not converge within t_max = " << config.t_max
              << " h\n";
    return kConvergenceError;
  }

  const double s = occupied_fraction(mixture);
  double total_flux = 0.0;
  std::vector<double> flux(mixture.size());
  for (std::size_t p = 0; p < mixture.size(); ++p) {
    for (std::size_t j = 0; j < eq.coarse[p].size(); ++j) {
      flux[p] += eq.coarse[p][j] * static_cast<double>(j) * eq.delta_v[p];
    }
    total_flux += flux[p];
  }
  const double total_density = mixture.total_density();

  std::cout << "s = " << format_double(s) << "  P = " << format_double(eq.probability)
            << "\n\n";
  std::cout << "class,node,speed_kmh,f_veh_per_km\n";
  for (std::size_t p = 0; p < mixture.size(); ++p) {
    for (std::size_t j = 0; j < eq.coarse[p].size(); ++j) {
      std::cout << mixture.classes[p].id << "," << j << ","
                << format_double(static_cast<double>(j) * eq.delta_v[p]) << ","
                << format_double(eq.coarse[p][j]) << "\n";
    }
  }
  std::cout << "\nclass,rho_veh_per_km,q_veh_per_h,u_kmh\n";
  for (std::size_t p = 0; p < mixture.size(); ++p) {
    const auto u = mean_speed(flux[p], densities[p]);
    std::cout << mixture.classes[p].id << "," << format_double(densities[p]) << ","
              << format_double(flux[p]) << "," << (u ? format_double(*u) : "-") << "\n";
  }
  std::cout << "total," << format_double(total_density) << "," << format_double(total_flux)
            << ","
            << (total_density > 0.0 ? format_double(total_flux / total_density) : "-")
            << "\n";

  if (!args.out_path.empty()) {
    std::ofstream out = open_out(args.out_path);
    out << "class,node,speed_kmh,f_veh_per_km,q_veh_per_h,u_kmh\n";
    for (std::size_t p = 0; p < mixture.size(); ++p) {
      const auto u = mean_speed(flux[p], densities[p]);
      for (std::size_t j = 0; j < eq.coarse[p].size(); ++j) {
        out << mixture.classes[p].id << "," << j << ","
            << format_double(static_cast<double>(j) * eq.delta_v[p]) << ","
            << format_double(eq.coarse[p][j]) << "," << format_double(flux[p]) << ","
            << (u ? format_double(*u) : "") << "\n";
      }
    }
    if (!out) throw IoError("failed writing " + args.out_path);
  }
  return kOk;
}

KineticState initial_state(const std::string& source, const Mixture& mixture,
                           const std::vector<VelocityGrid>& grids) {
  if (source == "uniform") {
    return uniform_state(mixture, grids);
  }
  std::ifstream in(source);
  if (!in) throw IoError("cannot open initial state file: " + source);
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("initial state file is not valid JSON: " + std::string(e.what()));
  }
  KineticState state;
  state.grids = grids;
  state.f.resize(grids.size());
  for (std::size_t p = 0; p < grids.size(); ++p) {
    const std::string& name = mixture.classes[p].id;
    if (!root.contains(name) || !root.at(name).is_array()) {
      throw ConfigError("initial state: missing array for class '" + name + "'");
    }
    const auto values = root.at(name).get<std::vector<double>>();
    if (static_cast<int>(values.size()) != grids[p].size) {
      std::ostringstream msg;
      msg << "initial state: class '" << name << "' needs " << grids[p].size
          << " cells, got " << values.size();
      throw ConfigError(msg.str());
    }
    state.f[p] = values;
  }
  return state;
}

int cmd_relax(const CommonArgs& args, const std::string& initial) {
  const RunConfig config = resolve_config(args);
  const auto densities = resolve_densities(config, args);
  const Mixture mixture = make_mixture(config, densities);
  const ProbabilityLaw law = make_law(config);
  const auto classes = make_classes(config);
  const auto grids = build_grids(classes, config.grid_r);
  const KineticState state0 = initial_state(initial, mixture, grids);

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!args.out_path.empty()) {
    file = open_out(args.out_path);
    out = &file;
  }

  *out << "t";
  for (std::size_t p = 0; p < grids.size(); ++p) {
    for (int j = 0; j < grids[p].size; ++j) {
      *out << ",f_" << classes[p].id << "_" << j;
    }
  }
  *out << ",is_final\n";

  auto write_row = [&](const KineticState& state, double t, bool final_row) {
    *out << format_double(t);
    for (const auto& row : state.f) {
      for (double v : row) *out << "," << format_double(v);
    }
    *out << "," << (final_row ? 1 : 0) << "\n";
    out->flush();
  };

  write_row(state0, 0.0, false);
  long step_count = 0;
  long next_output = 1;
  const auto observer = [&](const KineticState& state, double t) {
    ++step_count;
    if (step_count == next_output) {
      write_row(state, t, false);
      next_output *= 2;
    }
  };

  const double s = occupied_fraction(mixture);
  const RelaxationReport report =
      relax_to_equilibrium_at(state0, mixture, law(s), config.tolerance, config.t_max,
                              observer);
  write_row(report.final_state, report.elapsed_model_time, true);
  if (!*out) throw IoError("failed writing relaxation time series");

  std::cerr << (report.converged ? "converged" : "NOT converged") << " after "
            << report.steps << " steps, t = " << report.elapsed_model_time
            << " h, residual = " << report.residual << "\n";
  return report.converged ? kOk : kConvergenceError;
}

int cmd_diagram(const CommonArgs& args) {
  const RunConfig config = resolve_config(args);
  const auto classes = make_classes(config);
  const ProbabilityLaw law = make_law(config);

  DiagramOptions options;
  options.s_points = config.s_points;
  options.samples_per_s = config.samples_per_s;
  options.seed = config.seed;
  options.tolerance = config.tolerance;
  options.t_max = config.t_max;
  options.threads = diagram_threads();
  const auto points = fundamental_diagram(classes, law, options);

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!args.out_path.empty()) {
    file = open_out(args.out_path);
    out = &file;
  }

  *out << "s,N_v";
  for (const auto& cls : classes) *out << ",rho_" << cls.id;
  for (const auto& cls : classes) *out << ",q_" << cls.id;
  *out << ",Q,U,P,converged\n";
  for (const DiagramPoint& pt : points) {
    *out << format_double(pt.s) << "," << format_double(pt.total_density);
    for (double rho : pt.densities) *out << "," << format_double(rho);
    for (double q : pt.flux) *out << "," << format_double(q);
    *out << "," << format_double(pt.total_flux) << "," << format_double(pt.mean_speed)
         << "," << format_double(pt.probability) << "," << (pt.converged ? 1 : 0) << "\n";
  }
  if (!*out) throw IoError("failed writing diagram CSV");
  return kOk;
}

int cmd_validate(const CommonArgs& args) {
  const RunConfig config = resolve_config(args);
  const auto results = run_validation(config);
  bool all_passed = true;
  for (const CheckResult& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": measured "
              << format_double(r.measured) << " vs limit " << format_double(r.limit);
    if (!r.detail.empty()) std::cout << " (" << r.detail << ")";
    std::cout << "\n";
    all_passed = all_passed && r.passed;
  }
  return all_passed ? kOk : kValidationError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kinetraf: multi-class discrete-velocity kinetic traffic model"};
  app.require_subcommand(1);

  CommonArgs eq_args, relax_args, diagram_args, validate_args;
  std::string initial = "uniform";

  CLI::App* eq = app.add_subcommand(
      "equilibrium", "closed-form (or relaxed) equilibrium of one mixture");
  add_common_options(eq, eq_args, true);

  CLI::App* relax = app.add_subcommand(
      "relax", "integrate the relaxation ODE system and dump a time series");
  add_common_options(relax, relax_args, true);
  relax->add_option("--initial", initial, "\"uniform\" or a JSON state file");

  CLI::App* diagram =
      app.add_subcommand("diagram", "fundamental diagram sweep over occupancy");
  add_common_options(diagram, diagram_args, false);

  CLI::App* validate = app.add_subcommand("validate", "run the model self-checks");
  add_common_options(validate, validate_args, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (eq->parsed()) return cmd_equilibrium(eq_args);
    if (relax->parsed()) return cmd_relax(relax_args, initial);
    if (diagram->parsed()) return cmd_diagram(diagram_args);
    if (validate->parsed()) return cmd_validate(validate_args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kUsage;
}

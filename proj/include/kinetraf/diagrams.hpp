#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "kinetraf/equilibria.hpp"
#include "kinetraf/model.hpp"

namespace kinetraf {

/// One equilibrium evaluated during a diagram sweep.
struct DiagramPoint {
  double s = 0.0;
  std::vector<double> densities;               // veh/km per class
  double total_density = 0.0;                  // N_v [veh/km]
  std::vector<double> flux;                    // q^p [veh/h]
  std::vector<std::optional<double>> speed;    // u^p [km/h]; empty when rho^p = 0
  double total_flux = 0.0;                     // Q [veh/h]
  double mean_speed = 0.0;                     // U [km/h]
  double probability = 0.0;                    // P used
  bool converged = true;
};

/// Draw `count` random mixtures at occupancy s: occupancy shares uniform on
/// the simplex, densities w_p * s * rho_max^p. Deterministic in the seed.
std::vector<std::vector<double>> sample_mixture(const std::vector<VehicleClass>& classes,
                                                double s, int count, std::uint64_t seed);

struct DiagramOptions {
  int s_points = 200;
  int samples_per_s = 3;
  std::uint64_t seed = 0;
  double tolerance = 1e-12;  // relaxation tolerance for 3+ classes
  double t_max = 1e4;        // model hours before giving up on a point
  int threads = 1;
};

/// Sweep s over a uniform grid of s_points values in (0, 1]. The seed fixes
/// samples_per_s occupancy-share vectors which are reused at every level, so
/// each sample traces one composition through the sweep. Points are
/// self-contained, making the table identical no matter how many threads
/// evaluate it.
std::vector<DiagramPoint> fundamental_diagram(const std::vector<VehicleClass>& classes,
                                              const ProbabilityLaw& law,
                                              const DiagramOptions& options);

/// Occupancy at which P crosses 1/2 (free/congested transition).
double critical_s(const ProbabilityLaw& law);

/// Difference between the largest flux of the free phase (s <= critical_s)
/// and of the congested phase (s > critical_s) [veh/h].
double capacity_drop(const std::vector<DiagramPoint>& points, const ProbabilityLaw& law);

}  // namespace kinetraf

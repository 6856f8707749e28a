#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "kinetraf/kinetics.hpp"
#include "kinetraf/model.hpp"

namespace testutil {

// The four standard vehicle classes used throughout the tests (lengths in
// km: 4 m, 4 m, 6 m, 12 m; shared 40 km/h jump).
inline kinetraf::VehicleClass fast_cars() { return {"fast-cars", 0.004, 120.0, 40.0}; }
inline kinetraf::VehicleClass slow_cars() { return {"slow-cars", 0.004, 80.0, 40.0}; }
inline kinetraf::VehicleClass vans() { return {"vans", 0.006, 120.0, 40.0}; }
inline kinetraf::VehicleClass trucks() { return {"trucks", 0.012, 80.0, 40.0}; }

inline double unit_draw(std::mt19937_64& gen) {
  return (static_cast<double>(gen() >> 11) + 1.0) * 0x1p-53;
}

// Random admissible state: occupancy below s_max, random shares, random
// per-cell weights. Densities come out in veh/km for the given classes.
inline kinetraf::KineticState random_state(const std::vector<kinetraf::VehicleClass>& classes,
                                           const std::vector<kinetraf::VelocityGrid>& grids,
                                           std::vector<double>& densities,
                                           std::mt19937_64& gen, double s_max = 0.95) {
  const double s = s_max * unit_draw(gen);
  std::vector<double> shares(classes.size());
  double share_total = 0.0;
  for (double& w : shares) {
    w = unit_draw(gen);
    share_total += w;
  }
  densities.resize(classes.size());
  kinetraf::KineticState state;
  state.grids = grids;
  state.f.resize(classes.size());
  for (std::size_t p = 0; p < classes.size(); ++p) {
    densities[p] = shares[p] / share_total * s * classes[p].rho_max();
    std::vector<double> weights(grids[p].size);
    double wsum = 0.0;
    for (double& w : weights) {
      w = unit_draw(gen);
      wsum += w;
    }
    state.f[p].resize(grids[p].size);
    for (int j = 0; j < grids[p].size; ++j) {
      state.f[p][j] = weights[j] / wsum * densities[p];
    }
  }
  return state;
}

inline double max_abs(const std::vector<std::vector<double>>& a,
                      const std::vector<std::vector<double>>& b) {
  double worst = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) {
    for (std::size_t j = 0; j < a[p].size(); ++j) {
      worst = std::max(worst, std::abs(a[p][j] - b[p][j]));
    }
  }
  return worst;
}

}  // namespace testutil

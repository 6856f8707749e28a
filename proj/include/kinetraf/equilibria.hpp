#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kinetraf/kinetics.hpp"
#include "kinetraf/model.hpp"

namespace kinetraf {

/// Stable equilibrium on the coarse grid (one cell per velocity jump):
/// per class a vector of length T^p + 1 whose entry j holds the mass at
/// speed j * delta_v. Discriminants of the quadratic node equations are kept
/// as diagnostics.
struct EquilibriumSolution {
  std::vector<std::vector<double>> coarse;
  std::vector<double> delta_v;  // per class [km/h]
  double probability = 0.0;
  std::vector<std::pair<std::string, double>> discriminants;
};

/// Closed-form stable equilibrium of a single population.
EquilibriumSolution closed_form_equilibrium(double rho, const VehicleClass& cls, double P);

/// Closed-form stable equilibrium of two populations sharing delta_v, with
/// classes ordered so that c1.v_max >= c2.v_max. Classes with equal maximum
/// speed split separably into two single-population solutions.
EquilibriumSolution closed_form_equilibrium(double rho1, double rho2,
                                            const VehicleClass& c1, const VehicleClass& c2,
                                            double P);

/// True when every cell off the coarse nodes (index j with j mod r != 0,
/// counting from zero) carries at most tol mass, for every class.
bool is_quantized(const KineticState& fine_state, int r, double tol);

/// Exact equilibrium flux of class p: sum of node masses weighted by the
/// node speeds j * delta_v [veh/h].
double equilibrium_flux(const EquilibriumSolution& solution, std::size_t p);

/// Flux of an arbitrary state using the grid midpoints, including the
/// quarter-cell offsets of the boundary cells [veh/h].
double discrete_flux(const KineticState& state, std::size_t p);

/// Mean speed q / rho [km/h]; empty when the class is absent (rho = 0).
std::optional<double> mean_speed(double q, double rho);

/// Equilibrium of a whole mixture: closed form for one or two classes with a
/// shared velocity jump, coarse-grid relaxation otherwise. The coarse
/// vectors are indexed by multiples of the per-class jump.
struct MixtureEquilibrium {
  std::vector<std::vector<double>> coarse;
  std::vector<double> delta_v;
  double probability = 0.0;
  bool converged = true;
  bool via_relaxation = false;
};

MixtureEquilibrium equilibrium_for_mixture(const Mixture& mixture, const ProbabilityLaw& law,
                                           double tol, double t_max);

}  // namespace kinetraf

#pragma once

#include <functional>

#include "kinetraf/kinetics.hpp"
#include "kinetraf/model.hpp"

namespace kinetraf {

/// Result of one integration step. A rejected step leaves the input state
/// untouched; the caller is expected to halve dt and retry.
struct StepOutcome {
  KineticState state;
  bool rejected = false;
  double mass_correction = 0.0;  // largest |sum f - rho| absorbed by renormalization
  bool accuracy_warning = false;
};

/// One classical fourth-order step of the relaxation ODE system, followed by
/// a per-class renormalization that restores sum_j f[p][j] = rho[p] exactly.
/// Rejects the step if any cell drops below -1e-12.
StepOutcome integrate_step(const KineticState& state, const InteractionMatrixSet& matrices,
                           const Mixture& mixture, double dt);

struct RelaxationReport {
  KineticState final_state;
  double elapsed_model_time = 0.0;  // h
  long steps = 0;
  double residual = 0.0;  // 1-norm of the RHS at the final state
  bool converged = false;
  double max_mass_correction = 0.0;
  // Invariant bookkeeping over all accepted steps.
  double min_cell_value = 0.0;
  double max_bound_excess = 0.0;  // max over steps of f[p][j] - rho[p]
};

/// Integrate to steady state. The interaction matrices are built once from
/// P = law(s); s is conserved, so they stay valid for the whole run. The
/// initial step is 0.1 / max_p R^p and is halved whenever a step is
/// rejected. Convergence is declared when the 1-norm of the RHS falls below
/// tol * max(total density, 1) * max_p R^p; the rate factor keeps the
/// criterion invariant under a common rescaling of all interaction rates.
RelaxationReport relax_to_equilibrium(const KineticState& state0, const Mixture& mixture,
                                      const ProbabilityLaw& law, double tol, double t_max);

/// Invoked after every accepted step with the new state and model time.
using StepObserver = std::function<void(const KineticState& state, double t)>;

/// Same, at a fixed acceleration probability.
RelaxationReport relax_to_equilibrium_at(const KineticState& state0, const Mixture& mixture,
                                         double P, double tol, double t_max,
                                         const StepObserver& observer = {});

}  // namespace kinetraf

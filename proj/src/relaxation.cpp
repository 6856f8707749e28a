#include "kinetraf/relaxation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace kinetraf {

namespace {

constexpr double kNegativityFloor = -1e-12;
constexpr double kAccuracyWarningFactor = 1e-10;
constexpr int kMaxHalvings = 60;

double rhs_one_norm(const std::vector<std::vector<double>>& rhs) {
  double norm = 0.0;
  for (const auto& row : rhs) {
    for (double v : row) norm += std::abs(v);
  }
  return norm;
}

// Scale class p so its mass is rho again, then snap every cell but the last
// onto the lattice of rho's ulp and close the sum with the final cell. All
// partial sums are then exact multiples of the lattice step, so the plain
// sequential sum reproduces rho bit for bit. The snap moves each cell by at
// most half an ulp of rho, well inside the positivity slack.
double renormalize_class(std::vector<double>& f, double rho) {
  const double sum = std::accumulate(f.begin(), f.end(), 0.0);
  if (rho <= 0.0 || sum <= 0.0) {
    return std::abs(sum - rho);
  }
  const double correction = std::abs(sum - rho);
  const double scale = rho / sum;
  for (double& v : f) v *= scale;
  const double lattice = std::ldexp(1.0, std::ilogb(rho) - 52);
  double prefix = 0.0;
  for (std::size_t j = 0; j + 1 < f.size(); ++j) {
    f[j] = std::nearbyint(f[j] / lattice) * lattice;
    prefix += f[j];
  }
  f.back() = rho - prefix;
  return correction;
}

}  // namespace

StepOutcome integrate_step(const KineticState& state, const InteractionMatrixSet& matrices,
                           const Mixture& mixture, double dt) {
  if (!(dt >= 0.0)) {
    throw std::invalid_argument("integrate_step: dt must be >= 0");
  }
  const std::size_t n = state.size();

  const auto k1 = collision_rhs(state, matrices, mixture);
  KineticState stage = state;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t j = 0; j < state.f[p].size(); ++j)
      stage.f[p][j] = state.f[p][j] + 0.5 * dt * k1[p][j];
  const auto k2 = collision_rhs(stage, matrices, mixture);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t j = 0; j < state.f[p].size(); ++j)
      stage.f[p][j] = state.f[p][j] + 0.5 * dt * k2[p][j];
  const auto k3 = collision_rhs(stage, matrices, mixture);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t j = 0; j < state.f[p].size(); ++j)
      stage.f[p][j] = state.f[p][j] + dt * k3[p][j];
  const auto k4 = collision_rhs(stage, matrices, mixture);

  StepOutcome out;
  out.state = state;
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t j = 0; j < state.f[p].size(); ++j) {
      out.state.f[p][j] = state.f[p][j] + dt / 6.0 *
                          (k1[p][j] + 2.0 * k2[p][j] + 2.0 * k3[p][j] + k4[p][j]);
      if (out.state.f[p][j] < kNegativityFloor) {
        out.state = state;
        out.rejected = true;
        return out;
      }
    }
  }
  for (std::size_t p = 0; p < n; ++p) {
    const double rho = mixture.densities[p];
    const double correction = renormalize_class(out.state.f[p], rho);
    out.mass_correction = std::max(out.mass_correction, correction);
    if (rho > 0.0 && correction > kAccuracyWarningFactor * rho) {
      out.accuracy_warning = true;
    }
  }
  return out;
}

RelaxationReport relax_to_equilibrium_at(const KineticState& state0, const Mixture& mixture,
                                         double P, double tol, double t_max,
                                         const StepObserver& observer) {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("relax_to_equilibrium: tol must be > 0");
  }
  const InteractionMatrixSet matrices = InteractionMatrixSet::build(state0.grids, P);
  const double rate_scale = mixture.max_loss_rate();

  RelaxationReport report;
  report.final_state = state0;
  report.min_cell_value = 0.0;
  for (const auto& row : state0.f) {
    for (double v : row) report.min_cell_value = std::min(report.min_cell_value, v);
  }

  const double threshold = tol * std::max(mixture.total_density(), 1.0) * rate_scale;
  if (rate_scale <= 0.0) {
    // Empty road: the RHS vanishes identically.
    report.converged = true;
    return report;
  }

  double dt = 0.1 / rate_scale;
  int halvings = 0;
  while (true) {
    const auto rhs = collision_rhs(report.final_state, matrices, mixture);
    report.residual = rhs_one_norm(rhs);
    if (report.residual <= threshold) {
      report.converged = true;
      return report;
    }
    if (report.elapsed_model_time >= t_max) {
      report.converged = false;
      return report;
    }
    const StepOutcome step = integrate_step(report.final_state, matrices, mixture, dt);
    if (step.rejected) {
      dt *= 0.5;
      if (++halvings > kMaxHalvings) {
        report.converged = false;
        return report;
      }
      continue;
    }
    report.final_state = std::move(step.state);
    report.elapsed_model_time += dt;
    report.steps += 1;
    report.max_mass_correction = std::max(report.max_mass_correction, step.mass_correction);
    for (std::size_t p = 0; p < report.final_state.size(); ++p) {
      for (double v : report.final_state.f[p]) {
        report.min_cell_value = std::min(report.min_cell_value, v);
        report.max_bound_excess =
            std::max(report.max_bound_excess, v - mixture.densities[p]);
      }
    }
    if (observer) {
      observer(report.final_state, report.elapsed_model_time);
    }
  }
}

RelaxationReport relax_to_equilibrium(const KineticState& state0, const Mixture& mixture,
                                      const ProbabilityLaw& law, double tol, double t_max) {
  const double s = occupied_fraction(mixture);
  return relax_to_equilibrium_at(state0, mixture, law(s), tol, t_max);
}

}  // namespace kinetraf

#include "kinetraf/validate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "kinetraf/diagrams.hpp"
#include "kinetraf/equilibria.hpp"
#include "kinetraf/kinetics.hpp"
#include "kinetraf/relaxation.hpp"

namespace kinetraf {

namespace {

double unit_draw(std::mt19937_64& gen) {
  return (static_cast<double>(gen() >> 11) + 1.0) * 0x1p-53;
}

// Random admissible state: random occupancy, random shares, random cell
// weights normalized per class.
KineticState random_state(const std::vector<VehicleClass>& classes,
                          const std::vector<VelocityGrid>& grids,
                          std::vector<double>& densities, std::mt19937_64& gen) {
  const double s = 0.05 + 0.9 * unit_draw(gen);
  densities.resize(classes.size());
  double share_total = 0.0;
  std::vector<double> shares(classes.size());
  for (double& w : shares) {
    w = unit_draw(gen);
    share_total += w;
  }
  KineticState state;
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

double rhs_scale(const Mixture& mixture) {
  double eta_max = 0.0;
  for (const auto& row : mixture.rates) {
    for (double eta : row) eta_max = std::max(eta_max, eta);
  }
  const double mass = mixture.total_density();
  return std::max(1.0, eta_max * mass * mass);
}

CheckResult check_stochasticity(const RunConfig& config) {
  CheckResult result{"stochasticity", false, 0.0, 1e-14,
                     "sum over j of each matrix family is the all-ones matrix"};
  const auto classes = make_classes(config);
  const auto grids = build_grids(classes, config.grid_r);
  for (double P : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    InteractionMatrixSet set = InteractionMatrixSet::build(grids, P);
    if (config.corrupt_matrix_hook) {
      set.self[0][0].entries.front().value += 1e-6;
    }
    auto measure = [&](const std::vector<SparseMatrix>& family) {
      std::vector<std::vector<double>> sum(family.front().rows,
                                           std::vector<double>(family.front().cols, 0.0));
      for (const SparseMatrix& m : family) {
        for (const auto& e : m.entries) {
          sum[e.row][e.col] += e.value;
          if (e.value < 0.0 || e.value > 1.0) {
            result.measured = std::max(result.measured, 1.0);
          }
        }
      }
      for (const auto& row : sum) {
        for (double v : row) {
          result.measured = std::max(result.measured, std::abs(v - 1.0));
        }
      }
    };
    for (std::size_t p = 0; p < grids.size(); ++p) {
      measure(set.self[p]);
      for (std::size_t q = 0; q < grids.size(); ++q) {
        if (q != p) measure(set.cross[p][q]);
      }
    }
  }
  result.passed = result.measured <= result.limit;
  return result;
}

CheckResult check_oracle(const RunConfig& config) {
  CheckResult result{"oracle-equivalence", false, 0.0, 1e-13,
                     "matrix RHS against the direct cell-sum RHS, relative"};
  const auto classes = make_classes(config);
  const auto grids = build_grids(classes, config.grid_r);
  std::mt19937_64 gen(config.seed ^ 0x6f3a9c1dULL);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> densities;
    const KineticState state = random_state(classes, grids, densities, gen);
    const Mixture mixture = make_mixture(config, densities);
    const double P = unit_draw(gen);
    const auto matrices = InteractionMatrixSet::build(grids, P);
    const auto a = collision_rhs(state, matrices, mixture);
    const auto b = collision_rhs_direct(state, P, mixture);
    const double scale = rhs_scale(mixture);
    for (std::size_t p = 0; p < a.size(); ++p) {
      for (std::size_t j = 0; j < a[p].size(); ++j) {
        result.measured = std::max(result.measured, std::abs(a[p][j] - b[p][j]) / scale);
      }
    }
  }
  result.passed = result.measured <= result.limit;
  return result;
}

CheckResult check_conservation(const RunConfig& config) {
  CheckResult result{"conservation", false, 0.0, 1e-12,
                     "per-class sum of the RHS vanishes, relative to its 1-norm"};
  const auto classes = make_classes(config);
  const auto grids = build_grids(classes, config.grid_r);
  std::mt19937_64 gen(config.seed ^ 0x51f0b4e2ULL);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> densities;
    const KineticState state = random_state(classes, grids, densities, gen);
    const Mixture mixture = make_mixture(config, densities);
    const double P = unit_draw(gen);
    const auto matrices = InteractionMatrixSet::build(grids, P);
    const auto rhs = collision_rhs(state, matrices, mixture);
    for (const auto& row : rhs) {
      double total = 0.0;
      double norm = 0.0;
      for (double v : row) {
        total += v;
        norm += std::abs(v);
      }
      result.measured = std::max(result.measured, std::abs(total) / std::max(norm, 1e-30));
    }
  }
  result.passed = result.measured <= result.limit;
  return result;
}

CheckResult check_indifferentiability(const RunConfig& config) {
  CheckResult result{"indifferentiability", false, 0.0, 1e-13,
                     "two identical classes sum to the single-population RHS, relative"};
  const VehicleClass base = make_classes(config).front();
  const VehicleClass twin_a("twin-a", base.length_km, base.v_max, base.delta_v);
  const VehicleClass twin_b("twin-b", base.length_km, base.v_max, base.delta_v);
  const auto pair_grids = build_grids({twin_a, twin_b}, config.grid_r);
  const auto solo_grids = build_grids({base}, config.grid_r);
  std::mt19937_64 gen(config.seed ^ 0x0dd4a1b3ULL);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> densities;
    KineticState state = random_state({twin_a, twin_b}, pair_grids, densities, gen);
    const Mixture mixture({twin_a, twin_b}, densities);
    const double P = unit_draw(gen);
    const auto rhs = collision_rhs_direct(state, P, mixture);

    KineticState total;
    total.grids = solo_grids;
    total.f.resize(1);
    total.f[0].resize(solo_grids[0].size, 0.0);
    for (int j = 0; j < solo_grids[0].size; ++j) {
      total.f[0][j] = state.f[0][j] + state.f[1][j];
    }
    const Mixture solo({base}, {densities[0] + densities[1]});
    const auto rhs_total = collision_rhs_direct(total, P, solo);

    const double scale = rhs_scale(solo);
    for (std::size_t j = 0; j < rhs_total[0].size(); ++j) {
      const double summed = rhs[0][j] + rhs[1][j];
      result.measured =
          std::max(result.measured, std::abs(summed - rhs_total[0][j]) / scale);
    }
  }
  result.passed = result.measured <= result.limit;
  return result;
}

CheckResult check_grid_independence(const RunConfig& config) {
  CheckResult result{"grid-independence", false, 0.0, 1e-8,
                     "relaxed equilibria match the closed form on every refinement"};
  const auto all_classes = make_classes(config);
  std::vector<VehicleClass> classes;
  classes.push_back(all_classes[0]);
  if (all_classes.size() > 1 &&
      std::abs(all_classes[1].delta_v - all_classes[0].delta_v) <
          1e-12 * all_classes[0].delta_v) {
    classes.push_back(all_classes[1]);
  }
  std::sort(classes.begin(), classes.end(),
            [](const VehicleClass& a, const VehicleClass& b) { return a.v_max > b.v_max; });

  const double s = 0.6;
  std::vector<double> densities(classes.size());
  for (std::size_t p = 0; p < classes.size(); ++p) {
    densities[p] = s * classes[p].rho_max() / static_cast<double>(classes.size());
  }
  const Mixture mixture(classes, densities);
  const ProbabilityLaw law = make_law(config);
  const double P = law(occupied_fraction(mixture));

  EquilibriumSolution exact =
      classes.size() == 2
          ? closed_form_equilibrium(densities[0], densities[1], classes[0], classes[1], P)
          : closed_form_equilibrium(densities[0], classes[0], P);

  for (int r : {1, 2}) {
    const auto grids = build_grids(classes, r);
    const auto report = relax_to_equilibrium_at(uniform_state(mixture, grids), mixture, P,
                                                1e-12, config.t_max);
    if (!report.converged) {
      result.detail = "relaxation did not converge";
      return result;
    }
    for (std::size_t p = 0; p < classes.size(); ++p) {
      const auto& f = report.final_state.f[p];
      for (std::size_t j = 0; j < f.size(); ++j) {
        if (j % static_cast<std::size_t>(r) == 0) {
          const double diff = std::abs(f[j] - exact.coarse[p][j / r]);
          result.measured = std::max(result.measured, diff);
        } else {
          result.measured = std::max(result.measured, std::abs(f[j]));
        }
      }
    }
  }
  result.passed = result.measured <= result.limit;
  return result;
}

CheckResult check_bifurcation(const RunConfig& config) {
  CheckResult result{"bifurcation", false, 0.0, 1e-12, ""};
  const VehicleClass cls = make_classes(config).front();
  const double rho = 0.3 * cls.rho_max();
  for (double P : {0.1, 0.3, 0.49}) {
    const auto sol = closed_form_equilibrium(rho, cls, P);
    const double expected = 2.0 * (2.0 * P - 1.0) / (3.0 * P - 2.0);
    result.measured =
        std::max(result.measured, std::abs(sol.coarse[0][0] / rho - expected));
  }
  for (double P : {0.5, 0.7, 1.0}) {
    const auto sol = closed_form_equilibrium(rho, cls, P);
    result.measured = std::max(result.measured, std::abs(sol.coarse[0][0]) / rho);
  }
  const ProbabilityLaw law = make_law(config);
  const double s_cr = critical_s(law);
  result.measured = std::max(result.measured, std::abs(law(s_cr) - 0.5));
  std::ostringstream detail;
  detail << "lowest node follows 2(2P-1)/(3P-2); critical s = " << s_cr;
  result.detail = detail.str();
  result.passed = result.measured <= result.limit;
  return result;
}

}  // namespace

std::vector<CheckResult> run_validation(const RunConfig& config) {
  std::vector<CheckResult> results;
  results.push_back(check_stochasticity(config));
  results.push_back(check_oracle(config));
  results.push_back(check_conservation(config));
  results.push_back(check_indifferentiability(config));
  results.push_back(check_grid_independence(config));
  results.push_back(check_bifurcation(config));
  return results;
}

}  // namespace kinetraf

#include <doctest.h>

#include <cmath>
#include <random>

#include "kinetraf/equilibria.hpp"
#include "kinetraf/relaxation.hpp"
#include "support.hpp"

using namespace kinetraf;

namespace {

// Two-speed reference pair: 100 and 50 km/h with a shared 25 km/h jump.
std::vector<VehicleClass> pair_100_50() {
  return {VehicleClass("one", 0.004, 100.0, 25.0), VehicleClass("two", 0.008, 50.0, 25.0)};
}

Mixture pair_mixture(double s) {
  const auto classes = pair_100_50();
  return Mixture(classes, {0.5 * s * classes[0].rho_max(), 0.5 * s * classes[1].rho_max()});
}

KineticState equilibrium_state(const Mixture& mixture, double P,
                               const std::vector<VelocityGrid>& grids) {
  const auto sol = closed_form_equilibrium(mixture.densities[0], mixture.densities[1],
                                           mixture.classes[0], mixture.classes[1], P);
  KineticState state;
  state.grids = grids;
  state.f.resize(2);
  for (std::size_t p = 0; p < 2; ++p) {
    state.f[p].assign(grids[p].size, 0.0);
    for (std::size_t j = 0; j < sol.coarse[p].size(); ++j) {
      state.f[p][j * grids[p].refinement] = sol.coarse[p][j];
    }
  }
  return state;
}

}  // namespace

TEST_CASE("integrate_step") {
  const Mixture mixture = pair_mixture(0.6);
  const auto grids = build_grids(mixture.classes, 1);
  const double P = 0.4;
  const auto matrices = InteractionMatrixSet::build(grids, P);

  SUBCASE("equilibrium state is a fixed point") {
    // dt within the stability region of the fourth-order scheme
    const KineticState eq = equilibrium_state(mixture, P, grids);
    for (double dt : {1e-4, 1e-3, 1e-2}) {
      const StepOutcome out = integrate_step(eq, matrices, mixture, dt);
      REQUIRE(!out.rejected);
      double worst = 0.0;
      for (std::size_t p = 0; p < 2; ++p) {
        for (std::size_t j = 0; j < eq.f[p].size(); ++j) {
          worst = std::max(worst, std::abs(out.state.f[p][j] - eq.f[p][j]));
        }
      }
      CHECK(worst <= 1e-12 * mixture.total_density());
    }
  }
  SUBCASE("mass is restored exactly after every step") {
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> densities;
      KineticState state =
          testutil::random_state(mixture.classes, grids, densities, gen, 0.9);
      const Mixture m(mixture.classes, densities);
      const auto mats = InteractionMatrixSet::build(grids, testutil::unit_draw(gen));
      const StepOutcome out = integrate_step(state, mats, m, 1e-3 / m.max_loss_rate());
      REQUIRE(!out.rejected);
      for (std::size_t p = 0; p < 2; ++p) {
        CHECK(out.state.class_mass(p) == densities[p]);
      }
    }
  }
  SUBCASE("dt = 0 is the identity on states with exact mass") {
    // masses chosen as exact binary fractions so the cell sums are exact
    Mixture m(mixture.classes, {4.0, 2.0});
    KineticState state{{{1.0, 1.0, 1.0, 0.5, 0.5}, {0.5, 0.75, 0.75}}, grids};
    const StepOutcome out = integrate_step(state, matrices, m, 0.0);
    REQUIRE(!out.rejected);
    for (std::size_t p = 0; p < 2; ++p) {
      for (std::size_t j = 0; j < state.f[p].size(); ++j) {
        CHECK(out.state.f[p][j] == state.f[p][j]);
      }
    }
  }
  SUBCASE("a wildly large step is rejected, not clamped") {
    KineticState state = uniform_state(mixture, grids);
    const StepOutcome out = integrate_step(state, matrices, mixture, 1e5);
    CHECK(out.rejected);
    // rejected steps leave the input untouched
    CHECK(out.state.f[0][0] == state.f[0][0]);
  }
}

TEST_CASE("relaxation reaches the closed-form equilibrium") {
  const Mixture mixture = pair_mixture(0.6);
  const double P = 0.4;  // gamma = 1 law at s = 0.6
  const auto grids = build_grids(mixture.classes, 1);
  const auto report =
      relax_to_equilibrium_at(uniform_state(mixture, grids), mixture, P, 1e-12, 1e3);
  REQUIRE(report.converged);
  CHECK(report.steps > 0);
  CHECK(report.residual <=
        1e-12 * std::max(mixture.total_density(), 1.0) * mixture.max_loss_rate());

  const auto exact = closed_form_equilibrium(mixture.densities[0], mixture.densities[1],
                                             mixture.classes[0], mixture.classes[1], P);
  for (std::size_t p = 0; p < 2; ++p) {
    for (std::size_t j = 0; j < exact.coarse[p].size(); ++j) {
      CHECK(report.final_state.f[p][j] ==
            doctest::Approx(exact.coarse[p][j]).epsilon(1e-9).scale(1.0));
    }
  }
  CHECK(report.min_cell_value >= -1e-12);
  CHECK(report.max_bound_excess <= 1e-10);
}

TEST_CASE("free-road limit sends all mass to the top cells") {
  const auto classes = pair_100_50();
  const Mixture mixture(classes, {0.05, 0.02});  // nearly empty road
  const auto grids = build_grids(classes, 2);
  const auto report =
      relax_to_equilibrium_at(uniform_state(mixture, grids), mixture, 1.0, 1e-12, 1e3);
  REQUIRE(report.converged);
  for (std::size_t p = 0; p < 2; ++p) {
    CHECK(report.final_state.f[p].back() ==
          doctest::Approx(mixture.densities[p]).epsilon(1e-10));
  }
}

TEST_CASE("a mass mismatch beyond the drift budget raises the accuracy warning") {
  const Mixture mixture = pair_mixture(0.5);
  const auto grids = build_grids(mixture.classes, 1);
  const auto matrices = InteractionMatrixSet::build(grids, 0.6);
  KineticState skewed = uniform_state(mixture, grids);
  for (double& v : skewed.f[0]) v *= 1.0 - 1e-6;  // way above 1e-10 * rho
  const StepOutcome out = integrate_step(skewed, matrices, mixture, 1e-4);
  REQUIRE(!out.rejected);
  CHECK(out.accuracy_warning);
  CHECK(out.mass_correction > 1e-10 * mixture.densities[0]);
  CHECK(out.state.class_mass(0) == mixture.densities[0]);
}

TEST_CASE("empty road converges immediately") {
  const auto classes = pair_100_50();
  const Mixture mixture(classes, {0.0, 0.0});
  const auto grids = build_grids(classes, 1);
  const auto report =
      relax_to_equilibrium_at(uniform_state(mixture, grids), mixture, 0.3, 1e-10, 1e3);
  CHECK(report.converged);
  CHECK(report.steps == 0);
}

TEST_CASE("exhausting t_max reports non-convergence instead of throwing") {
  const Mixture mixture = pair_mixture(0.6);
  const auto grids = build_grids(mixture.classes, 1);
  const auto report =
      relax_to_equilibrium_at(uniform_state(mixture, grids), mixture, 0.4, 1e-12, 1e-4);
  CHECK(!report.converged);
}

TEST_CASE("scaling every interaction rate only rescales time") {
  const auto classes = pair_100_50();
  const std::vector<double> densities = {40.0, 20.0};
  const double P = 0.45;
  const auto grids = build_grids(classes, 1);

  const Mixture base(classes, densities);
  std::vector<std::vector<double>> scaled_rates(2, std::vector<double>(2, 10.0));
  const Mixture scaled(classes, densities, scaled_rates);

  const auto slow = relax_to_equilibrium_at(uniform_state(base, grids), base, P, 1e-12, 1e3);
  const auto fast =
      relax_to_equilibrium_at(uniform_state(scaled, grids), scaled, P, 1e-12, 1e3);
  REQUIRE(slow.converged);
  REQUIRE(fast.converged);

  double worst = 0.0;
  for (std::size_t p = 0; p < 2; ++p) {
    for (std::size_t j = 0; j < slow.final_state.f[p].size(); ++j) {
      worst = std::max(worst,
                       std::abs(slow.final_state.f[p][j] - fast.final_state.f[p][j]));
    }
  }
  CHECK(worst <= 1e-10);
  CHECK(slow.elapsed_model_time / fast.elapsed_model_time ==
        doctest::Approx(10.0).epsilon(0.05));
}

TEST_CASE("an empty lowest cell traps the dynamics on a spurious manifold") {
  const Mixture mixture = pair_mixture(0.7);
  const double P = 0.3;  // congested: the true equilibrium has mass at rest
  const auto grids = build_grids(mixture.classes, 1);
  const auto exact = closed_form_equilibrium(mixture.densities[0], mixture.densities[1],
                                             mixture.classes[0], mixture.classes[1], P);

  KineticState hollow = uniform_state(mixture, grids);
  for (std::size_t p = 0; p < 2; ++p) {
    const double shifted = hollow.f[p][0] / (grids[p].size - 1);
    hollow.f[p][0] = 0.0;
    for (int j = 1; j < grids[p].size; ++j) hollow.f[p][j] += shifted;
  }
  const auto trapped = relax_to_equilibrium_at(hollow, mixture, P, 1e-12, 1e3);
  REQUIRE(trapped.converged);
  CHECK(trapped.final_state.f[0][0] == 0.0);
  CHECK(trapped.final_state.f[1][0] == 0.0);
  // ... and it is not the stable equilibrium
  CHECK(std::abs(trapped.final_state.f[0][0] - exact.coarse[0][0]) >
        0.1 * mixture.densities[0]);

  // a 1e-8 rho seed in the lowest cell escapes back to the stable state
  KineticState seeded = hollow;
  for (std::size_t p = 0; p < 2; ++p) {
    const double eps = 1e-8 * mixture.densities[p];
    seeded.f[p][0] = eps;
    seeded.f[p][1] -= eps;
  }
  const auto escaped = relax_to_equilibrium_at(seeded, mixture, P, 1e-12, 1e3);
  REQUIRE(escaped.converged);
  for (std::size_t p = 0; p < 2; ++p) {
    for (std::size_t j = 0; j < exact.coarse[p].size(); ++j) {
      CHECK(escaped.final_state.f[p][j] ==
            doctest::Approx(exact.coarse[p][j]).epsilon(1e-7).scale(1.0));
    }
  }
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "kinetraf/diagrams.hpp"
#include "support.hpp"

using namespace kinetraf;

namespace {

std::vector<VehicleClass> cfcst() {
  return {testutil::fast_cars(), testutil::slow_cars(), testutil::trucks()};
}

}  // namespace

TEST_CASE("mixture sampling") {
  const auto classes = cfcst();
  SUBCASE("zero occupancy gives the empty road") {
    const auto samples = sample_mixture(classes, 0.0, 3, 1);
    for (const auto& densities : samples) {
      for (double rho : densities) CHECK(rho == 0.0);
    }
  }
  SUBCASE("every sample reproduces the requested occupancy") {
    for (std::uint64_t seed : {0ULL, 7ULL, 123456789ULL}) {
      for (double s : {0.05, 0.5, 0.97}) {
        for (const auto& densities : sample_mixture(classes, s, 5, seed)) {
          const Mixture m(classes, densities);
          CHECK(occupied_fraction(m) == doctest::Approx(s).epsilon(1e-12));
        }
      }
    }
  }
  SUBCASE("the seed fully determines the draw") {
    const auto a = sample_mixture(classes, 0.4, 4, 99);
    const auto b = sample_mixture(classes, 0.4, 4, 99);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t p = 0; p < a[i].size(); ++p) {
        CHECK(a[i][p] == b[i][p]);
      }
    }
    const auto c = sample_mixture(classes, 0.4, 4, 100);
    CHECK(a[0] != c[0]);
  }
  SUBCASE("bad arguments rejected") {
    CHECK_THROWS_AS(sample_mixture(classes, 1.5, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(sample_mixture(classes, 0.5, 0, 0), std::invalid_argument);
  }
}

TEST_CASE("fundamental diagram sweeps") {
  const auto classes = cfcst();
  DiagramOptions options;
  options.s_points = 20;
  options.samples_per_s = 2;
  options.seed = 5;
  options.tolerance = 1e-10;

  const auto points = fundamental_diagram(classes, ProbabilityLaw::gamma(1.0), options);
  REQUIRE(points.size() == 40);

  SUBCASE("per-point bookkeeping is consistent") {
    for (const auto& pt : points) {
      CHECK(pt.converged);
      double q_sum = 0.0;
      double rho_sum = 0.0;
      for (double q : pt.flux) q_sum += q;
      for (double rho : pt.densities) rho_sum += rho;
      CHECK(pt.total_flux == doctest::Approx(q_sum).epsilon(1e-12));
      CHECK(pt.total_density == doctest::Approx(rho_sum).epsilon(1e-12));
      CHECK(pt.mean_speed * pt.total_density ==
            doctest::Approx(pt.total_flux).epsilon(1e-12));
      CHECK(pt.total_flux >= 0.0);
      CHECK(pt.mean_speed <= 120.0 + 1e-9);
      const Mixture m(classes, pt.densities);
      CHECK(occupied_fraction(m) == doctest::Approx(pt.s).epsilon(1e-12));
    }
  }
  SUBCASE("tables are bit-identical across runs and thread counts") {
    auto four_threads = options;
    four_threads.threads = 4;
    const auto again = fundamental_diagram(classes, ProbabilityLaw::gamma(1.0), options);
    const auto parallel =
        fundamental_diagram(classes, ProbabilityLaw::gamma(1.0), four_threads);
    REQUIRE(again.size() == points.size());
    REQUIRE(parallel.size() == points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      CHECK(points[i].total_flux == again[i].total_flux);
      CHECK(points[i].total_flux == parallel[i].total_flux);
      CHECK(points[i].densities == parallel[i].densities);
    }
  }
  SUBCASE("congested samples disperse, slow classes saturate the free phase") {
    for (int i = 0; i < options.s_points; ++i) {
      const auto& first = points[2 * i];
      const auto& second = points[2 * i + 1];
      if (first.s > 0.75 && first.s < 0.999) {  // at s = 1 everyone is parked
        CHECK(first.total_flux != second.total_flux);
      }
      if (first.s <= 0.5) {
        // trucks and slow cars ride at their 80 km/h ceiling
        for (const auto* pt : {&first, &second}) {
          for (std::size_t p : {std::size_t{1}, std::size_t{2}}) {
            if (pt->densities[p] > 0.0) {
              REQUIRE(pt->speed[p].has_value());
              CHECK(*pt->speed[p] == doctest::Approx(80.0).epsilon(1e-7));
            }
          }
        }
      }
    }
  }
}

TEST_CASE("mean speed falls with occupancy along frozen shares") {
  const auto classes = cfcst();
  double previous = 1e9;
  for (int i = 1; i <= 12; ++i) {
    const double s = i / 12.0;
    std::vector<double> densities(classes.size());
    for (std::size_t p = 0; p < classes.size(); ++p) {
      densities[p] = s * classes[p].rho_max() / 3.0;
    }
    const Mixture mixture(classes, densities);
    const auto eq = equilibrium_for_mixture(mixture, ProbabilityLaw::gamma(1.0), 1e-10, 1e3);
    REQUIRE(eq.converged);
    double q = 0.0;
    for (std::size_t p = 0; p < classes.size(); ++p) {
      for (std::size_t j = 0; j < eq.coarse[p].size(); ++j) {
        q += eq.coarse[p][j] * static_cast<double>(j) * eq.delta_v[p];
      }
    }
    const double u = q / mixture.total_density();
    CHECK(u <= previous + 1e-9);
    previous = u;
  }
}

TEST_CASE("critical occupancy") {
  CHECK(critical_s(ProbabilityLaw::gamma(1.0)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(critical_s(ProbabilityLaw::gamma(0.5)) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(critical_s(ProbabilityLaw::piecewise(0.5, -0.125)) == 0.5);
}

TEST_CASE("capacity drop") {
  const auto law = ProbabilityLaw::gamma(1.0);  // critical s = 0.5
  auto point = [](double s, double Q) {
    DiagramPoint pt;
    pt.s = s;
    pt.total_flux = Q;
    return pt;
  };
  SUBCASE("definition: free maximum minus congested maximum") {
    const std::vector<DiagramPoint> pts = {point(0.2, 900.0), point(0.5, 1500.0),
                                           point(0.6, 1100.0), point(0.9, 300.0)};
    CHECK(capacity_drop(pts, law) == doctest::Approx(400.0));
  }
  SUBCASE("order independence and duplicate tolerance") {
    std::vector<DiagramPoint> pts = {point(0.5, 1500.0), point(0.6, 1100.0),
                                     point(0.2, 900.0),  point(0.6, 1100.0),
                                     point(0.9, 300.0),  point(0.5, 1500.0)};
    const double forward = capacity_drop(pts, law);
    std::reverse(pts.begin(), pts.end());
    CHECK(capacity_drop(pts, law) == forward);
  }
  SUBCASE("missing phases are named") {
    const std::vector<DiagramPoint> free_only = {point(0.1, 100.0)};
    CHECK_THROWS_WITH_AS(capacity_drop(free_only, law), doctest::Contains("congested"),
                         std::invalid_argument);
    const std::vector<DiagramPoint> congested_only = {point(0.9, 100.0)};
    CHECK_THROWS_WITH_AS(capacity_drop(congested_only, law), doctest::Contains("free"),
                         std::invalid_argument);
  }
}

TEST_CASE("unconverged points are flagged, not dropped") {
  // three distinct velocity groups force the relaxation path
  const std::vector<VehicleClass> classes = {
      VehicleClass("fast", 0.004, 120.0, 40.0), VehicleClass("mid", 0.004, 80.0, 40.0),
      VehicleClass("slow", 0.012, 40.0, 40.0)};
  DiagramOptions options;
  options.s_points = 4;
  options.samples_per_s = 1;
  options.seed = 2;
  options.tolerance = 1e-12;
  options.t_max = 1e-5;  // far too little time to converge
  const auto points = fundamental_diagram(classes, ProbabilityLaw::gamma(1.0), options);
  REQUIRE(points.size() == 4);
  int unconverged = 0;
  for (const auto& pt : points) {
    if (!pt.converged) ++unconverged;
  }
  CHECK(unconverged > 0);
}

#include "kinetraf/diagrams.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

namespace kinetraf {

namespace {

constexpr double kPhaseEps = 1e-12;

// Uniform double in (0, 1]; fixed recipe so tables do not depend on the
// standard library's distribution implementation.
double unit_draw(std::mt19937_64& gen) {
  return (static_cast<double>(gen() >> 11) + 1.0) * 0x1p-53;
}

std::vector<double> simplex_shares(std::size_t count, std::mt19937_64& gen) {
  std::vector<double> shares(count);
  double total = 0.0;
  for (double& w : shares) {
    w = -std::log(unit_draw(gen));
    total += w;
  }
  if (total <= 0.0) {
    std::fill(shares.begin(), shares.end(), 1.0 / static_cast<double>(count));
    return shares;
  }
  for (double& w : shares) w /= total;
  return shares;
}

int thread_count(const DiagramOptions& options, std::size_t jobs) {
  int threads = std::max(1, options.threads);
  return static_cast<int>(std::min<std::size_t>(threads, jobs));
}

}  // namespace

std::vector<std::vector<double>> sample_mixture(const std::vector<VehicleClass>& classes,
                                                double s, int count, std::uint64_t seed) {
  if (!(s >= 0.0 && s <= 1.0)) {
    throw std::invalid_argument("sample_mixture: s must lie in [0, 1]");
  }
  if (count < 1) {
    throw std::invalid_argument("sample_mixture: count must be >= 1");
  }
  std::mt19937_64 gen(seed);
  std::vector<std::vector<double>> samples;
  samples.reserve(count);
  for (int i = 0; i < count; ++i) {
    const std::vector<double> shares = simplex_shares(classes.size(), gen);
    std::vector<double> densities(classes.size());
    for (std::size_t p = 0; p < classes.size(); ++p) {
      densities[p] = shares[p] * s * classes[p].rho_max();
    }
    samples.push_back(std::move(densities));
  }
  return samples;
}

std::vector<DiagramPoint> fundamental_diagram(const std::vector<VehicleClass>& classes,
                                              const ProbabilityLaw& law,
                                              const DiagramOptions& options) {
  if (options.s_points < 2) {
    throw std::invalid_argument("fundamental_diagram: s_points must be >= 2");
  }
  if (options.samples_per_s < 1) {
    throw std::invalid_argument("fundamental_diagram: samples_per_s must be >= 1");
  }

  const std::size_t jobs =
      static_cast<std::size_t>(options.s_points) * options.samples_per_s;
  std::vector<DiagramPoint> points(jobs);

  // One share vector per sample index, reused at every occupancy level: each
  // sample then traces a fixed-composition curve through the sweep, so the
  // flux envelope peaks at the critical occupancy instead of wherever a
  // lucky draw lands, while distinct samples still disperse the congested
  // phase.
  const auto max_densities =
      sample_mixture(classes, 1.0, options.samples_per_s, options.seed);

  auto evaluate = [&](std::size_t job) {
    const std::uint64_t i = job / options.samples_per_s + 1;  // s index, 1-based
    const std::uint64_t k = job % options.samples_per_s;
    const double s = static_cast<double>(i) / options.s_points;
    std::vector<double> densities(classes.size());
    for (std::size_t p = 0; p < classes.size(); ++p) {
      densities[p] = s * max_densities[k][p];
    }

    Mixture mixture(classes, densities);
    const MixtureEquilibrium eq =
        equilibrium_for_mixture(mixture, law, options.tolerance, options.t_max);

    DiagramPoint& pt = points[job];
    pt.s = s;
    pt.densities = densities;
    pt.total_density = mixture.total_density();
    pt.probability = eq.probability;
    pt.converged = eq.converged;
    pt.flux.resize(classes.size());
    pt.speed.resize(classes.size());
    pt.total_flux = 0.0;
    for (std::size_t p = 0; p < classes.size(); ++p) {
      double q = 0.0;
      for (std::size_t j = 0; j < eq.coarse[p].size(); ++j) {
        q += eq.coarse[p][j] * static_cast<double>(j) * eq.delta_v[p];
      }
      pt.flux[p] = q;
      pt.speed[p] = mean_speed(q, densities[p]);
      pt.total_flux += q;
    }
    pt.mean_speed = pt.total_density > 0.0 ? pt.total_flux / pt.total_density : 0.0;
  };

  const int threads = thread_count(options, jobs);
  if (threads <= 1) {
    for (std::size_t job = 0; job < jobs; ++job) evaluate(job);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t]() {
        for (std::size_t job = t; job < jobs; job += threads) evaluate(job);
      });
    }
    for (auto& th : pool) th.join();
  }
  return points;
}

double critical_s(const ProbabilityLaw& law) { return law.critical_s(); }

double capacity_drop(const std::vector<DiagramPoint>& points, const ProbabilityLaw& law) {
  const double s_cr = critical_s(law);
  bool have_free = false;
  bool have_congested = false;
  double free_max = 0.0;
  double congested_max = 0.0;
  for (const DiagramPoint& pt : points) {
    if (pt.s <= s_cr + kPhaseEps) {
      free_max = have_free ? std::max(free_max, pt.total_flux) : pt.total_flux;
      have_free = true;
    } else {
      congested_max = have_congested ? std::max(congested_max, pt.total_flux) : pt.total_flux;
      have_congested = true;
    }
  }
  if (!have_free) {
    throw std::invalid_argument("capacity_drop: no points in the free phase (s <= s_cr)");
  }
  if (!have_congested) {
    throw std::invalid_argument("capacity_drop: no points in the congested phase (s > s_cr)");
  }
  return free_max - congested_max;
}

}  // namespace kinetraf

#include "kinetraf/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "kinetraf/relaxation.hpp"

namespace kinetraf {

namespace {

constexpr double kDegenerateQuadratic = 1e-12;
constexpr double kDiscriminantSlack = 1e-10;

// Solves ((3P-2)/2) x^2 + beta x + c0 = 0 for the stable equilibrium branch
// (-beta - sqrt(D)) / (3P-2), D = beta^2 - 2(3P-2)c0, recording D. For
// beta < 0 the algebraically identical conjugate form 2c0 / (-beta + sqrt(D))
// is used; it stays finite when 3P-2 vanishes (P = 2/3), where the node
// equation degenerates to a linear one.
class NodeSolver {
public:
  NodeSolver(double P, std::vector<std::pair<std::string, double>>& diagnostics)
      : a_(3.0 * P - 2.0), diagnostics_(diagnostics) {}

  double stable(double beta, double c0, const std::string& label) {
    double disc = beta * beta - 2.0 * a_ * c0;
    diagnostics_.emplace_back(label, disc);
    if (disc < 0.0) {
      const double scale = std::max({beta * beta, std::abs(2.0 * a_ * c0), 1e-300});
      if (disc < -kDiscriminantSlack * scale) {
        std::ostringstream msg;
        msg << "equilibrium node " << label << ": negative discriminant " << disc
            << " (internal consistency failure)";
        throw std::logic_error(msg.str());
      }
      disc = 0.0;
    }
    const double root = std::sqrt(disc);
    if (beta < 0.0) {
      return 2.0 * c0 / (-beta + root);
    }
    if (std::abs(a_) > kDegenerateQuadratic) {
      return (-beta - root) / a_;
    }
    return beta > 0.0 ? -c0 / beta : 0.0;
  }

private:
  double a_;
  std::vector<std::pair<std::string, double>>& diagnostics_;
};

double partial_sum(const std::vector<double>& v, int count) {
  double s = 0.0;
  for (int k = 0; k < count && k < static_cast<int>(v.size()); ++k) s += v[k];
  return s;
}

// Recursion shared by all nodes strictly below a class's own top speed while
// both populations still share the velocity space; depends on the class's
// own quantities only.
void fill_lower_nodes(std::vector<double>& f, double rho, double P, int count,
                      const std::string& tag, NodeSolver& solver) {
  for (int idx = 0; idx < count; ++idx) {
    if (P >= 0.5) {
      f[idx] = 0.0;
      continue;
    }
    const double sum_prev = partial_sum(f, idx);
    const double sum_prev2 = partial_sum(f, idx - 1);
    const double prev = idx > 0 ? f[idx - 1] : 0.0;
    const double beta = (3.0 * P - 2.0) * sum_prev + (1.0 - 2.0 * P) * rho;
    const double c0 = P * prev * (-0.5 * prev + rho - sum_prev2);
    std::ostringstream label;
    label << tag << "[" << idx + 1 << "]";
    f[idx] = solver.stable(beta, c0, label.str());
  }
}

void check_probability(double P) {
  if (!(P >= 0.0 && P <= 1.0)) {
    throw std::invalid_argument("closed_form_equilibrium: P must lie in [0, 1]");
  }
}

void check_occupancy(double s) {
  if (s > 1.0 + 1e-12) {
    std::ostringstream msg;
    msg << "closed_form_equilibrium: occupied fraction " << s << " exceeds 1";
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

EquilibriumSolution closed_form_equilibrium(double rho, const VehicleClass& cls, double P) {
  check_probability(P);
  if (!(rho >= 0.0)) {
    throw std::invalid_argument("closed_form_equilibrium: density must be >= 0");
  }
  check_occupancy(rho * cls.length_km);

  EquilibriumSolution sol;
  sol.probability = P;
  sol.delta_v = {cls.delta_v};
  const int T = cls.jump_count();
  sol.coarse = {std::vector<double>(T + 1, 0.0)};
  if (rho == 0.0) {
    return sol;
  }
  NodeSolver solver(P, sol.discriminants);
  fill_lower_nodes(sol.coarse[0], rho, P, T, cls.id, solver);
  sol.coarse[0][T] = rho - partial_sum(sol.coarse[0], T);
  return sol;
}

EquilibriumSolution closed_form_equilibrium(double rho1, double rho2,
                                            const VehicleClass& c1, const VehicleClass& c2,
                                            double P) {
  check_probability(P);
  if (!(rho1 >= 0.0) || !(rho2 >= 0.0)) {
    throw std::invalid_argument("closed_form_equilibrium: densities must be >= 0");
  }
  if (std::abs(c1.delta_v - c2.delta_v) > 1e-12 * c1.delta_v) {
    throw std::invalid_argument("closed_form_equilibrium: classes must share delta_v");
  }
  if (c1.v_max < c2.v_max) {
    throw std::invalid_argument("closed_form_equilibrium: order classes so that "
                                "c1.v_max >= c2.v_max");
  }
  check_occupancy(rho1 * c1.length_km + rho2 * c2.length_km);

  const int T1 = c1.jump_count();
  const int T2 = c2.jump_count();

  if (T1 == T2) {
    // Equal velocity spaces: the populations split separably, each carrying
    // the single-population profile of its own density.
    EquilibriumSolution a = closed_form_equilibrium(rho1, c1, P);
    EquilibriumSolution b = closed_form_equilibrium(rho2, c2, P);
    EquilibriumSolution sol;
    sol.probability = P;
    sol.delta_v = {c1.delta_v, c2.delta_v};
    sol.coarse = {std::move(a.coarse[0]), std::move(b.coarse[0])};
    sol.discriminants = std::move(a.discriminants);
    for (auto& d : b.discriminants) sol.discriminants.push_back(std::move(d));
    return sol;
  }

  EquilibriumSolution sol;
  sol.probability = P;
  sol.delta_v = {c1.delta_v, c2.delta_v};
  sol.coarse = {std::vector<double>(T1 + 1, 0.0), std::vector<double>(T2 + 1, 0.0)};
  if (rho1 == 0.0 && rho2 == 0.0) {
    return sol;
  }
  std::vector<double>& f1 = sol.coarse[0];
  std::vector<double>& f2 = sol.coarse[1];
  NodeSolver solver(P, sol.discriminants);

  // Nodes below the slower class's top speed.
  fill_lower_nodes(f1, rho1, P, T2, c1.id, solver);
  fill_lower_nodes(f2, rho2, P, T2, c2.id, solver);

  // Slower class's top node closes by mass conservation.
  f2[T2] = rho2 - partial_sum(f2, T2);

  // Faster class at the slower class's top speed: the split boundary cell of
  // the field space contributes the P/4 weights.
  const double s1 = partial_sum(f1, T2);
  const double s2 = partial_sum(f2, T2);
  const double s1m = partial_sum(f1, T2 - 1);
  const double s2m = partial_sum(f2, T2 - 1);
  const double prev1 = f1[T2 - 1];
  const double prev2 = f2[T2 - 1];
  {
    const double beta = (3.0 * P - 2.0) * s1 + 0.25 * P * s2 + (1.0 - 2.0 * P) * rho1 +
                        (0.75 * P - 1.0) * rho2;
    const double c0 = (1.0 - P) * (rho1 - s1) * (rho2 - s2) +
                      P * prev1 * (-0.5 * (prev1 + prev2) + rho1 + rho2 - (s1m + s2m));
    f1[T2] = solver.stable(beta, c0, c1.id + "[shared-top]");
  }

  const int m = T1 - T2;
  if (m > 1) {
    // First node above the shared range.
    {
      const double sum_full = s1 + f1[T2];
      const double beta = (3.0 * P - 2.0) * sum_full + (1.0 - 2.0 * P) * rho1 +
                          (P - 1.0) * rho2;
      const double c0 = P * f1[T2] * (-0.5 * f1[T2] + 0.25 * f2[T2] + rho1 - s1);
      f1[T2 + 1] = solver.stable(beta, c0, c1.id + "[shared-top+1]");
    }
    // Nodes fully outside the slower class's reach.
    for (int l = 2; l <= m - 1; ++l) {
      const int idx = T2 + l;
      const double sum_prev = partial_sum(f1, idx);
      const double sum_prev2 = partial_sum(f1, idx - 1);
      const double prev = f1[idx - 1];
      const double beta = (3.0 * P - 2.0) * sum_prev + (1.0 - 2.0 * P) * rho1 +
                          (P - 1.0) * rho2;
      const double c0 = P * prev * (-0.5 * prev + rho1 - sum_prev2);
      std::ostringstream label;
      label << c1.id << "[shared-top+" << l << "]";
      f1[idx] = solver.stable(beta, c0, label.str());
    }
  }
  f1[T1] = rho1 - partial_sum(f1, T1);
  return sol;
}

bool is_quantized(const KineticState& fine_state, int r, double tol) {
  if (r < 1) {
    throw std::invalid_argument("is_quantized: refinement must be >= 1");
  }
  for (const auto& f : fine_state.f) {
    for (std::size_t j = 0; j < f.size(); ++j) {
      if (j % static_cast<std::size_t>(r) != 0 && std::abs(f[j]) > tol) {
        return false;
      }
    }
  }
  return true;
}

double equilibrium_flux(const EquilibriumSolution& solution, std::size_t p) {
  const std::vector<double>& f = solution.coarse.at(p);
  double q = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    q += f[j] * static_cast<double>(j) * solution.delta_v[p];
  }
  return q;
}

double discrete_flux(const KineticState& state, std::size_t p) {
  const std::vector<double>& f = state.f.at(p);
  const std::vector<double>& v = state.grids.at(p).midpoints;
  double q = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    q += f[j] * v[j];
  }
  return q;
}

std::optional<double> mean_speed(double q, double rho) {
  if (rho <= 0.0) {
    return std::nullopt;
  }
  return q / rho;
}

namespace {

bool same_speeds(const VehicleClass& a, const VehicleClass& b) {
  return std::abs(a.v_max - b.v_max) <= 1e-12 * a.v_max &&
         std::abs(a.delta_v - b.delta_v) <= 1e-12 * a.delta_v;
}

bool uniform_rates(const Mixture& mixture) {
  const double eta = mixture.rates[0][0];
  for (const auto& row : mixture.rates) {
    for (double value : row) {
      if (std::abs(value - eta) > 1e-12 * eta) return false;
    }
  }
  return true;
}

}  // namespace

MixtureEquilibrium equilibrium_for_mixture(const Mixture& mixture, const ProbabilityLaw& law,
                                           double tol, double t_max) {
  const double s = occupied_fraction(mixture);
  const double P = law(s);

  MixtureEquilibrium result;
  result.probability = P;
  const auto& classes = mixture.classes;

  // Classes sharing v_max and delta_v are indistinguishable to the collision
  // operator, so they pool into one velocity group whose equilibrium splits
  // proportionally to the member densities. With at most two groups (and a
  // common rate) the two-population closed form applies to any class count.
  if (uniform_rates(mixture)) {
    std::vector<std::size_t> group_of(classes.size());
    std::vector<std::size_t> leaders;
    std::vector<double> group_rho;
    for (std::size_t p = 0; p < classes.size(); ++p) {
      bool placed = false;
      for (std::size_t g = 0; g < leaders.size(); ++g) {
        if (same_speeds(classes[p], classes[leaders[g]])) {
          group_of[p] = g;
          group_rho[g] += mixture.densities[p];
          placed = true;
          break;
        }
      }
      if (!placed) {
        group_of[p] = leaders.size();
        leaders.push_back(p);
        group_rho.push_back(mixture.densities[p]);
      }
    }

    const bool shared_jump =
        leaders.size() < 2 ||
        std::abs(classes[leaders[0]].delta_v - classes[leaders[1]].delta_v) <=
            1e-12 * classes[leaders[0]].delta_v;
    if (leaders.size() <= 2 && shared_jump) {
      std::vector<std::vector<double>> group_vectors;
      if (leaders.size() == 1) {
        EquilibriumSolution sol =
            closed_form_equilibrium(group_rho[0], classes[leaders[0]], P);
        group_vectors = std::move(sol.coarse);
      } else {
        const std::size_t hi = classes[leaders[0]].v_max >= classes[leaders[1]].v_max ? 0 : 1;
        const std::size_t lo = 1 - hi;
        EquilibriumSolution sol =
            closed_form_equilibrium(group_rho[hi], group_rho[lo], classes[leaders[hi]],
                                    classes[leaders[lo]], P);
        group_vectors.resize(2);
        group_vectors[hi] = std::move(sol.coarse[0]);
        group_vectors[lo] = std::move(sol.coarse[1]);
      }
      result.coarse.resize(classes.size());
      result.delta_v.resize(classes.size());
      for (std::size_t p = 0; p < classes.size(); ++p) {
        const std::size_t g = group_of[p];
        const double share =
            group_rho[g] > 0.0 ? mixture.densities[p] / group_rho[g] : 0.0;
        result.coarse[p] = group_vectors[g];
        for (double& v : result.coarse[p]) v *= share;
        result.delta_v[p] = classes[p].delta_v;
      }
      return result;
    }
  }

  // Three or more velocity groups, per-class jumps or non-uniform rates:
  // integrate on the coarsest grid. Its nodes are exactly the multiples of
  // the smallest jump, so the converged vector is already the quantized
  // representation.
  const auto grids = build_grids(classes, 1);
  const KineticState start = uniform_state(mixture, grids);
  RelaxationReport report = relax_to_equilibrium_at(start, mixture, P, tol, t_max);
  result.via_relaxation = true;
  result.converged = report.converged;
  result.coarse = std::move(report.final_state.f);
  result.delta_v.assign(classes.size(), grids.front().dv);
  return result;
}

}  // namespace kinetraf

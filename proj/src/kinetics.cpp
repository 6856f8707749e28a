#include "kinetraf/kinetics.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace kinetraf {

namespace {

constexpr double kGridTol = 1e-12;

void check_probability(double P) {
  if (!(P >= 0.0 && P <= 1.0)) {
    throw std::invalid_argument("interaction matrices: P must lie in [0, 1]");
  }
}

// The formulas below index cells 1..n as in the cell-sum derivation; add1
// converts on insertion.
void add1(SparseMatrix& m, int h, int k, double value) { m.add(h - 1, k - 1, value); }

// Matrices for a candidate class with n_p cells against a field class with
// n_q >= n_p cells sharing the same spacing; n_p == n_q gives the
// self-interaction structure. r is the candidate's jump in cells.
std::vector<SparseMatrix> build_family_le(int np, int nq, int r, double P) {
  std::vector<SparseMatrix> mats(np);
  for (auto& m : mats) {
    m.rows = np;
    m.cols = nq;
  }
  for (int j = 1; j <= r; ++j) {
    SparseMatrix& m = mats[j - 1];
    add1(m, j, j, 1.0 - P / 2.0);
    for (int k = 1; k < j; ++k) add1(m, j, k, P);
    for (int k = j + 1; k <= nq; ++k) add1(m, j, k, 1.0 - P);
    for (int h = j + 1; h <= np; ++h) add1(m, h, j, 1.0 - P);
  }
  for (int j = r + 1; j <= np - 1; ++j) {
    SparseMatrix& m = mats[j - 1];
    add1(m, j - r, j - r, P / 2.0);
    add1(m, j, j, 1.0 - P / 2.0);
    for (int k = j - r + 1; k <= nq; ++k) add1(m, j - r, k, P);
    for (int k = 1; k < j; ++k) add1(m, j, k, P);
    for (int k = j + 1; k <= nq; ++k) add1(m, j, k, 1.0 - P);
    for (int h = j + 1; h <= np; ++h) add1(m, h, j, 1.0 - P);
  }
  {
    SparseMatrix& m = mats[np - 1];
    for (int h = np - r; h <= np - 1; ++h) {
      add1(m, h, h, P / 2.0);
      for (int k = h + 1; k <= nq; ++k) add1(m, h, k, P);
    }
    for (int k = np; k <= nq; ++k) add1(m, np, k, 1.0);
    for (int k = 1; k < np; ++k) add1(m, np, k, P);
  }
  return mats;
}

// Matrices for a candidate class whose velocity space strictly contains the
// field class's one (n_p > n_q). The top of the field space introduces the
// split cell with the 1 - P/4 and P/4 coefficients.
std::vector<SparseMatrix> build_family_gt(int np, int nq, int r, double P) {
  if (np - nq < r) {
    throw std::invalid_argument(
        "cross matrices: v_max gap smaller than the candidate's velocity jump "
        "is not supported");
  }
  std::vector<SparseMatrix> mats(np);
  for (auto& m : mats) {
    m.rows = np;
    m.cols = nq;
  }
  for (int j = 1; j <= r; ++j) {
    SparseMatrix& m = mats[j - 1];
    add1(m, j, j, 1.0 - P / 2.0);
    for (int k = 1; k < j; ++k) add1(m, j, k, P);
    for (int k = j + 1; k <= nq; ++k) add1(m, j, k, 1.0 - P);
    for (int h = j + 1; h <= np; ++h) add1(m, h, j, 1.0 - P);
  }
  for (int j = r + 1; j <= nq - 1; ++j) {
    SparseMatrix& m = mats[j - 1];
    add1(m, j - r, j - r, P / 2.0);
    add1(m, j, j, 1.0 - P / 2.0);
    for (int k = j - r + 1; k <= nq; ++k) add1(m, j - r, k, P);
    for (int k = 1; k < j; ++k) add1(m, j, k, P);
    for (int k = j + 1; k <= nq; ++k) add1(m, j, k, 1.0 - P);
    for (int h = j + 1; h <= np; ++h) add1(m, h, j, 1.0 - P);
  }
  {
    SparseMatrix& m = mats[nq - 1];
    add1(m, nq - r, nq - r, P / 2.0);
    add1(m, nq, nq, 1.0 - P / 4.0);
    for (int k = nq - r + 1; k <= nq; ++k) add1(m, nq - r, k, P);
    for (int k = 1; k < nq; ++k) add1(m, nq, k, P);
    for (int h = nq + 1; h <= np; ++h) add1(m, h, nq, 1.0 - P);
  }
  for (int j = nq + 1; j <= nq + r - 1; ++j) {
    SparseMatrix& m = mats[j - 1];
    add1(m, j - r, j - r, P / 2.0);
    for (int k = j - r + 1; k <= nq; ++k) add1(m, j - r, k, P);
    for (int k = 1; k <= nq; ++k) add1(m, j, k, P);
  }
  {
    SparseMatrix& m = mats[nq + r - 1];
    add1(m, nq, nq, P / 4.0);
    for (int k = 1; k <= nq; ++k) add1(m, nq + r, k, P);
  }
  // Only present when the gap spans more than one jump.
  for (int j = nq + r + 1; j <= np; ++j) {
    SparseMatrix& m = mats[j - 1];
    for (int k = 1; k <= nq; ++k) add1(m, j, k, P);
  }
  return mats;
}

void check_shared_dv(const VelocityGrid& a, const VelocityGrid& b) {
  if (std::abs(a.dv - b.dv) > kGridTol * std::max(a.dv, b.dv)) {
    std::ostringstream msg;
    msg << "cross matrices: grids of '" << a.class_id << "' and '" << b.class_id
        << "' have different spacings " << a.dv << " and " << b.dv;
    throw std::invalid_argument(msg.str());
  }
}

// Running sums of a 1-based vector: before(j) = sum of entries 1..j-1,
// after(j) = sum of entries j+1..n.
class Cumulative {
public:
  explicit Cumulative(const std::vector<double>& v) : pre_(v.size() + 1, 0.0) {
    for (std::size_t i = 0; i < v.size(); ++i) pre_[i + 1] = pre_[i] + v[i];
  }
  double before(int j) const { return pre_[j - 1]; }
  double after(int j) const { return pre_.back() - pre_[j]; }
  double total() const { return pre_.back(); }

private:
  std::vector<double> pre_;
};

void self_direct(const std::vector<double>& f, int r, double P, double eta,
                 std::vector<double>& out) {
  const int n = static_cast<int>(f.size());
  const Cumulative cum(f);
  const double mass = cum.total();
  auto F = [&](int j) { return f[j - 1]; };

  for (int j = 1; j <= r; ++j) {
    out[j - 1] += eta * ((1.0 - P / 2.0) * F(j) * F(j) + P * F(j) * cum.before(j) +
                         (1.0 - P) * F(j) * cum.after(j) + (1.0 - P) * F(j) * cum.after(j) -
                         F(j) * mass);
  }
  for (int j = r + 1; j <= n - 1; ++j) {
    out[j - 1] += eta * ((P / 2.0) * F(j - r) * F(j - r) + (1.0 - P / 2.0) * F(j) * F(j) +
                         P * F(j - r) * cum.after(j - r) + P * F(j) * cum.before(j) +
                         (1.0 - P) * F(j) * cum.after(j) + (1.0 - P) * F(j) * cum.after(j) -
                         F(j) * mass);
  }
  double top = 0.0;
  for (int h = n - r; h <= n - 1; ++h) {
    top += F(h) * (0.5 * F(h) + cum.after(h));
  }
  out[n - 1] += eta * (P * top + F(n) * F(n) + P * F(n) * cum.before(n) - F(n) * mass);
}

void cross_direct_le(const std::vector<double>& f, const std::vector<double>& g, int r,
                     double P, double eta, std::vector<double>& out) {
  const int np = static_cast<int>(f.size());
  const Cumulative cf(f);
  const Cumulative cg(g);
  const double mass_q = cg.total();
  auto F = [&](int j) { return f[j - 1]; };
  auto G = [&](int j) { return g[j - 1]; };

  for (int j = 1; j <= r; ++j) {
    out[j - 1] += eta * ((1.0 - P / 2.0) * G(j) * F(j) + P * F(j) * cg.before(j) +
                         (1.0 - P) * F(j) * cg.after(j) + (1.0 - P) * G(j) * cf.after(j) -
                         F(j) * mass_q);
  }
  for (int j = r + 1; j <= np - 1; ++j) {
    out[j - 1] += eta * ((P / 2.0) * G(j - r) * F(j - r) + (1.0 - P / 2.0) * G(j) * F(j) +
                         P * F(j - r) * cg.after(j - r) + P * F(j) * cg.before(j) +
                         (1.0 - P) * F(j) * cg.after(j) + (1.0 - P) * G(j) * cf.after(j) -
                         F(j) * mass_q);
  }
  double top = 0.0;
  for (int h = np - r; h <= np - 1; ++h) {
    top += F(h) * (0.5 * G(h) + cg.after(h));
  }
  out[np - 1] += eta * (P * top + F(np) * (G(np) + cg.after(np)) +
                        P * F(np) * cg.before(np) - F(np) * mass_q);
}

void cross_direct_gt(const std::vector<double>& f, const std::vector<double>& g, int r,
                     double P, double eta, std::vector<double>& out) {
  const int np = static_cast<int>(f.size());
  const int nq = static_cast<int>(g.size());
  if (np - nq < r) {
    throw std::invalid_argument(
        "cross collision terms: v_max gap smaller than the candidate's velocity jump "
        "is not supported");
  }
  const Cumulative cf(f);
  const Cumulative cg(g);
  const double mass_q = cg.total();
  auto F = [&](int j) { return f[j - 1]; };
  auto G = [&](int j) { return g[j - 1]; };

  for (int j = 1; j <= r; ++j) {
    out[j - 1] += eta * ((1.0 - P / 2.0) * G(j) * F(j) + P * F(j) * cg.before(j) +
                         (1.0 - P) * F(j) * cg.after(j) + (1.0 - P) * G(j) * cf.after(j) -
                         F(j) * mass_q);
  }
  for (int j = r + 1; j <= nq - 1; ++j) {
    out[j - 1] += eta * ((P / 2.0) * G(j - r) * F(j - r) + (1.0 - P / 2.0) * G(j) * F(j) +
                         P * F(j - r) * cg.after(j - r) + P * F(j) * cg.before(j) +
                         (1.0 - P) * F(j) * cg.after(j) + (1.0 - P) * G(j) * cf.after(j) -
                         F(j) * mass_q);
  }
  out[nq - 1] += eta * ((P / 2.0) * G(nq - r) * F(nq - r) + (1.0 - P / 4.0) * G(nq) * F(nq) +
                        P * F(nq - r) * cg.after(nq - r) + P * F(nq) * cg.before(nq) +
                        (1.0 - P) * G(nq) * cf.after(nq) - F(nq) * mass_q);
  for (int j = nq + 1; j <= nq + r - 1; ++j) {
    out[j - 1] += eta * ((P / 2.0) * G(j - r) * F(j - r) + P * F(j - r) * cg.after(j - r) +
                         P * F(j) * mass_q - F(j) * mass_q);
  }
  out[nq + r - 1] += eta * ((P / 4.0) * G(nq) * F(nq) + P * F(nq + r) * mass_q -
                            F(nq + r) * mass_q);
  for (int j = nq + r + 1; j <= np; ++j) {
    out[j - 1] += eta * (P - 1.0) * F(j) * mass_q;
  }
}

}  // namespace

double KineticState::class_mass(std::size_t p) const {
  return std::accumulate(f[p].begin(), f[p].end(), 0.0);
}

KineticState uniform_state(const Mixture& mixture, const std::vector<VelocityGrid>& grids) {
  if (grids.size() != mixture.size()) {
    throw std::invalid_argument("uniform_state: one grid per class required");
  }
  KineticState state;
  state.grids = grids;
  state.f.resize(grids.size());
  for (std::size_t p = 0; p < grids.size(); ++p) {
    state.f[p].assign(grids[p].size, mixture.densities[p] / grids[p].size);
  }
  return state;
}

double SparseMatrix::quadratic_form(const std::vector<double>& left,
                                    const std::vector<double>& right) const {
  double sum = 0.0;
  for (const Entry& e : entries) {
    sum += e.value * left[e.row] * right[e.col];
  }
  return sum;
}

std::vector<std::vector<double>> SparseMatrix::dense() const {
  std::vector<std::vector<double>> m(rows, std::vector<double>(cols, 0.0));
  for (const Entry& e : entries) {
    m[e.row][e.col] += e.value;
  }
  return m;
}

std::vector<SparseMatrix> build_self_matrices(const VelocityGrid& grid, double P) {
  check_probability(P);
  return build_family_le(grid.size, grid.size, grid.refinement, P);
}

std::vector<SparseMatrix> build_cross_matrices(const VelocityGrid& grid_p,
                                               const VelocityGrid& grid_q, double P) {
  check_probability(P);
  check_shared_dv(grid_p, grid_q);
  if (grid_p.size <= grid_q.size) {
    return build_family_le(grid_p.size, grid_q.size, grid_p.refinement, P);
  }
  return build_family_gt(grid_p.size, grid_q.size, grid_p.refinement, P);
}

InteractionMatrixSet InteractionMatrixSet::build(const std::vector<VelocityGrid>& grids,
                                                 double P) {
  InteractionMatrixSet set;
  set.probability = P;
  const std::size_t n = grids.size();
  set.self.resize(n);
  set.cross.assign(n, std::vector<std::vector<SparseMatrix>>(n));
  for (std::size_t p = 0; p < n; ++p) {
    set.self[p] = build_self_matrices(grids[p], P);
    for (std::size_t q = 0; q < n; ++q) {
      if (q == p) continue;
      set.cross[p][q] = build_cross_matrices(grids[p], grids[q], P);
    }
  }
  return set;
}

std::vector<std::vector<double>> collision_rhs(const KineticState& state,
                                               const InteractionMatrixSet& matrices,
                                               const Mixture& mixture) {
  const std::size_t n = state.size();
  if (matrices.self.size() != n || mixture.size() != n) {
    throw std::invalid_argument("collision_rhs: state, matrices and mixture disagree "
                                "on the class count");
  }
  std::vector<double> masses(n);
  for (std::size_t p = 0; p < n; ++p) {
    if (matrices.self[p].size() != state.f[p].size()) {
      throw std::invalid_argument("collision_rhs: matrix dimensions do not match the state");
    }
    masses[p] = state.class_mass(p);
  }

  std::vector<std::vector<double>> rhs(n);
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t np = state.f[p].size();
    rhs[p].assign(np, 0.0);
    double loss_rate = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
      loss_rate += mixture.rates[p][q] * masses[q];
    }
    for (std::size_t j = 0; j < np; ++j) {
      double gain = mixture.rates[p][p] *
                    matrices.self[p][j].quadratic_form(state.f[p], state.f[p]);
      for (std::size_t q = 0; q < n; ++q) {
        if (q == p) continue;
        gain += mixture.rates[p][q] *
                matrices.cross[p][q][j].quadratic_form(state.f[p], state.f[q]);
      }
      rhs[p][j] = gain - state.f[p][j] * loss_rate;
    }
  }
  return rhs;
}

std::vector<std::vector<double>> collision_rhs_direct(const KineticState& state, double P,
                                                      const Mixture& mixture) {
  check_probability(P);
  const std::size_t n = state.size();
  if (mixture.size() != n) {
    throw std::invalid_argument("collision_rhs_direct: state and mixture disagree on the "
                                "class count");
  }
  std::vector<std::vector<double>> rhs(n);
  for (std::size_t p = 0; p < n; ++p) {
    rhs[p].assign(state.f[p].size(), 0.0);
    self_direct(state.f[p], state.grids[p].refinement, P, mixture.rates[p][p], rhs[p]);
    for (std::size_t q = 0; q < n; ++q) {
      if (q == p) continue;
      check_shared_dv(state.grids[p], state.grids[q]);
      if (state.f[p].size() <= state.f[q].size()) {
        cross_direct_le(state.f[p], state.f[q], state.grids[p].refinement, P,
                        mixture.rates[p][q], rhs[p]);
      } else {
        cross_direct_gt(state.f[p], state.f[q], state.grids[p].refinement, P,
                        mixture.rates[p][q], rhs[p]);
      }
    }
  }
  return rhs;
}

}  // namespace kinetraf

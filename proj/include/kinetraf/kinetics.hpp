#pragma once

#include <cstddef>
#include <vector>

#include "kinetraf/model.hpp"

namespace kinetraf {

/// Per-class discrete velocity distributions f[p][j] in veh/km per cell,
/// together with the grids they live on.
struct KineticState {
  std::vector<std::vector<double>> f;
  std::vector<VelocityGrid> grids;

  std::size_t size() const { return f.size(); }
  double class_mass(std::size_t p) const;
};

/// State with every cell of class p holding densities[p] / n^p.
KineticState uniform_state(const Mixture& mixture, const std::vector<VelocityGrid>& grids);

/// Coordinate-list sparse matrix; each interaction matrix has O(n) nonzeros.
struct SparseMatrix {
  struct Entry {
    int row;
    int col;
    double value;
  };

  int rows = 0;
  int cols = 0;
  std::vector<Entry> entries;

  void add(int row, int col, double value) { entries.push_back({row, col, value}); }

  // left^T M right, with left of length rows and right of length cols.
  double quadratic_form(const std::vector<double>& left,
                        const std::vector<double>& right) const;

  std::vector<std::vector<double>> dense() const;
};

/// Transition matrices of a mixture at a fixed acceleration probability P:
/// self[p][j] is the n^p x n^p matrix feeding cell j of class p from
/// interactions within the class, cross[p][q][j] the n^p x n^q matrix from
/// interactions of candidate class p against field class q. Each family sums
/// over j to the all-ones matrix.
struct InteractionMatrixSet {
  std::vector<std::vector<SparseMatrix>> self;
  std::vector<std::vector<std::vector<SparseMatrix>>> cross;  // cross[p][p] unused
  double probability = 0.0;

  static InteractionMatrixSet build(const std::vector<VelocityGrid>& grids, double P);
};

/// Self-interaction matrices A^{p,j}, j = 1..n, of one class.
std::vector<SparseMatrix> build_self_matrices(const VelocityGrid& grid, double P);

/// Cross-interaction matrices B^{pq,j}, j = 1..n^p, of candidate class p
/// (rows) against field class q (columns); the two grids must share dv.
std::vector<SparseMatrix> build_cross_matrices(const VelocityGrid& grid_p,
                                               const VelocityGrid& grid_q, double P);

/// Collision right-hand side df[p][j]/dt of the relaxation ODE system,
/// assembled from the interaction matrices.
std::vector<std::vector<double>> collision_rhs(const KineticState& state,
                                               const InteractionMatrixSet& matrices,
                                               const Mixture& mixture);

/// Same contract as collision_rhs but evaluated from the explicit cell-sum
/// formulas, without building matrices. Kept as an independent oracle.
std::vector<std::vector<double>> collision_rhs_direct(const KineticState& state, double P,
                                                      const Mixture& mixture);

}  // namespace kinetraf

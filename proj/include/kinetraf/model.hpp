#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace kinetraf {

/// Physical identity of a vehicle population: typical length, maximum speed
/// and the instantaneous velocity jump gained on acceleration.
struct VehicleClass {
  std::string id;
  double length_km;  // typical vehicle length [km]
  double v_max;      // maximum speed [km/h]
  double delta_v;    // velocity jump [km/h]

  VehicleClass(std::string id_, double length_km_, double v_max_, double delta_v_);

  // Number of velocity jumps needed to reach v_max from rest; always integral.
  int jump_count() const { return jump_count_; }

  // Bumper-to-bumper density 1/length [veh/km].
  double rho_max() const { return 1.0 / length_km; }

private:
  int jump_count_;
};

/// A traffic mixture: the classes on the road, their densities and the
/// interaction rates. rates[p][p] is the self rate, rates[p][q] the cross
/// rate of candidate class p against field class q.
struct Mixture {
  std::vector<VehicleClass> classes;
  std::vector<double> densities;            // veh/km, one per class
  std::vector<std::vector<double>> rates;   // positive, size n x n

  Mixture(std::vector<VehicleClass> classes_, std::vector<double> densities_);
  Mixture(std::vector<VehicleClass> classes_, std::vector<double> densities_,
          std::vector<std::vector<double>> rates_);

  std::size_t size() const { return classes.size(); }
  double total_density() const;

  // Linear loss coefficient of class p: self rate times own density plus the
  // cross rates times the other densities.
  double loss_rate(std::size_t p) const;
  double max_loss_rate() const;

private:
  void validate() const;
};

/// Length-weighted fraction of road occupied by the mixture, in [0, 1].
double occupied_fraction(const Mixture& mixture);

struct PiecewiseCoefficients {
  double a;
  double b;
  double c;
};

/// Coefficients of the quadratic branch of the piecewise probability law,
/// fixed by the constraints P2(s_cr) = 1/2, P2(1) = 0 and P2'(s_cr) = mu.
PiecewiseCoefficients piecewise_coefficients(double s_cr, double mu);

/// Probability of accelerating (or keeping speed while overtaking) as a
/// function of the occupied fraction s. Two variants:
///  - gamma law       P(s) = 1 - s^gamma
///  - piecewise law   linear down to 1/2 at s_cr, then a quadratic tail
/// Both are non-increasing with P(0) = 1; the piecewise law has P(1) = 0.
class ProbabilityLaw {
public:
  enum class Kind { Gamma, Piecewise };

  static ProbabilityLaw gamma(double gamma);
  static ProbabilityLaw piecewise(double s_cr, double mu);
  // The admissibility bound on mu normally uses the gamma implied by
  // s_cr = (1/2)^(1/gamma); pass a different exponent to override it.
  static ProbabilityLaw piecewise(double s_cr, double mu, double gamma_bound);

  Kind kind() const { return kind_; }
  double operator()(double s) const;

  // The occupancy at which P crosses 1/2 (phase transition).
  double critical_s() const;

  double gamma_exponent() const { return gamma_; }
  double slope_mu() const { return mu_; }
  PiecewiseCoefficients coefficients() const { return {a_, b_, c_}; }

private:
  ProbabilityLaw() = default;
  void check_monotone() const;

  Kind kind_ = Kind::Gamma;
  double gamma_ = 1.0;
  double s_cr_ = 0.5;
  double mu_ = 0.0;
  double a_ = 0.0, b_ = 0.0, c_ = 0.0;
};

/// Evaluate a probability law at occupancy s; rejects s outside [0, 1].
double eval_probability(const ProbabilityLaw& law, double s);

/// Cell decomposition of one class's velocity space [0, v_max]. Interior
/// cells have width dv, the first and last have width dv/2 and midpoints
/// offset dv/4 from the boundary, so every refinement shares the interior
/// nodes of the coarse grid.
struct VelocityGrid {
  std::string class_id;
  int refinement;                 // r: cells spanned by one velocity jump
  double dv;                      // grid spacing delta_v / r [km/h]
  double v_max;                   // [km/h]
  double delta_v;                 // [km/h]
  int size;                       // n = T*r + 1
  std::vector<double> midpoints;  // [km/h]
  std::vector<double> widths;     // [km/h]
};

/// Build the velocity grid of one class with refinement r >= 1.
VelocityGrid build_grid(const VehicleClass& cls, int r);

/// Grids for all classes of a mixture sharing one spacing dv. r refines the
/// smallest velocity jump; classes with a larger jump get proportionally
/// larger per-class refinements.
std::vector<VelocityGrid> build_grids(const std::vector<VehicleClass>& classes, int r);

}  // namespace kinetraf

#include "kinetraf/model.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace kinetraf {

namespace {

constexpr double kIntegerTol = 1e-9;
constexpr double kOccupancySlack = 1e-12;

// v_max / delta_v must be a whole number of jumps.
int integral_ratio(double num, double den, const std::string& what) {
  const double ratio = num / den;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > kIntegerTol * std::max(1.0, ratio)) {
    std::ostringstream msg;
    msg << what << ": " << num << " / " << den << " = " << ratio
        << " is not a positive integer";
    throw std::invalid_argument(msg.str());
  }
  return static_cast<int>(rounded);
}

}  // namespace

VehicleClass::VehicleClass(std::string id_, double length_km_, double v_max_, double delta_v_)
    : id(std::move(id_)), length_km(length_km_), v_max(v_max_), delta_v(delta_v_) {
  if (!(length_km > 0.0)) {
    throw std::invalid_argument("class '" + id + "': length must be > 0 km");
  }
  if (!(v_max > 0.0)) {
    throw std::invalid_argument("class '" + id + "': v_max must be > 0 km/h");
  }
  if (!(delta_v > 0.0)) {
    throw std::invalid_argument("class '" + id + "': delta_v must be > 0 km/h");
  }
  jump_count_ = integral_ratio(v_max, delta_v, "class '" + id + "': v_max / delta_v");
}

Mixture::Mixture(std::vector<VehicleClass> classes_, std::vector<double> densities_)
    : classes(std::move(classes_)), densities(std::move(densities_)) {
  rates.assign(classes.size(), std::vector<double>(classes.size(), 1.0));
  validate();
}

Mixture::Mixture(std::vector<VehicleClass> classes_, std::vector<double> densities_,
                 std::vector<std::vector<double>> rates_)
    : classes(std::move(classes_)), densities(std::move(densities_)), rates(std::move(rates_)) {
  validate();
}

void Mixture::validate() const {
  if (classes.empty()) {
    throw std::invalid_argument("mixture: needs at least one class");
  }
  if (densities.size() != classes.size()) {
    throw std::invalid_argument("mixture: one density per class required");
  }
  for (std::size_t p = 0; p < densities.size(); ++p) {
    if (!(densities[p] >= 0.0)) {
      throw std::invalid_argument("mixture: density of class '" + classes[p].id +
                                  "' must be >= 0");
    }
  }
  if (rates.size() != classes.size()) {
    throw std::invalid_argument("mixture: rate matrix must be square in the class count");
  }
  for (std::size_t p = 0; p < rates.size(); ++p) {
    if (rates[p].size() != classes.size()) {
      throw std::invalid_argument("mixture: rate matrix must be square in the class count");
    }
    for (double eta : rates[p]) {
      if (!(eta > 0.0)) {
        throw std::invalid_argument("mixture: all interaction rates must be > 0");
      }
    }
  }
  occupied_fraction(*this);  // rejects over-occupied roads
}

double Mixture::total_density() const {
  return std::accumulate(densities.begin(), densities.end(), 0.0);
}

double Mixture::loss_rate(std::size_t p) const {
  double r = 0.0;
  for (std::size_t q = 0; q < densities.size(); ++q) {
    r += rates[p][q] * densities[q];
  }
  return r;
}

double Mixture::max_loss_rate() const {
  double r = 0.0;
  for (std::size_t p = 0; p < densities.size(); ++p) {
    r = std::max(r, loss_rate(p));
  }
  return r;
}

double occupied_fraction(const Mixture& mixture) {
  double s = 0.0;
  for (std::size_t p = 0; p < mixture.classes.size(); ++p) {
    if (!(mixture.densities[p] >= 0.0)) {
      throw std::invalid_argument("occupied_fraction: densities must be >= 0");
    }
    s += mixture.classes[p].length_km * mixture.densities[p];
  }
  if (s > 1.0 + kOccupancySlack) {
    std::ostringstream msg;
    msg << "occupied fraction " << s << " exceeds 1: road over-occupied";
    throw std::invalid_argument(msg.str());
  }
  return s;
}

PiecewiseCoefficients piecewise_coefficients(double s_cr, double mu) {
  if (!(s_cr > 0.0 && s_cr < 1.0)) {
    throw std::invalid_argument("piecewise law: s_cr must lie in (0, 1)");
  }
  if (!(mu < 0.0)) {
    throw std::invalid_argument("piecewise law: mu must be negative (P decreases)");
  }
  const double d = s_cr - 1.0;
  PiecewiseCoefficients k;
  k.a = (2.0 * mu * d - 1.0) / (2.0 * d * d);
  k.b = -(mu * (s_cr * s_cr - 1.0) - s_cr) / (d * d);
  k.c = (2.0 * s_cr * (mu * d - 1.0) + 1.0) / (2.0 * d * d);
  return k;
}

ProbabilityLaw ProbabilityLaw::gamma(double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("gamma law: exponent must lie in (0, 1]");
  }
  ProbabilityLaw law;
  law.kind_ = Kind::Gamma;
  law.gamma_ = gamma;
  law.s_cr_ = std::pow(0.5, 1.0 / gamma);
  law.check_monotone();
  return law;
}

ProbabilityLaw ProbabilityLaw::piecewise(double s_cr, double mu) {
  // gamma implied by requiring the gamma law to cross 1/2 at the same s_cr
  const double gamma_bound = std::log(0.5) / std::log(s_cr);
  return piecewise(s_cr, mu, gamma_bound);
}

ProbabilityLaw ProbabilityLaw::piecewise(double s_cr, double mu, double gamma_bound) {
  const PiecewiseCoefficients k = piecewise_coefficients(s_cr, mu);
  const double mu_min = -gamma_bound * std::pow(s_cr, gamma_bound - 1.0);
  if (!(mu > mu_min)) {
    std::ostringstream msg;
    msg << "piecewise law: slope mu = " << mu << " must exceed the gamma-law slope "
        << mu_min << " at s_cr (otherwise P does not dominate the gamma law past s_cr)";
    throw std::invalid_argument(msg.str());
  }
  ProbabilityLaw law;
  law.kind_ = Kind::Piecewise;
  law.gamma_ = gamma_bound;
  law.s_cr_ = s_cr;
  law.mu_ = mu;
  law.a_ = k.a;
  law.b_ = k.b;
  law.c_ = k.c;
  law.check_monotone();
  return law;
}

double ProbabilityLaw::operator()(double s) const {
  if (kind_ == Kind::Gamma) {
    return 1.0 - std::pow(s, gamma_);
  }
  if (s <= s_cr_) {
    return 1.0 - s / (2.0 * s_cr_);
  }
  return (a_ * s + b_) * s + c_;
}

double ProbabilityLaw::critical_s() const { return s_cr_; }

void ProbabilityLaw::check_monotone() const {
  constexpr int kGridPoints = 1000;
  constexpr double kTol = 1e-12;
  double prev = (*this)(0.0);
  for (int i = 1; i <= kGridPoints; ++i) {
    const double s = static_cast<double>(i) / kGridPoints;
    const double value = (*this)(s);
    if (value > prev + kTol) {
      std::ostringstream msg;
      msg << "probability law is not non-increasing near s = " << s;
      throw std::invalid_argument(msg.str());
    }
    if (value < -kTol || value > 1.0 + kTol) {
      std::ostringstream msg;
      msg << "probability law leaves [0, 1] at s = " << s;
      throw std::invalid_argument(msg.str());
    }
    prev = value;
  }
}

double eval_probability(const ProbabilityLaw& law, double s) {
  if (!(s >= 0.0 && s <= 1.0)) {
    throw std::invalid_argument("eval_probability: s must lie in [0, 1]");
  }
  return law(s);
}

VelocityGrid build_grid(const VehicleClass& cls, int r) {
  if (r < 1) {
    throw std::invalid_argument("build_grid: refinement must be >= 1");
  }
  VelocityGrid grid;
  grid.class_id = cls.id;
  grid.refinement = r;
  grid.dv = cls.delta_v / r;
  grid.v_max = cls.v_max;
  grid.delta_v = cls.delta_v;
  grid.size = cls.jump_count() * r + 1;
  grid.midpoints.resize(grid.size);
  grid.widths.resize(grid.size);
  for (int j = 0; j < grid.size; ++j) {
    grid.midpoints[j] = j * grid.dv;
    grid.widths[j] = grid.dv;
  }
  grid.midpoints.front() = grid.dv / 4.0;
  grid.midpoints.back() = cls.v_max - grid.dv / 4.0;
  grid.widths.front() = grid.dv / 2.0;
  grid.widths.back() = grid.dv / 2.0;
  return grid;
}

std::vector<VelocityGrid> build_grids(const std::vector<VehicleClass>& classes, int r) {
  if (classes.empty()) {
    throw std::invalid_argument("build_grids: needs at least one class");
  }
  double min_jump = classes.front().delta_v;
  for (const auto& cls : classes) {
    min_jump = std::min(min_jump, cls.delta_v);
  }
  const double dv = min_jump / r;
  std::vector<VelocityGrid> grids;
  grids.reserve(classes.size());
  for (const auto& cls : classes) {
    const int rp = integral_ratio(cls.delta_v, dv,
                                  "class '" + cls.id + "': delta_v / shared dv");
    grids.push_back(build_grid(cls, rp));
  }
  return grids;
}

}  // namespace kinetraf

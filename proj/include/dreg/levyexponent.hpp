#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "dreg/model.hpp"
#include "dreg/truncation.hpp"

namespace dreg {

using Complex = std::complex<double>;

// Density sampled on increasing nodes, integrated by the trapezoid rule.
struct GriddedDensity {
  std::vector<double> x;
  std::vector<double> density;
};

// Signed measure on R \ {0}: weighted atoms plus gridded densities.
struct SignedMeasure {
  std::vector<PointMass> atoms;
  std::vector<GriddedDensity> densities;

  // weight * Normal(mean, sd) density sampled on [mean - span sd, mean + span sd].
  static GriddedDensity gaussian_density(double weight, double mean, double sd,
                                         std::size_t points = 4001,
                                         double span = 10.0);
  // int (1 ^ x^2) |Lambda|(dx)
  double small_jump_mass() const;
};

struct Triplet1D {
  double b = 0.0;
  double c = 0.0;  // sign unrestricted
  SignedMeasure lambda;
  Truncation k = Truncation::standard();

  friend Triplet1D operator+(const Triplet1D& l, const Triplet1D& r);
};

void validate(const Triplet1D& t);

// i u b - c u^2 / 2 + int (e^{iux} - 1 - i u k(x)) Lambda(dx)
Complex exponent_eval(const Triplet1D& t, double u);

// R^d version; k acts radially, k(x) = x k(|x|) / |x|.
struct TripletND {
  Eigen::VectorXd b;
  Eigen::MatrixXd c;
  std::vector<std::pair<Eigen::VectorXd, double>> atoms;
  Truncation k = Truncation::standard();
};
Complex exponent_eval(const TripletND& t, const Eigen::VectorXd& u);

// psi sampled on the symmetric uniform grid u_j = -u_max + 2 u_max j / (m - 1).
struct ExponentGrid {
  std::vector<double> u;
  std::vector<Complex> psi;

  double u_max() const { return u.back(); }
  double du() const { return u[1] - u[0]; }
  // Linear interpolation; throws PreconditionError outside the grid.
  Complex at(double v) const;
};

ExponentGrid sample_exponent(const Triplet1D& t, double u_max, std::size_t m);

// psi(u) - 1/2 int_{-1}^{1} psi(u + s w) ds, 64-point Gauss-Legendre in s.
Complex phi_w(const ExponentGrid& psi, double w, double u);

struct RecoveryOptions {
  double x_min = -4.0;
  double x_max = 4.0;
  std::size_t cells = 1024;
  double b_u_lo = 0.1;
  double b_u_hi = 1.0;
  double guard = 1e-3;  // cells where 1 - sin(wx)/(wx) falls below are unrecovered
};

struct RecoveredTriplet {
  double b = 0.0;
  double c = 0.0;
  GriddedDensity lambda;         // cell centres; zero on unrecovered cells
  std::vector<bool> recovered;   // per cell
  std::size_t unrecovered_cells = 0;
  double residual = 0.0;         // sup |psi_hat - psi| over the admissible u
  double w = 0.0;
  Truncation k;

  Triplet1D triplet() const;
  // int of the recovered density over [lo, hi] (cell midpoint rule).
  double mass(double lo, double hi) const;
};

RecoveredTriplet recover_triplet(const ExponentGrid& psi, double w,
                                 const Truncation& k,
                                 const RecoveryOptions& options = {});

// CSV `u,re,im`.
void write_exponent_csv(std::ostream& out, const ExponentGrid& g);
void write_exponent_csv(const std::string& file, const ExponentGrid& g);
ExponentGrid read_exponent_csv(std::istream& in);
ExponentGrid read_exponent_csv(const std::string& file);

nlohmann::json recovered_json(const RecoveredTriplet& r);

}  // namespace dreg

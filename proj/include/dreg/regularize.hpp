#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dreg/paths.hpp"

namespace dreg {

using Trajectory = std::vector<double>;

// Strictly decreasing epsilons, each an exact multiple m * dt of the grid
// step with 1 <= m and m * dt < T.
class EpsilonSchedule {
 public:
  EpsilonSchedule(const TimeGrid& grid, std::vector<std::size_t> multiples);

  // {32, 16, 8, 4, 2, 1} * dt, keeping eps <= T / 10 (at least dt).
  static EpsilonSchedule standard(const TimeGrid& grid);
  // Accepts explicit epsilon values; each must be a grid multiple.
  static EpsilonSchedule from_values(const TimeGrid& grid,
                                     const std::vector<double>& eps);

  const TimeGrid& grid() const { return grid_; }
  const std::vector<std::size_t>& multiples() const { return multiples_; }
  double epsilon(std::size_t k) const {
    return static_cast<double>(multiples_[k]) * grid_.dt();
  }
  std::size_t size() const { return multiples_.size(); }

 private:
  TimeGrid grid_;
  std::vector<std::size_t> multiples_;
};

// Grid multiple m with eps = m * dt; throws AlignmentError otherwise.
std::size_t epsilon_multiple(const TimeGrid& grid, double eps);

struct CovariationEstimate {
  std::vector<double> epsilons;
  std::vector<Trajectory> trajectories;  // one per epsilon, schedule order
  Trajectory limit;                      // trajectory at the smallest epsilon
  // max_t |last - second-to-last|; zero for single-epsilon schedules.
  double error_estimate = 0.0;
  // sup-distance between consecutive trajectories, size = epsilons - 1.
  std::vector<double> successive_distances;
  // False when the successive distance increased at each of the last two
  // refinements.
  bool converged = true;
};

// [X,Y]^eps(t_j) = (1/m) sum_{i<j} (X_{min(i+m,j)} - X_i)(Y_{min(i+m,j)} - Y_i)
Trajectory covariation_eps(const CadlagPath& x, const CadlagPath& y,
                           double eps);
Trajectory covariation_eps(const CadlagPath& x, const CadlagPath& y,
                           std::size_t multiple);
CovariationEstimate covariation_limit(const CadlagPath& x, const CadlagPath& y,
                                      const EpsilonSchedule& schedule);

// (1/m) sum_{i<j} Y_i (X_{min(i+m,j)} - X_i)
Trajectory forward_integral_eps(const CadlagPath& integrand,
                                const CadlagPath& integrator, double eps);
Trajectory forward_integral_eps(const CadlagPath& integrand,
                                const CadlagPath& integrator,
                                std::size_t multiple);
// Same as above with a raw integrand sampled on the integrator's grid.
Trajectory forward_integral_eps(std::span<const double> integrand,
                                const CadlagPath& integrator,
                                std::size_t multiple);
CovariationEstimate forward_integral_limit(const CadlagPath& integrand,
                                           const CadlagPath& integrator,
                                           const EpsilonSchedule& schedule);
CovariationEstimate forward_integral_limit(std::span<const double> integrand,
                                           const CadlagPath& integrator,
                                           const EpsilonSchedule& schedule);

struct QvDecomposition {
  Trajectory continuous;  // [X,X]^c
  Trajectory jump;        // sum_{s<=t} |dX_s|^2
  CovariationEstimate estimate;
  // [X,X]^c >= -error and nondecreasing up to the error estimate.
  bool continuous_monotone = true;
  bool converged() const { return estimate.converged; }
};

QvDecomposition qv_decompose(const CadlagPath& x,
                             const EpsilonSchedule& schedule);

// Continuous part of the mutual covariation: [X,Y] - sum dX dY.
struct CrossDecomposition {
  Trajectory continuous;
  Trajectory jump;
  CovariationEstimate estimate;
};
CrossDecomposition cross_decompose(const CadlagPath& x, const CadlagPath& y,
                                   const EpsilonSchedule& schedule);

// Node-wise sum_{s<=t} dX_s dY_s from the jump registries.
Trajectory jump_product_sum(const CadlagPath& x, const CadlagPath& y);

double sup_distance(const Trajectory& a, const Trajectory& b);
double sup_norm(const Trajectory& a);

struct LemmaYZReport {
  Trajectory lhs;  // [Y,Z] limit
  Trajectory rhs;  // sum dY dZ
  double distance = 0.0;
  double error_estimate = 0.0;
  bool converged = true;
  // [Y,Y]^c vanishes within `continuous_tolerance`.
  bool precondition_ok = true;
  double y_continuous_sup = 0.0;
};

LemmaYZReport check_lemma_YZ(const CadlagPath& y, const CadlagPath& z,
                             const EpsilonSchedule& schedule,
                             double continuous_tolerance = 0.05);

struct C1Function {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
};

struct StabilityReport {
  Trajectory lhs;
  Trajectory rhs;
  Trajectory rhs_continuous;
  Trajectory rhs_jump;
  double distance = 0.0;
  double error_estimate = 0.0;
  bool converged = true;
};

// [phi(X), phi(X)] against int phi'(X_-)^2 d[X,X]^c + sum (d phi(X))^2.
StabilityReport check_c1_stability(const CadlagPath& x, const C1Function& phi,
                                   const EpsilonSchedule& schedule);
// [phi(X1), psi(X2)] against
// int phi'(X1_-) psi'(X2_-) d[X1,X2]^c + sum d phi(X1) d psi(X2).
StabilityReport check_c1_stability(const CadlagPath& x1, const C1Function& phi,
                                   const CadlagPath& x2, const C1Function& psi,
                                   const EpsilonSchedule& schedule);

// Long-format `t,eps,value` rows for every epsilon plus eps=0 for the limit.
void write_estimate_csv(std::ostream& out, const TimeGrid& grid,
                        const CovariationEstimate& est);
nlohmann::json estimate_summary(const CovariationEstimate& est);

namespace reference {

// Literal O(n^2) transcriptions of the regularized functionals.
Trajectory covariation_eps(const CadlagPath& x, const CadlagPath& y,
                           std::size_t multiple);
Trajectory forward_integral_eps(const CadlagPath& integrand,
                                const CadlagPath& integrator,
                                std::size_t multiple);

}  // namespace reference

}  // namespace dreg

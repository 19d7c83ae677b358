#include "dreg/regularize.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <ostream>

#include "dreg/errors.hpp"

namespace dreg {

EpsilonSchedule::EpsilonSchedule(const TimeGrid& grid,
                                 std::vector<std::size_t> multiples)
    : grid_(grid), multiples_(std::move(multiples)) {
  if (multiples_.empty()) throw PreconditionError("empty epsilon schedule");
  for (std::size_t k = 0; k < multiples_.size(); ++k) {
    if (multiples_[k] == 0) {
      throw PreconditionError("epsilon must be at least one grid step");
    }
    if (multiples_[k] >= grid_.steps()) {
      throw PreconditionError("epsilon must be smaller than the horizon");
    }
    if (k > 0 && multiples_[k] >= multiples_[k - 1]) {
      throw PreconditionError("epsilon schedule must be strictly decreasing");
    }
  }
}

EpsilonSchedule EpsilonSchedule::standard(const TimeGrid& grid) {
  std::vector<std::size_t> m;
  for (std::size_t k : {32u, 16u, 8u, 4u, 2u, 1u}) {
    if (static_cast<double>(k) * grid.dt() <= grid.horizon() / 10.0 || k == 1) {
      if (k < grid.steps()) m.push_back(k);
    }
  }
  return EpsilonSchedule(grid, std::move(m));
}

EpsilonSchedule EpsilonSchedule::from_values(const TimeGrid& grid,
                                             const std::vector<double>& eps) {
  std::vector<std::size_t> m;
  m.reserve(eps.size());
  for (double e : eps) m.push_back(epsilon_multiple(grid, e));
  return EpsilonSchedule(grid, std::move(m));
}

std::size_t epsilon_multiple(const TimeGrid& grid, double eps) {
  const double ratio = eps / grid.dt();
  const double m = std::nearbyint(ratio);
  if (!(m >= 1.0) || std::abs(ratio - m) > 1e-9 * std::max(1.0, m)) {
    throw AlignmentError("epsilon " + format_double(eps) +
                         " is not a positive multiple of the grid step");
  }
  return static_cast<std::size_t>(m);
}

namespace {

void require_same_grid(const CadlagPath& a, const CadlagPath& b) {
  if (!(a.grid() == b.grid())) {
    throw GridMismatchError("paths live on different grids");
  }
}

// Shared kernel. For node j the window sum splits into full windows
// (i + m <= j, independent of j, accumulated by a prefix scan) and the
// clamped tail i in (j - m, j) evaluated directly.
template <class Full, class Tail>
Trajectory regularized(std::size_t nodes, std::size_t m, Full full, Tail tail) {
  const std::size_t n = nodes - 1;
  std::vector<double> prefix(n + 1, 0.0);  // prefix[p] = sum_{i<p} full(i)
  for (std::size_t i = 0; i + m <= n; ++i) prefix[i + 1] = prefix[i] + full(i);
  for (std::size_t p = (n >= m ? n - m + 1 : 0) + 1; p <= n; ++p) {
    prefix[p] = prefix[p - 1];
  }
  Trajectory out(nodes, 0.0);
  const double inv_m = 1.0 / static_cast<double>(m);
  const auto last = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t jj = 1; jj <= last; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    const std::size_t full_count = j >= m ? j - m + 1 : 0;
    double s = prefix[full_count];
    for (std::size_t i = full_count; i < j; ++i) s += tail(i, j);
    out[j] = s * inv_m;
  }
  return out;
}

CovariationEstimate assemble(std::vector<double> eps,
                             std::vector<Trajectory> trajectories) {
  CovariationEstimate est;
  est.epsilons = std::move(eps);
  est.trajectories = std::move(trajectories);
  est.limit = est.trajectories.back();
  for (std::size_t k = 1; k < est.trajectories.size(); ++k) {
    est.successive_distances.push_back(
        sup_distance(est.trajectories[k], est.trajectories[k - 1]));
  }
  if (!est.successive_distances.empty()) {
    est.error_estimate = est.successive_distances.back();
  }
  // Non-convergence: the distance grew at each of the last two refinements
  // (at the only one when the schedule has three epsilons).
  const auto& d = est.successive_distances;
  const double slack = 1e-12 * std::max(sup_norm(est.limit), 1.0);
  const std::size_t K = d.size();
  if (K >= 3) {
    est.converged = !(d[K - 1] > d[K - 2] + slack && d[K - 2] > d[K - 3] + slack);
  } else if (K == 2) {
    est.converged = !(d[1] > d[0] + slack);
  }
  return est;
}

}  // namespace

Trajectory covariation_eps(const CadlagPath& x, const CadlagPath& y,
                           std::size_t multiple) {
  require_same_grid(x, y);
  if (multiple == 0 || multiple >= x.grid().steps()) {
    throw PreconditionError("epsilon multiple out of range");
  }
  const auto xv = x.values();
  const auto yv = y.values();
  const std::size_t m = multiple;
  return regularized(
      xv.size(), m,
      [&](std::size_t i) { return (xv[i + m] - xv[i]) * (yv[i + m] - yv[i]); },
      [&](std::size_t i, std::size_t j) {
        return (xv[j] - xv[i]) * (yv[j] - yv[i]);
      });
}

Trajectory covariation_eps(const CadlagPath& x, const CadlagPath& y,
                           double eps) {
  return covariation_eps(x, y, epsilon_multiple(x.grid(), eps));
}

CovariationEstimate covariation_limit(const CadlagPath& x, const CadlagPath& y,
                                      const EpsilonSchedule& schedule) {
  require_same_grid(x, y);
  if (!(schedule.grid() == x.grid())) {
    throw GridMismatchError("schedule built for a different grid");
  }
  std::vector<double> eps;
  std::vector<Trajectory> traj;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    eps.push_back(schedule.epsilon(k));
    traj.push_back(covariation_eps(x, y, schedule.multiples()[k]));
  }
  return assemble(std::move(eps), std::move(traj));
}

Trajectory forward_integral_eps(std::span<const double> yv,
                                const CadlagPath& integrator,
                                std::size_t multiple) {
  const auto xv = integrator.values();
  if (yv.size() != xv.size()) {
    throw GridMismatchError("integrand and integrator sizes differ");
  }
  if (multiple == 0 || multiple >= integrator.grid().steps()) {
    throw PreconditionError("epsilon multiple out of range");
  }
  const std::size_t m = multiple;
  return regularized(
      xv.size(), m, [&](std::size_t i) { return yv[i] * (xv[i + m] - xv[i]); },
      [&](std::size_t i, std::size_t j) { return yv[i] * (xv[j] - xv[i]); });
}

Trajectory forward_integral_eps(const CadlagPath& integrand,
                                const CadlagPath& integrator,
                                std::size_t multiple) {
  require_same_grid(integrand, integrator);
  return forward_integral_eps(integrand.values(), integrator, multiple);
}

Trajectory forward_integral_eps(const CadlagPath& integrand,
                                const CadlagPath& integrator, double eps) {
  return forward_integral_eps(integrand, integrator,
                              epsilon_multiple(integrator.grid(), eps));
}

CovariationEstimate forward_integral_limit(std::span<const double> integrand,
                                           const CadlagPath& integrator,
                                           const EpsilonSchedule& schedule) {
  if (!(schedule.grid() == integrator.grid())) {
    throw GridMismatchError("schedule built for a different grid");
  }
  std::vector<double> eps;
  std::vector<Trajectory> traj;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    eps.push_back(schedule.epsilon(k));
    traj.push_back(
        forward_integral_eps(integrand, integrator, schedule.multiples()[k]));
  }
  return assemble(std::move(eps), std::move(traj));
}

CovariationEstimate forward_integral_limit(const CadlagPath& integrand,
                                           const CadlagPath& integrator,
                                           const EpsilonSchedule& schedule) {
  require_same_grid(integrand, integrator);
  return forward_integral_limit(integrand.values(), integrator, schedule);
}

Trajectory jump_product_sum(const CadlagPath& x, const CadlagPath& y) {
  require_same_grid(x, y);
  const auto dx = x.dense_jumps();
  const auto dy = y.dense_jumps();
  Trajectory out(dx.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    acc += dx[i] * dy[i];
    out[i] = acc;
  }
  return out;
}

QvDecomposition qv_decompose(const CadlagPath& x,
                             const EpsilonSchedule& schedule) {
  QvDecomposition out;
  out.estimate = covariation_limit(x, x, schedule);
  out.jump = jump_product_sum(x, x);
  out.continuous.resize(out.jump.size());
  for (std::size_t i = 0; i < out.jump.size(); ++i) {
    out.continuous[i] = out.estimate.limit[i] - out.jump[i];
  }
  const double tol = out.estimate.error_estimate + 1e-12;
  double running_max = 0.0;
  for (double c : out.continuous) {
    if (c < -tol || c < running_max - tol) out.continuous_monotone = false;
    running_max = std::max(running_max, c);
  }
  return out;
}

CrossDecomposition cross_decompose(const CadlagPath& x, const CadlagPath& y,
                                   const EpsilonSchedule& schedule) {
  CrossDecomposition out;
  out.estimate = covariation_limit(x, y, schedule);
  out.jump = jump_product_sum(x, y);
  out.continuous.resize(out.jump.size());
  for (std::size_t i = 0; i < out.jump.size(); ++i) {
    out.continuous[i] = out.estimate.limit[i] - out.jump[i];
  }
  return out;
}

double sup_distance(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size()) throw GridMismatchError("trajectory sizes differ");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

double sup_norm(const Trajectory& a) {
  double d = 0.0;
  for (double v : a) d = std::max(d, std::abs(v));
  return d;
}

LemmaYZReport check_lemma_YZ(const CadlagPath& y, const CadlagPath& z,
                             const EpsilonSchedule& schedule,
                             double continuous_tolerance) {
  LemmaYZReport r;
  const QvDecomposition qy = qv_decompose(y, schedule);
  r.y_continuous_sup = sup_norm(qy.continuous);
  r.precondition_ok = r.y_continuous_sup <= continuous_tolerance;
  const CovariationEstimate est = covariation_limit(y, z, schedule);
  r.lhs = est.limit;
  r.rhs = jump_product_sum(y, z);
  r.distance = sup_distance(r.lhs, r.rhs);
  r.error_estimate = est.error_estimate;
  r.converged = est.converged && qy.converged();
  return r;
}

namespace {

// Left-point Stieltjes sum of `weight` against the increments of `measure`.
Trajectory stieltjes(const std::vector<double>& weight, const Trajectory& measure) {
  Trajectory out(measure.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = 1; i < measure.size(); ++i) {
    acc += weight[i - 1] * (measure[i] - measure[i - 1]);
    out[i] = acc;
  }
  return out;
}

}  // namespace

StabilityReport check_c1_stability(const CadlagPath& x, const C1Function& phi,
                                   const EpsilonSchedule& schedule) {
  return check_c1_stability(x, phi, x, phi, schedule);
}

StabilityReport check_c1_stability(const CadlagPath& x1, const C1Function& phi,
                                   const CadlagPath& x2, const C1Function& psi,
                                   const EpsilonSchedule& schedule) {
  require_same_grid(x1, x2);
  StabilityReport r;
  const CadlagPath y1 = x1.map(phi.value);
  const CadlagPath y2 = x2.map(psi.value);
  const CovariationEstimate lhs = covariation_limit(y1, y2, schedule);
  const CrossDecomposition base = cross_decompose(x1, x2, schedule);

  std::vector<double> weight(x1.grid().nodes());
  // Integrand at the left end of each step.
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] = phi.derivative(x1.value(i)) * psi.derivative(x2.value(i));
  }
  r.rhs_continuous = stieltjes(weight, base.continuous);
  r.rhs_jump = jump_product_sum(y1, y2);
  r.rhs.resize(r.rhs_jump.size());
  for (std::size_t i = 0; i < r.rhs.size(); ++i) {
    r.rhs[i] = r.rhs_continuous[i] + r.rhs_jump[i];
  }
  r.lhs = lhs.limit;
  r.distance = sup_distance(r.lhs, r.rhs);
  r.error_estimate = lhs.error_estimate + base.estimate.error_estimate;
  r.converged = lhs.converged && base.estimate.converged;
  return r;
}

void write_estimate_csv(std::ostream& out, const TimeGrid& grid,
                        const CovariationEstimate& est) {
  out << "t,eps,value\n";
  for (std::size_t k = 0; k < est.trajectories.size(); ++k) {
    const std::string eps = format_double(est.epsilons[k]);
    for (std::size_t i = 0; i < grid.nodes(); ++i) {
      out << format_double(grid.time(i)) << ',' << eps << ','
          << format_double(est.trajectories[k][i]) << '\n';
    }
  }
  for (std::size_t i = 0; i < grid.nodes(); ++i) {
    out << format_double(grid.time(i)) << ",0," << format_double(est.limit[i])
        << '\n';
  }
}

nlohmann::json estimate_summary(const CovariationEstimate& est) {
  return {
      {"limit_sup_error", est.error_estimate},
      {"converged", est.converged},
      {"limit_at_T", est.limit.back()},
      {"epsilons", est.epsilons},
      {"successive_distances", est.successive_distances},
  };
}

namespace reference {

Trajectory covariation_eps(const CadlagPath& x, const CadlagPath& y,
                           std::size_t multiple) {
  require_same_grid(x, y);
  const auto xv = x.values();
  const auto yv = y.values();
  const double eps = static_cast<double>(multiple) * x.grid().dt();
  Trajectory out(xv.size(), 0.0);
  for (std::size_t j = 1; j < xv.size(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < j; ++i) {
      const std::size_t shifted = std::min(i + multiple, j);
      s += x.grid().dt() * (xv[shifted] - xv[i]) * (yv[shifted] - yv[i]);
    }
    out[j] = s / eps;
  }
  return out;
}

Trajectory forward_integral_eps(const CadlagPath& integrand,
                                const CadlagPath& integrator,
                                std::size_t multiple) {
  require_same_grid(integrand, integrator);
  const auto yv = integrand.values();
  const auto xv = integrator.values();
  const double eps = static_cast<double>(multiple) * integrator.grid().dt();
  Trajectory out(xv.size(), 0.0);
  for (std::size_t j = 1; j < xv.size(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < j; ++i) {
      const std::size_t shifted = std::min(i + multiple, j);
      s += integrator.grid().dt() * yv[i] * (xv[shifted] - xv[i]);
    }
    out[j] = s / eps;
  }
  return out;
}

}  // namespace reference

}  // namespace dreg

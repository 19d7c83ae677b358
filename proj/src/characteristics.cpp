#include "dreg/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <ostream>

#include "dreg/errors.hpp"

namespace dreg {

CharacteristicsModel convert_truncation(const CharacteristicsModel& model,
                                        const Truncation& k_new) {
  CharacteristicsModel out = model;
  out.truncation = k_new;
  if (k_new == model.truncation) return out;
  for (const JumpComponent& j : model.jumps) {
    if (j.rate == 0.0) continue;
    out.drift_rate += j.rate * (expected_truncation(j.law, k_new) -
                                expected_truncation(j.law, model.truncation));
  }
  return out;
}

double fixed_atom_integral(const CharacteristicsModel& model, double t,
                           const std::function<double(double)>& g) {
  double s = 0.0;
  for (const FixedAtom& a : model.fixed_atoms) {
    if (a.time != t) continue;
    for (const PointMass& p : a.masses) s += p.weight * g(p.x);
  }
  return s;
}

double delta_bk(const CharacteristicsModel& model, const Truncation& k,
                double t) {
  return fixed_atom_integral(model, t, [&](double x) { return k(x); });
}

namespace {

// Fixed atoms snapped to grid nodes with their B^k jumps.
std::vector<Jump> fixed_atom_jumps(const CharacteristicsModel& model,
                                   const TimeGrid& grid) {
  std::vector<Jump> out;
  for (const FixedAtom& a : model.fixed_atoms) {
    const std::size_t i = grid.index_of(a.time);
    if (i == 0) throw PreconditionError("fixed atom at time 0");
    const double db = delta_bk(model, model.truncation, a.time);
    if (db != 0.0) out.push_back({i, db});
  }
  return out;
}

}  // namespace

CadlagPath drift_path(const CharacteristicsModel& model, const TimeGrid& grid,
                      const ComponentLog* log) {
  if (model.path_dependent_drift && log == nullptr) {
    throw MissingComponentLogError(
        "path-dependent drift needs the simulator's component log");
  }
  const CadlagPath atoms = CadlagPath::step(grid, fixed_atom_jumps(model, grid));
  std::vector<double> v(grid.nodes());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = model.deterministic_drift(grid.time(i)) + atoms.value(i);
    if (model.path_dependent_drift) v[i] += log->fractional[i];
  }
  return CadlagPath(grid, std::move(v),
                    {atoms.jumps().begin(), atoms.jumps().end()});
}

Trajectory drift_bracket(const CharacteristicsModel& model,
                         const TimeGrid& grid) {
  Trajectory out(grid.nodes());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = model.drift_bracket_rate * grid.time(i);
  }
  return out;
}

double Decomposition::reconstruction_error(const CadlagPath& x) const {
  double e = 0.0;
  for (std::size_t i = 0; i < x.grid().nodes(); ++i) {
    const double sum =
        Xc.value(i) + Mdk.value(i) + Bk.value(i) + large_jumps.value(i);
    e = std::max(e, std::abs(sum - x.value(i)));
  }
  return e;
}

Decomposition decompose(const SimulatedPath& x,
                        const CharacteristicsModel& model) {
  if (!x.log) {
    throw MissingComponentLogError("decompose needs a path with component logs");
  }
  const TimeGrid& grid = x.path.grid();
  const Truncation& k = model.truncation;

  std::vector<Jump> small;
  std::vector<Jump> large;
  for (const Jump& j : x.path.jumps()) {
    small.push_back({j.index, k(j.size)});
    large.push_back({j.index, j.size - k(j.size)});
  }
  for (const Jump& j : fixed_atom_jumps(model, grid)) {
    small.push_back({j.index, -j.size});
  }

  double kappa = 0.0;
  for (const JumpComponent& c : model.jumps) {
    kappa += c.rate * expected_truncation(c.law, k);
  }
  const CadlagPath small_path = CadlagPath::step(grid, std::move(small));
  std::vector<double> m(grid.nodes());
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = small_path.value(i) - kappa * grid.time(i);
  }

  Decomposition d{
      CadlagPath::constant(grid, 0.0),
      CadlagPath(grid, std::move(m),
                 {small_path.jumps().begin(), small_path.jumps().end()}),
      drift_path(model, grid, &*x.log),
      CadlagPath::step(grid, std::move(large)),
  };
  std::vector<double> c(grid.nodes());
  for (std::size_t i = 0; i < c.size(); ++i) {
    c[i] = x.path.value(i) - d.Mdk.value(i) - d.Bk.value(i) -
           d.large_jumps.value(i);
  }
  d.Xc = CadlagPath(grid, std::move(c));
  return d;
}

Decomposition decompose(const SimulatedPath& x, const ModelSpec& model,
                        const Truncation& k) {
  return decompose(x, known_characteristics(model, k));
}

Trajectory bk_bracket_rhs(const CadlagPath& x, const Decomposition& dec,
                          const CharacteristicsModel& model,
                          const EpsilonSchedule& schedule,
                          double* error_estimate, bool* converged) {
  const QvDecomposition qx = qv_decompose(x, schedule);
  const QvDecomposition qc = qv_decompose(dec.Xc, schedule);
  const CadlagPath atoms =
      CadlagPath::step(x.grid(), fixed_atom_jumps(model, x.grid()));
  const Trajectory atom_sq = jump_product_sum(atoms, atoms);
  Trajectory rhs(qx.continuous.size());
  for (std::size_t i = 0; i < rhs.size(); ++i) {
    rhs[i] = qx.continuous[i] - qc.estimate.limit[i] + atom_sq[i];
  }
  if (error_estimate) {
    *error_estimate = qx.estimate.error_estimate + qc.estimate.error_estimate;
  }
  if (converged) *converged = qx.converged() && qc.converged();
  return rhs;
}

namespace {

void finish(IdentityReport& r, std::optional<double> tolerance) {
  r.lhs_sup = sup_norm(r.lhs);
  r.rhs_sup = sup_norm(r.rhs);
  r.distance = sup_distance(r.lhs, r.rhs);
  r.tolerance = tolerance ? *tolerance : 2.0 * r.error_estimate;
  r.pass = r.distance <= r.tolerance;
}

}  // namespace

IdentityReport bk_bracket_check(const CadlagPath& x, const Decomposition& dec,
                                const CharacteristicsModel& model,
                                const EpsilonSchedule& schedule,
                                std::optional<double> tolerance) {
  IdentityReport r;
  double rhs_err = 0.0;
  bool rhs_conv = true;
  r.rhs = bk_bracket_rhs(x, dec, model, schedule, &rhs_err, &rhs_conv);
  const CovariationEstimate lhs = covariation_limit(dec.Bk, dec.Bk, schedule);
  r.lhs = lhs.limit;
  r.error_estimate = rhs_err + lhs.error_estimate;
  r.converged = rhs_conv && lhs.converged;
  finish(r, tolerance);
  return r;
}

IdentityReport verify_corollary(const CadlagPath& x, const Decomposition& dec,
                                const EpsilonSchedule& schedule,
                                std::optional<double> tolerance) {
  IdentityReport r;
  const QvDecomposition qx = qv_decompose(x, schedule);
  const QvDecomposition qc = qv_decompose(dec.Xc, schedule);
  const QvDecomposition qb = qv_decompose(dec.Bk, schedule);
  r.lhs = qx.continuous;
  r.rhs.resize(r.lhs.size());
  for (std::size_t i = 0; i < r.rhs.size(); ++i) {
    r.rhs[i] = qc.continuous[i] + qb.continuous[i];
  }
  r.error_estimate = qx.estimate.error_estimate + qc.estimate.error_estimate +
                     qb.estimate.error_estimate;
  r.converged = qx.converged() && qc.converged() && qb.converged();
  finish(r, tolerance);
  return r;
}

nlohmann::json report_json(const IdentityReport& r) {
  return {
      {"lhs_sup", r.lhs_sup},
      {"rhs_sup", r.rhs_sup},
      {"distance", r.distance},
      {"tolerance", r.tolerance},
      {"error_estimate", r.error_estimate},
      {"converged", r.converged},
      {"pass", r.pass},
  };
}

void write_decomposition_csv(std::ostream& out, const CadlagPath& x,
                             const Decomposition& dec) {
  out << "t,X,Xc,Mdk,Bk,large_jumps\n";
  for (std::size_t i = 0; i < x.grid().nodes(); ++i) {
    out << format_double(x.grid().time(i)) << ',' << format_double(x.value(i))
        << ',' << format_double(dec.Xc.value(i)) << ','
        << format_double(dec.Mdk.value(i)) << ','
        << format_double(dec.Bk.value(i)) << ','
        << format_double(dec.large_jumps.value(i)) << '\n';
  }
}

}  // namespace dreg

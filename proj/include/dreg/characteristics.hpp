#pragma once

#include <iosfwd>
#include <optional>

#include <nlohmann/json_fwd.hpp>

#include "dreg/model.hpp"
#include "dreg/paths.hpp"
#include "dreg/regularize.hpp"
#include "dreg/simulate.hpp"

namespace dreg {

// Re-expresses the drift characteristic relative to k_new:
// b_{k'} = b_k + sum_j rate_j E[k'(J) - k(J)]. C and nu are untouched; the
// fixed-atom jumps of B change with k, which drift_path picks up.
CharacteristicsModel convert_truncation(const CharacteristicsModel& model,
                                        const Truncation& k_new);

// int k(x) nu({t} x dx); zero away from fixed atoms.
double delta_bk(const CharacteristicsModel& model, const Truncation& k,
                double t);

// Fixed-atom compensator of a space function g: sum over atoms at `t`
// of int g(x) nu({t} x dx).
double fixed_atom_integral(const CharacteristicsModel& model, double t,
                           const std::function<double(double)>& g);

// B^k on the grid: deterministic drift, the fBm part recorded in the
// component log (when the drift is path dependent) and the fixed-atom jumps.
CadlagPath drift_path(const CharacteristicsModel& model, const TimeGrid& grid,
                      const ComponentLog* log = nullptr);

// [B^k, B^k]^c on the grid from the characteristics.
Trajectory drift_bracket(const CharacteristicsModel& model,
                         const TimeGrid& grid);

struct Decomposition {
  CadlagPath Xc;           // continuous martingale part
  CadlagPath Mdk;          // k(x) * (mu - nu)
  CadlagPath Bk;           // drift characteristic along the path
  CadlagPath large_jumps;  // (x - k(x)) * mu

  // max_i |Xc + Mdk + Bk + large - X|
  double reconstruction_error(const CadlagPath& x) const;
};

Decomposition decompose(const SimulatedPath& x, const CharacteristicsModel& model);
Decomposition decompose(const SimulatedPath& x, const ModelSpec& model,
                        const Truncation& k);

struct IdentityReport {
  Trajectory lhs;
  Trajectory rhs;
  double lhs_sup = 0.0;
  double rhs_sup = 0.0;
  double distance = 0.0;
  double error_estimate = 0.0;  // sum of the error bars entering both sides
  double tolerance = 0.0;
  bool converged = true;
  bool pass = false;
};

// [X,X]^c - [X^c,X^c] + sum_{s<=t} |int k dnu({s})|^2
Trajectory bk_bracket_rhs(const CadlagPath& x, const Decomposition& dec,
                          const CharacteristicsModel& model,
                          const EpsilonSchedule& schedule,
                          double* error_estimate = nullptr,
                          bool* converged = nullptr);

// [B^k,B^k] against bk_bracket_rhs. Without a tolerance the check passes
// when the distance is within twice the combined error estimate.
IdentityReport bk_bracket_check(const CadlagPath& x, const Decomposition& dec,
                                const CharacteristicsModel& model,
                                const EpsilonSchedule& schedule,
                                std::optional<double> tolerance = std::nullopt);

// [X,X]^c against [X^c,X^c] + [B^k,B^k]^c.
IdentityReport verify_corollary(const CadlagPath& x, const Decomposition& dec,
                                const EpsilonSchedule& schedule,
                                std::optional<double> tolerance = std::nullopt);

nlohmann::json report_json(const IdentityReport& r);

// Columns t,X,Xc,Mdk,Bk,large_jumps.
void write_decomposition_csv(std::ostream& out, const CadlagPath& x,
                             const Decomposition& dec);

}  // namespace dreg

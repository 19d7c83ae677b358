#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "dreg/jump_law.hpp"
#include "dreg/truncation.hpp"

namespace dreg {

// Deterministic time function used by DeterministicDrift.
struct DriftFunction {
  enum class Kind { linear, sine };
  Kind kind = Kind::linear;
  double a = 1.0;  // slope | amplitude
  double b = 0.0;  // intercept | angular frequency

  static DriftFunction identity() { return {Kind::linear, 1.0, 0.0}; }
  static DriftFunction linear(double slope, double intercept) {
    return {Kind::linear, slope, intercept};
  }
  static DriftFunction sine(double amplitude, double frequency) {
    return {Kind::sine, amplitude, frequency};
  }

  double operator()(double t) const;
};

struct BrownianMotion {
  double sigma = 1.0;
};

struct FractionalBM {
  double hurst = 0.7;
  double scale = 1.0;
};

struct CompoundPoisson {
  double rate = 1.0;
  JumpLaw law = DiscreteAtoms{{1.0}, {1.0}};
};

// `drift` is the drift characteristic relative to `drift_truncation`.
struct LevyJumpDiffusion {
  double drift = 0.0;
  double sigma = 1.0;
  double rate = 0.0;
  JumpLaw law = DiscreteAtoms{{1.0}, {1.0}};
  Truncation drift_truncation = Truncation::standard();
};

struct DeterministicDrift {
  DriftFunction f = DriftFunction::identity();
};

struct ModelSpec;

struct Composite {
  std::vector<ModelSpec> components;
};

struct ModelSpec {
  std::variant<BrownianMotion, FractionalBM, CompoundPoisson, LevyJumpDiffusion,
               DeterministicDrift, Composite>
      kind;
};

void validate(const ModelSpec& model);
std::string describe(const ModelSpec& model);
// True when the drift characteristic has finite variation (no fBm part).
bool is_semimartingale(const ModelSpec& model);

struct JumpComponent {
  double rate = 0.0;
  JumpLaw law;
};

struct PointMass {
  double x = 0.0;
  double weight = 0.0;
};

// nu({time} x dx) as weighted point masses.
struct FixedAtom {
  double time = 0.0;
  std::vector<PointMass> masses;
};

// Closed-form triplet (B^k, C, nu):
//   B^k_t = drift_rate * t + sum_f (f(t) - f(0)) [+ fBm part from the
//           simulator's component log] + jumps at fixed atoms,
//   C_t   = diffusion_rate * t,
//   nu    = sum_j rate_j dt law_j(dx) + fixed atoms.
struct CharacteristicsModel {
  Truncation truncation;
  double drift_rate = 0.0;
  std::vector<DriftFunction> drift_functions;
  bool path_dependent_drift = false;
  double diffusion_rate = 0.0;
  std::vector<JumpComponent> jumps;
  std::vector<FixedAtom> fixed_atoms;
  // [B^k, B^k]^c_t = drift_bracket_rate * t. Zero for every simulated
  // model; synthetic tests set it.
  double drift_bracket_rate = 0.0;

  double C(double t) const { return diffusion_rate * t; }
  double deterministic_drift(double t) const;
  bool finite_variation_drift() const {
    return !path_dependent_drift && drift_bracket_rate == 0.0;
  }
  bool quasi_left_continuous() const { return fixed_atoms.empty(); }
};

CharacteristicsModel known_characteristics(const ModelSpec& model,
                                           const Truncation& k);

}  // namespace dreg

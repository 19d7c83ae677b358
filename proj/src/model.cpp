#include "dreg/model.hpp"

#include <cmath>
#include <sstream>

#include "dreg/characteristics.hpp"
#include "dreg/errors.hpp"
#include "overloaded.hpp"

namespace dreg {

using detail::overloaded;

double DriftFunction::operator()(double t) const {
  return kind == Kind::linear ? a * t + b : a * std::sin(b * t);
}

double CharacteristicsModel::deterministic_drift(double t) const {
  double v = drift_rate * t;
  for (const DriftFunction& f : drift_functions) v += f(t) - f(0.0);
  return v;
}

void validate(const ModelSpec& model) {
  std::visit(
      overloaded{
          [](const BrownianMotion& m) {
            if (!(m.sigma >= 0.0)) throw PreconditionError("sigma must be >= 0");
          },
          [](const FractionalBM& m) {
            if (!(m.hurst > 0.5 && m.hurst < 1.0)) {
              throw PreconditionError("fBm Hurst index must lie in (0.5, 1)");
            }
            if (!(m.scale >= 0.0)) throw PreconditionError("fBm scale must be >= 0");
          },
          [](const CompoundPoisson& m) {
            if (!(m.rate >= 0.0)) throw PreconditionError("rate must be >= 0");
            validate(m.law);
          },
          [](const LevyJumpDiffusion& m) {
            if (!(m.sigma >= 0.0)) throw PreconditionError("sigma must be >= 0");
            if (!(m.rate >= 0.0)) throw PreconditionError("rate must be >= 0");
            if (!std::isfinite(m.drift)) throw PreconditionError("drift must be finite");
            validate(m.law);
          },
          [](const DeterministicDrift&) {},
          [](const Composite& m) {
            if (m.components.empty()) {
              throw PreconditionError("composite needs at least one component");
            }
            for (const ModelSpec& c : m.components) validate(c);
          },
      },
      model.kind);
}

std::string describe(const ModelSpec& model) {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const BrownianMotion& m) { os << "BM(" << m.sigma << ')'; },
                 [&](const FractionalBM& m) {
                   os << "fBm(H=" << m.hurst << ", scale=" << m.scale << ')';
                 },
                 [&](const CompoundPoisson& m) {
                   os << "CP(" << m.rate << ", " << describe(m.law) << ')';
                 },
                 [&](const LevyJumpDiffusion& m) {
                   os << "Levy(b=" << m.drift << ", sigma=" << m.sigma
                      << ", rate=" << m.rate << ", " << describe(m.law) << ')';
                 },
                 [&](const DeterministicDrift&) { os << "Drift"; },
                 [&](const Composite& m) {
                   os << "Composite(";
                   for (std::size_t i = 0; i < m.components.size(); ++i) {
                     os << (i ? " + " : "") << describe(m.components[i]);
                   }
                   os << ')';
                 },
             },
             model.kind);
  return os.str();
}

bool is_semimartingale(const ModelSpec& model) {
  if (std::holds_alternative<FractionalBM>(model.kind)) return false;
  if (const auto* c = std::get_if<Composite>(&model.kind)) {
    for (const ModelSpec& m : c->components) {
      if (!is_semimartingale(m)) return false;
    }
  }
  return true;
}

namespace {

void accumulate(const ModelSpec& model, const Truncation& k,
                CharacteristicsModel& out) {
  std::visit(
      overloaded{
          [&](const BrownianMotion& m) {
            out.diffusion_rate += m.sigma * m.sigma;
          },
          [&](const FractionalBM&) { out.path_dependent_drift = true; },
          [&](const CompoundPoisson& m) {
            if (m.rate > 0.0) {
              out.drift_rate += m.rate * expected_truncation(m.law, k);
              out.jumps.push_back({m.rate, m.law});
            }
          },
          [&](const LevyJumpDiffusion& m) {
            // b is declared relative to the model's own truncation.
            CharacteristicsModel own;
            own.truncation = m.drift_truncation;
            own.drift_rate = m.drift;
            own.diffusion_rate = m.sigma * m.sigma;
            if (m.rate > 0.0) own.jumps.push_back({m.rate, m.law});
            const CharacteristicsModel conv = convert_truncation(own, k);
            out.drift_rate += conv.drift_rate;
            out.diffusion_rate += conv.diffusion_rate;
            out.jumps.insert(out.jumps.end(), conv.jumps.begin(),
                             conv.jumps.end());
          },
          [&](const DeterministicDrift& m) {
            out.drift_functions.push_back(m.f);
          },
          [&](const Composite& m) {
            for (const ModelSpec& c : m.components) accumulate(c, k, out);
          },
      },
      model.kind);
}

}  // namespace

CharacteristicsModel known_characteristics(const ModelSpec& model,
                                           const Truncation& k) {
  validate(model);
  CharacteristicsModel out;
  out.truncation = k;
  accumulate(model, k, out);
  return out;
}

}  // namespace dreg

#include "dreg/jump_law.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dreg/errors.hpp"
#include "dreg/quadrature.hpp"
#include "overloaded.hpp"

namespace dreg {

using detail::overloaded;

void validate(const JumpLaw& law) {
  std::visit(
      overloaded{
          [](const DiscreteAtoms& d) {
            if (d.values.empty() || d.values.size() != d.probabilities.size()) {
              throw PreconditionError(
                  "atoms: values and probabilities must be nonempty and "
                  "of equal length");
            }
            double total = 0.0;
            for (double p : d.probabilities) {
              if (!(p >= 0.0)) {
                throw PreconditionError("atoms: negative probability");
              }
              total += p;
            }
            if (std::abs(total - 1.0) > 1e-12) {
              throw PreconditionError("atoms: probabilities must sum to 1");
            }
          },
          [](const GaussianLaw& g) {
            if (!(g.sd >= 0.0) || !std::isfinite(g.mean)) {
              throw PreconditionError("gaussian: sd must be nonnegative");
            }
          },
          [](const UniformLaw& u) {
            if (!(u.a < u.b)) throw PreconditionError("uniform: need a < b");
          },
      },
      law);
}

std::string describe(const JumpLaw& law) {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const DiscreteAtoms& d) {
                   os << "atoms(";
                   for (std::size_t i = 0; i < d.values.size(); ++i) {
                     os << (i ? ", " : "") << d.values[i] << '@'
                        << d.probabilities[i];
                   }
                   os << ')';
                 },
                 [&](const GaussianLaw& g) {
                   os << "gaussian(" << g.mean << ", " << g.sd << ')';
                 },
                 [&](const UniformLaw& u) {
                   os << "uniform(" << u.a << ", " << u.b << ')';
                 },
             },
             law);
  return os.str();
}

LawRule law_rule(const JumpLaw& law) {
  LawRule rule;
  std::visit(
      overloaded{
          [&](const DiscreteAtoms& d) {
            rule.points = d.values;
            rule.weights = d.probabilities;
          },
          [&](const GaussianLaw& g) {
            const auto& gh = gauss_hermite(kLawQuadratureNodes);
            const double scale = std::numbers::sqrt2 * g.sd;
            const double norm = 1.0 / std::sqrt(std::numbers::pi);
            for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
              rule.points.push_back(g.mean + scale * gh.nodes[i]);
              rule.weights.push_back(norm * gh.weights[i]);
            }
          },
          [&](const UniformLaw& u) {
            const auto& gl = gauss_legendre(kLawQuadratureNodes);
            const double mid = 0.5 * (u.a + u.b);
            const double half = 0.5 * (u.b - u.a);
            for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
              rule.points.push_back(mid + half * gl.nodes[i]);
              rule.weights.push_back(0.5 * gl.weights[i]);
            }
          },
      },
      law);
  return rule;
}

namespace {

// Gauss-Legendre on [lo, hi] split at the breakpoints, integrand g * density.
double piecewise(double lo, double hi, std::span<const double> breakpoints,
                 const std::function<double(double)>& g,
                 const std::function<double(double)>& density) {
  std::vector<double> cuts{lo};
  for (double b : breakpoints) {
    if (b > lo && b < hi) cuts.push_back(b);
  }
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  const auto& gl = gauss_legendre(kLawQuadratureNodes);
  double sum = 0.0;
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    const double mid = 0.5 * (cuts[p] + cuts[p + 1]);
    const double half = 0.5 * (cuts[p + 1] - cuts[p]);
    double piece = 0.0;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double x = mid + half * gl.nodes[i];
      piece += gl.weights[i] * g(x) * density(x);
    }
    sum += half * piece;
  }
  return sum;
}

}  // namespace

double expectation(const JumpLaw& law, const std::function<double(double)>& g,
                   std::span<const double> breakpoints) {
  if (const auto* u = std::get_if<UniformLaw>(&law)) {
    const double d = 1.0 / (u->b - u->a);
    return piecewise(u->a, u->b, breakpoints, g, [d](double) { return d; });
  }
  if (const auto* n = std::get_if<GaussianLaw>(&law); n && !breakpoints.empty() && n->sd > 0) {
    // Hermite nodes straddle kinks badly; 12 sd leaves < 1e-30 of mass outside.
    const double lo = n->mean - 12.0 * n->sd, hi = n->mean + 12.0 * n->sd;
    std::vector<double> cuts(breakpoints.begin(), breakpoints.end());
    for (int q = -11; q <= 11; ++q) cuts.push_back(n->mean + q * n->sd);
    const double c = 1.0 / (n->sd * std::sqrt(2.0 * std::numbers::pi));
    return piecewise(lo, hi, cuts, g, [&](double x) {
      const double z = (x - n->mean) / n->sd;
      return c * std::exp(-0.5 * z * z);
    });
  }
  const LawRule rule = law_rule(law);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.points.size(); ++i) {
    sum += rule.weights[i] * g(rule.points[i]);
  }
  return sum;
}

double expected_truncation(const JumpLaw& law, const Truncation& k) {
  std::vector<double> cuts;
  for (double c : k.kinks()) {
    cuts.push_back(-c);
    cuts.push_back(c);
  }
  return expectation(law, [&](double x) { return k(x); }, cuts);
}

double law_mean(const JumpLaw& law) {
  return std::visit(overloaded{
                        [](const DiscreteAtoms& d) {
                          double m = 0.0;
                          for (std::size_t i = 0; i < d.values.size(); ++i) {
                            m += d.values[i] * d.probabilities[i];
                          }
                          return m;
                        },
                        [](const GaussianLaw& g) { return g.mean; },
                        [](const UniformLaw& u) { return 0.5 * (u.a + u.b); },
                    },
                    law);
}

}  // namespace dreg

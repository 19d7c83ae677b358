#pragma once

#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dreg/truncation.hpp"

namespace dreg {

struct DiscreteAtoms {
  std::vector<double> values;
  std::vector<double> probabilities;
};

struct GaussianLaw {
  double mean = 0.0;
  double sd = 1.0;
};

struct UniformLaw {
  double a = 0.0;
  double b = 1.0;
};

using JumpLaw = std::variant<DiscreteAtoms, GaussianLaw, UniformLaw>;

void validate(const JumpLaw& law);
std::string describe(const JumpLaw& law);

// E[g(J)]: exact sum for atoms, Gauss-Hermite for Gaussian, Gauss-Legendre
// for uniform (split at `breakpoints` falling inside (a, b)).
double expectation(const JumpLaw& law, const std::function<double(double)>& g,
                   std::span<const double> breakpoints = {});

// Support points and probabilities of the rule used by `expectation`
// (ignoring breakpoints): E[g(J)] = sum_i w_i g(x_i).
struct LawRule {
  std::vector<double> points;
  std::vector<double> weights;
};
LawRule law_rule(const JumpLaw& law);

// E[k(J)], integrating piecewise across the kinks of k.
double expected_truncation(const JumpLaw& law, const Truncation& k);

double law_mean(const JumpLaw& law);

}  // namespace dreg

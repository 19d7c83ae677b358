#pragma once

#include <cstddef>
#include <vector>

namespace dreg {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre rule on [-1, 1]. Rules are built once per size
// (Golub-Welsch) and cached; the returned reference stays valid.
const QuadratureRule& gauss_legendre(std::size_t n);

// Gauss-Hermite rule for the weight exp(-x^2) on the real line.
const QuadratureRule& gauss_hermite(std::size_t n);

// Node count used for every continuous jump-law expectation.
inline constexpr std::size_t kLawQuadratureNodes = 40;

}  // namespace dreg

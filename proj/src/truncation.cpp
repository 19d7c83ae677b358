#include "dreg/truncation.hpp"

#include <cmath>

#include "dreg/errors.hpp"

namespace dreg {

Truncation Truncation::from_name(const std::string& name) {
  if (name == "standard") return standard();
  if (name == "smooth_clip") return smooth_clip();
  throw PreconditionError("unknown truncation '" + name + "'");
}

std::string Truncation::name() const {
  return kind_ == Kind::standard ? "standard" : "smooth_clip";
}

double Truncation::operator()(double x) const {
  const double a = std::abs(x);
  if (kind_ == Kind::standard) return a <= 1.0 ? x : 0.0;
  if (a <= 0.5) return x;
  if (a >= 1.5) return std::copysign(1.0, x);
  // p(s) = 0.5 + s - s^3 + s^4/2 on s = |x| - 0.5 in [0, 1]:
  // p(0)=0.5, p'(0)=1, p''(0)=0, p(1)=1, p'(1)=p''(1)=0.
  const double s = a - 0.5;
  const double s3 = s * s * s;
  return std::copysign(0.5 + s - s3 + 0.5 * s3 * s, x);
}

std::vector<double> Truncation::kinks() const {
  if (kind_ == Kind::standard) return {1.0};
  return {0.5, 1.5};
}

}  // namespace dreg

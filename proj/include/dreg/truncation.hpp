#pragma once

#include <string>
#include <vector>

namespace dreg {

// Bounded k with k(x) = x near zero.
//  standard:    k(x) = x * 1{|x| <= 1}
//  smooth_clip: odd C^2 function, k(x) = x on |x| <= 0.5, quintic blend on
//               0.5 < |x| < 1.5, constant +-1 beyond 1.5.
class Truncation {
 public:
  enum class Kind { standard, smooth_clip };

  Truncation() = default;
  static Truncation standard() { return Truncation(Kind::standard); }
  static Truncation smooth_clip() { return Truncation(Kind::smooth_clip); }
  static Truncation from_name(const std::string& name);

  double operator()(double x) const;

  Kind kind() const { return kind_; }
  std::string name() const;
  double bound() const { return 1.0; }
  // k(x) = x on [-radius, radius].
  double radius() const { return kind_ == Kind::standard ? 1.0 : 0.5; }
  // Positive points where k switches formula; integrate piecewise across
  // them and their negatives.
  std::vector<double> kinks() const;

  friend bool operator==(const Truncation&, const Truncation&) = default;

 private:
  explicit Truncation(Kind kind) : kind_(kind) {}
  Kind kind_ = Kind::standard;
};

}  // namespace dreg

#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace dreg {

// Uniform grid t_i = i * T / n on [0, T].
class TimeGrid {
 public:
  TimeGrid(double horizon, std::size_t steps);

  double horizon() const { return horizon_; }
  std::size_t steps() const { return steps_; }
  std::size_t nodes() const { return steps_ + 1; }
  double dt() const { return horizon_ / static_cast<double>(steps_); }
  double time(std::size_t i) const {
    if (i == steps_) return horizon_;
    return horizon_ * static_cast<double>(i) / static_cast<double>(steps_);
  }

  // Nearest node to t; throws AlignmentError when |t - t_i| > dt/2.
  std::size_t index_of(double t) const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  double horizon_;
  std::size_t steps_;
};

struct Jump {
  std::size_t index;  // node i >= 1; X_{t_i} - X_{t_i-} = size
  double size;

  friend bool operator==(const Jump&, const Jump&) = default;
};

enum class Side { left, right };

// Sampled cadlag trajectory. values[i] = X_{t_i} (right-continuous); left
// limits are derived from the jump registry.
class CadlagPath {
 public:
  CadlagPath(TimeGrid grid, std::vector<double> values,
             std::vector<Jump> jumps = {});

  static CadlagPath constant(const TimeGrid& grid, double value);
  // Continuous path t -> f(t) sampled on the grid.
  static CadlagPath from_function(const TimeGrid& grid,
                                  const std::function<double(double)>& f);
  // Jump-only path starting at 0 built from (possibly unsorted, colliding)
  // jumps; colliding jumps are summed and zero sums dropped.
  static CadlagPath step(const TimeGrid& grid, std::vector<Jump> jumps);

  const TimeGrid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::span<const Jump> jumps() const { return jumps_; }
  double value(std::size_t i) const { return values_[i]; }

  double jump_at(std::size_t i) const;
  double left_value(std::size_t i) const { return values_[i] - jump_at(i); }
  // Left limits at every node (X_{0-} = X_0).
  std::vector<double> left_values() const;
  // Dense jump sizes per node, zero where no jump is registered.
  std::vector<double> dense_jumps() const;

  // Pointwise image phi(X); jumps become phi(X_t) - phi(X_{t-}).
  CadlagPath map(const std::function<double(double)>& phi) const;

 private:
  TimeGrid grid_;
  std::vector<double> values_;
  std::vector<Jump> jumps_;
};

struct Atom {
  double time;
  double size;

  friend bool operator==(const Atom&, const Atom&) = default;
};

struct JumpMeasure {
  std::vector<Atom> atoms;
};

double eval(const CadlagPath& path, double t, Side side);

JumpMeasure extract_jumps(const CadlagPath& path);

// Left limits X_{s-} for each atom of extract_jumps(path), in atom order.
std::vector<double> atom_left_values(const CadlagPath& path);

using StarIntegrand =
    std::function<double(double time, double jump, double left_value)>;

// Sum over atoms with time <= t of H(s, dX_s, X_{s-}).
double star_integral(const StarIntegrand& H, const JumpMeasure& mu,
                     std::span<const double> left_values, double t);

// Node-wise trajectory of the star integral on the path's own grid.
std::vector<double> star_trajectory(const StarIntegrand& H,
                                    const CadlagPath& path);

CadlagPath combine(double a, const CadlagPath& x, double b,
                   const CadlagPath& y);

// Subsample every `factor`-th node; jumps inside a coarse step are
// aggregated onto its right node.
CadlagPath coarsen(const CadlagPath& path, std::size_t factor);

// CSV `t,value,jump`, 17 significant digits.
void write_path_csv(std::ostream& out, const CadlagPath& path);
void write_path_csv(const std::string& file, const CadlagPath& path);
CadlagPath read_path_csv(std::istream& in);
CadlagPath read_path_csv(const std::string& file);

// Shortest round-trip decimal form used by every CSV writer in the project.
std::string format_double(double v);

}  // namespace dreg

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dreg/characteristics.hpp"
#include "dreg/model.hpp"
#include "dreg/paths.hpp"
#include "dreg/regularize.hpp"
#include "dreg/simulate.hpp"

namespace dreg {

// f, f', f'' at a point.
struct SpaceJet {
  double f = 0.0;
  double fx = 0.0;
  double fxx = 0.0;
};

struct Jet {
  double F = 0.0;
  double Ft = 0.0;
  double Fx = 0.0;
  double Fxx = 0.0;
};

// Bounded space factor of a separable term.
struct SpaceFunction {
  enum class Kind { tanh, sin, bump, custom };
  Kind kind = Kind::tanh;
  std::function<SpaceJet(double)> custom;  // Kind::custom only
  double custom_bound = 0.0;

  static SpaceFunction tanh() { return {Kind::tanh, {}, 0.0}; }
  static SpaceFunction sin() { return {Kind::sin, {}, 0.0}; }
  // (1 - x^2)^3 on |x| < 1, zero outside; C^2.
  static SpaceFunction bump() { return {Kind::bump, {}, 0.0}; }

  SpaceJet jet(double x) const;
  double bound() const;
  std::string name() const;
};

// coeff * exp(-rate t) * f(x)
struct SeparableTerm {
  double coeff = 1.0;
  double rate = 0.0;
  SpaceFunction space;
};

// F(t, x) as a finite sum of separable terms.
class TestFunction {
 public:
  TestFunction() = default;
  explicit TestFunction(std::vector<SeparableTerm> terms, std::string name = "");

  static TestFunction exp_tanh();     // e^{-t} tanh(x)
  static TestFunction damped_sine();  // e^{-t} sin(x)
  static TestFunction bump();         // (1 - x^2)^3 1{|x| < 1}
  // Freezes every time factor at t = 0.
  static TestFunction time_homogeneous(const TestFunction& f);
  // "exptanh", "dampedsine", "bump"
  static TestFunction from_name(const std::string& name);

  Jet jet(double t, double x) const;
  double operator()(double t, double x) const { return jet(t, x).F; }
  // Declared bound on sup |F|.
  double bound() const;
  const std::vector<SeparableTerm>& terms() const { return terms_; }
  const std::string& name() const { return name_; }

  friend TestFunction operator+(const TestFunction& a, const TestFunction& b);
  friend TestFunction operator*(double c, const TestFunction& f);

 private:
  std::vector<SeparableTerm> terms_;
  std::string name_;
};

enum class ResidualKind { weak_dirichlet, semimartingale };

// Running sums subtracted from F(t, X_t) - F(0, X_0); every entry carries
// its sign so that the residual is the plain sum of the six trajectories.
struct ResidualTerms {
  Trajectory increment;    // F(t, X_t) - F(0, X_0)
  Trajectory time;         // -int dF/dt ds
  Trajectory second_order; // -1/2 int F_xx (dC + d[B,B]^c)
  Trajectory drift;        // -int F_x dB (forward or Stieltjes)
  Trajectory compensator;  // -(F(X_- + x) - F(X_-) - k(x) F_x(X_-)) * nu
  Trajectory injected;     // debug drift; zero unless requested
};

struct ResidualPath {
  Trajectory values;
  ResidualTerms terms;
  // Forward integral did not pass the convergence diagnostic.
  bool flagged = false;
  double forward_error = 0.0;
};

struct ResidualOptions {
  // Adds rate * t to the residual; a deliberate violation for negative
  // controls.
  double injected_drift = 0.0;
  // Half-width and spacing of the compensator tables.
  double table_half_width = 20.0;
  double table_spacing = 1.0 / 512.0;
};

// Prepared residual for one (characteristics, F, grid, kind). Precomputes
// the time factors and tables of x -> sum_j rate_j (E f(x + J_j) - f(x)).
class ResidualEngine {
 public:
  ResidualEngine(CharacteristicsModel model, TestFunction f, TimeGrid grid,
                 ResidualKind kind, ResidualOptions options = {});
  ~ResidualEngine();
  ResidualEngine(ResidualEngine&&) noexcept;
  ResidualEngine& operator=(ResidualEngine&&) noexcept;

  // With a schedule a path-dependent drift uses forward_integral_limit
  // (and may flag the residual); without one it uses the smallest-step
  // Riemann sum, which is the same trajectory as the eps = dt functional.
  ResidualPath operator()(const CadlagPath& x, const ComponentLog* log = nullptr,
                          const EpsilonSchedule* schedule = nullptr) const;

  const CharacteristicsModel& model() const;
  const TestFunction& function() const;
  const TimeGrid& grid() const;
  ResidualKind kind() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

ResidualPath residual_weak_dirichlet(const SimulatedPath& x,
                                     const CharacteristicsModel& model,
                                     const TestFunction& f,
                                     const EpsilonSchedule& schedule,
                                     ResidualOptions options = {});
ResidualPath residual_weak_dirichlet(const SimulatedPath& x,
                                     const ModelSpec& model, const Truncation& k,
                                     const TestFunction& f,
                                     const EpsilonSchedule& schedule,
                                     ResidualOptions options = {});

// Throws PreconditionError unless B^k has finite variation.
ResidualPath residual_semimartingale(const CadlagPath& x,
                                     const CharacteristicsModel& model,
                                     const TestFunction& f,
                                     ResidualOptions options = {});
ResidualPath residual_semimartingale(const CadlagPath& x, const ModelSpec& model,
                                     const Truncation& k, const TestFunction& f,
                                     ResidualOptions options = {});

// Per-path residuals at `times` and states X at `probe_times`, row-major by
// path.
struct ResidualSample {
  std::vector<double> times;
  std::vector<double> probe_times;
  std::size_t paths = 0;
  std::vector<double> residuals;  // paths x times
  std::vector<double> states;     // paths x probe_times

  double residual(std::size_t path, std::size_t k) const {
    return residuals[path * times.size() + k];
  }
  double state(std::size_t path, std::size_t k) const {
    return states[path * probe_times.size() + k];
  }
};

// Simulates `paths` paths (path i uses SeedSpec{master_seed, i}) and
// evaluates every engine on each of them. Parallel over paths; the output
// does not depend on the thread count.
std::vector<ResidualSample> sample_residual_ensemble(
    const PathSimulator& simulator,
    const std::vector<const ResidualEngine*>& engines,
    std::uint64_t master_seed, std::size_t paths,
    const std::vector<double>& times, const std::vector<double>& probe_times);

// Builds a sample from already computed residual paths.
ResidualSample collect_sample(const std::vector<ResidualPath>& residuals,
                              const std::vector<CadlagPath>& paths,
                              const std::vector<double>& times,
                              const std::vector<double>& probe_times);

namespace reference {
std::vector<ResidualSample> sample_residual_ensemble(
    const PathSimulator& simulator,
    const std::vector<const ResidualEngine*>& engines,
    std::uint64_t master_seed, std::size_t paths,
    const std::vector<double>& times, const std::vector<double>& probe_times);
}  // namespace reference

struct StatisticResult {
  std::string g;  // "mean", "tanh", "one", "sinsin"
  std::vector<double> s;  // conditioning times (empty for "mean")
  double t = 0.0;
  double value = 0.0;
  double se = 0.0;
  double z = 0.0;
  bool pass = false;
};

struct MartingaleTestReport {
  std::vector<double> times;
  std::vector<double> means;
  std::vector<double> ses;
  std::vector<double> zscores;
  std::vector<StatisticResult> orthogonality;
  double alpha = 3.0;
  std::size_t paths = 0;
  bool pass = false;

  // All statistics, means first.
  std::vector<StatisticResult> statistics() const;
};

// Zero-mean test at every sample time plus increment orthogonality against
// tanh(X_s) and 1 for consecutive time pairs (s, t), and sin(X_s1) sin(X_s2)
// at the last time. Conditioning times are read from the sample's probe
// times, which must contain every residual time except the last.
MartingaleTestReport martingale_mean_test(const ResidualSample& sample,
                                          double alpha = 3.0);

nlohmann::json report_json(const MartingaleTestReport& r);

struct OrthogonalityProbeReport {
  Trajectory covariation;
  double sup = 0.0;
  double error_estimate = 0.0;
  bool converged = true;
  double tolerance = 0.05;
  bool pass = false;
};

// [int F_x(s, X_s) d^-B^k_s, N] for a continuous martingale probe N.
OrthogonalityProbeReport forward_bk_orthogonality_probe(
    const SimulatedPath& x, const CharacteristicsModel& model,
    const TestFunction& f, const CadlagPath& probe,
    const EpsilonSchedule& schedule, double tolerance = 0.05);

}  // namespace dreg

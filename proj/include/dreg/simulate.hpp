#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "dreg/model.hpp"
#include "dreg/paths.hpp"

namespace dreg {

struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t path_index = 0;
};

// Seed of the generator driving model component `slot` of path
// `seed.path_index`; a pure function of its arguments.
std::uint64_t substream_seed(const SeedSpec& seed, std::uint64_t slot);

struct JumpEvent {
  double time = 0.0;       // raw event time before snapping
  std::size_t index = 0;   // grid node the event was snapped to
  double size = 0.0;
};

// Per-component trajectories retained by the simulator. Every vector has
// one entry per grid node; X = martingale + fractional + deterministic +
// cumulative jumps.
struct ComponentLog {
  std::vector<double> martingale;     // continuous martingale part
  std::vector<double> fractional;     // fBm components (path-dependent drift)
  std::vector<double> deterministic;  // deterministic functions incl. raw drift
  std::vector<JumpEvent> jump_events; // time-ordered, unmerged
};

struct SimulatedPath {
  CadlagPath path;
  std::optional<ComponentLog> log;
};

// Covariance of fractional Gaussian noise increments at lag `lag` for the
// process with Cov(B_s, B_t) = scale^2/2 (s^2H + t^2H - |t - s|^2H).
double fgn_autocovariance(std::size_t lag, double hurst, double dt,
                          double scale);

// Exact fGn increments by circulant embedding (Davies-Harte). The spectrum
// and FFT plan are prepared once; sampling is const and thread-safe.
class CirculantFgn {
 public:
  static constexpr std::size_t kMaxSteps = std::size_t{1} << 24;

  CirculantFgn(std::size_t steps, double hurst, double dt, double scale);
  ~CirculantFgn();
  CirculantFgn(const CirculantFgn&) = delete;
  CirculantFgn& operator=(const CirculantFgn&) = delete;

  // Fills `increments` (size steps) from standard normals drawn in order
  // from `normals` (size 4 * steps).
  void sample(const std::vector<double>& normals,
              std::vector<double>& increments) const;

  std::size_t steps() const { return steps_; }
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }

 private:
  std::size_t steps_;
  std::vector<double> eigenvalues_;
  std::vector<double> amplitude_;
  void* plan_ = nullptr;
};

namespace reference {

// Cholesky factor of the fGn covariance; O(n^3), capped at kMaxSteps.
class CholeskyFgn {
 public:
  static constexpr std::size_t kMaxSteps = 4096;
  CholeskyFgn(std::size_t steps, double hurst, double dt, double scale);
  void sample(const std::vector<double>& normals,
              std::vector<double>& increments) const;

 private:
  std::size_t steps_;
  std::vector<double> lower_;  // row-major lower triangle
};

}  // namespace reference

// Prepared simulator for one (model, grid) pair. Construction does the
// per-model setup (fBm spectra); operator() is const and safe to call
// concurrently.
class PathSimulator {
 public:
  PathSimulator(ModelSpec model, TimeGrid grid);
  ~PathSimulator();
  PathSimulator(PathSimulator&&) noexcept;
  PathSimulator& operator=(PathSimulator&&) noexcept;

  SimulatedPath operator()(const SeedSpec& seed) const;

  const ModelSpec& model() const { return model_; }
  const TimeGrid& grid() const { return grid_; }

 private:
  struct Impl;
  ModelSpec model_;
  TimeGrid grid_;
  std::unique_ptr<Impl> impl_;
};

SimulatedPath simulate_path(const ModelSpec& model, const TimeGrid& grid,
                            const SeedSpec& seed);

// Path i uses SeedSpec{master_seed, i}. Parallel over paths; the result
// does not depend on the number of threads.
std::vector<CadlagPath> simulate_ensemble(const ModelSpec& model,
                                          const TimeGrid& grid,
                                          std::uint64_t master_seed,
                                          std::size_t paths);
std::vector<SimulatedPath> simulate_ensemble_logged(const ModelSpec& model,
                                                    const TimeGrid& grid,
                                                    std::uint64_t master_seed,
                                                    std::size_t paths);

namespace reference {
std::vector<CadlagPath> simulate_ensemble(const ModelSpec& model,
                                          const TimeGrid& grid,
                                          std::uint64_t master_seed,
                                          std::size_t paths);
}  // namespace reference

}  // namespace dreg

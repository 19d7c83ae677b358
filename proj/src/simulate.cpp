#include "dreg/simulate.hpp"

#include <fftw3.h>

#include <algorithm>
#include <boost/random/discrete_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <cmath>
#include <complex>
#include <mutex>

#include "dreg/errors.hpp"
#include "overloaded.hpp"

namespace dreg {

using detail::overloaded;
using Engine = boost::random::mt19937_64;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// The FFTW planner is not thread-safe; plan execution with the new-array
// interface is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

std::uint64_t substream_seed(const SeedSpec& seed, std::uint64_t slot) {
  return splitmix64(splitmix64(splitmix64(seed.master_seed) ^ seed.path_index) ^
                    (slot + 0x632be59bd9b4e019ULL));
}

double fgn_autocovariance(std::size_t lag, double hurst, double dt,
                          double scale) {
  const double h2 = 2.0 * hurst;
  const double k = static_cast<double>(lag);
  const double core = std::pow(k + 1.0, h2) - 2.0 * std::pow(k, h2) +
                      std::pow(std::abs(k - 1.0), h2);
  return 0.5 * scale * scale * std::pow(dt, h2) * core;
}

CirculantFgn::CirculantFgn(std::size_t steps, double hurst, double dt,
                           double scale)
    : steps_(steps) {
  if (steps == 0) throw PreconditionError("CirculantFgn: steps must be > 0");
  if (steps > kMaxSteps) {
    throw CapacityError("exact fBm generation supports at most " +
                        std::to_string(kMaxSteps) + " steps, requested " +
                        std::to_string(steps));
  }
  const std::size_t m = 2 * steps;
  std::vector<std::complex<double>> row(m);
  for (std::size_t j = 0; j <= steps; ++j) {
    row[j] = fgn_autocovariance(j, hurst, dt, scale);
  }
  for (std::size_t j = steps + 1; j < m; ++j) row[j] = row[m - j];
  std::vector<std::complex<double>> spectrum(m);
  {
    std::lock_guard lock(fftw_planner_mutex());
    auto* in = reinterpret_cast<fftw_complex*>(row.data());
    auto* out = reinterpret_cast<fftw_complex*>(spectrum.data());
    fftw_plan once = fftw_plan_dft_1d(static_cast<int>(m), in, out,
                                      FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(once);
    fftw_destroy_plan(once);
    plan_ = fftw_plan_dft_1d(static_cast<int>(m), in, out, FFTW_FORWARD,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  eigenvalues_.resize(m);
  amplitude_.resize(m);
  double largest = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    eigenvalues_[k] = spectrum[k].real();
    largest = std::max(largest, std::abs(eigenvalues_[k]));
  }
  for (std::size_t k = 0; k < m; ++k) {
    double lambda = eigenvalues_[k];
    if (lambda < 0.0) {
      if (lambda < -1e-10 * largest) {
        throw PreconditionError(
            "circulant embedding is not nonnegative definite");
      }
      lambda = 0.0;
    }
    amplitude_[k] = std::sqrt(lambda / static_cast<double>(m));
  }
}

CirculantFgn::~CirculantFgn() {
  if (plan_ != nullptr) {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  }
}

void CirculantFgn::sample(const std::vector<double>& normals,
                          std::vector<double>& increments) const {
  const std::size_t m = 2 * steps_;
  std::vector<std::complex<double>> in(m);
  std::vector<std::complex<double>> out(m);
  for (std::size_t k = 0; k < m; ++k) {
    in[k] = amplitude_[k] *
            std::complex<double>(normals[2 * k], normals[2 * k + 1]);
  }
  fftw_execute_dft(static_cast<fftw_plan>(plan_),
                   reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  increments.resize(steps_);
  for (std::size_t j = 0; j < steps_; ++j) increments[j] = out[j].real();
}

namespace reference {

CholeskyFgn::CholeskyFgn(std::size_t steps, double hurst, double dt,
                         double scale)
    : steps_(steps), lower_(steps * steps, 0.0) {
  if (steps > kMaxSteps) {
    throw CapacityError("Cholesky fBm generation supports at most " +
                        std::to_string(kMaxSteps) + " steps");
  }
  std::vector<double> gamma(steps);
  for (std::size_t j = 0; j < steps; ++j) {
    gamma[j] = fgn_autocovariance(j, hurst, dt, scale);
  }
  auto L = [&](std::size_t i, std::size_t j) -> double& {
    return lower_[i * steps + j];
  };
  for (std::size_t i = 0; i < steps; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = gamma[i - j];
      for (std::size_t p = 0; p < j; ++p) s -= L(i, p) * L(j, p);
      if (i == j) {
        if (s <= 0.0) throw PreconditionError("fGn covariance not positive");
        L(i, i) = std::sqrt(s);
      } else {
        L(i, j) = s / L(j, j);
      }
    }
  }
}

void CholeskyFgn::sample(const std::vector<double>& normals,
                         std::vector<double>& increments) const {
  increments.assign(steps_, 0.0);
  for (std::size_t i = 0; i < steps_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j <= i; ++j) s += lower_[i * steps_ + j] * normals[j];
    increments[i] = s;
  }
}

}  // namespace reference

// ---------------------------------------------------------------------------

namespace {

struct BrownianPart {
  double sigma;
};
struct FractionalPart {
  std::shared_ptr<const CirculantFgn> fgn;
};
struct JumpPart {
  double rate;
  JumpLaw law;
};
struct DriftPart {
  DriftFunction f;
};

struct Part {
  std::variant<BrownianPart, FractionalPart, JumpPart, DriftPart> kind;
  std::uint64_t slot;
};

void flatten(const ModelSpec& model, const TimeGrid& grid,
             std::vector<Part>& parts, std::uint64_t& slot) {
  std::visit(
      overloaded{
          [&](const BrownianMotion& m) {
            parts.push_back({BrownianPart{m.sigma}, slot++});
          },
          [&](const FractionalBM& m) {
            parts.push_back(
                {FractionalPart{std::make_shared<const CirculantFgn>(
                     grid.steps(), m.hurst, grid.dt(), m.scale)},
                 slot++});
          },
          [&](const CompoundPoisson& m) {
            parts.push_back({JumpPart{m.rate, m.law}, slot++});
          },
          [&](const LevyJumpDiffusion& m) {
            // Raw drift = b_k - rate * E[k(J)] for the declared truncation.
            const double raw =
                m.drift - m.rate * expected_truncation(m.law, m.drift_truncation);
            parts.push_back({DriftPart{DriftFunction::linear(raw, 0.0)}, slot++});
            parts.push_back({BrownianPart{m.sigma}, slot++});
            parts.push_back({JumpPart{m.rate, m.law}, slot++});
          },
          [&](const DeterministicDrift& m) {
            parts.push_back({DriftPart{m.f}, slot++});
          },
          [&](const Composite& m) {
            for (const ModelSpec& c : m.components) flatten(c, grid, parts, slot);
          },
      },
      model.kind);
}

double draw_jump(const JumpLaw& law, Engine& rng) {
  return std::visit(
      overloaded{
          [&](const DiscreteAtoms& d) {
            boost::random::discrete_distribution<std::size_t, double> pick(
                d.probabilities.begin(), d.probabilities.end());
            return d.values[pick(rng)];
          },
          [&](const GaussianLaw& g) {
            return boost::random::normal_distribution<double>(g.mean, g.sd)(rng);
          },
          [&](const UniformLaw& u) {
            return boost::random::uniform_real_distribution<double>(u.a, u.b)(rng);
          },
      },
      law);
}

}  // namespace

struct PathSimulator::Impl {
  std::vector<Part> parts;
};

PathSimulator::PathSimulator(ModelSpec model, TimeGrid grid)
    : model_(std::move(model)), grid_(grid), impl_(std::make_unique<Impl>()) {
  validate(model_);
  std::uint64_t slot = 0;
  flatten(model_, grid_, impl_->parts, slot);
}

PathSimulator::~PathSimulator() = default;
PathSimulator::PathSimulator(PathSimulator&&) noexcept = default;
PathSimulator& PathSimulator::operator=(PathSimulator&&) noexcept = default;

SimulatedPath PathSimulator::operator()(const SeedSpec& seed) const {
  const std::size_t n = grid_.steps();
  const double dt = grid_.dt();
  ComponentLog log;
  log.martingale.assign(n + 1, 0.0);
  log.fractional.assign(n + 1, 0.0);
  log.deterministic.assign(n + 1, 0.0);

  std::vector<double> normals;
  std::vector<double> increments;
  for (const Part& part : impl_->parts) {
    Engine rng(substream_seed(seed, part.slot));
    std::visit(
        overloaded{
            [&](const BrownianPart& p) {
              boost::random::normal_distribution<double> normal;
              const double scale = p.sigma * std::sqrt(dt);
              double w = 0.0;
              for (std::size_t i = 1; i <= n; ++i) {
                w += scale * normal(rng);
                log.martingale[i] += w;
              }
            },
            [&](const FractionalPart& p) {
              boost::random::normal_distribution<double> normal;
              normals.resize(4 * n);
              for (double& z : normals) z = normal(rng);
              p.fgn->sample(normals, increments);
              double b = 0.0;
              for (std::size_t i = 1; i <= n; ++i) {
                b += increments[i - 1];
                log.fractional[i] += b;
              }
            },
            [&](const JumpPart& p) {
              if (p.rate <= 0.0) return;
              const double horizon = grid_.horizon();
              boost::random::poisson_distribution<std::size_t, double> count(
                  p.rate * horizon);
              const std::size_t events = count(rng);
              boost::random::uniform_real_distribution<double> when(0.0, horizon);
              for (std::size_t e = 0; e < events; ++e) {
                const double t = when(rng);
                const double size = draw_jump(p.law, rng);
                auto idx = static_cast<std::size_t>(std::nearbyint(t / dt));
                idx = std::clamp<std::size_t>(idx, 1, n);
                log.jump_events.push_back({t, idx, size});
              }
            },
            [&](const DriftPart& p) {
              for (std::size_t i = 0; i <= n; ++i) {
                log.deterministic[i] += p.f(grid_.time(i));
              }
            },
        },
        part.kind);
  }
  std::stable_sort(log.jump_events.begin(), log.jump_events.end(),
                   [](const JumpEvent& a, const JumpEvent& b) {
                     return a.time < b.time;
                   });

  std::vector<Jump> raw;
  raw.reserve(log.jump_events.size());
  for (const JumpEvent& e : log.jump_events) raw.push_back({e.index, e.size});
  const CadlagPath jumps = CadlagPath::step(grid_, std::move(raw));

  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    values[i] = log.martingale[i] + log.fractional[i] + log.deterministic[i] +
                jumps.value(i);
  }
  std::vector<Jump> registry(jumps.jumps().begin(), jumps.jumps().end());
  return SimulatedPath{CadlagPath(grid_, std::move(values), std::move(registry)),
                       std::move(log)};
}

SimulatedPath simulate_path(const ModelSpec& model, const TimeGrid& grid,
                            const SeedSpec& seed) {
  return PathSimulator(model, grid)(seed);
}

std::vector<SimulatedPath> simulate_ensemble_logged(const ModelSpec& model,
                                                    const TimeGrid& grid,
                                                    std::uint64_t master_seed,
                                                    std::size_t paths) {
  if (paths == 0) throw PreconditionError("ensemble size must be >= 1");
  const PathSimulator sim(model, grid);
  std::vector<std::optional<SimulatedPath>> slots(paths);
  const auto count = static_cast<std::ptrdiff_t>(paths);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    slots[static_cast<std::size_t>(i)] =
        sim(SeedSpec{master_seed, static_cast<std::uint64_t>(i)});
  }
  std::vector<SimulatedPath> out;
  out.reserve(paths);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::vector<CadlagPath> simulate_ensemble(const ModelSpec& model,
                                          const TimeGrid& grid,
                                          std::uint64_t master_seed,
                                          std::size_t paths) {
  if (paths == 0) throw PreconditionError("ensemble size must be >= 1");
  const PathSimulator sim(model, grid);
  std::vector<std::optional<CadlagPath>> slots(paths);
  const auto count = static_cast<std::ptrdiff_t>(paths);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    slots[static_cast<std::size_t>(i)] =
        sim(SeedSpec{master_seed, static_cast<std::uint64_t>(i)}).path;
  }
  std::vector<CadlagPath> out;
  out.reserve(paths);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

namespace reference {

std::vector<CadlagPath> simulate_ensemble(const ModelSpec& model,
                                          const TimeGrid& grid,
                                          std::uint64_t master_seed,
                                          std::size_t paths) {
  if (paths == 0) throw PreconditionError("ensemble size must be >= 1");
  std::vector<CadlagPath> out;
  out.reserve(paths);
  for (std::size_t i = 0; i < paths; ++i) {
    out.push_back(simulate_path(model, grid, SeedSpec{master_seed, i}).path);
  }
  return out;
}

}  // namespace reference

}  // namespace dreg

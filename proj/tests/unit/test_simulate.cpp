#include <doctest.h>

#include <cmath>
#include <numeric>

#include <omp.h>

#include "dreg/characteristics.hpp"
#include "dreg/errors.hpp"
#include "dreg/model.hpp"
#include "dreg/simulate.hpp"
#include "gen.hpp"

using namespace dreg;

namespace {

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

std::vector<double> terminal(const std::vector<CadlagPath>& paths) {
  std::vector<double> out;
  for (const CadlagPath& p : paths) out.push_back(p.values().back());
  return out;
}

bool same(const CadlagPath& a, const CadlagPath& b) {
  if (!std::equal(a.values().begin(), a.values().end(), b.values().begin())) return false;
  if (a.jumps().size() != b.jumps().size()) return false;
  return std::equal(a.jumps().begin(), a.jumps().end(), b.jumps().begin());
}

const ModelSpec kComposite{Composite{{ModelSpec{BrownianMotion{1.0}},
                                     ModelSpec{FractionalBM{0.7, 0.5}},
                                     ModelSpec{CompoundPoisson{1.0, DiscreteAtoms{{-1.0, 1.0}, {0.5, 0.5}}}}}}};

}  // namespace

TEST_CASE("model validation") {
  CHECK_THROWS_AS(validate(ModelSpec{BrownianMotion{-1.0}}), PreconditionError);
  CHECK_THROWS_AS(validate(ModelSpec{FractionalBM{0.5, 1.0}}), PreconditionError);
  CHECK_THROWS_AS(validate(ModelSpec{FractionalBM{1.0, 1.0}}), PreconditionError);
  CHECK_THROWS_AS(validate(ModelSpec{CompoundPoisson{-1.0, GaussianLaw{}}}), PreconditionError);
  CHECK_THROWS_AS(validate(ModelSpec{CompoundPoisson{1.0, DiscreteAtoms{{1, 2}, {0.5, 0.6}}}}),
                  PreconditionError);
  CHECK_NOTHROW(validate(kComposite));
  CHECK_THROWS_AS(simulate_path(ModelSpec{FractionalBM{0.3, 1.0}}, TimeGrid(1, 10), {1, 0}),
                  PreconditionError);
}

TEST_CASE("deterministic drift and zero-rate compound Poisson") {
  const TimeGrid g(1.0, 100);
  const SimulatedPath d = simulate_path(ModelSpec{DeterministicDrift{}}, g, {99, 3});
  for (std::size_t i = 0; i < g.nodes(); ++i) CHECK(d.path.value(i) == g.time(i));
  CHECK(d.path.jumps().empty());
  const SimulatedPath z =
      simulate_path(ModelSpec{CompoundPoisson{0.0, UniformLaw{0, 1}}}, g, {5, 0});
  for (double v : z.path.values()) CHECK(v == 0.0);
  CHECK(z.path.jumps().empty());
}

TEST_CASE("exact fBm capacity is explicit") {
  CHECK_THROWS_AS(CirculantFgn(CirculantFgn::kMaxSteps + 1, 0.7, 1e-8, 1.0), CapacityError);
  CHECK_THROWS_AS(reference::CholeskyFgn(reference::CholeskyFgn::kMaxSteps + 1, 0.7, 1e-4, 1.0),
                  CapacityError);
}

TEST_CASE("circulant and Cholesky fBm agree in law") {
  // Same autocovariance: compare the sample covariance of increments at a few lags.
  const std::size_t n = 64, N = 4000;
  const double h = 0.7, dt = 1.0 / n;
  CirculantFgn circ(n, h, dt, 1.0);
  reference::CholeskyFgn chol(n, h, dt, 1.0);
  for (double e : circ.eigenvalues()) CHECK(e >= -1e-12);
  gen::Rng r(17);
  for (std::size_t lag : {0u, 1u, 5u}) {
    double sc = 0.0, sk = 0.0;
    std::vector<double> z1(4 * n), z2(n), inc1, inc2;
    for (std::size_t p = 0; p < N; ++p) {
      for (double& z : z1) z = r.normal();
      for (double& z : z2) z = r.normal();
      circ.sample(z1, inc1);
      chol.sample(z2, inc2);
      sc += inc1[10] * inc1[10 + lag];
      sk += inc2[10] * inc2[10 + lag];
    }
    const double exact = fgn_autocovariance(lag, h, dt, 1.0);
    const double se = 3.0 * fgn_autocovariance(0, h, dt, 1.0) * std::sqrt(2.0 / N);
    CHECK(std::abs(sc / N - exact) < se);
    CHECK(std::abs(sk / N - exact) < se);
  }
}

TEST_CASE("BM terminal variance within 5% of sigma^2 over 1e4 paths") {
  const TimeGrid g(1.0, 100);
  const auto paths = simulate_ensemble(ModelSpec{BrownianMotion{1.0}}, g, 2024, 10000);
  CHECK(std::abs(variance(terminal(paths)) - 1.0) < 0.05);
}

TEST_CASE("BM terminal mean within 3/sqrt(N) of zero") {
  const TimeGrid g(1.0, 50);
  const std::size_t N = 10000;
  const auto paths = simulate_ensemble(ModelSpec{BrownianMotion{1.0}}, g, 31337, N);
  CHECK(std::abs(mean(terminal(paths))) < 3.0 / std::sqrt(double(N)));
}

TEST_CASE("fBm covariance matches R(s,t) within 5%") {
  const TimeGrid g(1.0, 200);
  const double h = 0.7, scale = 1.3;
  const auto paths = simulate_ensemble(ModelSpec{FractionalBM{h, scale}}, g, 4242, 10000);
  auto R = [&](double s, double t) {
    return 0.5 * scale * scale *
           (std::pow(s, 2 * h) + std::pow(t, 2 * h) - std::pow(std::abs(t - s), 2 * h));
  };
  for (auto [s, t] : {std::pair{0.25, 0.75}, {0.5, 0.5}, {0.5, 1.0}}) {
    const std::size_t is = g.index_of(s), it = g.index_of(t);
    double acc = 0.0;
    for (const CadlagPath& p : paths) acc += p.value(is) * p.value(it);
    const double emp = acc / static_cast<double>(paths.size());
    CHECK(std::abs(emp / R(s, t) - 1.0) < 0.05);
  }
}

TEST_CASE("compound Poisson jump count mean within 3 sqrt(lambda T / N)") {
  const TimeGrid g(2.0, 2000);
  const double lambda = 1.5;
  const std::size_t N = 10000;
  const auto logged = simulate_ensemble_logged(
      ModelSpec{CompoundPoisson{lambda, GaussianLaw{0.0, 1.0}}}, g, 55, N);
  double count = 0.0;
  for (const SimulatedPath& s : logged) count += double(s.log->jump_events.size());
  CHECK(std::abs(count / N - lambda * 2.0) < 3.0 * std::sqrt(lambda * 2.0 / N));
}

TEST_CASE("jumps are snapped to grid nodes and collisions merged") {
  const TimeGrid g(1.0, 20);
  const ModelSpec cp{CompoundPoisson{20.0, DiscreteAtoms{{1.0}, {1.0}}}};
  for (std::uint64_t p = 0; p < 50; ++p) {
    const SimulatedPath s = simulate_path(cp, g, {3, p});
    double total = 0.0;
    for (const JumpEvent& e : s.log->jump_events) {
      CHECK(e.index >= 1);
      CHECK(e.index <= g.steps());
      // Events before dt/2 are clamped onto node 1.
      const double slack = e.index == 1 ? g.dt() : 0.5 * g.dt();
      CHECK(std::abs(g.time(e.index) - e.time) <= slack + 1e-12);
      total += e.size;
    }
    double registered = 0.0;
    for (const Jump& j : s.path.jumps()) registered += j.size;
    CHECK(registered == total);
    CHECK(s.path.values().back() == total);
  }
}

TEST_CASE("Composite components come from independent substreams") {
  const TimeGrid g(1.0, 100);
  const auto logged = simulate_ensemble_logged(kComposite, g, 808, 10000);
  std::vector<double> bm, fbm, cp;
  for (const SimulatedPath& s : logged) {
    bm.push_back(s.log->martingale.back());
    fbm.push_back(s.log->fractional.back());
    double j = 0.0;
    for (const JumpEvent& e : s.log->jump_events) j += e.size;
    cp.push_back(j);
  }
  auto corr = [](const std::vector<double>& a, const std::vector<double>& b) {
    const double ma = mean(a), mb = mean(b);
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      sab += (a[i] - ma) * (b[i] - mb);
      saa += (a[i] - ma) * (a[i] - ma);
      sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
  };
  CHECK(std::abs(corr(bm, fbm)) < 0.05);
  CHECK(std::abs(corr(bm, cp)) < 0.05);
  CHECK(std::abs(corr(fbm, cp)) < 0.05);
  // Component logs add up to the path.
  for (std::size_t p = 0; p < 20; ++p) {
    const SimulatedPath& s = logged[p];
    for (std::size_t i = 0; i < g.nodes(); i += 7) {
      double jumps = 0.0;
      for (const JumpEvent& e : s.log->jump_events) jumps += e.index <= i ? e.size : 0.0;
      CHECK(s.path.value(i) ==
            doctest::Approx(s.log->martingale[i] + s.log->fractional[i] +
                            s.log->deterministic[i] + jumps).epsilon(1e-12));
    }
  }
}

TEST_CASE("ensembles: determinism, N=1 reduction, parallelism independence") {
  const TimeGrid g(1.0, 256);
  const auto a = simulate_ensemble(kComposite, g, 77, 40);
  const auto b = simulate_ensemble(kComposite, g, 77, 40);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(same(a[i], b[i]));
  CHECK(same(simulate_ensemble(kComposite, g, 77, 1)[0],
             simulate_path(kComposite, g, {77, 0}).path));
  const auto serial = reference::simulate_ensemble(kComposite, g, 77, 40);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(same(a[i], serial[i]));
  const int saved = omp_get_max_threads();
  omp_set_num_threads(3);
  const auto three = simulate_ensemble(kComposite, g, 77, 40);
  omp_set_num_threads(saved);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(same(a[i], three[i]));
  const auto other = simulate_ensemble(kComposite, g, 78, 1);
  CHECK_FALSE(same(a[0], other[0]));
  CHECK_THROWS_AS(simulate_ensemble(kComposite, g, 1, 0), PreconditionError);
}

TEST_CASE("substreams are pure functions of (master seed, path index, slot)") {
  CHECK(substream_seed({1, 2}, 0) == substream_seed({1, 2}, 0));
  CHECK(substream_seed({1, 2}, 0) != substream_seed({1, 3}, 0));
  CHECK(substream_seed({1, 2}, 0) != substream_seed({2, 2}, 0));
  CHECK(substream_seed({1, 2}, 0) != substream_seed({1, 2}, 1));
}

TEST_CASE("known characteristics examples") {
  const Truncation k = Truncation::standard();
  const CharacteristicsModel bm = known_characteristics(ModelSpec{BrownianMotion{2.0}}, k);
  CHECK(bm.drift_rate == 0.0);
  CHECK(bm.C(0.5) == doctest::Approx(2.0));
  CHECK(bm.jumps.empty());
  CHECK(bm.fixed_atoms.empty());

  const CharacteristicsModel cp = known_characteristics(
      ModelSpec{CompoundPoisson{1.0, DiscreteAtoms{{-2.0, 2.0}, {0.5, 0.5}}}}, k);
  CHECK(cp.drift_rate == 0.0);
  CHECK(cp.C(1.0) == 0.0);
  REQUIRE(cp.jumps.size() == 1);
  CHECK(cp.jumps[0].rate == 1.0);

  const CharacteristicsModel u1 =
      known_characteristics(ModelSpec{CompoundPoisson{2.0, UniformLaw{-0.5, 0.5}}}, k);
  CHECK(std::abs(u1.drift_rate) < 1e-14);
  const CharacteristicsModel u2 =
      known_characteristics(ModelSpec{CompoundPoisson{2.0, UniformLaw{0.0, 0.5}}}, k);
  CHECK(u2.drift_rate == doctest::Approx(0.5).epsilon(1e-13));

  const CharacteristicsModel comp = known_characteristics(kComposite, k);
  CHECK(comp.path_dependent_drift);
  CHECK_FALSE(comp.finite_variation_drift());
  CHECK_FALSE(is_semimartingale(kComposite));
  CHECK(is_semimartingale(ModelSpec{LevyJumpDiffusion{}}));
}

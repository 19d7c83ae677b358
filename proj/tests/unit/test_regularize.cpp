#include <doctest.h>

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dreg/errors.hpp"
#include "dreg/regularize.hpp"
#include "dreg/simulate.hpp"
#include "gen.hpp"

using namespace dreg;

namespace {

const TimeGrid kFine(1.0, 10000);

std::vector<double> identity_t(const TimeGrid& g) {
  std::vector<double> t(g.nodes());
  for (std::size_t i = 0; i < g.nodes(); ++i) t[i] = g.time(i);
  return t;
}

CadlagPath bm(std::uint64_t seed, std::uint64_t index, const TimeGrid& g = kFine) {
  return simulate_path(ModelSpec{BrownianMotion{1.0}}, g, {seed, index}).path;
}

CadlagPath cp(std::uint64_t seed, std::uint64_t index, const TimeGrid& g = kFine) {
  return simulate_path(ModelSpec{CompoundPoisson{3.0, GaussianLaw{0.0, 1.0}}}, g, {seed, index})
      .path;
}

C1Function sin_fn() {
  return {[](double x) { return std::sin(x); }, [](double x) { return std::cos(x); }};
}
C1Function tanh_fn() {
  return {[](double x) { return std::tanh(x); },
          [](double x) { return 1.0 / (std::cosh(x) * std::cosh(x)); }};
}

}  // namespace

TEST_CASE("schedules") {
  const TimeGrid g(1.0, 100);
  CHECK(EpsilonSchedule::standard(kFine).multiples() ==
        std::vector<std::size_t>{32, 16, 8, 4, 2, 1});
  CHECK(EpsilonSchedule::standard(g).multiples() == std::vector<std::size_t>{8, 4, 2, 1});
  CHECK(EpsilonSchedule::from_values(g, {0.05, 0.02}).multiples() ==
        std::vector<std::size_t>{5, 2});
  CHECK_THROWS_AS(EpsilonSchedule(g, {}), PreconditionError);
  CHECK_THROWS_AS(EpsilonSchedule(g, {0}), PreconditionError);
  CHECK_THROWS_AS(EpsilonSchedule(g, {100}), PreconditionError);
  CHECK_THROWS_AS(EpsilonSchedule(g, {2, 4}), PreconditionError);
  CHECK_THROWS_AS(EpsilonSchedule(g, {2, 2}), PreconditionError);
  CHECK_THROWS_AS(epsilon_multiple(g, 0.015), AlignmentError);
  CHECK(epsilon_multiple(g, 0.03) == 3);
}

TEST_CASE("errors: grid mismatch, non-multiple epsilon") {
  const TimeGrid g(1.0, 100);
  const CadlagPath x = CadlagPath::constant(g, 0.0);
  const CadlagPath y = CadlagPath::constant(TimeGrid(1.0, 50), 0.0);
  CHECK_THROWS_AS(covariation_eps(x, y, std::size_t{1}), GridMismatchError);
  CHECK_THROWS_AS(covariation_eps(x, x, 0.015), AlignmentError);
  CHECK_THROWS_AS(forward_integral_eps(x, y, std::size_t{1}), GridMismatchError);
  CHECK_THROWS_AS(covariation_limit(x, x, EpsilonSchedule::standard(TimeGrid(1.0, 50))),
                  GridMismatchError);
}

TEST_CASE("Heaviside bracket is exactly 1 at eps = 0.1") {
  const TimeGrid g(1.0, 1000);
  const CadlagPath h = gen::heaviside(g, 0.5);
  const Trajectory q = covariation_eps(h, h, 0.1);
  CHECK(q.back() == 1.0);
  CHECK(q[g.index_of(0.5) - 1] == 0.0);
}

TEST_CASE("constant path has zero covariation for all t and eps") {
  const TimeGrid g(1.0, 200);
  const CadlagPath c = CadlagPath::constant(g, 4.2);
  gen::Rng r(1);
  const CadlagPath y = gen::walk(r, g, 3);
  for (std::size_t m : {1u, 3u, 17u}) {
    for (double v : covariation_eps(c, c, m)) CHECK(v == 0.0);
    for (double v : covariation_eps(c, y, m)) CHECK(v == 0.0);
  }
}

TEST_CASE("BM: [W,W]^eps at eps=1e-3 is within 0.05 of t (median of 100 paths)") {
  const auto t = identity_t(kFine);
  std::vector<double> d;
  for (std::uint64_t p = 0; p < 100; ++p) {
    const CadlagPath w = bm(1, p);
    d.push_back(sup_distance(covariation_eps(w, w, 1e-3), t));
  }
  CHECK(gen::median(d) < 0.05);
}

TEST_CASE("covariation_limit on step paths is the jump-product sum with zero error") {
  const TimeGrid g(1.0, 1000);
  const CadlagPath x = CadlagPath::step(g, {{100, 1.0}, {400, -2.0}, {800, 0.5}});
  const CadlagPath y = CadlagPath::step(g, {{400, 3.0}, {800, 1.0}});
  const CovariationEstimate est = covariation_limit(x, y, EpsilonSchedule::standard(g));
  CHECK(est.converged);
  CHECK(est.error_estimate == 0.0);
  CHECK(sup_distance(est.limit, jump_product_sum(x, y)) == 0.0);
  CHECK(est.limit.back() == -6.0 + 0.5);
}

TEST_CASE("BM limits: independent pair near 0, own bracket near t (median of 100)") {
  const auto t = identity_t(kFine);
  const EpsilonSchedule s = EpsilonSchedule::standard(kFine);
  std::vector<double> cross, own;
  for (std::uint64_t p = 0; p < 100; ++p) {
    const CadlagPath w1 = bm(2, p), w2 = bm(3, p);
    cross.push_back(sup_norm(covariation_limit(w1, w2, s).limit));
    own.push_back(sup_distance(covariation_limit(w1, w1, s).limit, t));
  }
  CHECK(gen::median(cross) < 0.05);
  CHECK(gen::median(own) < 0.05);
}

TEST_CASE("forward integral examples") {
  const TimeGrid g(1.0, 10000);
  const EpsilonSchedule s = EpsilonSchedule::standard(g);
  SUBCASE("integrand 1 telescopes") {
    const CadlagPath w = bm(4, 0);
    const CovariationEstimate est = forward_integral_limit(CadlagPath::constant(g, 1.0), w, s);
    std::vector<double> inc(g.nodes());
    for (std::size_t i = 0; i < g.nodes(); ++i) inc[i] = w.value(i) - w.value(0);
    CHECK(sup_distance(est.limit, inc) <= est.error_estimate + 1e-12);
  }
  SUBCASE("int_0^1 s ds") {
    const CadlagPath lin = CadlagPath::from_function(g, [](double t) { return t; });
    const CovariationEstimate est = forward_integral_limit(lin, lin, s);
    CHECK(std::abs(est.limit.back() - 0.5) <= 2.0 * g.dt());
  }
  SUBCASE("Ito oracle: int W d-W = (W_1^2 - 1)/2, median of 100 at eps=1e-3") {
    std::vector<double> d;
    for (std::uint64_t p = 0; p < 100; ++p) {
      const CadlagPath w = bm(5, p);
      const double w1 = w.values().back();
      d.push_back(std::abs(forward_integral_eps(w, w, 1e-3).back() - 0.5 * (w1 * w1 - 1.0)));
    }
    CHECK(gen::median(d) < 0.05);
  }
}

TEST_CASE("qv_decompose examples") {
  const TimeGrid g(1.0, 10000);
  const EpsilonSchedule s = EpsilonSchedule::standard(g);
  SUBCASE("Heaviside") {
    const TimeGrid hg(1.0, 1000);
    const CadlagPath h = gen::heaviside(hg, 0.5);
    const QvDecomposition q = qv_decompose(h, EpsilonSchedule::standard(hg));
    for (std::size_t i = 0; i < hg.nodes(); ++i) {
      CHECK(q.continuous[i] == 0.0);
      CHECK(q.jump[i] == (hg.time(i) >= 0.5 ? 1.0 : 0.0));
    }
  }
  SUBCASE("compound Poisson: continuous part 0 within error, jump part = sum of squares") {
    for (std::uint64_t p = 0; p < 10; ++p) {
      const CadlagPath x = cp(6, p);
      const QvDecomposition q = qv_decompose(x, s);
      double acc = 0.0;
      std::size_t k = 0;
      for (std::size_t i = 0; i < g.nodes(); ++i) {
        if (k < x.jumps().size() && x.jumps()[k].index == i) {
          acc += x.jumps()[k].size * x.jumps()[k].size;
          ++k;
        }
        CHECK(q.jump[i] == doctest::Approx(acc).epsilon(1e-12));
      }
      CHECK(sup_norm(q.continuous) <= q.estimate.error_estimate + 1e-12);
    }
  }
  SUBCASE("BM: no jump part, continuous part near t") {
    const CadlagPath w = bm(7, 0);
    const QvDecomposition q = qv_decompose(w, s);
    CHECK(sup_norm(q.jump) == 0.0);
    CHECK(sup_distance(q.continuous, identity_t(g)) < 0.05);
    CHECK(q.continuous_monotone);
  }
}

TEST_CASE("Lemma YZ checks") {
  const TimeGrid g(1.0, 10000);
  const EpsilonSchedule s = EpsilonSchedule::standard(g);
  SUBCASE("deterministic step paths with a shared jump: exact") {
    const TimeGrid sg(1.0, 1000);
    const CadlagPath y = CadlagPath::step(sg, {{300, 1.5}, {700, -1.0}});
    const CadlagPath z = CadlagPath::step(sg, {{300, 2.0}, {500, 4.0}});
    const LemmaYZReport r = check_lemma_YZ(y, z, EpsilonSchedule::standard(sg));
    CHECK(r.precondition_ok);
    CHECK(r.distance == 0.0);
    CHECK(r.rhs.back() == 3.0);
  }
  SUBCASE("step path against continuous: both sides 0") {
    const CadlagPath y = CadlagPath::step(g, {{3000, 1.0}});
    const CadlagPath z = bm(8, 0);
    const LemmaYZReport r = check_lemma_YZ(y, z, s);
    CHECK(sup_norm(r.rhs) == 0.0);
    CHECK(sup_norm(r.lhs) <= r.error_estimate + 0.05);
  }
  SUBCASE("precondition violation is reported") {
    const LemmaYZReport r = check_lemma_YZ(bm(9, 0), bm(9, 1), s);
    CHECK_FALSE(r.precondition_ok);
    CHECK(r.y_continuous_sup > 0.5);
  }
}

TEST_CASE("C1 stability checks") {
  const TimeGrid g(1.0, 10000);
  const EpsilonSchedule s = EpsilonSchedule::standard(g);
  SUBCASE("identity is exact") {
    const C1Function id{[](double x) { return x; }, [](double) { return 1.0; }};
    gen::Rng r(10);
    const CadlagPath x = gen::walk(r, TimeGrid(1.0, 500), 4);
    const StabilityReport rep = check_c1_stability(x, id, EpsilonSchedule::standard(x.grid()));
    CHECK(rep.distance < 1e-12);
  }
  SUBCASE("tanh of a compound Poisson path: sum of squared tanh jumps") {
    for (std::uint64_t p = 0; p < 5; ++p) {
      const CadlagPath x = cp(11, p);
      const StabilityReport rep = check_c1_stability(x, tanh_fn(), s);
      double acc = 0.0;
      for (const Jump& j : x.jumps()) {
        const double d = std::tanh(x.value(j.index)) - std::tanh(x.left_value(j.index));
        acc += d * d;
      }
      CHECK(rep.lhs.back() == doctest::Approx(acc).epsilon(1e-12));
      CHECK(rep.distance <= rep.error_estimate + 1e-12);
    }
  }
  SUBCASE("sin of BM: RHS continuous term is int cos^2(W) ds") {
    const CadlagPath w = bm(12, 0);
    const StabilityReport rep = check_c1_stability(w, sin_fn(), s);
    double integral = 0.0;
    for (std::size_t i = 0; i + 1 < g.nodes(); ++i) {
      integral += std::pow(std::cos(w.value(i)), 2) * g.dt();
    }
    CHECK(std::abs(rep.rhs_continuous.back() - integral) < 0.05);
    CHECK(sup_norm(rep.rhs_jump) == 0.0);
    CHECK(rep.distance < 0.08);
  }
}

TEST_CASE("property: bilinearity, symmetry, polarization, Cauchy-Schwarz") {
  gen::Rng r(1234);
  for (int trial = 0; trial < 60; ++trial) {
    const TimeGrid g = gen::grid(r);
    const CadlagPath x = gen::walk(r, g, 3), x2 = gen::walk(r, g, 3), y = gen::walk(r, g, 3);
    const std::size_t m = r.index(1, std::max<std::size_t>(1, g.steps() / 11));
    const double a = r.uniform(-2, 2), b = r.uniform(-2, 2);
    const Trajectory xy = covariation_eps(x, y, m), x2y = covariation_eps(x2, y, m);
    const Trajectory lin = covariation_eps(combine(a, x, b, x2), y, m);
    const Trajectory yx = covariation_eps(y, x, m);
    const Trajectory xx = covariation_eps(x, x, m), yy = covariation_eps(y, y, m);
    const Trajectory ss = covariation_eps(combine(1, x, 1, y), combine(1, x, 1, y), m);
    double scale = 1.0;
    for (std::size_t i = 0; i < g.nodes(); ++i) scale = std::max({scale, xx[i], yy[i]});
    for (std::size_t i = 0; i < g.nodes(); ++i) {
      CHECK(std::abs(lin[i] - (a * xy[i] + b * x2y[i])) <= 1e-12 * scale * 10);
      CHECK(xy[i] == yx[i]);
      CHECK(std::abs(xy[i] - 0.5 * (ss[i] - xx[i] - yy[i])) <= 1e-12 * scale * 10);
      CHECK(std::abs(xy[i]) <= std::sqrt(xx[i] * yy[i]) + 1e-12 * scale);
      CHECK(xx[i] >= 0.0);
    }
  }
}

TEST_CASE("property: pure-step paths with eps below the jump gap give sum dX dY exactly") {
  gen::Rng r(4321);
  for (int trial = 0; trial < 200; ++trial) {
    const TimeGrid g(r.uniform(0.5, 2.0), r.index(50, 500));
    const std::size_t gap = r.index(2, 10);
    const CadlagPath x = gen::step_path(r, g, 5, gap);
    std::vector<Jump> yj;
    for (const Jump& j : x.jumps()) {
      if (r.uniform(0, 1) < 0.7) yj.push_back({j.index, r.nonzero(2.0)});
    }
    const CadlagPath y = CadlagPath::step(g, yj);
    // The window before the first jump must also fit after t = 0.
    std::size_t limit = gap - 1;
    if (!x.jumps().empty()) limit = std::min(limit, x.jumps()[0].index);
    const std::size_t m = r.index(1, limit);
    const Trajectory q = covariation_eps(x, y, m);
    const Trajectory want = jump_product_sum(x, y);
    CHECK(std::abs(q.back() - want.back()) <= 1e-12 * std::max(1.0, std::abs(want.back())));
  }
}

TEST_CASE("property: serial reference equals the parallel kernels") {
  gen::Rng r(99);
  for (int trial = 0; trial < 40; ++trial) {
    const TimeGrid g = gen::grid(r);
    const CadlagPath x = gen::walk(r, g, 4), y = gen::walk(r, g, 2);
    const std::size_t m = r.index(1, g.steps() / 4);
    const Trajectory fast = covariation_eps(x, y, m), slow = reference::covariation_eps(x, y, m);
    const Trajectory ff = forward_integral_eps(x, y, m),
                     fs = reference::forward_integral_eps(x, y, m);
    CHECK(gen::max_abs_diff(fast, slow) <= 1e-11);
    CHECK(gen::max_abs_diff(ff, fs) <= 1e-11);
  }
}

TEST_CASE("white-noise path is flagged as non-convergent") {
  gen::Rng r(5);
  std::vector<double> v(kFine.nodes());
  for (double& x : v) x = r.normal();
  const CadlagPath noise(kFine, v);
  const CovariationEstimate est = covariation_limit(noise, noise, EpsilonSchedule::standard(kFine));
  CHECK_FALSE(est.converged);
}

TEST_CASE("estimate CSV and summary") {
  const TimeGrid g(1.0, 100);
  const CadlagPath h = gen::heaviside(g, 0.5);
  const CovariationEstimate est = covariation_limit(h, h, EpsilonSchedule(g, {4, 2, 1}));
  std::ostringstream os;
  write_estimate_csv(os, g, est);
  const std::string csv = os.str();
  CHECK(csv.rfind("t,eps,value\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 4 * 101);
  const auto js = estimate_summary(est);
  CHECK(js.at("converged") == true);
  CHECK(js.at("limit_sup_error") == 0.0);
  CHECK(js.at("limit_at_T") == 1.0);
}

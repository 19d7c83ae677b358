#include <doctest.h>

#include <cmath>
#include <sstream>

#include "dreg/errors.hpp"
#include "dreg/paths.hpp"
#include "dreg/simulate.hpp"
#include "gen.hpp"

using namespace dreg;

TEST_CASE("grid basics and alignment") {
  const TimeGrid g(1.0, 10);
  CHECK(g.nodes() == 11);
  CHECK(g.time(0) == 0.0);
  CHECK(g.time(10) == 1.0);
  CHECK(g.index_of(0.5) == 5);
  CHECK(g.index_of(0.5 + 0.04) == 5);
  CHECK(g.index_of(0.549) == 5);
  CHECK(g.index_of(0.551) == 6);
  CHECK_THROWS_AS(g.index_of(-0.06), AlignmentError);
  CHECK_THROWS_AS(g.index_of(1.2), AlignmentError);
  CHECK_THROWS_AS(TimeGrid(0.0, 10), PreconditionError);
  CHECK_THROWS_AS(TimeGrid(1.0, 0), PreconditionError);
}

TEST_CASE("path construction rejects bad jump registries") {
  const TimeGrid g(1.0, 4);
  const std::vector<double> v(5, 0.0);
  CHECK_THROWS_AS(CadlagPath(g, {0, 1}), PreconditionError);
  CHECK_THROWS_AS(CadlagPath(g, v, {{0, 1.0}}), PreconditionError);
  CHECK_THROWS_AS(CadlagPath(g, v, {{5, 1.0}}), PreconditionError);
  CHECK_THROWS_AS(CadlagPath(g, v, {{2, 1.0}, {2, 1.0}}), PreconditionError);
  CHECK_THROWS_AS(CadlagPath(g, v, {{3, 1.0}, {2, 1.0}}), PreconditionError);
  CHECK_THROWS_AS(CadlagPath(g, v, {{2, 0.0}}), PreconditionError);
}

TEST_CASE("eval on a Heaviside path and a constant") {
  const TimeGrid g(1.0, 10);
  const CadlagPath h = gen::heaviside(g, 0.5);
  CHECK(eval(h, 0.5, Side::left) == 0.0);
  CHECK(eval(h, 0.5, Side::right) == 1.0);
  CHECK(eval(h, 0.0, Side::left) == eval(h, 0.0, Side::right));
  const CadlagPath c = CadlagPath::constant(g, 3.0);
  CHECK(eval(c, 0.7, Side::left) == 3.0);
  CHECK_THROWS_AS(eval(c, 1.07, Side::left), AlignmentError);
}

TEST_CASE("extract_jumps") {
  const TimeGrid g(1.0, 100);
  const JumpMeasure mu = extract_jumps(gen::heaviside(g, 0.5));
  REQUIRE(mu.atoms.size() == 1);
  CHECK(mu.atoms[0] == Atom{0.5, 1.0});
  const CadlagPath s = CadlagPath::from_function(g, [](double t) { return std::sin(6 * t); });
  CHECK(extract_jumps(s).atoms.empty());
}

TEST_CASE("extract_jumps matches the simulator's jump log") {
  const TimeGrid g(1.0, 1000);
  const ModelSpec cp{CompoundPoisson{3.0, GaussianLaw{0.0, 1.0}}};
  std::size_t seen_three = 0;
  for (std::uint64_t p = 0; p < 200 && seen_three < 5; ++p) {
    const SimulatedPath s = simulate_path(cp, g, {7, p});
    REQUIRE(s.log.has_value());
    const JumpMeasure mu = extract_jumps(s.path);
    if (s.log->jump_events.size() != 3) continue;
    ++seen_three;
    REQUIRE(mu.atoms.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(mu.atoms[i].time == g.time(s.log->jump_events[i].index));
      CHECK(mu.atoms[i].size == s.log->jump_events[i].size);
    }
  }
  CHECK(seen_three == 5);
}

TEST_CASE("star_integral examples") {
  const JumpMeasure one{{{0.3, 2.0}}};
  const std::vector<double> left1 = {0.0};
  auto sq = [](double, double x, double) { return x * x; };
  CHECK(star_integral(sq, one, left1, 1.0) == 4.0);
  CHECK(star_integral(sq, one, left1, 0.2) == 0.0);
  const JumpMeasure two{{{0.3, 2.0}, {0.6, -1.0}}};
  const std::vector<double> left2 = {0.0, 2.0};
  auto sx = [](double s, double x, double) { return s * x; };
  CHECK(star_integral(sx, two, left2, 1.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK_THROWS_AS(star_integral(sx, two, left1, 1.0), PreconditionError);
}

TEST_CASE("combine examples") {
  const TimeGrid g(1.0, 10);
  gen::Rng r(11);
  const CadlagPath x = gen::walk(r, g, 3);
  const CadlagPath zero = combine(1.0, x, -1.0, x);
  CHECK(zero.jumps().empty());
  for (double v : zero.values()) CHECK(v == 0.0);

  const CadlagPath h = gen::heaviside(g, 0.5);
  const CadlagPath hh = combine(1.0, h, 1.0, h);
  REQUIRE(hh.jumps().size() == 1);
  CHECK(hh.jumps()[0] == Jump{5, 2.0});

  const CadlagPath lin = CadlagPath::from_function(g, [](double t) { return t; });
  const CadlagPath two = combine(2.0, lin, 0.0, x);
  for (std::size_t i = 0; i < g.nodes(); ++i) CHECK(two.value(i) == 2.0 * g.time(i));
  CHECK_THROWS_AS(combine(1.0, x, 1.0, CadlagPath::constant(TimeGrid(1.0, 11), 0.0)),
                  GridMismatchError);
}

TEST_CASE("property: jump at t equals right minus left evaluation") {
  gen::Rng r(101);
  for (int trial = 0; trial < 200; ++trial) {
    const TimeGrid g = gen::grid(r);
    const CadlagPath x = gen::walk(r, g, 5);
    for (std::size_t i = 0; i < g.nodes(); ++i) {
      const double t = g.time(i);
      CHECK(eval(x, t, Side::right) - eval(x, t, Side::left) ==
            doctest::Approx(x.jump_at(i)).epsilon(1e-12));
    }
  }
}

TEST_CASE("property: extract_jumps of combine is the combined registry") {
  gen::Rng r(202);
  for (int trial = 0; trial < 200; ++trial) {
    const TimeGrid g = gen::grid(r);
    const CadlagPath x = gen::walk(r, g, 4);
    // Reuse some of x's jump times so cancellation gets exercised.
    std::vector<Jump> yj;
    for (const Jump& j : x.jumps()) {
      if (r.uniform(0, 1) < 0.5) yj.push_back({j.index, -j.size});
    }
    const CadlagPath y = CadlagPath::step(g, yj);
    const double a = r.index(0, 1) ? 1.0 : r.uniform(-2, 2);
    const CadlagPath z = combine(a, x, a, y);
    const std::vector<double> dx = x.dense_jumps(), dy = y.dense_jumps(), dz = z.dense_jumps();
    for (std::size_t i = 0; i < g.nodes(); ++i) {
      CHECK(dz[i] == doctest::Approx(a * dx[i] + a * dy[i]).epsilon(1e-12));
    }
    for (const Atom& at : extract_jumps(z).atoms) CHECK(at.size != 0.0);
  }
}

TEST_CASE("property: star_integral is additive in t and linear in H") {
  gen::Rng r(303);
  for (int trial = 0; trial < 200; ++trial) {
    const TimeGrid g = gen::grid(r);
    const CadlagPath x = gen::walk(r, g, 8);
    const JumpMeasure mu = extract_jumps(x);
    const std::vector<double> left = atom_left_values(x);
    const double a = r.uniform(-2, 2), b = r.uniform(-2, 2);
    auto h1 = [](double s, double jump, double l) { return s * jump + std::tanh(l); };
    auto h2 = [](double, double jump, double) { return jump * jump; };
    auto lin = [&](double s, double jump, double l) { return a * h1(s, jump, l) + b * h2(s, jump, l); };
    const double s1 = g.time(r.index(0, g.steps()));
    const double t = g.horizon();
    const double whole = star_integral(h1, mu, left, t);
    JumpMeasure before, after;
    std::vector<double> lb, la;
    for (std::size_t k = 0; k < mu.atoms.size(); ++k) {
      (mu.atoms[k].time <= s1 ? before : after).atoms.push_back(mu.atoms[k]);
      (mu.atoms[k].time <= s1 ? lb : la).push_back(left[k]);
    }
    CHECK(star_integral(h1, before, lb, t) + star_integral(h1, after, la, t) ==
          doctest::Approx(whole).epsilon(1e-12));
    CHECK(star_integral(h1, mu, left, s1) == doctest::Approx(star_integral(h1, before, lb, t)).epsilon(1e-12));
    CHECK(star_integral(lin, mu, left, t) ==
          doctest::Approx(a * whole + b * star_integral(h2, mu, left, t)).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("CSV round trip is exact") {
  gen::Rng r(404);
  for (int trial = 0; trial < 50; ++trial) {
    const TimeGrid g = gen::grid(r);
    const CadlagPath x = gen::walk(r, g, 5);
    std::stringstream ss;
    write_path_csv(ss, x);
    const CadlagPath y = read_path_csv(ss);
    CHECK(y.grid() == x.grid());
    CHECK(std::equal(x.values().begin(), x.values().end(), y.values().begin()));
    REQUIRE(y.jumps().size() == x.jumps().size());
    for (std::size_t k = 0; k < x.jumps().size(); ++k) CHECK(y.jumps()[k] == x.jumps()[k]);
  }
}

TEST_CASE("CSV reader rejects malformed input") {
  std::stringstream bad_header("time,value,jump\n0,0,0\n1,0,0\n");
  CHECK_THROWS_AS(read_path_csv(bad_header), FormatError);
  std::stringstream bad_number("t,value,jump\n0,0,0\n1,abc,0\n");
  CHECK_THROWS_AS(read_path_csv(bad_number), FormatError);
  std::stringstream uneven("t,value,jump\n0,0,0\n0.5,0,0\n1.5,0,0\n");
  CHECK_THROWS_AS(read_path_csv(uneven), FormatError);
  std::stringstream jump0("t,value,jump\n0,1,1\n1,1,0\n");
  CHECK_THROWS_AS(read_path_csv(jump0), FormatError);
}

TEST_CASE("coarsen keeps every factor-th node and merges jumps") {
  const TimeGrid g(1.0, 10);
  const CadlagPath x = CadlagPath::step(g, {{3, 1.0}, {4, 2.0}});
  const CadlagPath y = coarsen(x, 5);
  CHECK(y.grid() == TimeGrid(1.0, 2));
  CHECK(y.value(1) == 3.0);
  REQUIRE(y.jumps().size() == 1);
  CHECK(y.jumps()[0] == Jump{1, 3.0});
  CHECK_THROWS_AS(coarsen(x, 3), PreconditionError);
}

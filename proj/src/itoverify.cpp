#include "dreg/itoverify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

#include "dreg/errors.hpp"
#include "dreg/quadrature.hpp"

namespace dreg {

SpaceJet SpaceFunction::jet(double x) const {
  switch (kind) {
    case Kind::tanh: {
      const double th = std::tanh(x);
      const double s2 = 1.0 - th * th;
      return {th, s2, -2.0 * th * s2};
    }
    case Kind::sin: {
      const double s = std::sin(x);
      return {s, std::cos(x), -s};
    }
    case Kind::bump: {
      if (std::abs(x) >= 1.0) return {};
      const double q = 1.0 - x * x;
      return {q * q * q, -6.0 * x * q * q, -6.0 * q * q + 24.0 * x * x * q};
    }
    case Kind::custom:
      return custom(x);
  }
  return {};
}

double SpaceFunction::bound() const {
  return kind == Kind::custom ? custom_bound : 1.0;
}

std::string SpaceFunction::name() const {
  switch (kind) {
    case Kind::tanh: return "tanh";
    case Kind::sin: return "sin";
    case Kind::bump: return "bump";
    case Kind::custom: return "custom";
  }
  return "";
}

TestFunction::TestFunction(std::vector<SeparableTerm> terms, std::string name)
    : terms_(std::move(terms)), name_(std::move(name)) {
  for (const SeparableTerm& t : terms_) {
    if (!(t.rate >= 0.0)) throw PreconditionError("time factor rate must be >= 0");
    if (t.space.kind == SpaceFunction::Kind::custom && !t.space.custom) {
      throw PreconditionError("custom space function without an evaluator");
    }
  }
}

TestFunction TestFunction::exp_tanh() {
  return TestFunction({{1.0, 1.0, SpaceFunction::tanh()}}, "exptanh");
}

TestFunction TestFunction::damped_sine() {
  return TestFunction({{1.0, 1.0, SpaceFunction::sin()}}, "dampedsine");
}

TestFunction TestFunction::bump() {
  return TestFunction({{1.0, 0.0, SpaceFunction::bump()}}, "bump");
}

TestFunction TestFunction::time_homogeneous(const TestFunction& f) {
  std::vector<SeparableTerm> terms = f.terms_;
  for (SeparableTerm& t : terms) t.rate = 0.0;
  return TestFunction(std::move(terms), f.name_ + "@0");
}

TestFunction TestFunction::from_name(const std::string& name) {
  if (name == "exptanh") return exp_tanh();
  if (name == "dampedsine") return damped_sine();
  if (name == "bump") return bump();
  throw PreconditionError("unknown test function '" + name + "'");
}

Jet TestFunction::jet(double t, double x) const {
  Jet j;
  for (const SeparableTerm& term : terms_) {
    const double a = term.coeff * std::exp(-term.rate * t);
    const SpaceJet s = term.space.jet(x);
    j.F += a * s.f;
    j.Ft -= term.rate * a * s.f;
    j.Fx += a * s.fx;
    j.Fxx += a * s.fxx;
  }
  return j;
}

double TestFunction::bound() const {
  double b = 0.0;
  for (const SeparableTerm& t : terms_) b += std::abs(t.coeff) * t.space.bound();
  return b;
}

TestFunction operator+(const TestFunction& a, const TestFunction& b) {
  std::vector<SeparableTerm> terms = a.terms_;
  terms.insert(terms.end(), b.terms_.begin(), b.terms_.end());
  return TestFunction(std::move(terms), a.name_ + "+" + b.name_);
}

TestFunction operator*(double c, const TestFunction& f) {
  std::vector<SeparableTerm> terms = f.terms_;
  for (SeparableTerm& t : terms) t.coeff *= c;
  return TestFunction(std::move(terms), f.name_);
}

namespace {

// x -> sum_j rate_j (E g(x + J_j) - g(x)) for g = f and g = f'.
class CompensatorTable {
 public:
  CompensatorTable(const SpaceFunction& f, const std::vector<JumpComponent>& jumps,
                   double half_width, double spacing)
      : f_(f), jumps_(jumps), lo_(-half_width), h_(spacing) {
    const auto cells = static_cast<std::size_t>(std::ceil(2.0 * half_width / spacing));
    value_.resize(cells + 1);
    slope_.resize(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i) {
      const auto [v, d] = direct(lo_ + h_ * static_cast<double>(i));
      value_[i] = v;
      slope_[i] = d;
    }
  }

  double operator()(double x) const {
    const double s = (x - lo_) / h_;
    if (!(s >= 0.0) || s >= static_cast<double>(value_.size() - 1)) {
      return direct(x).first;
    }
    const auto k = static_cast<std::size_t>(s);
    const double u = s - static_cast<double>(k);
    const double u2 = u * u;
    const double u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * value_[k] + (u3 - 2 * u2 + u) * h_ * slope_[k] +
           (-2 * u3 + 3 * u2) * value_[k + 1] + (u3 - u2) * h_ * slope_[k + 1];
  }

  std::pair<double, double> direct(double x) const {
    const SpaceJet here = f_.jet(x);
    double v = 0.0;
    double d = 0.0;
    std::vector<double> cuts;
    if (f_.kind == SpaceFunction::Kind::bump) cuts = {-1.0 - x, 1.0 - x};
    for (const JumpComponent& j : jumps_) {
      const double ev = expectation(
          j.law, [&](double y) { return f_.jet(x + y).f; }, cuts);
      const double ed = expectation(
          j.law, [&](double y) { return f_.jet(x + y).fx; }, cuts);
      v += j.rate * (ev - here.f);
      d += j.rate * (ed - here.fx);
    }
    return {v, d};
  }

 private:
  SpaceFunction f_;
  std::vector<JumpComponent> jumps_;
  double lo_;
  double h_;
  std::vector<double> value_;
  std::vector<double> slope_;
};

struct TermData {
  double coeff;
  SpaceFunction space;
  std::vector<double> a;   // exp(-rate t_i)
  std::vector<double> ad;  // d/dt of the above
  std::optional<CompensatorTable> table;
};

struct AtomNode {
  std::size_t index;
  double time;
  std::vector<PointMass> masses;
  double delta_b;
};

}  // namespace

struct ResidualEngine::Impl {
  CharacteristicsModel model;
  TestFunction f;
  TimeGrid grid;
  ResidualKind kind;
  ResidualOptions options;
  std::vector<TermData> terms;
  std::vector<AtomNode> atoms;  // sorted by index
  double kappa = 0.0;           // sum_j rate_j E k(J_j)
  bool has_jumps = false;
  double dC = 0.0;
  std::vector<double> drift_increments;  // deterministic B^k, continuous part

  Impl(CharacteristicsModel m, TestFunction fn, TimeGrid g, ResidualKind k,
       ResidualOptions o)
      : model(std::move(m)), f(std::move(fn)), grid(g), kind(k), options(o) {
    if (kind == ResidualKind::semimartingale && !model.finite_variation_drift()) {
      throw PreconditionError(
          "semimartingale residual needs a finite-variation drift characteristic");
    }
    for (const JumpComponent& j : model.jumps) {
      if (j.rate == 0.0) continue;
      has_jumps = true;
      kappa += j.rate * expected_truncation(j.law, model.truncation);
    }
    for (const SeparableTerm& t : f.terms()) {
      TermData d{t.coeff, t.space, {}, {}, std::nullopt};
      d.a.resize(grid.nodes());
      d.ad.resize(grid.nodes());
      for (std::size_t i = 0; i < grid.nodes(); ++i) {
        d.a[i] = std::exp(-t.rate * grid.time(i));
        d.ad[i] = -t.rate * d.a[i];
      }
      if (has_jumps) {
        d.table.emplace(t.space, model.jumps, options.table_half_width,
                        options.table_spacing);
      }
      terms.push_back(std::move(d));
    }
    for (const FixedAtom& a : model.fixed_atoms) {
      const std::size_t i = grid.index_of(a.time);
      if (i == 0) throw PreconditionError("fixed atom at time 0");
      atoms.push_back({i, a.time, a.masses, delta_bk(model, model.truncation, a.time)});
    }
    std::sort(atoms.begin(), atoms.end(),
              [](const AtomNode& l, const AtomNode& r) { return l.index < r.index; });
    const double bracket =
        kind == ResidualKind::weak_dirichlet ? model.drift_bracket_rate : 0.0;
    dC = (model.diffusion_rate + bracket) * grid.dt();
    drift_increments.resize(grid.steps());
    double prev = model.deterministic_drift(0.0);
    for (std::size_t i = 0; i < grid.steps(); ++i) {
      const double next = model.deterministic_drift(grid.time(i + 1));
      drift_increments[i] = next - prev;
      prev = next;
    }
  }

  ResidualPath run(const CadlagPath& x, const ComponentLog* log,
                   const EpsilonSchedule* schedule) const {
    if (!(x.grid() == grid)) throw GridMismatchError("path grid differs from engine grid");
    const bool forward = kind == ResidualKind::weak_dirichlet && model.path_dependent_drift;
    std::optional<CadlagPath> bpath;
    if (forward) {
      if (log == nullptr) {
        throw MissingComponentLogError(
            "path-dependent drift needs the simulator's component log");
      }
      bpath.emplace(drift_path(model, grid, log));
    }

    const std::size_t nodes = grid.nodes();
    const std::size_t n = grid.steps();
    const double dt = grid.dt();
    const auto xv = x.values();
    const std::vector<double> dj = x.dense_jumps();

    ResidualPath out;
    ResidualTerms& T = out.terms;
    T.increment.assign(nodes, 0.0);
    T.time.assign(nodes, 0.0);
    T.second_order.assign(nodes, 0.0);
    T.drift.assign(nodes, 0.0);
    T.compensator.assign(nodes, 0.0);
    T.injected.assign(nodes, 0.0);
    std::vector<double> fx_path;
    if (forward) fx_path.resize(nodes);

    double F0 = 0.0;
    double acc_t = 0.0, acc_s = 0.0, acc_d = 0.0, acc_c = 0.0;
    std::size_t next_atom = 0;
    for (std::size_t i = 0; i < nodes; ++i) {
      const double xi = xv[i];
      const double xl = xi - dj[i];
      double F = 0.0, Ft = 0.0, Fx = 0.0, Fxx = 0.0, comp = 0.0;
      for (const TermData& d : terms) {
        const SpaceJet s = d.space.jet(xi);
        const double ca = d.coeff * d.a[i];
        F += ca * s.f;
        Ft += d.coeff * d.ad[i] * s.f;
        Fx += ca * s.fx;
        Fxx += ca * s.fxx;
        // on (t_i, t_{i+1}] the left limit X_{s-} is x_i
        if (has_jumps && i < n) comp += ca * ((*d.table)(xi) - kappa * s.fx);
      }
      if (i == 0) F0 = F;

      while (next_atom < atoms.size() && atoms[next_atom].index == i) {
        const AtomNode& a = atoms[next_atom++];
        const Jet left = f.jet(a.time, xl);
        for (const PointMass& p : a.masses) {
          acc_c -= p.weight * (f.jet(a.time, xl + p.x).F - left.F -
                               model.truncation(p.x) * left.Fx);
        }
        if (!forward) acc_d -= left.Fx * a.delta_b;
      }

      T.increment[i] = F - F0;
      T.time[i] = acc_t;
      T.second_order[i] = acc_s;
      T.drift[i] = acc_d;
      T.compensator[i] = acc_c;
      if (forward) fx_path[i] = Fx;
      if (i == n) break;

      acc_t -= Ft * dt;
      acc_s -= 0.5 * Fxx * dC;
      if (forward) {
        acc_d -= Fx * (bpath->value(i + 1) - bpath->value(i));
      } else {
        acc_d -= Fx * drift_increments[i];
      }
      acc_c -= comp * dt;
    }

    if (forward && schedule != nullptr) {
      const CovariationEstimate est = forward_integral_limit(fx_path, *bpath, *schedule);
      for (std::size_t i = 0; i < nodes; ++i) T.drift[i] = -est.limit[i];
      out.flagged = !est.converged;
      out.forward_error = est.error_estimate;
    }
    if (options.injected_drift != 0.0) {
      for (std::size_t i = 0; i < nodes; ++i) {
        T.injected[i] = options.injected_drift * grid.time(i);
      }
    }
    out.values.resize(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
      out.values[i] = T.increment[i] + T.time[i] + T.second_order[i] + T.drift[i] +
                      T.compensator[i] + T.injected[i];
    }
    return out;
  }
};

ResidualEngine::ResidualEngine(CharacteristicsModel model, TestFunction f,
                               TimeGrid grid, ResidualKind kind,
                               ResidualOptions options)
    : impl_(std::make_unique<Impl>(std::move(model), std::move(f), grid, kind,
                                   options)) {}
ResidualEngine::~ResidualEngine() = default;
ResidualEngine::ResidualEngine(ResidualEngine&&) noexcept = default;
ResidualEngine& ResidualEngine::operator=(ResidualEngine&&) noexcept = default;

ResidualPath ResidualEngine::operator()(const CadlagPath& x, const ComponentLog* log,
                                        const EpsilonSchedule* schedule) const {
  return impl_->run(x, log, schedule);
}

const CharacteristicsModel& ResidualEngine::model() const { return impl_->model; }
const TestFunction& ResidualEngine::function() const { return impl_->f; }
const TimeGrid& ResidualEngine::grid() const { return impl_->grid; }
ResidualKind ResidualEngine::kind() const { return impl_->kind; }

ResidualPath residual_weak_dirichlet(const SimulatedPath& x,
                                     const CharacteristicsModel& model,
                                     const TestFunction& f,
                                     const EpsilonSchedule& schedule,
                                     ResidualOptions options) {
  const ResidualEngine engine(model, f, x.path.grid(), ResidualKind::weak_dirichlet,
                              options);
  return engine(x.path, x.log ? &*x.log : nullptr, &schedule);
}

ResidualPath residual_weak_dirichlet(const SimulatedPath& x, const ModelSpec& model,
                                     const Truncation& k, const TestFunction& f,
                                     const EpsilonSchedule& schedule,
                                     ResidualOptions options) {
  return residual_weak_dirichlet(x, known_characteristics(model, k), f, schedule,
                                 options);
}

ResidualPath residual_semimartingale(const CadlagPath& x,
                                     const CharacteristicsModel& model,
                                     const TestFunction& f,
                                     ResidualOptions options) {
  const ResidualEngine engine(model, f, x.grid(), ResidualKind::semimartingale,
                              options);
  return engine(x);
}

ResidualPath residual_semimartingale(const CadlagPath& x, const ModelSpec& model,
                                     const Truncation& k, const TestFunction& f,
                                     ResidualOptions options) {
  if (!is_semimartingale(model)) {
    throw PreconditionError("semimartingale residual called on a model with an fBm part");
  }
  return residual_semimartingale(x, known_characteristics(model, k), f, options);
}

namespace {

std::vector<std::size_t> indices_of(const TimeGrid& grid, const std::vector<double>& ts) {
  std::vector<std::size_t> out;
  out.reserve(ts.size());
  for (double t : ts) out.push_back(grid.index_of(t));
  return out;
}

void fill_row(const ResidualPath& r, const CadlagPath& x,
              const std::vector<std::size_t>& ti, const std::vector<std::size_t>& pi,
              double* res, double* st) {
  for (std::size_t k = 0; k < ti.size(); ++k) res[k] = r.values[ti[k]];
  for (std::size_t k = 0; k < pi.size(); ++k) st[k] = x.value(pi[k]);
}

std::vector<ResidualSample> make_samples(std::size_t engines, std::size_t paths,
                                         const std::vector<double>& times,
                                         const std::vector<double>& probe_times) {
  std::vector<ResidualSample> out(engines);
  for (ResidualSample& s : out) {
    s.times = times;
    s.probe_times = probe_times;
    s.paths = paths;
    s.residuals.assign(paths * times.size(), 0.0);
    s.states.assign(paths * probe_times.size(), 0.0);
  }
  return out;
}

void sample_one(const PathSimulator& simulator,
                const std::vector<const ResidualEngine*>& engines,
                std::uint64_t master_seed, std::size_t p,
                const std::vector<std::size_t>& ti, const std::vector<std::size_t>& pi,
                std::vector<ResidualSample>& out) {
  const SimulatedPath sp = simulator(SeedSpec{master_seed, p});
  for (std::size_t e = 0; e < engines.size(); ++e) {
    const ResidualPath r = (*engines[e])(sp.path, sp.log ? &*sp.log : nullptr);
    fill_row(r, sp.path, ti, pi, out[e].residuals.data() + p * ti.size(),
             out[e].states.data() + p * pi.size());
  }
}

}  // namespace

std::vector<ResidualSample> sample_residual_ensemble(
    const PathSimulator& simulator, const std::vector<const ResidualEngine*>& engines,
    std::uint64_t master_seed, std::size_t paths, const std::vector<double>& times,
    const std::vector<double>& probe_times) {
  const auto ti = indices_of(simulator.grid(), times);
  const auto pi = indices_of(simulator.grid(), probe_times);
  std::vector<ResidualSample> out = make_samples(engines.size(), paths, times, probe_times);
  const auto count = static_cast<std::ptrdiff_t>(paths);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t p = 0; p < count; ++p) {
    sample_one(simulator, engines, master_seed, static_cast<std::size_t>(p), ti, pi, out);
  }
  return out;
}

namespace reference {

std::vector<ResidualSample> sample_residual_ensemble(
    const PathSimulator& simulator, const std::vector<const ResidualEngine*>& engines,
    std::uint64_t master_seed, std::size_t paths, const std::vector<double>& times,
    const std::vector<double>& probe_times) {
  const auto ti = indices_of(simulator.grid(), times);
  const auto pi = indices_of(simulator.grid(), probe_times);
  std::vector<ResidualSample> out = make_samples(engines.size(), paths, times, probe_times);
  for (std::size_t p = 0; p < paths; ++p) {
    sample_one(simulator, engines, master_seed, p, ti, pi, out);
  }
  return out;
}

}  // namespace reference

ResidualSample collect_sample(const std::vector<ResidualPath>& residuals,
                              const std::vector<CadlagPath>& paths,
                              const std::vector<double>& times,
                              const std::vector<double>& probe_times) {
  if (residuals.size() != paths.size()) {
    throw PreconditionError("one residual per path expected");
  }
  std::vector<ResidualSample> out = make_samples(1, paths.size(), times, probe_times);
  if (paths.empty()) return out.front();
  const auto ti = indices_of(paths.front().grid(), times);
  const auto pi = indices_of(paths.front().grid(), probe_times);
  for (std::size_t p = 0; p < paths.size(); ++p) {
    fill_row(residuals[p], paths[p], ti, pi,
             out[0].residuals.data() + p * ti.size(),
             out[0].states.data() + p * pi.size());
  }
  return out.front();
}

namespace {

struct Moments {
  double mean;
  double se;
};

// Serial two-pass moments in index order.
Moments moments(const std::vector<double>& y) {
  const auto n = static_cast<double>(y.size());
  double s = 0.0;
  for (double v : y) s += v;
  const double mean = s / n;
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

StatisticResult statistic(std::string g, std::vector<double> s, double t,
                          const std::vector<double>& y, double alpha) {
  const Moments m = moments(y);
  StatisticResult r{std::move(g), std::move(s), t, m.mean, m.se, 0.0, false};
  if (m.se > 0.0) {
    r.z = m.mean / m.se;
  } else {
    r.z = m.mean == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), m.mean);
  }
  r.pass = std::abs(r.z) <= alpha;
  return r;
}

std::size_t probe_index(const ResidualSample& sample, double s) {
  for (std::size_t k = 0; k < sample.probe_times.size(); ++k) {
    if (std::abs(sample.probe_times[k] - s) <= 1e-12 * std::max(1.0, std::abs(s))) return k;
  }
  throw PreconditionError("state at time " + format_double(s) + " was not recorded");
}

}  // namespace

std::vector<StatisticResult> MartingaleTestReport::statistics() const {
  std::vector<StatisticResult> out;
  for (std::size_t k = 0; k < times.size(); ++k) {
    out.push_back({"mean", {}, times[k], means[k], ses[k], zscores[k],
                   std::abs(zscores[k]) <= alpha});
  }
  out.insert(out.end(), orthogonality.begin(), orthogonality.end());
  return out;
}

MartingaleTestReport martingale_mean_test(const ResidualSample& sample, double alpha) {
  if (sample.paths < 100) throw PreconditionError("martingale test needs at least 100 paths");
  MartingaleTestReport r;
  r.times = sample.times;
  r.alpha = alpha;
  r.paths = sample.paths;
  const std::size_t N = sample.paths;
  std::vector<double> y(N);
  bool pass = true;
  for (std::size_t k = 0; k < sample.times.size(); ++k) {
    for (std::size_t p = 0; p < N; ++p) y[p] = sample.residual(p, k);
    const StatisticResult s = statistic("mean", {}, sample.times[k], y, alpha);
    r.means.push_back(s.value);
    r.ses.push_back(s.se);
    r.zscores.push_back(s.z);
    pass = pass && s.pass;
  }
  const std::size_t m = sample.times.size();
  for (std::size_t k = 1; k < m; ++k) {
    const double s = sample.times[k - 1];
    const double t = sample.times[k];
    const std::size_t ps = probe_index(sample, s);
    for (std::size_t p = 0; p < N; ++p) {
      y[p] = (sample.residual(p, k) - sample.residual(p, k - 1)) *
             std::tanh(sample.state(p, ps));
    }
    r.orthogonality.push_back(statistic("tanh", {s}, t, y, alpha));
    for (std::size_t p = 0; p < N; ++p) {
      y[p] = sample.residual(p, k) - sample.residual(p, k - 1);
    }
    r.orthogonality.push_back(statistic("one", {s}, t, y, alpha));
  }
  if (m >= 3) {
    const double s1 = sample.times[m - 3];
    const double s2 = sample.times[m - 2];
    const std::size_t p1 = probe_index(sample, s1);
    const std::size_t p2 = probe_index(sample, s2);
    for (std::size_t p = 0; p < N; ++p) {
      y[p] = (sample.residual(p, m - 1) - sample.residual(p, m - 2)) *
             std::sin(sample.state(p, p1)) * std::sin(sample.state(p, p2));
    }
    r.orthogonality.push_back(statistic("sinsin", {s1, s2}, sample.times[m - 1], y, alpha));
  }
  for (const StatisticResult& s : r.orthogonality) pass = pass && s.pass;
  r.pass = pass;
  return r;
}

nlohmann::json report_json(const MartingaleTestReport& r) {
  nlohmann::json orth = nlohmann::json::array();
  for (const StatisticResult& s : r.orthogonality) {
    orth.push_back({{"g", s.g}, {"s", s.s}, {"t", s.t}, {"value", s.value},
                    {"se", s.se}, {"z", s.z}, {"pass", s.pass}});
  }
  return {
      {"times", r.times},       {"means", r.means},
      {"ses", r.ses},           {"zscores", r.zscores},
      {"orthogonality", orth},  {"alpha", r.alpha},
      {"paths", r.paths},       {"quadrature_nodes", kLawQuadratureNodes},
      {"pass", r.pass},
  };
}

OrthogonalityProbeReport forward_bk_orthogonality_probe(
    const SimulatedPath& x, const CharacteristicsModel& model, const TestFunction& f,
    const CadlagPath& probe, const EpsilonSchedule& schedule, double tolerance) {
  const TimeGrid& grid = x.path.grid();
  const CadlagPath b = drift_path(model, grid, x.log ? &*x.log : nullptr);
  std::vector<double> fx(grid.nodes());
  for (std::size_t i = 0; i < fx.size(); ++i) fx[i] = f.jet(grid.time(i), x.path.value(i)).Fx;
  const CovariationEstimate integral = forward_integral_limit(fx, b, schedule);
  const CadlagPath ipath(grid, integral.limit);
  const CovariationEstimate cov = covariation_limit(ipath, probe, schedule);
  OrthogonalityProbeReport r;
  r.covariation = cov.limit;
  r.sup = sup_norm(cov.limit);
  r.error_estimate = cov.error_estimate + integral.error_estimate;
  r.converged = cov.converged && integral.converged;
  r.tolerance = tolerance;
  r.pass = r.sup <= tolerance;
  return r;
}

}  // namespace dreg

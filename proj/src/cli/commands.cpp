#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "dreg/characteristics.hpp"
#include "dreg/cli.hpp"
#include "dreg/errors.hpp"
#include "dreg/itoverify.hpp"
#include "dreg/levyexponent.hpp"
#include "dreg/regularize.hpp"
#include "dreg/simulate.hpp"

namespace dreg::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Context {
  const json& cfg;
  fs::path out;
  CommandResult result;

  std::ofstream open(const fs::path& rel) {
    const fs::path full = out / rel;
    fs::create_directories(full.parent_path());
    std::ofstream f(full, std::ios::binary);
    if (!f) throw Error("cannot write " + full.string());
    result.outputs.push_back(rel);
    return f;
  }

  void write_json(const fs::path& rel, const json& j) {
    std::ofstream f = open(rel);
    f << j.dump(2) << '\n';
  }

  TimeGrid grid() const {
    return TimeGrid(cfg["grid"]["horizon"].get<double>(),
                    cfg["grid"]["steps"].get<std::size_t>());
  }
  ModelSpec model() const { return parse_model(cfg["model"]); }
  std::uint64_t seed() const { return cfg["seed"].get<std::uint64_t>(); }
  std::size_t paths() const { return cfg["paths"].get<std::size_t>(); }
  Truncation truncation() const {
    return Truncation::from_name(cfg["truncation"].get<std::string>());
  }
  EpsilonSchedule schedule(const TimeGrid& g) const {
    return EpsilonSchedule(g, cfg["epsilon_multiples"].get<std::vector<std::size_t>>());
  }
  bool has_input(const char* key) const { return cfg["input"].contains(key); }
  CadlagPath read_input(const char* key) {
    const fs::path p = cfg["input"][key].get<std::string>();
    result.inputs.push_back(p);
    return read_path_csv(p.string());
  }
  CadlagPath primary_path() {
    if (has_input("path_csv")) return read_input("path_csv");
    return simulate_path(model(), grid(), SeedSpec{seed(), 0}).path;
  }
};

void cmd_simulate(Context& c) {
  const TimeGrid g = c.grid();
  const std::size_t n = c.paths();
  const std::vector<CadlagPath> paths = simulate_ensemble(c.model(), g, c.seed(), n);
  double mean = 0.0;
  for (const CadlagPath& p : paths) mean += p.values().back();
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (const CadlagPath& p : paths) var += (p.values().back() - mean) * (p.values().back() - mean);
  var = n > 1 ? var / static_cast<double>(n - 1) : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "path_%06zu.csv", i);
    std::ofstream f = c.open(fs::path("paths") / name);
    write_path_csv(f, paths[i]);
  }
  c.result.verdict = {{"paths", n},
                      {"model", describe(c.model())},
                      {"terminal_mean", mean},
                      {"terminal_variance", var}};
  c.write_json("simulate.json", c.result.verdict);
}

void cmd_qv(Context& c) {
  const CadlagPath x = c.primary_path();
  const CadlagPath y = c.has_input("second_csv") ? c.read_input("second_csv") : x;
  const EpsilonSchedule sched = c.schedule(x.grid());
  const CrossDecomposition d = cross_decompose(x, y, sched);
  {
    std::ofstream f = c.open("qv.csv");
    write_estimate_csv(f, x.grid(), d.estimate);
  }
  json summary = estimate_summary(d.estimate);
  summary["jump_part_at_T"] = d.jump.back();
  summary["continuous_part_at_T"] = d.continuous.back();
  c.write_json("qv.json", summary);
  c.result.verdict = summary;
  c.result.exit_code = d.estimate.converged ? kPass : kNonConvergence;
}

void cmd_fwdint(Context& c) {
  const CadlagPath x = c.primary_path();
  const CadlagPath y = c.has_input("integrand_csv") ? c.read_input("integrand_csv") : x;
  const EpsilonSchedule sched = c.schedule(x.grid());
  const CovariationEstimate est = forward_integral_limit(y, x, sched);
  {
    std::ofstream f = c.open("fwdint.csv");
    write_estimate_csv(f, x.grid(), est);
  }
  const json summary = estimate_summary(est);
  c.write_json("fwdint.json", summary);
  c.result.verdict = summary;
  c.result.exit_code = est.converged ? kPass : kNonConvergence;
}

void cmd_residual(Context& c) {
  const TimeGrid g = c.grid();
  const ModelSpec model = c.model();
  const json& rc = c.cfg["residual"];
  const ResidualKind kind = rc["kind"] == "semimartingale" ? ResidualKind::semimartingale
                                                           : ResidualKind::weak_dirichlet;
  if (kind == ResidualKind::semimartingale && !is_semimartingale(model)) {
    throw PreconditionError("semimartingale residual requested for a model with an fBm part");
  }
  ResidualOptions opt;
  opt.injected_drift = rc["inject_drift"].get<double>();
  const TestFunction f = TestFunction::from_name(c.cfg["test_function"].get<std::string>());
  const ResidualEngine engine(known_characteristics(model, c.truncation()), f, g, kind, opt);
  const PathSimulator sim(model, g);
  const std::vector<double> times = rc["times"].get<std::vector<double>>();
  const std::vector<double> probes(times.begin(), times.end() - 1);
  const auto samples =
      sample_residual_ensemble(sim, {&engine}, c.seed(), c.paths(), times, probes);
  const MartingaleTestReport rep =
      martingale_mean_test(samples.front(), c.cfg["alpha_se"].get<double>());
  json j = report_json(rep);
  j["function"] = f.name();
  j["kind"] = rc["kind"];
  j["model"] = describe(model);
  c.write_json("residual.json", j);
  c.result.verdict = {{"pass", rep.pass}, {"zscores", rep.zscores}};
  c.result.exit_code = rep.pass ? kPass : kStatisticalFailure;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void cmd_decompose(Context& c) {
  const TimeGrid g = c.grid();
  const ModelSpec model = c.model();
  const CharacteristicsModel ch = known_characteristics(model, c.truncation());
  const EpsilonSchedule sched = c.schedule(g);
  const double tol = c.cfg["decompose"]["tolerance"].get<double>();
  const std::size_t n = c.paths();
  const PathSimulator sim(model, g);

  std::vector<double> recon(n), bracket(n), corollary(n);
  std::vector<int> unconverged(n, 0);
  json per_path = json::array();
  for (std::size_t p = 0; p < n; ++p) per_path.push_back(nullptr);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t pp = 0; pp < count; ++pp) {
    const auto p = static_cast<std::size_t>(pp);
    const SimulatedPath sp = sim(SeedSpec{c.seed(), p});
    const Decomposition d = decompose(sp, ch);
    const IdentityReport b = bk_bracket_check(sp.path, d, ch, sched, tol);
    const IdentityReport k = verify_corollary(sp.path, d, sched, tol);
    recon[p] = d.reconstruction_error(sp.path);
    bracket[p] = b.distance;
    corollary[p] = k.distance;
    unconverged[p] = !(b.converged && k.converged);
    per_path[p] = {{"reconstruction_error", recon[p]},
                   {"bk_bracket", report_json(b)},
                   {"corollary", report_json(k)}};
  }
  {
    const SimulatedPath sp = sim(SeedSpec{c.seed(), 0});
    std::ofstream f = c.open("decomposition.csv");
    write_decomposition_csv(f, sp.path, decompose(sp, ch));
  }
  const double mb = median(bracket);
  const double mc = median(corollary);
  std::size_t bad = 0;
  for (int u : unconverged) bad += static_cast<std::size_t>(u);
  const bool pass = mb <= tol && mc <= tol &&
                    *std::max_element(recon.begin(), recon.end()) <= 1e-10;
  json j = {{"paths", n},
            {"tolerance", tol},
            {"max_reconstruction_error", *std::max_element(recon.begin(), recon.end())},
            {"median_bk_bracket_distance", mb},
            {"median_corollary_distance", mc},
            {"unconverged_paths", bad},
            {"pass", pass},
            {"per_path", per_path}};
  c.write_json("decompose.json", j);
  j.erase("per_path");
  c.result.verdict = j;
  if (2 * bad > n) {
    c.result.exit_code = kNonConvergence;
  } else {
    c.result.exit_code = pass ? kPass : kStatisticalFailure;
  }
}

bool close_to(double got, double want, double rel) {
  return want == 0.0 ? std::abs(got) <= rel : std::abs(got - want) <= rel * std::abs(want);
}

void cmd_recover(Context& c) {
  const json& rc = c.cfg["recover"];
  if (!rc.contains("psi_csv")) throw ConfigError("recover needs recover.psi_csv");
  const fs::path in = rc["psi_csv"].get<std::string>();
  c.result.inputs.push_back(in);
  const ExponentGrid psi = read_exponent_csv(in.string());
  RecoveryOptions opt;
  opt.x_min = rc["x_min"].get<double>();
  opt.x_max = rc["x_max"].get<double>();
  opt.cells = rc["cells"].get<std::size_t>();
  const RecoveredTriplet r = recover_triplet(psi, rc["w"].get<double>(), c.truncation(), opt);
  json j = recovered_json(r);
  c.result.verdict = {{"b", r.b}, {"c", r.c}, {"residual", r.residual}};
  if (rc.contains("expected")) {
    const json& e = rc["expected"];
    const double tol = e["relative_tolerance"].get<double>();
    const bool match = close_to(r.b, e["b"].get<double>(), tol) &&
                       close_to(r.c, e["c"].get<double>(), tol);
    j["expected"] = e;
    j["match"] = match;
    c.result.verdict["match"] = match;
    c.result.exit_code = match ? kPass : kStatisticalFailure;
  }
  c.write_json("recovered.json", j);
}

void cmd_exponent(Context& c) {
  if (!c.cfg.contains("exponent")) throw ConfigError("exponent needs an 'exponent' section");
  const json& e = c.cfg["exponent"];
  const Triplet1D t = parse_triplet(e["triplet"]);
  const ExponentGrid g =
      sample_exponent(t, e["u_max"].get<double>(), e["points"].get<std::size_t>());
  std::ofstream f = c.open("psi.csv");
  write_exponent_csv(f, g);
  c.result.verdict = {{"points", g.u.size()}, {"u_max", g.u_max()}};
}

void cmd_sweep(Context& c) {
  const auto steps_list = c.cfg["sweep"]["steps_list"].get<std::vector<std::size_t>>();
  const auto times = c.cfg["sweep"]["times"].get<std::vector<double>>();
  const double horizon = c.cfg["grid"]["horizon"].get<double>();
  const TimeGrid fine(horizon, steps_list.back());
  const CadlagPath x = c.has_input("path_csv")
                           ? c.read_input("path_csv")
                           : simulate_path(c.model(), fine, SeedSpec{c.seed(), 0}).path;
  if (!(x.grid() == fine)) throw ConfigError("sweep input path must use the finest grid");
  std::ofstream f = c.open("sweep.csv");
  f << "quantity,steps,dt,eps,t,value\n";
  json grids = json::array();
  bool finest_converged = true;
  for (std::size_t s : steps_list) {
    const CadlagPath xs = coarsen(x, fine.steps() / s);
    const TimeGrid& g = xs.grid();
    const EpsilonSchedule sched = EpsilonSchedule::standard(g);
    const CovariationEstimate qv = covariation_limit(xs, xs, sched);
    const CovariationEstimate fi = forward_integral_limit(xs, xs, sched);
    for (const auto& [name, est] : {std::pair{"qv", &qv}, std::pair{"fwdint", &fi}}) {
      for (std::size_t k = 0; k <= est->trajectories.size(); ++k) {
        const bool lim = k == est->trajectories.size();
        const Trajectory& tr = lim ? est->limit : est->trajectories[k];
        const double eps = lim ? 0.0 : est->epsilons[k];
        for (double t : times) {
          f << name << ',' << s << ',' << format_double(g.dt()) << ','
            << format_double(eps) << ',' << format_double(t) << ','
            << format_double(tr[g.index_of(t)]) << '\n';
        }
      }
    }
    grids.push_back({{"steps", s},
                     {"qv", estimate_summary(qv)},
                     {"fwdint", estimate_summary(fi)}});
    if (s == steps_list.back()) finest_converged = qv.converged && fi.converged;
  }
  f.close();
  c.result.verdict = {{"grids", grids}, {"finest_converged", finest_converged}};
  c.write_json("sweep.json", c.result.verdict);
  c.result.exit_code = finest_converged ? kPass : kNonConvergence;
}

}  // namespace

CommandResult run_command(const std::string& command, const json& config,
                          const fs::path& out_dir) {
  Context c{config, out_dir, {}};
  fs::create_directories(out_dir);
  if (command == "simulate") cmd_simulate(c);
  else if (command == "qv") cmd_qv(c);
  else if (command == "fwdint") cmd_fwdint(c);
  else if (command == "residual") cmd_residual(c);
  else if (command == "decompose") cmd_decompose(c);
  else if (command == "recover") cmd_recover(c);
  else if (command == "exponent") cmd_exponent(c);
  else if (command == "sweep") cmd_sweep(c);
  else throw ConfigError("unknown command '" + command + "'");
  return c.result;
}

}  // namespace dreg::cli

#include <algorithm>
#include <cstdlib>

#include "dreg/cli.hpp"
#include "dreg/errors.hpp"
#include "dreg/regularize.hpp"
#include "overloaded.hpp"

namespace dreg::cli {

using nlohmann::json;
using detail::overloaded;

const char* version() { return DREG_VERSION; }

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {
      "simulate", "qv", "fwdint", "residual", "decompose",
      "recover", "exponent", "sweep", "replay"};
  return c;
}

JumpLaw parse_jump_law(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "atoms") {
    return DiscreteAtoms{j.at("values").get<std::vector<double>>(),
                         j.at("probabilities").get<std::vector<double>>()};
  }
  if (type == "gaussian") return GaussianLaw{j.value("mean", 0.0), j.at("sd").get<double>()};
  if (type == "uniform") return UniformLaw{j.at("a").get<double>(), j.at("b").get<double>()};
  throw ConfigError("unknown jump law '" + type + "'");
}

json jump_law_json(const JumpLaw& law) {
  return std::visit(
      overloaded{
          [](const DiscreteAtoms& a) -> json {
            return {{"type", "atoms"}, {"values", a.values},
                    {"probabilities", a.probabilities}};
          },
          [](const GaussianLaw& g) -> json {
            return {{"type", "gaussian"}, {"mean", g.mean}, {"sd", g.sd}};
          },
          [](const UniformLaw& u) -> json {
            return {{"type", "uniform"}, {"a", u.a}, {"b", u.b}};
          },
      },
      law);
}

namespace {

DriftFunction parse_drift_function(const json& j) {
  if (j.at("kind") == "sine") {
    return DriftFunction::sine(j.at("amplitude").get<double>(),
                               j.at("frequency").get<double>());
  }
  return DriftFunction::linear(j.value("slope", 1.0), j.value("intercept", 0.0));
}

json drift_function_json(const DriftFunction& f) {
  if (f.kind == DriftFunction::Kind::sine) {
    return {{"kind", "sine"}, {"amplitude", f.a}, {"frequency", f.b}};
  }
  return {{"kind", "linear"}, {"slope", f.a}, {"intercept", f.b}};
}

}  // namespace

ModelSpec parse_model(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "brownian") return {BrownianMotion{j.value("sigma", 1.0)}};
  if (type == "fbm") return {FractionalBM{j.at("hurst").get<double>(), j.value("scale", 1.0)}};
  if (type == "compound_poisson") {
    return {CompoundPoisson{j.at("rate").get<double>(), parse_jump_law(j.at("jump_law"))}};
  }
  if (type == "levy_jump_diffusion") {
    return {LevyJumpDiffusion{
        j.at("drift").get<double>(), j.at("sigma").get<double>(),
        j.at("rate").get<double>(), parse_jump_law(j.at("jump_law")),
        Truncation::from_name(j.value("drift_truncation", std::string("standard")))}};
  }
  if (type == "deterministic_drift") {
    return {DeterministicDrift{j.contains("function")
                                   ? parse_drift_function(j["function"])
                                   : DriftFunction::identity()}};
  }
  if (type == "composite") {
    Composite c;
    for (const json& e : j.at("components")) c.components.push_back(parse_model(e));
    return {c};
  }
  throw ConfigError("unknown model type '" + type + "'");
}

json model_json(const ModelSpec& m) {
  return std::visit(
      overloaded{
          [](const BrownianMotion& b) -> json {
            return {{"type", "brownian"}, {"sigma", b.sigma}};
          },
          [](const FractionalBM& f) -> json {
            return {{"type", "fbm"}, {"hurst", f.hurst}, {"scale", f.scale}};
          },
          [](const CompoundPoisson& c) -> json {
            return {{"type", "compound_poisson"}, {"rate", c.rate},
                    {"jump_law", jump_law_json(c.law)}};
          },
          [](const LevyJumpDiffusion& l) -> json {
            return {{"type", "levy_jump_diffusion"}, {"drift", l.drift},
                    {"sigma", l.sigma}, {"rate", l.rate},
                    {"jump_law", jump_law_json(l.law)},
                    {"drift_truncation", l.drift_truncation.name()}};
          },
          [](const DeterministicDrift& d) -> json {
            return {{"type", "deterministic_drift"},
                    {"function", drift_function_json(d.f)}};
          },
          [](const Composite& c) -> json {
            json comps = json::array();
            for (const ModelSpec& e : c.components) comps.push_back(model_json(e));
            return {{"type", "composite"}, {"components", comps}};
          },
      },
      m.kind);
}

Triplet1D parse_triplet(const json& j) {
  Triplet1D t;
  t.b = j.value("b", 0.0);
  t.c = j.value("c", 0.0);
  t.k = Truncation::from_name(j.value("truncation", std::string("standard")));
  for (const json& a : j.value("atoms", json::array())) {
    t.lambda.atoms.push_back({a.at(0).get<double>(), a.at(1).get<double>()});
  }
  for (const json& g : j.value("gaussian_densities", json::array())) {
    t.lambda.densities.push_back(SignedMeasure::gaussian_density(
        g.at("weight").get<double>(), g.value("mean", 0.0), g.at("sd").get<double>()));
  }
  validate(t);
  return t;
}

namespace {

json resolved_triplet(const json& j) {
  json out = {{"b", j.value("b", 0.0)},
              {"c", j.value("c", 0.0)},
              {"truncation", j.value("truncation", std::string("standard"))},
              {"atoms", j.value("atoms", json::array())},
              {"gaussian_densities", json::array()}};
  for (const json& g : j.value("gaussian_densities", json::array())) {
    out["gaussian_densities"].push_back(
        {{"weight", g.at("weight")}, {"mean", g.value("mean", 0.0)}, {"sd", g.at("sd")}});
  }
  return out;
}

std::string absolute(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal().string();
}

std::size_t default_paths(const std::string& command) {
  if (command == "residual") return 10000;
  return 1;
}

}  // namespace

json resolve_config(const std::string& command, json raw, const Overrides& o,
                    const std::filesystem::path& base_dir) {
  if (!raw.is_object()) throw ConfigError("config must be a JSON object");
  const auto violations = schema_violations(raw, config_schema());
  if (!violations.empty()) {
    std::string msg = "config does not match the schema:";
    for (const std::string& v : violations) msg += "\n  " + v;
    throw ConfigError(msg);
  }

  json r = json::object();
  try {
    const ModelSpec model =
        parse_model(raw.value("model", json{{"type", "brownian"}, {"sigma", 1.0}}));
    validate(model);
    r["model"] = model_json(model);
  } catch (const Error& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }

  json input = json::object();
  const json raw_input = raw.value("input", json::object());
  for (const auto& [key, val] : raw_input.items()) {
    input[key] = absolute(base_dir, val.get<std::string>());
  }
  r["input"] = input;

  const json grid = raw.value("grid", json::object());
  double horizon = o.horizon.value_or(grid.value("horizon", 1.0));
  std::size_t steps = o.steps.value_or(grid.value("steps", std::size_t{10000}));
  if (input.contains("path_csv") && (command == "qv" || command == "fwdint")) {
    // The data fixes the grid.
    try {
      const CadlagPath x = read_path_csv(input["path_csv"].get<std::string>());
      horizon = x.grid().horizon();
      steps = x.grid().steps();
    } catch (const Error& e) {
      throw ConfigError(std::string("input.path_csv: ") + e.what());
    }
  }
  if (!(horizon > 0.0) || steps < 2) throw ConfigError("grid: need horizon > 0 and steps >= 2");
  r["grid"] = {{"horizon", horizon}, {"steps", steps}};
  const TimeGrid tg(horizon, steps);

  r["seed"] = o.seed.value_or(raw.value("seed", std::uint64_t{1}));
  r["paths"] = o.paths.value_or(raw.value("paths", default_paths(command)));
  if (r["paths"].get<std::size_t>() < 1) throw ConfigError("paths must be >= 1");

  std::vector<std::size_t> multiples;
  if (raw.contains("epsilon_multiples")) {
    multiples = raw["epsilon_multiples"].get<std::vector<std::size_t>>();
  } else if (command != "sweep") {
    multiples = EpsilonSchedule::standard(tg).multiples();
  }
  if (!multiples.empty()) {
    try {
      (void)EpsilonSchedule(tg, multiples);
    } catch (const Error& e) {
      throw ConfigError(std::string("epsilon_multiples: ") + e.what());
    }
  }
  r["epsilon_multiples"] = multiples;

  r["truncation"] = raw.value("truncation", std::string("standard"));
  r["test_function"] = o.function.value_or(raw.value("test_function", std::string("exptanh")));
  if (r["test_function"] != "exptanh" && r["test_function"] != "dampedsine" &&
      r["test_function"] != "bump") {
    throw ConfigError("test_function must be exptanh, dampedsine or bump");
  }
  r["alpha_se"] = o.alpha_se.value_or(raw.value("alpha_se", 3.0));
  if (!(r["alpha_se"].get<double>() > 0.0)) throw ConfigError("alpha_se must be > 0");

  std::string out_dir;
  if (o.out) {
    out_dir = *o.out;
  } else if (raw.contains("output_dir")) {
    out_dir = absolute(base_dir, raw["output_dir"].get<std::string>());
  } else if (const char* env = std::getenv(kOutputEnv); env && *env) {
    out_dir = env;
  } else {
    out_dir = "dreg-out";
  }
  r["output_dir"] = std::filesystem::absolute(out_dir).lexically_normal().string();

  const json res = raw.value("residual", json::object());
  std::vector<double> times = res.contains("times")
                                  ? res["times"].get<std::vector<double>>()
                                  : std::vector<double>{0.25 * horizon, 0.5 * horizon, horizon};
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] > horizon || (i > 0 && !(times[i] > times[i - 1]))) {
      throw ConfigError("residual.times must increase within (0, horizon]");
    }
    try {
      (void)tg.index_of(times[i]);
    } catch (const Error& e) {
      throw ConfigError(std::string("residual.times: ") + e.what());
    }
  }
  r["residual"] = {{"times", times},
                   {"kind", res.value("kind", std::string("weak_dirichlet"))},
                   {"inject_drift", res.value("inject_drift", 0.0)}};

  r["decompose"] = {
      {"tolerance", raw.value("decompose", json::object()).value("tolerance", 0.05)}};

  const json rec = raw.value("recover", json::object());
  json recover = {{"w", rec.value("w", 2.0)},
                  {"x_min", rec.value("x_min", -4.0)},
                  {"x_max", rec.value("x_max", 4.0)},
                  {"cells", rec.value("cells", std::size_t{1024})}};
  if (rec.contains("psi_csv")) recover["psi_csv"] = absolute(base_dir, rec["psi_csv"]);
  if (rec.contains("expected")) {
    recover["expected"] = {{"b", rec["expected"]["b"]},
                           {"c", rec["expected"]["c"]},
                           {"relative_tolerance",
                            rec["expected"].value("relative_tolerance", 0.05)}};
  }
  if (!(recover["x_max"].get<double>() > recover["x_min"].get<double>())) {
    throw ConfigError("recover: x_max must exceed x_min");
  }
  r["recover"] = recover;

  if (raw.contains("exponent")) {
    const json& e = raw["exponent"];
    r["exponent"] = {{"triplet", resolved_triplet(e["triplet"])},
                     {"u_max", e.value("u_max", 40.0)},
                     {"points", e.value("points", std::size_t{2048})}};
    try {
      (void)parse_triplet(r["exponent"]["triplet"]);
    } catch (const Error& err) {
      throw ConfigError(std::string("exponent.triplet: ") + err.what());
    }
  }

  const json sw = raw.value("sweep", json::object());
  std::vector<std::size_t> steps_list =
      sw.contains("steps_list") ? sw["steps_list"].get<std::vector<std::size_t>>()
                                : std::vector<std::size_t>{steps};
  if (!sw.contains("steps_list") && steps % 10 == 0 && steps / 10 >= 2) {
    steps_list.insert(steps_list.begin(), steps / 10);
  }
  std::sort(steps_list.begin(), steps_list.end());
  steps_list.erase(std::unique(steps_list.begin(), steps_list.end()), steps_list.end());
  for (std::size_t s : steps_list) {
    if (s < 2 || steps_list.back() % s != 0) {
      throw ConfigError("sweep.steps_list entries must divide the finest step count");
    }
  }
  r["sweep"] = {{"steps_list", steps_list},
                {"times", sw.contains("times")
                              ? sw["times"].get<std::vector<double>>()
                              : std::vector<double>{0.25 * horizon, 0.5 * horizon,
                                                    0.75 * horizon, horizon}}};
  return r;
}

}  // namespace dreg::cli

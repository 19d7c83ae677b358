#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "dreg/cli.hpp"
#include "dreg/paths.hpp"

using namespace dreg;
using namespace dreg::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dreg_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const json& j) {
  const fs::path f = dir / "config.json";
  std::ofstream(f) << j.dump();
  return f;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

int run(const std::string& command, const fs::path& config, const fs::path& out,
        std::optional<int> threads = std::nullopt) {
  Invocation inv;
  inv.command = command;
  inv.config_path = config.string();
  inv.overrides.out = out.string();
  inv.threads = threads;
  return execute(inv);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("schema accepts the documented shapes and rejects the rest") {
  const json& s = config_schema();
  CHECK(schema_violations(json::object(), s).empty());
  CHECK(schema_violations(json{{"model", {{"type", "brownian"}}}, {"grid", {{"steps", 100}}}}, s).empty());
  CHECK(schema_violations(json{{"model", {{"type", "composite"},
                                          {"components", {{{"type", "fbm"}, {"hurst", 0.7}}}}}}},
                          s)
            .empty());

  CHECK_FALSE(schema_violations(json{{"bogus", 1}}, s).empty());
  CHECK_FALSE(schema_violations(json{{"grid", {{"steps", 1}}}}, s).empty());
  CHECK_FALSE(schema_violations(json{{"grid", {{"horizon", 0}}}}, s).empty());
  CHECK_FALSE(schema_violations(json{{"model", {{"type", "fbm"}, {"hurst", 0.4}}}}, s).empty());
  CHECK_FALSE(schema_violations(json{{"test_function", "quartic"}}, s).empty());
  CHECK_FALSE(schema_violations(json{{"epsilon_multiples", json::array()}}, s).empty());
  const auto v = schema_violations(json{{"model", {{"type", "bogus"}}}}, s);
  REQUIRE_FALSE(v.empty());
  CHECK(v[0].find("bogus") != std::string::npos);
}

TEST_CASE("resolve_config fills every default explicitly") {
  const json r = resolve_config("residual", json::object(), {}, fs::current_path());
  for (const char* key : {"model", "grid", "seed", "paths", "epsilon_multiples", "truncation",
                          "test_function", "alpha_se", "output_dir", "residual"}) {
    CHECK(r.contains(key));
  }
  CHECK(r["grid"]["steps"] == 10000);
  CHECK(r["paths"] == 10000);
  CHECK(r["test_function"] == "exptanh");
  CHECK(r["alpha_se"] == 3.0);
  CHECK(r["epsilon_multiples"] == json({32, 16, 8, 4, 2, 1}));
  // resolving the resolved config is a fixed point
  json again = r;
  CHECK(resolve_config("residual", again, {}, fs::current_path()) == r);
}

TEST_CASE("overrides win over the file") {
  Overrides o;
  o.seed = 42;
  o.paths = 7;
  o.out = "somewhere";
  o.function = "bump";
  const json r = resolve_config("residual", json{{"seed", 1}, {"paths", 100}}, o, fs::current_path());
  CHECK(r["seed"] == 42);
  CHECK(r["paths"] == 7);
  CHECK(r["output_dir"] == (fs::current_path() / "somewhere").string());
  CHECK(r["test_function"] == "bump");
}

TEST_CASE("output directory falls back to the environment variable") {
  ::setenv(kOutputEnv, "/tmp/dreg_env_out", 1);
  CHECK(resolve_config("qv", json::object(), {}, fs::current_path())["output_dir"] ==
        "/tmp/dreg_env_out");
  ::unsetenv(kOutputEnv);
  CHECK(resolve_config("qv", json::object(), {}, fs::current_path())["output_dir"] ==
        (fs::current_path() / "dreg-out").string());
}

TEST_CASE("model JSON round trip") {
  const json m = {{"type", "composite"},
                  {"components",
                   {{{"type", "brownian"}, {"sigma", 0.5}},
                    {{"type", "levy_jump_diffusion"},
                     {"drift", 0.1},
                     {"sigma", 1.0},
                     {"rate", 2.0},
                     {"jump_law", {{"type", "uniform"}, {"a", -1.0}, {"b", 2.0}}},
                     {"drift_truncation", "smooth_clip"}}}}};
  const ModelSpec spec = parse_model(m);
  CHECK(model_json(parse_model(model_json(spec))) == model_json(spec));
}

TEST_CASE("exit codes") {
  const fs::path d = scratch("exit");
  SUBCASE("config error is 2") {
    CHECK(run("simulate", write_config(d, {{"grid", {{"steps", 1}}}}), d / "o") == kConfigError);
    CHECK(run("simulate", write_config(d, {{"model", {{"type", "bogus"}}}}), d / "o") == kConfigError);
    CHECK(run("simulate", d / "missing.json", d / "o") == kConfigError);
    Invocation inv;
    inv.command = "launch";
    CHECK(execute(inv) == kConfigError);
  }
  SUBCASE("deterministic drift simulation writes f(t_i)") {
    const fs::path cfg = write_config(
        d, {{"model", {{"type", "deterministic_drift"},
                       {"function", {{"kind", "sine"}, {"amplitude", 0.5}, {"frequency", 3.0}}}}},
            {"grid", {{"steps", 100}}}});
    REQUIRE(run("simulate", cfg, d / "o") == kPass);
    const CadlagPath p = read_path_csv((d / "o" / "paths" / "path_000000.csv").string());
    for (std::size_t i = 0; i < p.grid().nodes(); ++i) {
      CHECK(p.value(i) == doctest::Approx(0.5 * std::sin(3.0 * p.grid().time(i))).epsilon(1e-15));
    }
    const json m = read_json(d / "o" / "run_manifest.json");
    CHECK(m["exit_code"] == 0);
    CHECK(m["config"]["paths"] == 1);
    CHECK(m["outputs"].contains("paths/path_000000.csv"));
  }
  SUBCASE("BM with 100 paths: 100 files, terminal variance within 30%") {
    const fs::path cfg = write_config(d, {{"grid", {{"steps", 1000}}}, {"paths", 100}});
    REQUIRE(run("simulate", cfg, d / "o") == kPass);
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(d / "o" / "paths")) ++files;
    CHECK(files == 100);
    const json m = read_json(d / "o" / "run_manifest.json");
    CHECK(m["verdict"]["terminal_variance"].get<double>() == doctest::Approx(1.0).epsilon(0.3));
  }
  SUBCASE("a Heaviside path has limit 1 and exits 0") {
    const fs::path csv = d / "h.csv";
    {
      std::ofstream f(csv);
      const TimeGrid g(1.0, 100);
      write_path_csv(f, CadlagPath::step(g, {{50, 1.0}}));
    }
    REQUIRE(run("qv", write_config(d, {{"input", {{"path_csv", csv.string()}}}}), d / "o") == kPass);
    const json q = read_json(d / "o" / "qv.json");
    CHECK(q["limit_at_T"] == 1.0);
    CHECK(q["jump_part_at_T"] == 1.0);
  }
  SUBCASE("iid values do not converge: 3") {
    const fs::path csv = d / "w.csv";
    {
      std::ofstream f(csv);
      const TimeGrid g(1.0, 500);
      std::vector<double> v(g.nodes(), 0.0);
      std::uint64_t s = 12345;
      for (std::size_t i = 1; i < v.size(); ++i) {
        s = s * 6364136223846793005ULL + 1442695040888963407ULL;
        v[i] = static_cast<double>(s >> 11) / 9007199254740992.0 - 0.5;
      }
      write_path_csv(f, CadlagPath(g, v));
    }
    CHECK(run("qv", write_config(d, {{"input", {{"path_csv", csv.string()}}}}), d / "o") ==
          kNonConvergence);
  }
  SUBCASE("injected drift fails the residual test: 4") {
    const fs::path cfg = write_config(d, {{"grid", {{"steps", 200}}},
                                          {"paths", 4000},
                                          {"residual", {{"inject_drift", 0.5}}}});
    CHECK(run("residual", cfg, d / "o") == kStatisticalFailure);
  }
  SUBCASE("malformed input CSV is a config error") {
    std::ofstream(d / "bad.csv") << "t,value,jump\n0,abc,0\n";
    CHECK(run("qv", write_config(d, {{"input", {{"path_csv", (d / "bad.csv").string()}}}}), d / "o") ==
          kConfigError);
  }
}

TEST_CASE("re-runs and replays are bit-identical across thread counts") {
  const fs::path d = scratch("replay");
  const fs::path cfg = write_config(
      d, {{"model", {{"type", "composite"},
                     {"components",
                      {{{"type", "brownian"}},
                       {{"type", "fbm"}, {"hurst", 0.7}, {"scale", 0.5}},
                       {{"type", "compound_poisson"},
                        {"rate", 1.0},
                        {"jump_law", {{"type", "atoms"}, {"values", {-1.0, 1.0}}, {"probabilities", {0.5, 0.5}}}}}}}}},
          {"grid", {{"steps", 200}}},
          {"paths", 300}});
  for (const std::string cmd : {"simulate", "residual", "decompose"}) {
    CAPTURE(cmd);
    const int a = run(cmd, cfg, d / (cmd + "_a"), 1);
    const int b = run(cmd, cfg, d / (cmd + "_b"), 3);
    CHECK(a == b);
    const json ma = read_json(d / (cmd + "_a") / "run_manifest.json");
    const json mb = read_json(d / (cmd + "_b") / "run_manifest.json");
    CHECK(ma["outputs"] == mb["outputs"]);
    for (const auto& [file, digest] : ma["outputs"].items()) {
      CHECK(slurp(d / (cmd + "_a") / file) == slurp(d / (cmd + "_b") / file));
    }
    Invocation inv;
    inv.command = "replay";
    inv.manifest_path = (d / (cmd + "_a") / "run_manifest.json").string();
    inv.threads = 2;
    CHECK(execute(inv) == kPass);
    CHECK(read_json(d / (cmd + "_a") / "replay" / "replay_check.json")["identical"] == true);
  }
}

TEST_CASE("replay notices a tampered output") {
  const fs::path d = scratch("tamper");
  const fs::path cfg = write_config(d, {{"grid", {{"steps", 100}}}});
  REQUIRE(run("simulate", cfg, d / "o") == kPass);
  json m = read_json(d / "o" / "run_manifest.json");
  m["outputs"]["paths/path_000000.csv"] = std::string(64, '0');
  std::ofstream(d / "o" / "run_manifest.json") << m.dump();
  Invocation inv;
  inv.command = "replay";
  inv.manifest_path = (d / "o" / "run_manifest.json").string();
  CHECK(execute(inv) == kStatisticalFailure);
}

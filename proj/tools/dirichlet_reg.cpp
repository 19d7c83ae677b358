#include <iostream>

#include <CLI11.hpp>

#include "dreg/cli.hpp"

int main(int argc, char** argv) {
  using namespace dreg::cli;
  CLI::App app{"Regularization-based stochastic calculus toolkit", kToolName};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  Invocation inv;
  std::string config, manifest;
  std::uint64_t seed = 0;
  std::size_t paths = 0, steps = 0;
  std::string out, function;
  double horizon = 0.0, alpha_se = 0.0;
  int threads = 0;

  const std::vector<std::pair<std::string, std::string>> help = {
      {"simulate", "simulate sample paths"},
      {"qv", "quadratic variation / covariation by regularization"},
      {"fwdint", "forward integral by regularization"},
      {"residual", "Ito-formula residual martingale test"},
      {"decompose", "canonical decomposition and bracket identity"},
      {"recover", "recover a characteristic triplet from an exponent"},
      {"exponent", "tabulate a Levy exponent"},
      {"sweep", "convergence sweep across grid sizes"},
      {"replay", "re-run from a run manifest and compare hashes"}};
  for (const auto& [name, text] : help) {
    CLI::App* sub = app.add_subcommand(name, text);
    if (name == "replay") {
      sub->add_option("--manifest", manifest, "run_manifest.json to replay")->required();
    } else {
      sub->add_option("--config", config, "JSON config file");
      sub->add_option("--seed", seed, "master seed");
      sub->add_option("--paths", paths, "number of paths");
      sub->add_option("--steps", steps, "grid steps n");
      sub->add_option("--horizon", horizon, "grid horizon T");
      sub->add_option("--function", function, "test function (exptanh, dampedsine, bump)");
      sub->add_option("--alpha-se", alpha_se, "z-score threshold");
    }
    sub->add_option("--out", out, "output directory");
    sub->add_option("--threads", threads, "worker threads");
    sub->callback([&inv, name = name] { inv.command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  for (CLI::App* sub : app.get_subcommands()) {
    auto given = [sub](const char* opt) {
      const CLI::Option* o = sub->get_option_no_throw(opt);
      return o != nullptr && o->count() > 0;
    };
    if (given("--config")) inv.config_path = config;
    if (given("--manifest")) inv.manifest_path = manifest;
    if (given("--seed")) inv.overrides.seed = seed;
    if (given("--paths")) inv.overrides.paths = paths;
    if (given("--steps")) inv.overrides.steps = steps;
    if (given("--horizon")) inv.overrides.horizon = horizon;
    if (given("--function")) inv.overrides.function = function;
    if (given("--alpha-se")) inv.overrides.alpha_se = alpha_se;
    if (given("--out")) inv.overrides.out = out;
    if (given("--threads")) inv.threads = threads;
  }
  return execute(inv);
}

#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>

#include <omp.h>
#include <openssl/evp.h>

#include "dreg/cli.hpp"
#include "dreg/errors.hpp"

namespace dreg::cli {

using nlohmann::json;
namespace fs = std::filesystem;

std::string sha256_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot read " + file.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                               EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 init failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), in.gcount());
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::string hex;
  char b[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(b, sizeof b, "%02x", md[i]);
    hex += b;
  }
  return hex;
}

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json read_json_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot read " + p.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(p.string() + ": " + e.what());
  }
}

json hash_outputs(const fs::path& out, const std::vector<fs::path>& rel) {
  json h = json::object();
  for (const fs::path& r : rel) h[r.generic_string()] = sha256_file(out / r);
  return h;
}

json run_and_record(const std::string& command, const json& config,
                    const std::vector<fs::path>& extra_inputs, int& exit_code) {
  const fs::path out = config["output_dir"].get<std::string>();
  json manifest = {{"tool", kToolName},
                   {"version", version()},
                   {"command", command},
                   {"config", config},
                   {"started_at", utc_now()}};
  const CommandResult r = run_command(command, config, out);
  json inputs = json::object();
  for (const fs::path& p : extra_inputs) inputs[p.string()] = sha256_file(p);
  for (const fs::path& p : r.inputs) inputs[p.string()] = sha256_file(p);
  manifest["inputs"] = inputs;
  manifest["outputs"] = hash_outputs(out, r.outputs);
  manifest["finished_at"] = utc_now();
  manifest["exit_code"] = r.exit_code;
  manifest["verdict"] = r.verdict;
  std::ofstream f(out / "run_manifest.json", std::ios::binary);
  f << manifest.dump(2) << '\n';
  if (!f) throw Error("cannot write run manifest in " + out.string());
  exit_code = r.exit_code;
  return manifest;
}

int replay(const Invocation& inv) {
  if (!inv.manifest_path) throw ConfigError("replay needs --manifest");
  const fs::path mpath = fs::absolute(*inv.manifest_path);
  const json m = read_json_file(mpath);
  for (const char* key : {"command", "config", "outputs", "exit_code"}) {
    if (!m.contains(key)) throw ConfigError(std::string("manifest lacks '") + key + "'");
  }
  const std::string command = m["command"].get<std::string>();
  json config = m["config"];
  const fs::path out = inv.overrides.out ? fs::path(*inv.overrides.out)
                                         : mpath.parent_path() / "replay";
  config["output_dir"] = out.string();

  json mismatches = json::array();
  const json recorded_inputs = m.value("inputs", json::object());
  for (const auto& [file, digest] : recorded_inputs.items()) {
    if (!fs::exists(file)) {
      mismatches.push_back({{"input", file}, {"reason", "missing"}});
    } else if (sha256_file(file) != digest.get<std::string>()) {
      mismatches.push_back({{"input", file}, {"reason", "hash differs"}});
    }
  }

  const CommandResult r = run_command(command, config, out);
  const json got = hash_outputs(out, r.outputs);
  const json& want = m["outputs"];
  for (const auto& [file, digest] : want.items()) {
    if (!got.contains(file)) {
      mismatches.push_back({{"output", file}, {"reason", "not produced"}});
    } else if (got[file] != digest) {
      mismatches.push_back({{"output", file}, {"reason", "hash differs"}});
    }
  }
  for (const auto& [file, digest] : got.items()) {
    if (!want.contains(file)) mismatches.push_back({{"output", file}, {"reason", "extra"}});
  }
  if (r.exit_code != m["exit_code"].get<int>()) {
    mismatches.push_back({{"exit_code", r.exit_code}, {"recorded", m["exit_code"]}});
  }
  const bool identical = mismatches.empty();
  std::ofstream f(out / "replay_check.json", std::ios::binary);
  f << json{{"manifest", mpath.string()}, {"identical", identical}, {"mismatches", mismatches}}
           .dump(2)
    << '\n';
  std::cout << (identical ? "replay identical" : "replay MISMATCH") << " (" << out.string()
            << ")\n";
  return identical ? kPass : kStatisticalFailure;
}

}  // namespace

int execute(const Invocation& inv) {
  try {
    if (inv.threads) {
      if (*inv.threads < 1) throw ConfigError("--threads must be >= 1");
      omp_set_num_threads(*inv.threads);
    }
    if (inv.command == "replay") return replay(inv);
    bool known = false;
    for (const std::string& c : commands()) known = known || c == inv.command;
    if (!known) throw ConfigError("unknown command '" + inv.command + "'");

    json raw = json::object();
    fs::path base = fs::current_path();
    std::vector<fs::path> extra;
    if (inv.config_path) {
      const fs::path cp = fs::absolute(*inv.config_path);
      raw = read_json_file(cp);
      base = cp.parent_path();
      extra.push_back(cp);
    }
    const json config = resolve_config(inv.command, raw, inv.overrides, base);
    int code = kPass;
    const json manifest = run_and_record(inv.command, config, extra, code);
    std::cout << inv.command << ": exit " << code << ", outputs in "
              << config["output_dir"].get<std::string>() << '\n';
    return code;
  } catch (const ConfigError& e) {
    std::cerr << kToolName << ": config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const json::exception& e) {
    std::cerr << kToolName << ": config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const FormatError& e) {
    std::cerr << kToolName << ": input error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << kToolName << ": error: " << e.what() << '\n';
    return kInternalError;
  }
}

}  // namespace dreg::cli

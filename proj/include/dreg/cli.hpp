#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dreg/levyexponent.hpp"
#include "dreg/model.hpp"

namespace dreg::cli {

enum ExitCode : int {
  kPass = 0,
  kInternalError = 1,
  kConfigError = 2,
  kNonConvergence = 3,
  kStatisticalFailure = 4,
};

inline constexpr const char* kToolName = "dirichlet-reg";
inline constexpr const char* kOutputEnv = "DIRICHLET_REG_OUT";
const char* version();

// Configuration problems; mapped to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const nlohmann::json& config_schema();

// Violations of the schema subset used by config.schema.json ("type",
// "properties", "required", "additionalProperties", "enum", "const",
// numeric bounds, "items", "minItems", "maxItems", "oneOf", "$ref").
std::vector<std::string> schema_violations(const nlohmann::json& doc,
                                           const nlohmann::json& schema);

ModelSpec parse_model(const nlohmann::json& j);
nlohmann::json model_json(const ModelSpec& m);
JumpLaw parse_jump_law(const nlohmann::json& j);
nlohmann::json jump_law_json(const JumpLaw& law);
Triplet1D parse_triplet(const nlohmann::json& j);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<std::string> out;
  std::optional<std::size_t> steps;
  std::optional<double> horizon;
  std::optional<std::string> function;
  std::optional<double> alpha_se;
};

// Schema-checks `raw`, applies overrides, and fills every default so the
// result fully determines the run. Relative input paths are resolved
// against `base_dir`.
nlohmann::json resolve_config(const std::string& command, nlohmann::json raw,
                              const Overrides& overrides,
                              const std::filesystem::path& base_dir);

struct CommandResult {
  int exit_code = kPass;
  nlohmann::json verdict;
  std::vector<std::filesystem::path> inputs;   // files read
  std::vector<std::filesystem::path> outputs;  // relative to the output dir
};

// Runs one command from a resolved config, writing into `out_dir`.
CommandResult run_command(const std::string& command,
                          const nlohmann::json& config,
                          const std::filesystem::path& out_dir);

const std::vector<std::string>& commands();

std::string sha256_file(const std::filesystem::path& file);

struct Invocation {
  std::string command;
  std::optional<std::string> config_path;
  std::optional<std::string> manifest_path;  // replay
  Overrides overrides;
  std::optional<int> threads;
};

// Full command execution including the run manifest; returns the exit code.
int execute(const Invocation& inv);

}  // namespace dreg::cli

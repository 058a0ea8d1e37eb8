#ifndef WARPLOSS_COMMANDS_HPP_
#define WARPLOSS_COMMANDS_HPP_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace warploss {

// Exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kPropertyFailure = 1,
  kConfigError = 2,
  kIoError = 3,
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Each command validates its config fully before any compute, writes its
// outputs under out_dir and returns an exit code. seed_override replaces the
// config's seed when present.
int cmd_landscape(const nlohmann::json& config, const std::string& out_dir);
int cmd_verify(const std::string& out_dir, std::uint64_t seed);
int cmd_train(const nlohmann::json& config, const std::string& out_dir,
              std::optional<std::uint64_t> seed_override = std::nullopt);
int cmd_sweep(const nlohmann::json& config, const std::string& out_dir,
              std::optional<std::uint64_t> seed_override = std::nullopt);
int cmd_eval(const nlohmann::json& config, const std::string& out_dir);

nlohmann::json load_config_file(const std::string& path);

}  // namespace warploss

#endif  // WARPLOSS_COMMANDS_HPP_

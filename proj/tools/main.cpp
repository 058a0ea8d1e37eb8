#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "warploss/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"warploss: euclidean warped-softmax metric learning toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed_override;
  std::uint64_t seed_value = 0;

  const auto add_common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config)
      sub->add_option("--config", config_path, "path to the JSON run config")->required();
    sub->add_option("--out", out_dir, "output directory (created if missing)");
    sub->add_option("--seed", seed_value, "override the config seed");
    return sub;
  };

  auto* landscape = add_common(app.add_subcommand("landscape", "export a loss grid + extrema"), true);
  auto* verify = add_common(app.add_subcommand("verify", "run the landscape property suite"), false);
  auto* train = add_common(app.add_subcommand("train", "train an embedder and evaluate it"), true);
  auto* sweep = add_common(app.add_subcommand("sweep", "train across a warp-parameter list"), true);
  auto* eval = add_common(app.add_subcommand("eval", "evaluate a checkpoint on a dataset"), true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : warploss::kConfigError;
  }

  for (auto* sub : {landscape, verify, train, sweep, eval})
    if (sub->parsed() && sub->count("--seed") > 0) seed_override = seed_value;

  try {
    if (landscape->parsed())
      return warploss::cmd_landscape(warploss::load_config_file(config_path), out_dir);
    if (verify->parsed())
      return warploss::cmd_verify(out_dir, seed_override.value_or(0));
    if (train->parsed())
      return warploss::cmd_train(warploss::load_config_file(config_path), out_dir, seed_override);
    if (sweep->parsed())
      return warploss::cmd_sweep(warploss::load_config_file(config_path), out_dir, seed_override);
    if (eval->parsed())
      return warploss::cmd_eval(warploss::load_config_file(config_path), out_dir);
  } catch (const warploss::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return warploss::kConfigError;
  } catch (const warploss::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return warploss::kIoError;
  }
  return warploss::kConfigError;
}

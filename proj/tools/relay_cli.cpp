// relay: design, simulate and inspect the relay echo canceler.

#include <cstdint>
#include <exception>
#include <iostream>
#include <locale>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "relay/relay.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Sampled-data H-infinity echo canceler for full-duplex relays"};
  app.require_subcommand(1);

  std::string config_path, controller_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool zero_input = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out-dir", out_dir, "directory for generated files (overrides output.dir)");
  };

  auto* design = app.add_subcommand("design", "synthesize the gamma-optimal controller");
  add_common(design);

  auto* simulate = app.add_subcommand("simulate", "run the closed loop on an OFDM input and export CSV traces");
  add_common(simulate);
  simulate->add_option("controller", controller_path, "controller file from 'design'")->required()->check(CLI::ExistingFile);
  simulate->add_option("--seed", seed, "override ofdm.seed");
  simulate->add_flag("--zero-input", zero_input, "drive the loop with all-zero symbols");

  auto* pulse = app.add_subcommand("pulse", "export the sampled pulse");
  add_common(pulse);

  auto* norm = app.add_subcommand("norm", "verify a controller against the configured plant");
  add_common(norm);
  norm->add_option("controller", controller_path, "controller file from 'design'")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  std::cout.imbue(std::locale::classic());
  try {
    const auto cfg = relay::parse_config(config_path);
    const relay::CommandOptions opts{seed, out_dir, zero_input};
    if (design->parsed()) relay::cmd_design(cfg, opts, std::cout);
    else if (simulate->parsed()) relay::cmd_simulate(cfg, controller_path, opts, std::cout);
    else if (pulse->parsed()) relay::cmd_pulse(cfg, opts, std::cout);
    else if (norm->parsed()) relay::cmd_norm(cfg, controller_path, opts, std::cout);
  } catch (const std::exception& e) {
    std::cout.flush();
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

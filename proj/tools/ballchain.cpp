// ballchain: batch front end for shape estimation and workspace studies.

#include "ballchain/cli/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

int main(int argc, char** argv) {
  using namespace ballchain::cli;

  CLI::App app{"Magnetic ball chain shape estimation from a 3-axis sensor array"};
  app.require_subcommand(1);

  CommandOptions options;
  std::string config, out_dir = ".", readings, gain_table, samples;
  std::uint64_t seed = 0;
  std::string command;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Run configuration JSON")->required();
    sub->add_option("--out", out_dir, "Output directory (created if missing)");
    sub->add_option("--threads", options.threads, "Worker threads")->check(CLI::PositiveNumber);
  };
  const auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "RNG seed (overrides the config)");
  };

  struct Entry {
    const char* name;
    const char* help;
  };
  for (const Entry& e : {Entry{"forward", "Synthetic sensor readings over a (phi, psi) grid"},
                         Entry{"estimate", "Estimate bend angles from a readings CSV"},
                         Entry{"observability", "Reciprocal condition number map"},
                         Entry{"sensitivity", "Monte Carlo tip-error sweep"},
                         Entry{"calibrate", "Gain table from labelled samples"},
                         Entry{"replay", "Simulated calibration and estimation protocol"}}) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    add_common(sub);
    add_seed(sub);
    const std::string name = e.name;
    if (name == "estimate") {
      sub->add_option("--readings", readings, "Readings CSV (overrides the config)");
      sub->add_option("--gain-table", gain_table, "Gain table JSON; enables gain-scheduled refinement");
    } else if (name == "calibrate") {
      sub->add_option("--samples", samples, "Samples CSV (overrides the config)");
    } else if (name == "replay") {
      sub->add_option("--gain-table", gain_table, "Use this gain table instead of calibrating");
    }
    sub->callback([&command, name] { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  options.config = config;
  options.out_dir = out_dir;
  for (CLI::App* sub : app.get_subcommands()) {
    if (sub->count("--seed")) options.seed = seed;
    if (!readings.empty()) options.readings = readings;
    if (!gain_table.empty()) options.gain_table = gain_table;
    if (!samples.empty()) options.samples = samples;
  }
  return run_command(command, options, std::cout, std::cerr);
}

#pragma once

// Subcommand drivers shared by the ballchain executable and the tests.
//
// Every command writes its outputs plus manifest.json into the output
// directory. Exit codes: 0 ok, 2 configuration/input error, 3 model or
// solver error.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ballchain::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitModel = 3;

struct CommandOptions {
  std::filesystem::path config;
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  int threads = 1;
  // Override the paths given in the config's command block.
  std::optional<std::filesystem::path> readings;
  std::optional<std::filesystem::path> gain_table;
  std::optional<std::filesystem::path> samples;
};

const std::vector<std::string_view>& command_names();

/// Runs one subcommand; errors are reported on `err` and mapped to exit codes.
int run_command(std::string_view command, const CommandOptions& options, std::ostream& out,
                std::ostream& err);

}  // namespace ballchain::cli

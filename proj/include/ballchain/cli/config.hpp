#pragma once

// Run configuration: one JSON document per run. Lengths are millimetres,
// angles degrees, fields Tesla, dipole moments A*m^2. Everything is converted
// to SI on load; unknown keys are rejected.
//
// {
//   "scene": "config-I" | {
//     "chain":   {"n": 10, "d": 6.35, "mu": 0.141 | "remanence": 1.32},
//     "base":    {"position": [0, 0, 156.35], "rotation": [[1,0,0],[0,-1,0],[0,0,-1]]},
//     "sensors": [{"position": [40.5, 0, 0], "rotation": [[...]]}, ...]
//   },
//   "command": {
//     "forward":       {"grid": GRID},
//     "estimate":      {"outer_iterations": 2, "gain_table": "gains.json", "readings": "r.csv"},
//     "observability": {"grid": GRID},
//     "sensitivity":   {"grid": GRID, "noise_levels": [0, 0.05, 0.1], "samples": 100, "seed": 1},
//     "calibrate":     {"configs": [{"label": "a", "phi_deg": 0, "psi_deg": 30}], "samples": "s.csv"},
//     "replay":        {"configs": [{"phi_deg": 0, "psi_deg": 30}], "noise_level": 0.05,
//                       "samples": 10, "seed": 1, "outer_iterations": 2,
//                       "channel_noise_scale": [...]}
//   }
// }
//
// GRID = {"phi_deg": [..] | {"start": a, "stop": b, "step": s}, "psi_deg": same}
// Relative file paths resolve against the config file's directory.

#include "ballchain/analysis.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ballchain::cli {

struct LabeledConfig {
  std::string label;
  BendConfig gamma;
  double phi_deg = 0.0;
  double psi_deg = 0.0;
};

struct ForwardBlock {
  WorkspaceGrid grid;
};

struct EstimateBlock {
  std::optional<int> outer_iterations;  // default: 2 with a gain table, else 0
  std::optional<std::filesystem::path> gain_table;
  std::optional<std::filesystem::path> readings;
};

struct ObservabilityBlock {
  WorkspaceGrid grid;
};

struct SensitivityBlock {
  WorkspaceGrid grid;
  std::vector<double> noise_levels{0.0, 0.05, 0.10};
  int samples = 100;
  std::uint64_t seed = 1;
};

struct CalibrateBlock {
  std::vector<LabeledConfig> configs;
  std::optional<std::filesystem::path> samples;
};

struct ReplayBlock {
  std::vector<BendConfig> configs;
  double noise_level = 0.05;
  int samples = 10;
  std::uint64_t seed = 1;
  int outer_iterations = 2;
  Eigen::VectorXd channel_noise_scale;
};

struct RunConfig {
  SceneSpec scene;
  std::string scene_source;  // preset name or "inline"
  std::optional<ForwardBlock> forward;
  std::optional<EstimateBlock> estimate;
  std::optional<ObservabilityBlock> observability;
  std::optional<SensitivityBlock> sensitivity;
  std::optional<CalibrateBlock> calibrate;
  std::optional<ReplayBlock> replay;
};

/// Throws ConfigError with the offending field path in the message.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Throws ConfigError naming `what` if the file is missing or malformed.
nlohmann::json read_json_file(const std::filesystem::path& path, const std::string& what);

SceneSpec parse_scene(const nlohmann::json& node);

/// SI scene description (metres), stable key order.
nlohmann::json scene_to_json(const SceneSpec& scene);

/// FNV-1a 64 of the SI scene JSON, as 16 hex digits.
std::string scene_hash(const SceneSpec& scene);

nlohmann::json gain_table_to_json(const GainTable& table);
GainTable gain_table_from_json(const nlohmann::json& doc);
GainTable load_gain_table(const std::filesystem::path& path);
void save_gain_table(const GainTable& table, const std::filesystem::path& path);

}  // namespace ballchain::cli

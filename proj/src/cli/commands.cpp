#include "ballchain/cli/commands.hpp"

#include "ballchain/cli/config.hpp"
#include "ballchain/cli/csv.hpp"
#include "ballchain/errors.hpp"
#include "ballchain/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>

namespace ballchain::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kToMm = 1e3;

struct Context {
  const CommandOptions& options;
  RunConfig config;
  std::ostream& out;
  json manifest;
  std::vector<std::string> outputs;

  fs::path output(const std::string& name) {
    outputs.push_back(name);
    return options.out_dir / name;
  }
};

json solver_json(const SolverSettings& s) {
  return {{"method", "levenberg-marquardt"},
          {"initial_damping", s.initial_damping},
          {"damping_up", s.damping_up},
          {"damping_down", s.damping_down},
          {"max_iterations", s.max_iterations},
          {"multistart_seeds", multistart_seeds().size()}};
}

json tolerances_json(const SolverSettings& s) {
  return {{"residual_decrease_T", s.residual_tolerance},
          {"step_rad", s.step_tolerance},
          {"degenerate_ratio", s.degenerate_ratio},
          {"jacobian_step_rad", s.jacobian_step},
          {"gain_clamp_per_T", kGainClamp}};
}

std::string clean_message(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

void write_manifest(Context& ctx, const std::string& command) {
  const SolverSettings solver;
  json m = {
      {"tool", "ballchain"},
      {"manifest_version", 1},
      {"command", command},
      {"scene", {{"source", ctx.config.scene_source},
                 {"hash", scene_hash(ctx.config.scene)},
                 {"definition_si", scene_to_json(ctx.config.scene)}}},
      {"threads", ctx.options.threads},
      {"kernel_backend", std::string(kernels::backend_name(kernels::active_backend()))},
      {"solver", solver_json(solver)},
      {"tolerances", tolerances_json(solver)},
      {"units", {{"angles", "deg"}, {"lengths", "mm"}, {"fields", "T"}, {"gains", "1/T"}}},
  };
  for (auto it = ctx.manifest.begin(); it != ctx.manifest.end(); ++it) m[it.key()] = it.value();
  m["outputs"] = ctx.outputs;
  std::ofstream f(ctx.options.out_dir / "manifest.json");
  if (!f) throw ConfigError("cannot write manifest in '" + ctx.options.out_dir.string() + "'");
  f << m.dump(2) << '\n';
}

std::vector<std::string> grid_label(const WorkspaceGrid& grid, std::size_t i, std::size_t j) {
  return {format_angle(rad_to_deg(grid.phi_values[i])), format_angle(rad_to_deg(grid.psi_values[j]))};
}

json grid_json(const WorkspaceGrid& grid) {
  std::vector<double> phi, psi;
  for (double v : grid.phi_values) phi.push_back(rad_to_deg(v));
  for (double v : grid.psi_values) psi.push_back(rad_to_deg(v));
  return {{"phi_deg", phi}, {"psi_deg", psi}};
}

void cmd_forward(Context& ctx) {
  const WorkspaceGrid grid = ctx.config.forward ? ctx.config.forward->grid : observability_grid();
  grid.validate();
  const SceneSpec& scene = ctx.config.scene;

  std::vector<MeasurementVector> q(grid.cell_count());
  parallel_for(grid.cell_count(), ctx.options.threads, [&](std::size_t idx) {
    const std::size_t i = idx / grid.psi_count(), j = idx % grid.psi_count();
    try {
      q[idx] = forward_measurement(scene, grid.cell(i, j));
    } catch (const ModelError& e) {
      throw ModelError("phi_deg=" + format_angle(rad_to_deg(grid.phi_values[i])) + " psi_deg=" +
                       format_angle(rad_to_deg(grid.psi_values[j])) + ": " + e.what());
    }
  });

  std::vector<std::string> header{"phi_deg", "psi_deg"};
  for (auto& c : channel_columns(scene.sensors.size())) header.push_back(std::move(c));
  CsvWriter csv(header);
  for (std::size_t i = 0; i < grid.phi_count(); ++i) {
    for (std::size_t j = 0; j < grid.psi_count(); ++j) {
      std::vector<std::string> row = grid_label(grid, i, j);
      for (double v : q[grid.index(i, j)]) row.push_back(format_number(v));
      csv.add_row(row);
    }
  }
  csv.save(ctx.output("readings.csv"));
  ctx.manifest["grid"] = grid_json(grid);
  ctx.out << "forward: " << grid.cell_count() << " rows -> " << (ctx.options.out_dir / "readings.csv").string() << '\n';
}

void cmd_estimate(Context& ctx) {
  const EstimateBlock block = ctx.config.estimate.value_or(EstimateBlock{});
  const auto readings_path = ctx.options.readings ? ctx.options.readings : block.readings;
  if (!readings_path) {
    throw ConfigError("command.estimate.readings: no readings file (set it or pass --readings)");
  }
  const auto table_path = ctx.options.gain_table ? ctx.options.gain_table : block.gain_table;
  const int outer = block.outer_iterations.value_or(table_path ? 2 : 0);
  if (outer > 0 && !table_path) {
    throw ConfigError("command.estimate.outer_iterations: " + std::to_string(outer) +
                      " rounds need a gain table (set command.estimate.gain_table or pass --gain-table)");
  }
  GainTable table;
  if (table_path && outer > 0) {
    table = load_gain_table(*table_path);
    if (table.channel_count() != ctx.config.scene.channel_count()) {
      throw ConfigError("gain_table.channels: table has " + std::to_string(table.channel_count()) +
                        " channels, scene has " + std::to_string(ctx.config.scene.channel_count()));
    }
  }

  const ReadingsFile file = read_readings(*readings_path, ctx.config.scene.sensors.size());
  const std::size_t rows = file.readings.size();
  std::vector<EstimateResult> results(rows);
  std::vector<std::string> errors(rows);
  parallel_for(rows, ctx.options.threads, [&](std::size_t r) {
    try {
      results[r] = estimate_shape(ctx.config.scene, file.readings[r], table, outer);
    } catch (const ModelError& e) {
      errors[r] = clean_message(e.what());
    }
  });

  CsvWriter csv({"phi_deg", "psi_deg", "psi_hat_deg", "phi_hat_deg", "residual_norm", "status",
                 "solver_iterations", "error"});
  std::size_t failed = 0, not_converged = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<std::string> row{format_angle(file.phi_deg[r]), format_angle(file.psi_deg[r])};
    if (!errors[r].empty()) {
      ++failed;
      row.insert(row.end(), {"nan", "nan", "nan", "error", "0", errors[r]});
    } else {
      const EstimateResult& e = results[r];
      const BendAngles a = angles_from_bend(e.gamma);
      if (e.solver_status != SolverStatus::converged) ++not_converged;
      row.insert(row.end(), {format_number(rad_to_deg(a.psi)), format_number(rad_to_deg(a.phi)),
                             format_number(e.residual_norm), std::string(status_name(e.solver_status)),
                             std::to_string(e.solver_iterations), ""});
    }
    csv.add_row(row);
  }
  csv.save(ctx.output("estimates.csv"));
  ctx.manifest["readings"] = readings_path->string();
  ctx.manifest["gain_table"] = table_path && outer > 0 ? json(table_path->string()) : json(nullptr);
  ctx.manifest["outer_iterations"] = outer;
  ctx.manifest["rows"] = rows;
  ctx.manifest["row_errors"] = failed;
  ctx.manifest["not_converged"] = not_converged;
  ctx.out << "estimate: " << rows << " rows, N = " << outer << ", " << failed << " errors, "
          << not_converged << " not converged\n";
  if (rows > 0 && failed == rows) throw ModelError("estimate: every row failed");
}

void cmd_observability(Context& ctx) {
  const WorkspaceGrid grid = ctx.config.observability ? ctx.config.observability->grid : observability_grid();
  const ObservabilityMap map = observability_map(ctx.config.scene, grid, ctx.options.threads);

  CsvWriter csv({"phi_deg", "psi_deg", "chi_percent"});
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < grid.phi_count(); ++i) {
    for (std::size_t j = 0; j < grid.psi_count(); ++j) {
      const double chi = map.chi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (std::isfinite(chi)) {
        lo = std::min(lo, chi);
        hi = std::max(hi, chi);
      }
      std::vector<std::string> row = grid_label(grid, i, j);
      row.push_back(format_number(100.0 * chi));
      csv.add_row(row);
    }
  }
  csv.save(ctx.output("observability.csv"));
  ctx.manifest["grid"] = grid_json(grid);
  ctx.manifest["diagnostics"] = map.diagnostics;
  if (std::isfinite(lo)) {
    ctx.manifest["chi_percent_min"] = 100.0 * lo;
    ctx.manifest["chi_percent_max"] = 100.0 * hi;
  }
  for (const std::string& d : map.diagnostics) ctx.out << "observability: " << d << '\n';
  ctx.out << "observability: " << grid.cell_count() << " cells";
  if (std::isfinite(lo)) ctx.out << ", chi " << 100.0 * lo << "% .. " << 100.0 * hi << "%";
  ctx.out << '\n';
}

void cmd_sensitivity(Context& ctx) {
  SensitivityBlock block;
  block.grid = sensitivity_grid();
  if (ctx.config.sensitivity) block = *ctx.config.sensitivity;
  SensitivityOptions opt;
  opt.noise_levels = block.noise_levels;
  opt.samples = block.samples;
  opt.seed = ctx.options.seed.value_or(block.seed);
  opt.threads = ctx.options.threads;
  const SensitivityReport report = sensitivity_sweep(ctx.config.scene, block.grid, opt);

  CsvWriter csv({"phi_deg", "psi_deg", "noise_level", "max_tip_error_mm", "max_tip_error_percent", "failures"});
  int failures = 0;
  for (std::size_t i = 0; i < report.grid.phi_count(); ++i) {
    for (std::size_t j = 0; j < report.grid.psi_count(); ++j) {
      for (std::size_t l = 0; l < report.level_count(); ++l) {
        const double e = report.error(i, j, l);
        std::vector<std::string> row = grid_label(report.grid, i, j);
        row.push_back(format_number(report.noise_levels[l]));
        row.push_back(format_number(e * kToMm));
        row.push_back(format_number(100.0 * e / report.chain_length));
        row.push_back(std::to_string(report.failure_count(i, j, l)));
        failures += report.failure_count(i, j, l);
        csv.add_row(row);
      }
    }
  }
  csv.save(ctx.output("sensitivity.csv"));
  ctx.manifest["seed"] = opt.seed;
  ctx.manifest["samples"] = opt.samples;
  ctx.manifest["noise_levels"] = opt.noise_levels;
  ctx.manifest["noise_model"] = "per-channel sigma = level / 3 * |q_bar|";
  ctx.manifest["rng"] = "mt19937_64, splitmix64 stream per (seed, cell, sample), Box-Muller";
  ctx.manifest["outer_iterations"] = 0;
  ctx.manifest["grid"] = grid_json(report.grid);
  ctx.manifest["chain_length_mm"] = report.chain_length * kToMm;
  ctx.manifest["solver_failures"] = failures;
  ctx.out << "sensitivity: " << report.grid.cell_count() << " cells x " << report.level_count()
          << " levels x " << opt.samples << " samples, seed " << opt.seed << ", " << failures
          << " solver failures\n";
}

void cmd_calibrate(Context& ctx) {
  if (!ctx.config.calibrate) throw ConfigError("command.calibrate: block is required");
  const CalibrateBlock& block = *ctx.config.calibrate;
  const auto samples_path = ctx.options.samples ? ctx.options.samples : block.samples;
  if (!samples_path) throw ConfigError("command.calibrate.samples: no samples file (set it or pass --samples)");

  const std::vector<LabeledSample> samples = read_samples(*samples_path, ctx.config.scene.sensors.size());
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < block.configs.size(); ++k) index[block.configs[k].label] = k;
  std::vector<std::vector<MeasurementVector>> groups(block.configs.size());
  for (const LabeledSample& s : samples) {
    const auto it = index.find(s.label);
    if (it == index.end()) {
      throw ConfigError(samples_path->string() + ":" + std::to_string(s.line) + ": unknown config label '" +
                        s.label + "'");
    }
    groups[it->second].push_back(s.reading);
  }
  std::vector<BendConfig> centers;
  for (std::size_t k = 0; k < block.configs.size(); ++k) {
    if (groups[k].empty()) {
      throw ConfigError("command.calibrate.configs[" + std::to_string(k) + "]: no samples for label '" +
                        block.configs[k].label + "'");
    }
    centers.push_back(block.configs[k].gamma);
  }

  const GainTable table = calibrate_gains(ctx.config.scene, centers, groups);
  save_gain_table(table, ctx.output("gain_table.json"));

  const auto columns = channel_columns(ctx.config.scene.sensors.size());
  CsvWriter csv({"label", "channel", "e_max_T", "gain_per_T", "clamped"});
  json summary = json::array();
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const Eigen::VectorXd e_max = max_channel_error(forward_measurement(ctx.config.scene, centers[k]), groups[k]);
    const GainVector& gain = table.entries()[k].gain;
    int clamped = 0;
    ctx.out << "calibrate: " << block.configs[k].label << " (" << groups[k].size() << " samples) e_M [T]:";
    for (Eigen::Index c = 0; c < e_max.size(); ++c) {
      const bool hit = gain[c] == kGainClamp;
      clamped += hit;
      ctx.out << ' ' << format_number(e_max[c]);
      csv.add_row({block.configs[k].label, columns[static_cast<std::size_t>(c)], format_number(e_max[c]),
                   format_number(gain[c]), hit ? "1" : "0"});
    }
    ctx.out << '\n';
    summary.push_back({{"label", block.configs[k].label},
                       {"samples", groups[k].size()},
                       {"e_max_T_min", e_max.minCoeff()},
                       {"e_max_T_max", e_max.maxCoeff()},
                       {"clamped_channels", clamped}});
  }
  csv.save(ctx.output("calibration.csv"));
  ctx.manifest["samples_file"] = samples_path->string();
  ctx.manifest["configs"] = summary;
}

void cmd_replay(Context& ctx) {
  ReplayBlock fallback;
  fallback.configs = replay_configs();
  const ReplayBlock block = ctx.config.replay.value_or(fallback);
  ReplayOptions opt;
  opt.noise_level = block.noise_level;
  opt.samples = block.samples;
  opt.seed = ctx.options.seed.value_or(block.seed);
  opt.channel_noise_scale = block.channel_noise_scale;
  opt.outer_iterations = block.outer_iterations;
  opt.threads = ctx.options.threads;

  std::optional<GainTable> external;
  if (ctx.options.gain_table) {
    external = load_gain_table(*ctx.options.gain_table);
    if (external->channel_count() != ctx.config.scene.channel_count()) {
      throw ConfigError("gain_table.channels: table has " + std::to_string(external->channel_count()) +
                        " channels, scene has " + std::to_string(ctx.config.scene.channel_count()));
    }
  }
  const ReplayReport report =
      replay_experiment(ctx.config.scene, block.configs, opt, external ? &*external : nullptr);

  CsvWriter csv({"phi_deg", "psi_deg", "mean_error_n0_mm", "max_error_n0_mm", "mean_error_mm",
                 "max_error_mm", "failures"});
  int failures = 0;
  for (const ReplayConfigResult& r : report.configs) {
    const BendAngles a = angles_from_bend(r.gamma);
    csv.add_row({format_angle(rad_to_deg(a.phi)), format_angle(rad_to_deg(a.psi)),
                 format_number(r.mean_error_uncalibrated * kToMm), format_number(r.max_error_uncalibrated * kToMm),
                 format_number(r.mean_error_calibrated * kToMm), format_number(r.max_error_calibrated * kToMm),
                 std::to_string(r.failures)});
    failures += r.failures;
  }
  csv.save(ctx.output("replay.csv"));
  save_gain_table(report.table, ctx.output("gain_table.json"));
  ctx.manifest["seed"] = opt.seed;
  ctx.manifest["samples"] = opt.samples;
  ctx.manifest["noise_level"] = opt.noise_level;
  ctx.manifest["outer_iterations"] = opt.outer_iterations;
  ctx.manifest["configs"] = report.configs.size();
  ctx.manifest["trials"] = report.trials;
  ctx.manifest["gain_table_source"] = external ? ctx.options.gain_table->string() : std::string("calibrated from replay samples");
  ctx.manifest["mean_error_n0_mm"] = report.mean_error_uncalibrated * kToMm;
  ctx.manifest["mean_error_mm"] = report.mean_error_calibrated * kToMm;
  ctx.manifest["solver_failures"] = failures;
  ctx.out << "replay: " << report.configs.size() << " configs, " << report.trials << " trials, mean tip error "
          << report.mean_error_uncalibrated * kToMm << " mm (N=0) -> " << report.mean_error_calibrated * kToMm
          << " mm (N=" << opt.outer_iterations << ")\n";
}

using Handler = void (*)(Context&);

const std::vector<std::pair<std::string_view, Handler>>& handlers() {
  static const std::vector<std::pair<std::string_view, Handler>> table{
      {"forward", cmd_forward},         {"estimate", cmd_estimate},   {"observability", cmd_observability},
      {"sensitivity", cmd_sensitivity}, {"calibrate", cmd_calibrate}, {"replay", cmd_replay},
  };
  return table;
}

}  // namespace

const std::vector<std::string_view>& command_names() {
  static const std::vector<std::string_view> names = [] {
    std::vector<std::string_view> out;
    for (const auto& h : handlers()) out.push_back(h.first);
    return out;
  }();
  return names;
}

int run_command(std::string_view command, const CommandOptions& options, std::ostream& out, std::ostream& err) {
  try {
    Handler handler = nullptr;
    for (const auto& h : handlers()) {
      if (h.first == command) handler = h.second;
    }
    if (!handler) throw ConfigError("unknown command '" + std::string(command) + "'");
    if (options.threads < 1) throw ConfigError("--threads must be >= 1");
    if (options.config.empty()) throw ConfigError("--config is required");

    Context ctx{options, load_run_config(options.config), out, json::object(), {}};
    std::error_code ec;
    fs::create_directories(options.out_dir, ec);
    if (ec) throw ConfigError("--out: cannot create '" + options.out_dir.string() + "': " + ec.message());
    handler(ctx);
    write_manifest(ctx, std::string(command));
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ModelError& e) {
    err << "model error: " << e.what() << '\n';
    return kExitModel;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitModel;
  }
}

}  // namespace ballchain::cli

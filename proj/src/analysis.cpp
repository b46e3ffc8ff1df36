#include "ballchain/analysis.hpp"

#include "ballchain/errors.hpp"
#include "ballchain/rng.hpp"

#include <Eigen/SVD>

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace ballchain {

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

std::vector<BendConfig> WorkspaceGrid::cells() const {
  std::vector<BendConfig> out;
  out.reserve(cell_count());
  for (std::size_t i = 0; i < phi_count(); ++i) {
    for (std::size_t j = 0; j < psi_count(); ++j) out.push_back(cell(i, j));
  }
  return out;
}

void WorkspaceGrid::validate() const {
  if (phi_values.empty()) throw ConfigError("grid.phi_deg must not be empty");
  if (psi_values.empty()) throw ConfigError("grid.psi_deg must not be empty");
  for (double phi : phi_values) {
    if (!std::isfinite(phi)) throw ConfigError("grid.phi_deg values must be finite");
  }
  for (double psi : psi_values) {
    if (!std::isfinite(psi) || std::abs(psi) > kPi + 1e-12) {
      throw ConfigError("grid.psi_deg values must lie in [-180, 180]");
    }
  }
}

namespace {

std::vector<double> degree_range(double start, double stop, double step, const char* field) {
  if (!(step > 0.0) || !(stop >= start)) {
    throw ConfigError(std::string(field) + ": need step > 0 and stop >= start");
  }
  std::vector<double> out;
  const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
  for (long k = 0; k < count; ++k) out.push_back(deg_to_rad(start + static_cast<double>(k) * step));
  return out;
}

}  // namespace

WorkspaceGrid WorkspaceGrid::from_degrees(double phi_start, double phi_stop, double phi_step,
                                          double psi_start, double psi_stop, double psi_step) {
  WorkspaceGrid grid;
  grid.phi_values = degree_range(phi_start, phi_stop, phi_step, "grid.phi_deg");
  grid.psi_values = degree_range(psi_start, psi_stop, psi_step, "grid.psi_deg");
  return grid;
}

WorkspaceGrid WorkspaceGrid::from_degree_lists(const std::vector<double>& phi_deg,
                                               const std::vector<double>& psi_deg) {
  WorkspaceGrid grid;
  for (double v : phi_deg) grid.phi_values.push_back(deg_to_rad(v));
  for (double v : psi_deg) grid.psi_values.push_back(deg_to_rad(v));
  return grid;
}

WorkspaceGrid observability_grid(double step_deg) {
  return WorkspaceGrid::from_degrees(-180.0, 180.0, step_deg, 0.0, 180.0, step_deg);
}

WorkspaceGrid sensitivity_grid() {
  return WorkspaceGrid::from_degrees(0.0, 180.0, 90.0, -180.0, 180.0, 30.0);
}

std::vector<BendConfig> unique_configs(const std::vector<BendConfig>& configs) {
  std::vector<BendConfig> out;
  for (const BendConfig& c : configs) {
    const BendConfig canon = c.canonical();
    bool seen = false;
    for (const BendConfig& o : out) seen = seen || (o.vector() - canon.vector()).norm() <= 1e-9;
    if (!seen) out.push_back(canon);
  }
  return out;
}

std::vector<BendConfig> replay_configs() {
  std::vector<BendConfig> all;
  for (int j = 0; j <= 4; ++j) {
    for (int k = 0; k <= 6; ++k) all.push_back(bend_from_angles(deg_to_rad(30.0 * k), deg_to_rad(90.0 * j)));
  }
  return unique_configs(all);
}

double reciprocal_condition(const Jacobian& jac) {
  const Eigen::Vector2d sv = Eigen::JacobiSVD<Jacobian>(jac).singularValues();
  if (!(sv[0] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return sv[1] / sv[0];
}

ObservabilityMap observability_map(const SceneSpec& scene, const WorkspaceGrid& grid, int threads) {
  scene.validate();
  grid.validate();
  ObservabilityMap map;
  map.grid = grid;
  map.chi = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(grid.phi_count()),
                                      static_cast<Eigen::Index>(grid.psi_count()),
                                      std::numeric_limits<double>::quiet_NaN());
  std::vector<std::string> notes(grid.cell_count());

  parallel_for(grid.cell_count(), threads, [&](std::size_t idx) {
    const std::size_t i = idx / grid.psi_count();
    const std::size_t j = idx % grid.psi_count();
    try {
      const BendConfig g = grid.cell(i, j);
      forward_measurement(scene, g);  // probes alone can step around a singular pose
      const double chi = reciprocal_condition(measurement_jacobian(scene, g));
      map.chi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = chi;
      if (std::isnan(chi)) notes[idx] = "zero Jacobian";
    } catch (const ModelError& e) {
      notes[idx] = e.what();
    }
  });

  for (std::size_t idx = 0; idx < notes.size(); ++idx) {
    if (notes[idx].empty()) continue;
    const std::size_t i = idx / grid.psi_count();
    const std::size_t j = idx % grid.psi_count();
    map.diagnostics.push_back("phi=" + std::to_string(rad_to_deg(grid.phi_values[i])) +
                              " psi=" + std::to_string(rad_to_deg(grid.psi_values[j])) + ": " +
                              notes[idx]);
  }
  return map;
}

Eigen::VectorXd noise_draw(std::uint64_t seed, std::size_t cell, std::size_t sample,
                           Eigen::Index channels) {
  RandomStream stream(derive_stream_seed(seed, cell, sample));
  Eigen::VectorXd z(channels);
  for (Eigen::Index c = 0; c < channels; ++c) z[c] = stream.gaussian();
  return z;
}

SensitivityReport sensitivity_sweep(const SceneSpec& scene, const WorkspaceGrid& grid,
                                    const SensitivityOptions& options) {
  scene.validate();
  grid.validate();
  if (options.samples < 1) throw ConfigError("sensitivity.samples must be >= 1");
  if (options.noise_levels.empty()) throw ConfigError("sensitivity.noise_levels must not be empty");
  for (double level : options.noise_levels) {
    if (!(level >= 0.0) || !std::isfinite(level)) {
      throw ConfigError("sensitivity.noise_levels must be finite and >= 0");
    }
  }

  SensitivityReport report;
  report.grid = grid;
  report.noise_levels = options.noise_levels;
  report.samples = options.samples;
  report.seed = options.seed;
  report.chain_length = scene.chain.total_length();
  const std::size_t levels = options.noise_levels.size();
  report.max_tip_error.assign(grid.cell_count() * levels, 0.0);
  report.failures.assign(grid.cell_count() * levels, 0);

  const GainTable no_table;
  const auto channels = static_cast<Eigen::Index>(scene.channel_count());

  parallel_for(grid.cell_count(), options.threads, [&](std::size_t idx) {
    const BendConfig truth = grid.cell(idx / grid.psi_count(), idx % grid.psi_count());
    const MeasurementVector clean = forward_measurement(scene, truth);
    const Vec3 tip = tip_position(scene.chain, scene.base, truth);
    const double norm = clean.norm();

    for (int s = 0; s < options.samples; ++s) {
      const Eigen::VectorXd z = noise_draw(options.seed, idx, static_cast<std::size_t>(s), channels);
      for (std::size_t l = 0; l < levels; ++l) {
        const double sigma = options.noise_levels[l] / 3.0 * norm;
        const MeasurementVector reading = clean + sigma * z;
        const EstimateResult est = estimate_shape(scene, reading, no_table, 0, options.solver);
        const double err = (tip_position(scene.chain, scene.base, est.gamma) - tip).norm();
        double& slot = report.max_tip_error[idx * levels + l];
        slot = std::max(slot, err);
        if (est.solver_status != SolverStatus::converged) ++report.failures[idx * levels + l];
      }
    }
  });
  return report;
}

ReplayReport replay_experiment(const SceneSpec& scene, const std::vector<BendConfig>& configs,
                               const ReplayOptions& options, const GainTable* table) {
  scene.validate();
  if (options.samples < 1) throw ConfigError("replay.samples must be >= 1");
  if (!(options.noise_level >= 0.0)) throw ConfigError("replay.noise_level must be >= 0");
  if (options.outer_iterations < 0) throw ConfigError("replay.outer_iterations must be >= 0");
  const auto channels = static_cast<Eigen::Index>(scene.channel_count());
  Eigen::VectorXd scale = options.channel_noise_scale;
  if (scale.size() == 0) scale = Eigen::VectorXd::Ones(channels);
  if (scale.size() != channels) {
    throw ConfigError("replay.channel_noise_scale needs " + std::to_string(channels) + " entries");
  }
  if (!scale.allFinite() || (scale.array() < 0.0).any()) {
    throw ConfigError("replay.channel_noise_scale entries must be finite and >= 0");
  }

  const std::vector<BendConfig> unique = unique_configs(configs);
  if (unique.empty()) throw ConfigError("replay.configs must not be empty");

  // Noisy samples per config.
  std::vector<std::vector<MeasurementVector>> samples(unique.size());
  std::vector<Vec3> tips(unique.size());
  for (std::size_t k = 0; k < unique.size(); ++k) {
    const MeasurementVector clean = forward_measurement(scene, unique[k]);
    const double sigma = options.noise_level / 3.0 * clean.norm();
    tips[k] = tip_position(scene.chain, scene.base, unique[k]);
    for (int t = 0; t < options.samples; ++t) {
      const Eigen::VectorXd z = noise_draw(options.seed, k, static_cast<std::size_t>(t), channels);
      samples[k].push_back(clean + sigma * scale.cwiseProduct(z));
    }
  }

  ReplayReport report;
  report.chain_length = scene.chain.total_length();
  report.table = table ? *table : calibrate_gains(scene, unique, samples);
  if (report.table.channel_count() != scene.channel_count()) {
    throw ConfigError("gain table channel count does not match the scene");
  }
  report.configs.resize(unique.size());

  const GainTable no_table;
  const GainVector identity = GainVector::Ones(channels);
  parallel_for(unique.size(), options.threads, [&](std::size_t k) {
    ReplayConfigResult& out = report.configs[k];
    out.gamma = unique[k];
    for (const MeasurementVector& reading : samples[k]) {
      const EstimateResult base = solve_multistart(scene, reading, identity, options.solver);
      const EstimateResult refined =
          refine_with_gains(scene, reading, report.table, base, options.outer_iterations, options.solver);
      const double e0 = (tip_position(scene.chain, scene.base, base.gamma) - tips[k]).norm();
      const double e1 = (tip_position(scene.chain, scene.base, refined.gamma) - tips[k]).norm();
      out.mean_error_uncalibrated += e0;
      out.mean_error_calibrated += e1;
      out.max_error_uncalibrated = std::max(out.max_error_uncalibrated, e0);
      out.max_error_calibrated = std::max(out.max_error_calibrated, e1);
      if (refined.solver_status != SolverStatus::converged) ++out.failures;
    }
    out.mean_error_uncalibrated /= static_cast<double>(samples[k].size());
    out.mean_error_calibrated /= static_cast<double>(samples[k].size());
  });

  for (const ReplayConfigResult& c : report.configs) {
    report.mean_error_uncalibrated += c.mean_error_uncalibrated;
    report.mean_error_calibrated += c.mean_error_calibrated;
  }
  report.trials = static_cast<int>(unique.size()) * options.samples;
  report.mean_error_uncalibrated /= static_cast<double>(report.configs.size());
  report.mean_error_calibrated /= static_cast<double>(report.configs.size());
  return report;
}

}  // namespace ballchain

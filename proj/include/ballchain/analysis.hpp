#pragma once

// Workspace studies: observability maps (reciprocal condition number of the
// measurement Jacobian) and Monte Carlo noise sensitivity of the tip
// estimate, plus an end-to-end simulated calibration/estimation replay.

#include "ballchain/estimator.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ballchain {

/// (phi, psi) grid in radians. Values are kept as declared (negative psi is
/// allowed and means a bend in the phi + 180 deg plane); cell() returns the
/// canonical bend.
struct WorkspaceGrid {
  std::vector<double> phi_values;
  std::vector<double> psi_values;

  std::size_t phi_count() const { return phi_values.size(); }
  std::size_t psi_count() const { return psi_values.size(); }
  std::size_t cell_count() const { return phi_count() * psi_count(); }
  /// Row-major cell index, phi outer.
  std::size_t index(std::size_t i_phi, std::size_t i_psi) const { return i_phi * psi_count() + i_psi; }
  BendConfig cell(std::size_t i_phi, std::size_t i_psi) const {
    return bend_from_angles(psi_values[i_psi], phi_values[i_phi]);
  }
  std::vector<BendConfig> cells() const;

  /// Throws ConfigError on empty or non-finite axes, or |psi| > pi.
  void validate() const;

  /// Inclusive degree ranges.
  static WorkspaceGrid from_degrees(double phi_start, double phi_stop, double phi_step,
                                    double psi_start, double psi_stop, double psi_step);
  static WorkspaceGrid from_degree_lists(const std::vector<double>& phi_deg,
                                         const std::vector<double>& psi_deg);
};

/// phi in [-180, 180], psi in [0, 180] at the given step (10 deg -> 37 x 19).
WorkspaceGrid observability_grid(double step_deg = 10.0);

/// phi = j * 90 deg (j = 0..2), psi = k * 30 deg (k = -6..6).
WorkspaceGrid sensitivity_grid();

/// phi = j * 90 deg (j = 0..4), psi = k * 30 deg (k = 0..6), duplicates of
/// the same canonical bend removed (first occurrence kept).
std::vector<BendConfig> replay_configs();

/// Drops configurations whose canonical gamma repeats an earlier one.
std::vector<BendConfig> unique_configs(const std::vector<BendConfig>& configs);

struct ObservabilityMap {
  WorkspaceGrid grid;
  Eigen::MatrixXd chi;  // rows: phi, cols: psi; NaN where the model failed
  std::vector<std::string> diagnostics;
};

/// Reciprocal condition number of the 3m x 2 Jacobian for one bend.
double reciprocal_condition(const Jacobian& jac);

ObservabilityMap observability_map(const SceneSpec& scene, const WorkspaceGrid& grid,
                                   int threads = 1);

struct SensitivityOptions {
  /// Nominal noise fractions; the per-channel standard deviation is
  /// level / 3 * |q_bar| (so 99.7 % of draws lie within `level`).
  std::vector<double> noise_levels{0.0, 0.05, 0.10};
  int samples = 100;
  std::uint64_t seed = 1;
  int threads = 1;
  SolverSettings solver;
};

struct SensitivityReport {
  WorkspaceGrid grid;
  std::vector<double> noise_levels;
  int samples = 0;
  std::uint64_t seed = 0;
  double chain_length = 0.0;
  /// Indexed [cell * level_count + level]; metres.
  std::vector<double> max_tip_error;
  /// Samples whose solve did not report convergence.
  std::vector<int> failures;

  std::size_t level_count() const { return noise_levels.size(); }
  double error(std::size_t i_phi, std::size_t i_psi, std::size_t level) const {
    return max_tip_error[grid.index(i_phi, i_psi) * level_count() + level];
  }
  int failure_count(std::size_t i_phi, std::size_t i_psi, std::size_t level) const {
    return failures[grid.index(i_phi, i_psi) * level_count() + level];
  }
};

/// Standard-normal draws for one (cell, sample): identical across noise
/// levels so errors respond to the level alone.
Eigen::VectorXd noise_draw(std::uint64_t seed, std::size_t cell, std::size_t sample,
                           Eigen::Index channels);

SensitivityReport sensitivity_sweep(const SceneSpec& scene, const WorkspaceGrid& grid,
                                    const SensitivityOptions& options);

struct ReplayOptions {
  double noise_level = 0.05;  // same meaning as SensitivityOptions
  int samples = 10;
  std::uint64_t seed = 1;
  /// Per-channel multiplier on the noise standard deviation; empty = ones.
  Eigen::VectorXd channel_noise_scale;
  int outer_iterations = 2;
  int threads = 1;
  SolverSettings solver;
};

struct ReplayConfigResult {
  BendConfig gamma;
  double mean_error_uncalibrated = 0.0;  // identity gains, no refinement [m]
  double max_error_uncalibrated = 0.0;
  double mean_error_calibrated = 0.0;    // after outer_iterations rounds [m]
  double max_error_calibrated = 0.0;
  int failures = 0;
};

struct ReplayReport {
  std::vector<ReplayConfigResult> configs;
  GainTable table;
  int trials = 0;
  double mean_error_uncalibrated = 0.0;
  double mean_error_calibrated = 0.0;
  double chain_length = 0.0;
};

/// Simulated calibration/estimation protocol: per config draw `samples`
/// noisy readings, calibrate one gain matrix per config from them (unless
/// `table` is given), then estimate every sample with identity gains and
/// with gain-scheduled refinement. Duplicate configs are dropped.
ReplayReport replay_experiment(const SceneSpec& scene, const std::vector<BendConfig>& configs,
                               const ReplayOptions& options, const GainTable* table = nullptr);

/// Runs body(i) for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace ballchain

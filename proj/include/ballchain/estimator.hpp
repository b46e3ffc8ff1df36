#pragma once

// Shape estimation: weighted nonlinear least squares on the bend vector,
// with per-region gain scheduling and gain calibration from repeated samples.

#include "ballchain/field.hpp"

#include <Eigen/Core>

#include <string_view>
#include <vector>

namespace ballchain {

/// Per-channel weights (diagonal of K), 1/Tesla.
using GainVector = Eigen::VectorXd;

struct GainEntry {
  BendConfig center;
  GainVector gain;
};

/// Gain matrices K_k with their workspace-region centres. Regions are the
/// Voronoi cells of the centres in gamma space.
class GainTable {
 public:
  GainTable() = default;
  /// Validates: equal gain lengths, gains finite and >= 0, centres distinct.
  explicit GainTable(std::vector<GainEntry> entries);

  const std::vector<GainEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  std::size_t channel_count() const { return entries_.empty() ? 0 : entries_.front().gain.size(); }

 private:
  std::vector<GainEntry> entries_;
};

/// Index of the nearest centre; ties go to the lower index.
std::size_t assign_manifold(const GainTable& table, const BendConfig& gamma);

enum class SolverStatus { converged, max_iters, degenerate_jacobian };

std::string_view status_name(SolverStatus status);

struct EstimateResult {
  BendConfig gamma;
  double residual_norm = 0.0;  // |K (q_bar - q(gamma))|
  int iterations_outer = 0;
  int solver_iterations = 0;   // LM iterations of the final solve
  SolverStatus solver_status = SolverStatus::converged;
};

struct SolverSettings {
  double initial_damping = 1e-3;
  double damping_up = 10.0;
  double damping_down = 10.0;
  /// Stop when the weighted residual norm decreases by less than this, in
  /// Tesla-equivalent units (scaled by the mean gain).
  double residual_tolerance = 1e-12;
  double step_tolerance = 1e-9;  // rad
  int max_iterations = 200;
  double degenerate_ratio = 1e-14;
  double jacobian_step = kJacobianStep;
};

/// Levenberg-Marquardt on |K (q_bar - q(gamma))|^2 from one initial guess.
/// Iterates are kept canonical (|gamma| <= pi).
EstimateResult solve_weighted(const SceneSpec& scene, const MeasurementVector& reading,
                              const GainVector& gain, const BendConfig& init,
                              const SolverSettings& settings = {});

/// Initial guesses: the straight chain plus psi in {45, 90, 135} deg times
/// phi in {0, 90, 180, 270} deg.
const std::vector<BendConfig>& multistart_seeds();

/// solve_weighted from every seed; lowest weighted residual wins (first seed
/// on ties).
EstimateResult solve_multistart(const SceneSpec& scene, const MeasurementVector& reading,
                                const GainVector& gain, const SolverSettings& settings = {});

/// Gain-scheduled refinement: `rounds` times, pick the region of the current
/// estimate, switch to its gains and re-solve warm-started from it.
EstimateResult refine_with_gains(const SceneSpec& scene, const MeasurementVector& reading,
                                 const GainTable& table, const EstimateResult& start, int rounds,
                                 const SolverSettings& settings = {});

/// Identity-gain multi-start solve followed by `outer_iterations` rounds of
/// (pick region -> set its gains -> re-solve warm-started). Throws
/// ConfigError if outer_iterations > 0 and the table is empty or sized for a
/// different sensor count.
EstimateResult estimate_shape(const SceneSpec& scene, const MeasurementVector& reading,
                              const GainTable& table, int outer_iterations,
                              const SolverSettings& settings = {});

inline constexpr double kGainClamp = 1e9;  // 1/T

/// Per config: e_M = max_t |sample_t - q(center)| per channel, K = 1/e_M
/// clamped at kGainClamp.
GainTable calibrate_gains(const SceneSpec& scene, const std::vector<BendConfig>& centers,
                          const std::vector<std::vector<MeasurementVector>>& samples);

/// Per-channel maximum deviation from the model for one config.
Eigen::VectorXd max_channel_error(const MeasurementVector& prediction,
                                  const std::vector<MeasurementVector>& samples);

}  // namespace ballchain

#include "ballchain/estimator.hpp"

#include "ballchain/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>

namespace ballchain {

GainTable::GainTable(std::vector<GainEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    const GainVector& g = entries_[k].gain;
    const std::string field = "gain_table.entries[" + std::to_string(k) + "]";
    if (g.size() != entries_.front().gain.size()) {
      throw ConfigError(field + ".gain has a different channel count");
    }
    if (!g.allFinite() || (g.array() < 0.0).any()) {
      throw ConfigError(field + ".gain must be finite and >= 0");
    }
    for (std::size_t j = 0; j < k; ++j) {
      if ((entries_[j].center.vector() - entries_[k].center.vector()).norm() <= 1e-12) {
        throw ConfigError(field + ".center duplicates entry " + std::to_string(j));
      }
    }
  }
}

std::size_t assign_manifold(const GainTable& table, const BendConfig& gamma) {
  if (table.empty()) throw ConfigError("assign_manifold: gain table is empty");
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < table.size(); ++k) {
    const double dist = (gamma.vector() - table.entries()[k].center.vector()).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = k;
    }
  }
  return best;
}

std::string_view status_name(SolverStatus status) {
  switch (status) {
    case SolverStatus::converged: return "converged";
    case SolverStatus::max_iters: return "max_iters";
    case SolverStatus::degenerate_jacobian: return "degenerate_jacobian";
  }
  return "unknown";
}

namespace {

struct Evaluation {
  Eigen::VectorXd residual;  // K (q_bar - q)
  double norm = 0.0;
};

Evaluation evaluate(const SceneSpec& scene, const MeasurementVector& reading,
                    const GainVector& gain, const BendConfig& gamma) {
  Evaluation e;
  e.residual = gain.cwiseProduct(reading - forward_measurement(scene, gamma));
  e.norm = e.residual.norm();
  return e;
}

bool degenerate(const Eigen::Matrix<double, Eigen::Dynamic, 2>& jac, double ratio) {
  const Eigen::Vector2d sv = Eigen::JacobiSVD<Eigen::Matrix<double, Eigen::Dynamic, 2>>(jac).singularValues();
  return !(sv[1] >= ratio * sv[0]) || sv[0] == 0.0;
}

}  // namespace

EstimateResult solve_weighted(const SceneSpec& scene, const MeasurementVector& reading,
                              const GainVector& gain, const BendConfig& init,
                              const SolverSettings& settings) {
  if (reading.size() != static_cast<Eigen::Index>(scene.channel_count())) {
    throw ConfigError("reading has " + std::to_string(reading.size()) + " channels, scene has " +
                      std::to_string(scene.channel_count()));
  }
  if (gain.size() != reading.size()) throw ConfigError("gain length does not match reading");
  if (!gain.allFinite()) throw ConfigError("gain must be finite");
  if (!reading.allFinite()) throw ModelError("reading contains non-finite values");

  const double mean_gain = gain.cwiseAbs().mean();
  const double residual_tol = settings.residual_tolerance * (mean_gain > 0.0 ? mean_gain : 1.0);

  BendConfig gamma = init.canonical();
  Evaluation current = evaluate(scene, reading, gain, gamma);
  double damping = settings.initial_damping;

  EstimateResult result;
  result.solver_status = SolverStatus::max_iters;

  // J_r = d(residual)/d(gamma) = K * J, with J = -dq/dgamma.
  Eigen::Matrix<double, Eigen::Dynamic, 2> jac =
      gain.asDiagonal() * measurement_jacobian(scene, gamma, settings.jacobian_step);

  int iter = 0;
  while (iter < settings.max_iterations) {
    ++iter;
    const Eigen::Matrix2d normal = jac.transpose() * jac;
    const Eigen::Vector2d grad = jac.transpose() * current.residual;
    Eigen::Matrix2d damped = normal;
    // Marquardt scaling keeps the iteration invariant under uniform gain scaling.
    for (int a = 0; a < 2; ++a) {
      const double diag = normal(a, a) > 0.0 ? normal(a, a) : 1.0;
      damped(a, a) += damping * diag;
    }
    const Eigen::Vector2d step = -damped.ldlt().solve(grad);
    if (!step.allFinite()) {
      result.solver_status = SolverStatus::degenerate_jacobian;
      break;
    }

    const BendConfig candidate = BendConfig(gamma.vector() + step).canonical();
    const Evaluation trial = evaluate(scene, reading, gain, candidate);
    if (trial.norm < current.norm) {
      const double decrease = current.norm - trial.norm;
      const double moved = (candidate.vector() - gamma.vector()).norm();
      gamma = candidate;
      current = trial;
      damping /= settings.damping_down;
      if (decrease < residual_tol || moved < settings.step_tolerance) {
        result.solver_status = SolverStatus::converged;
        break;
      }
      jac = gain.asDiagonal() * measurement_jacobian(scene, gamma, settings.jacobian_step);
    } else {
      damping *= settings.damping_up;
      if (step.norm() < settings.step_tolerance || current.norm == 0.0) {
        result.solver_status = SolverStatus::converged;
        break;
      }
    }
  }

  result.gamma = gamma;
  result.residual_norm = current.norm;
  result.solver_iterations = iter;
  if (result.solver_status != SolverStatus::degenerate_jacobian) {
    const auto final_jac = gain.asDiagonal() * measurement_jacobian(scene, gamma, settings.jacobian_step);
    if (degenerate(final_jac, settings.degenerate_ratio)) {
      result.solver_status = SolverStatus::degenerate_jacobian;
    }
  }
  return result;
}

const std::vector<BendConfig>& multistart_seeds() {
  static const std::vector<BendConfig> seeds = [] {
    std::vector<BendConfig> out{BendConfig()};
    for (double psi : {45.0, 90.0, 135.0}) {
      for (double phi : {0.0, 90.0, 180.0, 270.0}) {
        out.push_back(bend_from_angles(deg_to_rad(psi), deg_to_rad(phi)));
      }
    }
    return out;
  }();
  return seeds;
}

EstimateResult solve_multistart(const SceneSpec& scene, const MeasurementVector& reading,
                                const GainVector& gain, const SolverSettings& settings) {
  EstimateResult best;
  bool have = false;
  for (const BendConfig& seed : multistart_seeds()) {
    EstimateResult r = solve_weighted(scene, reading, gain, seed, settings);
    if (!have || r.residual_norm < best.residual_norm) {
      best = r;
      have = true;
    }
  }
  return best;
}

EstimateResult estimate_shape(const SceneSpec& scene, const MeasurementVector& reading,
                              const GainTable& table, int outer_iterations,
                              const SolverSettings& settings) {
  if (outer_iterations < 0) throw ConfigError("outer_iterations must be >= 0");
  if (outer_iterations > 0) {
    if (table.empty()) throw ConfigError("gain table is required when outer_iterations > 0");
    if (table.channel_count() != scene.channel_count()) {
      throw ConfigError("gain table has " + std::to_string(table.channel_count()) +
                        " channels, scene has " + std::to_string(scene.channel_count()));
    }
  }

  const GainVector identity = GainVector::Ones(static_cast<Eigen::Index>(scene.channel_count()));
  const EstimateResult initial = solve_multistart(scene, reading, identity, settings);
  return refine_with_gains(scene, reading, table, initial, outer_iterations, settings);
}

EstimateResult refine_with_gains(const SceneSpec& scene, const MeasurementVector& reading,
                                 const GainTable& table, const EstimateResult& start, int rounds,
                                 const SolverSettings& settings) {
  if (rounds > 0 && table.empty()) throw ConfigError("gain table is required for refinement");
  EstimateResult result = start;
  for (int round = 0; round < rounds; ++round) {
    const GainEntry& entry = table.entries()[assign_manifold(table, result.gamma)];
    result = solve_weighted(scene, reading, entry.gain, result.gamma, settings);
  }
  result.iterations_outer = start.iterations_outer + rounds;
  return result;
}

Eigen::VectorXd max_channel_error(const MeasurementVector& prediction,
                                  const std::vector<MeasurementVector>& samples) {
  Eigen::VectorXd err = Eigen::VectorXd::Zero(prediction.size());
  for (const MeasurementVector& s : samples) {
    if (s.size() != prediction.size()) throw ConfigError("sample channel count mismatch");
    err = err.cwiseMax((s - prediction).cwiseAbs());
  }
  return err;
}

GainTable calibrate_gains(const SceneSpec& scene, const std::vector<BendConfig>& centers,
                          const std::vector<std::vector<MeasurementVector>>& samples) {
  if (centers.size() != samples.size()) {
    throw ConfigError("calibrate_gains: one sample group per config is required");
  }
  std::vector<GainEntry> entries;
  entries.reserve(centers.size());
  for (std::size_t k = 0; k < centers.size(); ++k) {
    if (samples[k].empty()) {
      throw ConfigError("calibrate_gains: config " + std::to_string(k) + " has no samples");
    }
    const Eigen::VectorXd e_max = max_channel_error(forward_measurement(scene, centers[k]), samples[k]);
    GainVector gain(e_max.size());
    for (Eigen::Index c = 0; c < e_max.size(); ++c) {
      gain[c] = e_max[c] > 1.0 / kGainClamp ? 1.0 / e_max[c] : kGainClamp;
    }
    entries.push_back({centers[k], std::move(gain)});
  }
  return GainTable(std::move(entries));
}

}  // namespace ballchain

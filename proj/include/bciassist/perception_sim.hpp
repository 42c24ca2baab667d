#pragma once

// Pouring perception: refraction-corrected level from a depth reading, a
// level-only Kalman filter, and the stop-signal loop.

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

#include "bciassist/common.hpp"

namespace bciassist {

struct LiquidObservation {
  double apparent_depth = 0.0;    // m
  double view_angle = 0.0;        // rad from the surface normal, in air
  double refractive_index = 1.0;
};

// d = d_a * tan(theta_i) / tan(theta_t), sin(theta_i) = n sin(theta_t);
// n * d_a at normal incidence.
double true_depth(const LiquidObservation& obs);
// Inverse: what the sensor would report for a real depth d.
double apparent_depth(double depth, double view_angle, double refractive_index);
// d / d_a for the given geometry.
double depth_scale(double view_angle, double refractive_index);

struct LevelFilter {
  double estimate = 0.0;
  double variance = 1e-6;
  double process_noise = 1e-6;      // m^2 per step
  double measurement_noise = 1e-5;  // m^2
};

// Predict with the inflow, then update (skipped when the measurement is
// missing). Non-positive noise variances are rejected.
LevelFilter filter_step(const LevelFilter& f, std::optional<double> measurement, double inflow);

struct CupModel {
  double interior_height = 0.10;
  double fill_target = 0.07;
};

struct PourConfig {
  CupModel cup;
  double refractive_index = 1.33;
  double view_angle = 0.5235987755982988;  // 30 deg
  double flow_rate = 0.004;      // m/s of level rise
  double timestep = 0.05;        // s
  double stop_latency = 0.25;    // s the pour continues after the stop signal
  double flow_jitter = 0.0;      // relative std of the per-session flow rate
  double sensor_noise = 0.0;     // std of the apparent depth, m
  double process_noise = 1e-6;
  // Measurements are dropped between these fractions of the nominal pour
  // duration (fill_target / flow_rate); the pouring bottle blocks the view.
  std::optional<std::pair<double, double>> occlusion;

  // The occlusion window only applies when "occluded" is true.
  static PourConfig from_json(const nlohmann::json& liquid);
};

struct PourResult {
  double final_error = 0.0;  // final true level - fill target, m
  double stop_error = 0.0;   // true level at the stop signal - fill target, m
  double stop_time = 0.0;
  double actual_flow = 0.0;
  std::size_t steps = 0;
  bool overflowed = false;
};

PourResult pour_session(const PourConfig& config, std::uint64_t seed);

struct PourStats {
  double mean_abs_mm = 0.0;
  double mean_mm = 0.0;
  double std_mm = 0.0;
  std::size_t runs = 0;
};

PourStats pour_batch(const PourConfig& config, std::size_t runs, std::uint64_t seed);

// Simulated mouth localization: ground truth plus isotropic Gaussian noise.
Eigen::Vector3d localize_mouth(const Eigen::Vector3d& truth, double noise, Rng& rng);
inline bool within_tolerance(const Eigen::Vector3d& planned, const Eigen::Vector3d& truth,
                             double tolerance) {
  return (planned - truth).norm() <= tolerance;
}

}  // namespace bciassist

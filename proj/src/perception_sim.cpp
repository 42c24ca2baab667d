#include "bciassist/perception_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace bciassist {

namespace {

void check_geometry(double view_angle, double n) {
  if (!(view_angle >= 0.0 && view_angle < std::numbers::pi / 2)) {
    throw Error(ErrorCode::invalid_argument, "view angle must be in [0, pi/2)");
  }
  if (!(n >= 1.0) || !std::isfinite(n)) {
    throw Error(ErrorCode::invalid_argument, "refractive index must be >= 1");
  }
}

}  // namespace

double depth_scale(double view_angle, double n) {
  check_geometry(view_angle, n);
  // tan(ti)/tan(tt) = n cos(tt)/cos(ti), which stays finite at ti -> 0
  const double st = std::sin(view_angle) / n;
  const double ct = std::sqrt(1.0 - st * st);
  return n * ct / std::cos(view_angle);
}

double true_depth(const LiquidObservation& obs) {
  if (!(obs.apparent_depth >= 0.0)) {
    throw Error(ErrorCode::invalid_argument, "apparent depth must be >= 0");
  }
  return obs.apparent_depth * depth_scale(obs.view_angle, obs.refractive_index);
}

double apparent_depth(double depth, double view_angle, double n) {
  return depth / depth_scale(view_angle, n);
}

LevelFilter filter_step(const LevelFilter& f, std::optional<double> z, double inflow) {
  if (!(f.process_noise > 0.0) || !(f.measurement_noise > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "noise variances must be positive");
  }
  if (!std::isfinite(inflow) || (z && !std::isfinite(*z))) {
    throw Error(ErrorCode::invalid_argument, "non-finite filter input");
  }
  LevelFilter out = f;
  out.estimate += inflow;
  out.variance += f.process_noise;
  if (z) {
    const double k = out.variance / (out.variance + f.measurement_noise);
    out.estimate += k * (*z - out.estimate);
    out.variance *= 1.0 - k;
  }
  return out;
}

PourConfig PourConfig::from_json(const nlohmann::json& j) {
  PourConfig c;
  c.refractive_index = j.value("refractive_index", c.refractive_index);
  if (j.contains("view_angle_deg")) {
    c.view_angle = j["view_angle_deg"].get<double>() * std::numbers::pi / 180.0;
  }
  c.cup.interior_height = j.value("interior_height", c.cup.interior_height);
  c.cup.fill_target = j.value("fill_target", c.cup.fill_target);
  c.flow_rate = j.value("flow_rate", c.flow_rate);
  c.timestep = j.value("timestep", c.timestep);
  c.stop_latency = j.value("stop_latency", c.stop_latency);
  c.flow_jitter = j.value("flow_jitter", c.flow_jitter);
  c.sensor_noise = j.value("sensor_noise", c.sensor_noise);
  c.process_noise = j.value("process_noise", c.process_noise);
  if (j.value("occluded", false)) {
    c.occlusion = std::pair{j["occlusion"].at("start").get<double>(),
                            j["occlusion"].at("end").get<double>()};
  }
  return c;
}

PourResult pour_session(const PourConfig& c, std::uint64_t seed) {
  if (!(c.flow_rate > 0.0) || !(c.timestep > 0.0) || c.stop_latency < 0.0 || c.sensor_noise < 0.0) {
    throw Error(ErrorCode::invalid_argument, "invalid pour configuration");
  }
  if (!(c.cup.fill_target > 0.0 && c.cup.fill_target <= c.cup.interior_height)) {
    throw Error(ErrorCode::invalid_argument, "fill target must lie in (0, interior height]");
  }
  const double scale = depth_scale(c.view_angle, c.refractive_index);

  Rng rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  PourResult r;
  r.actual_flow = c.flow_rate * std::max(0.2, 1.0 + c.flow_jitter * unit(rng));

  LevelFilter f;
  f.estimate = 0.0;
  f.variance = 1e-6;
  f.process_noise = c.process_noise;
  // a perfect sensor still needs a positive variance; keep it negligible
  f.measurement_noise = std::max(1e-14, std::pow(c.sensor_noise * scale, 2));

  const double nominal = c.cup.fill_target / c.flow_rate;
  const double inflow = c.flow_rate * c.timestep;
  const std::size_t max_steps = static_cast<std::size_t>(std::ceil(20.0 * nominal / c.timestep));
  double level = 0.0, t = 0.0;
  bool stopped = false;
  for (std::size_t k = 0; k < max_steps && !stopped; ++k) {
    t += c.timestep;
    level += r.actual_flow * c.timestep;
    ++r.steps;
    if (level >= c.cup.interior_height) {
      r.overflowed = true;
      level = c.cup.interior_height;
      break;
    }
    std::optional<double> z;
    const bool blocked = c.occlusion && t >= c.occlusion->first * nominal &&
                         t < c.occlusion->second * nominal;
    if (!blocked) {
      const double da = std::max(0.0, apparent_depth(level, c.view_angle, c.refractive_index) +
                                          c.sensor_noise * unit(rng));
      z = true_depth({da, c.view_angle, c.refractive_index});
    }
    f = filter_step(f, z, inflow);
    if (f.estimate >= c.cup.fill_target) {
      stopped = true;
      r.stop_time = t;
      r.stop_error = level - c.cup.fill_target;
    }
  }
  if (stopped) level = std::min(c.cup.interior_height, level + r.actual_flow * c.stop_latency);
  r.overflowed = r.overflowed || level >= c.cup.interior_height;
  r.final_error = level - c.cup.fill_target;
  return r;
}

PourStats pour_batch(const PourConfig& config, std::size_t runs, std::uint64_t seed) {
  PourStats s;
  s.runs = runs;
  if (runs == 0) return s;
  std::vector<double> e;
  for (std::size_t i = 0; i < runs; ++i) {
    e.push_back(1000.0 * pour_session(config, derive_seed(seed, i)).final_error);
  }
  for (double x : e) {
    s.mean_mm += x;
    s.mean_abs_mm += std::abs(x);
  }
  s.mean_mm /= static_cast<double>(runs);
  s.mean_abs_mm /= static_cast<double>(runs);
  if (runs > 1) {
    double ss = 0.0;
    for (double x : e) ss += (x - s.mean_mm) * (x - s.mean_mm);
    s.std_mm = std::sqrt(ss / static_cast<double>(runs - 1));
  }
  return s;
}

Eigen::Vector3d localize_mouth(const Eigen::Vector3d& truth, double noise, Rng& rng) {
  if (noise < 0.0) throw Error(ErrorCode::invalid_argument, "negative localization noise");
  if (noise == 0.0) return truth;
  std::normal_distribution<double> n(0.0, noise);
  return truth + Eigen::Vector3d(n(rng), n(rng), n(rng));
}

}  // namespace bciassist

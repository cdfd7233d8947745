#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "collprob/gaussian.hpp"
#include "collprob/geometry.hpp"

namespace collprob {

// Lateral speed floor; keeps the velocity covariance invertible while the
// tabulated speed uncertainty is purely longitudinal.
inline constexpr double kLateralSpeedEps = 1e-3;

struct GaussianTrajectory {
  double dt = 0.0;
  std::vector<PoseVelocityGaussian> states;
  RectangleDims shape;

  std::size_t steps() const { return states.size(); }
  double horizon() const {
    return states.empty() ? 0.0 : dt * static_cast<double>(states.size() - 1);
  }
  RectangleSpec footprint_spec_at(std::size_t i) const {
    const auto& s = states[i];
    return {shape.length, shape.width,
            {s.mean[kX], s.mean[kY]}, s.mean[kTheta]};
  }
};

// Initial agent description in Table-1 form: position with covariance, speed
// along the heading with a scalar deviation, heading with a scalar deviation.
struct AgentInit {
  Vec2 position;
  Eigen::Matrix2d position_cov = Eigen::Matrix2d::Zero();
  double speed = 0.0;
  double sigma_speed = 0.0;
  double heading = 0.0;
  double sigma_heading = 0.0;
  RectangleDims shape;
};

// Joint (x, y, theta, vx, vy) Gaussian at t = 0. With heading uncertainty the
// speed-heading model v = s * dir(theta) is moment-matched to first order:
// lateral velocity variance (v*sigma_theta)^2 and cross-covariance
// Sigma_v_theta = v * sigma_theta^2 * perp(heading).
inline PoseVelocityGaussian initial_state(const AgentInit& a,
                                          bool orientation_enabled) {
  const double sth = orientation_enabled ? a.sigma_heading : 0.0;
  const Eigen::Vector2d dir(std::cos(a.heading), std::sin(a.heading));
  const Eigen::Vector2d perp(-dir[1], dir[0]);
  PoseVelocityGaussian s;
  s.mean << a.position.x, a.position.y, a.heading, a.speed * dir[0],
      a.speed * dir[1];
  s.cov.topLeftCorner<2, 2>() = a.position_cov;
  s.cov(kTheta, kTheta) = sth * sth;
  const double lat_var =
      a.speed * a.speed * sth * sth + kLateralSpeedEps * kLateralSpeedEps;
  Eigen::Matrix2d r;
  r.col(0) = dir;
  r.col(1) = perp;
  Eigen::Matrix2d sv = Eigen::Matrix2d::Zero();
  sv(0, 0) = a.sigma_speed * a.sigma_speed;
  sv(1, 1) = lat_var;
  s.cov.bottomRightCorner<2, 2>() = r * sv * r.transpose();
  const Eigen::Vector2d svth = a.speed * sth * sth * perp;
  s.cov(kVx, kTheta) = svth[0];
  s.cov(kVy, kTheta) = svth[1];
  s.cov(kTheta, kVx) = svth[0];
  s.cov(kTheta, kVy) = svth[1];
  return s;
}

// Exact linear constant-velocity map x(tau) = x(0) + v(0) tau with zero
// process noise: mean and every covariance block follow F(tau) S F(tau)^T.
inline PoseVelocityGaussian propagate_state(const PoseVelocityGaussian& initial,
                                            double tau) {
  Matrix5 f = Matrix5::Identity();
  f(kX, kVx) = tau;
  f(kY, kVy) = tau;
  PoseVelocityGaussian out;
  out.mean = f * initial.mean;
  out.cov = f * initial.cov * f.transpose();
  return out;
}

inline GaussianTrajectory propagate_cv(const PoseVelocityGaussian& initial,
                                       double dt, double horizon,
                                       RectangleDims shape) {
  if (!(dt > 0.0) || horizon < 0.0) {
    throw std::invalid_argument("propagate_cv: need dt > 0 and horizon >= 0");
  }
  GaussianTrajectory traj;
  traj.dt = dt;
  traj.shape = shape;
  const auto n = static_cast<std::size_t>(std::llround(horizon / dt)) + 1;
  traj.states.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    traj.states.push_back(propagate_state(initial, dt * static_cast<double>(k)));
  }
  return traj;
}

struct ScenarioSpec {
  AgentInit ego;
  std::vector<AgentInit> obstacles;
  double dt = 0.1;
  double horizon = 3.0;
  bool orientation_enabled = false;
};

// The two simulated scenarios. Table-1 positions, covariances, speeds and
// deviations; vehicle size and approach headings are the calibrated values
// that reproduce the published probability curves.
inline ScenarioSpec build_scenario(int id, bool orientation_enabled) {
  if (id != 1 && id != 2) {
    throw std::invalid_argument("build_scenario: unknown scenario id");
  }
  const RectangleDims car{5.0, 2.02};
  ScenarioSpec spec;
  spec.dt = 0.1;
  spec.horizon = 3.0;
  spec.orientation_enabled = orientation_enabled;
  spec.ego.position = {0.0, 0.0};
  spec.ego.position_cov = Eigen::Vector2d(0.1 * 0.1, 0.05 * 0.05).asDiagonal();
  spec.ego.speed = 0.0;
  spec.ego.sigma_speed = 0.1;
  spec.ego.heading = 0.0;
  spec.ego.sigma_heading = 0.1;
  spec.ego.shape = car;
  AgentInit obs;
  obs.position_cov = Eigen::Vector2d(0.2 * 0.2, 0.1 * 0.1).asDiagonal();
  obs.sigma_speed = 0.1;
  obs.sigma_heading = 0.1;
  obs.shape = car;
  if (id == 1) {
    obs.position = {5.5, 5.5};
    obs.speed = 1.4;
    obs.heading = -3.0 * M_PI / 4.0;
  } else {
    obs.position = {-1.5, 6.0};
    obs.speed = 3.25;
    obs.heading = -5.0 * M_PI / 8.0;
  }
  spec.obstacles.push_back(obs);
  return spec;
}

inline GaussianTrajectory agent_trajectory(const AgentInit& a, double dt,
                                           double horizon,
                                           bool orientation_enabled) {
  return propagate_cv(initial_state(a, orientation_enabled), dt, horizon, a.shape);
}

// Kalman-style symmetric uncertainty forecast along a constant-velocity
// obstacle track: Sigma_x(0) = sigma_pos^2 I, Sigma_v = sigma_v^2 I.
inline GaussianTrajectory forecast_uncertainty(const Vec2& position,
                                               const Vec2& velocity,
                                               double heading,
                                               RectangleDims shape, double dt,
                                               double horizon, double sigma_pos,
                                               double sigma_v) {
  if (!(sigma_pos > 0.0) || !(sigma_v > 0.0)) {
    throw std::invalid_argument("forecast_uncertainty: sigmas must be positive");
  }
  PoseVelocityGaussian s;
  s.mean << position.x, position.y, heading, velocity.x, velocity.y;
  s.cov.topLeftCorner<2, 2>() = sigma_pos * sigma_pos * Eigen::Matrix2d::Identity();
  s.cov.bottomRightCorner<2, 2>() =
      sigma_v * sigma_v * Eigen::Matrix2d::Identity();
  return propagate_cv(s, dt, horizon, shape);
}

// Per-timestep footprints inflated to cover the k-sigma positional region.
inline std::vector<ConvexPolygon> obb_3sigma(const GaussianTrajectory& traj,
                                             RectangleDims shape) {
  std::vector<ConvexPolygon> out;
  out.reserve(traj.states.size());
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    RectangleSpec spec = traj.footprint_spec_at(i);
    spec.length = shape.length;
    spec.width = shape.width;
    out.push_back(inflated_obb(spec, traj.states[i].position_cov(), 3.0));
  }
  return out;
}

}  // namespace collprob

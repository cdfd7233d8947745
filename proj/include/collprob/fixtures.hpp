#pragma once

#include <cmath>
#include <vector>

#include "collprob/io.hpp"
#include "collprob/prediction.hpp"
#include "collprob/riskeval.hpp"

namespace collprob {

inline std::vector<io::BatchObstacleSpec> cutin_obstacle_specs() {
  const RectangleDims car{5.0, 2.0};
  std::vector<io::BatchObstacleSpec> specs;
  for (const auto& [p, v] : {std::pair<Vec2, Vec2>{{13.2, 0.3}, {2.9, 0.0}},
                             {{-1.0, 3.55}, {10.5, 0.0}},
                             {{9.0, 3.55}, {4.6, -0.35}}}) {
    io::BatchObstacleSpec o;
    o.position = p;
    o.velocity = v;
    o.heading = std::atan2(v.y, v.x);
    o.shape = car;
    o.sigma_pos = 0.3;
    o.sigma_v = 0.15;
    specs.push_back(o);
  }
  return specs;
}

// Cut-in evaluation fixture: a slow lead vehicle in-lane plus two vehicles
// occupying the adjacent lane, forecast with the symmetric Kalman
// uncertainties. The 3-sigma tubes cover everything the 600 sampled
// candidates can reach, while the least-risk candidate (hard braking with a
// slight offset) carries only residual probability.
inline CandidateBatch make_cutin_batch(Method method = Method::kBoundary) {
  constexpr double dt = 0.1;
  constexpr double horizon = 3.0;
  constexpr int steps = 31;
  const RectangleDims car{5.0, 2.0};
  const double v0 = 10.0;

  CandidateBatch batch;
  batch.method = method;

  const auto quintic = [](double tau) {
    return ((6.0 * tau - 15.0) * tau + 10.0) * tau * tau * tau;
  };
  const auto quintic_rate = [](double tau) {
    return ((30.0 * tau - 60.0) * tau + 30.0) * tau * tau;
  };

  for (int si = 0; si < 30; ++si) {
    const double v_end = 11.6 * si / 29.0;
    for (int li = 0; li < 20; ++li) {
      const double y_end = -2.0 + 4.0 * li / 19.0;
      GaussianTrajectory traj;
      traj.dt = dt;
      traj.shape = car;
      traj.states.resize(steps);
      double x = 0.0;
      double v_prev = v0;
      for (int k = 0; k < steps; ++k) {
        const double t = dt * k;
        const double tau = t / horizon;
        const double v = v0 + (v_end - v0) * tau;
        if (k > 0) x += 0.5 * (v_prev + v) * dt;
        v_prev = v;
        const double y = y_end * quintic(tau);
        const double vy = y_end * quintic_rate(tau) / horizon;
        const double heading = std::atan2(vy, std::max(v, 0.3));
        PoseVelocityGaussian s;
        s.mean << x, y, heading, v, vy;
        traj.states[k] = s;
      }
      batch.candidates.push_back(std::move(traj));
    }
  }

  for (const io::BatchObstacleSpec& o : cutin_obstacle_specs()) {
    batch.obstacles.push_back(forecast_uncertainty(o.position, o.velocity,
                                                   o.heading, o.shape, dt,
                                                   horizon, o.sigma_pos,
                                                   o.sigma_v));
  }
  return batch;
}

}  // namespace collprob

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "collprob/boundary.hpp"
#include "collprob/montecarlo.hpp"
#include "collprob/overlap.hpp"
#include "collprob/prediction.hpp"
#include "collprob/series.hpp"

namespace collprob {

enum class Method {
  kMcState,
  kOverlap,
  kOverlapIndependent,
  kMcTraj,
  kBoundary,
  kConservativeObb,
};

inline const char* method_name(Method m) {
  switch (m) {
    case Method::kMcState: return "mc_state";
    case Method::kOverlap: return "overlap";
    case Method::kOverlapIndependent: return "overlap_independent";
    case Method::kMcTraj: return "mc_traj";
    case Method::kBoundary: return "boundary";
    case Method::kConservativeObb: return "conservative_obb";
  }
  return "?";
}

inline Method method_from_name(const std::string& s) {
  if (s == "mc_state") return Method::kMcState;
  if (s == "overlap" || s == "overlap-max") return Method::kOverlap;
  if (s == "overlap_independent" || s == "overlap-independent") {
    return Method::kOverlapIndependent;
  }
  if (s == "mc_traj") return Method::kMcTraj;
  if (s == "boundary" || s == "boundary-crossing") return Method::kBoundary;
  if (s == "conservative_obb" || s == "conservative-obb") {
    return Method::kConservativeObb;
  }
  throw std::invalid_argument("unknown method: " + s);
}

// Per-timestep spatial-overlap series for a pair of predicted trajectories.
// Heading uncertainty is handled by the joint two-agent quadrature.
inline ProbabilityTimeSeries overlap_series(const GaussianTrajectory& ego,
                                            const GaussianTrajectory& obs,
                                            const OverlapConfig& config) {
  detail::check_grids(ego, obs);
  ProbabilityTimeSeries out;
  out.dt = ego.dt;
  out.method = "overlap";
  out.values.reserve(ego.states.size());
  for (std::size_t k = 0; k < ego.states.size(); ++k) {
    out.values.push_back(overlap_probability_joint_orientation(
        ego.states[k], obs.states[k], ego.shape, obs.shape, config));
  }
  return out;
}

namespace detail {

// Rate of the relative state propagated s seconds past a grid state, against
// prebuilt heading volumes (the heading stays constant under the local
// constant-velocity interpolation, so the volume set is exact within the
// interval).
inline double rate_on_interval(const PoseVelocityGaussian& rel_grid_state,
                               double s, const ThetaVolumeSet& set,
                               const QuadratureRule& rule) {
  return rate_with_nodes(propagate_state(rel_grid_state, s), set, rule);
}

// Recursive trapezoid refinement of the rate integral over one grid interval.
// The scenario rates are narrow spikes (the volume sweeps past the density in
// a fraction of a step), so a fixed-step trapezoid can miss most of the mass.
inline double refine_interval(const PoseVelocityGaussian& rel_grid_state,
                              double s0, double s1, double r0, double r1,
                              const ThetaVolumeSet& set,
                              const QuadratureRule& rule, double tol,
                              int depth) {
  const double coarse = 0.5 * (r0 + r1) * (s1 - s0);
  const double sm = 0.5 * (s0 + s1);
  const double rm = rate_on_interval(rel_grid_state, sm, set, rule);
  const double fine = 0.25 * (r0 + 2.0 * rm + r1) * (s1 - s0);
  // Stop at the requested tolerance, at depth, or when the whole interval
  // cannot contribute appreciably (rate floors would otherwise keep the
  // trapezoid mismatch constant under subdivision).
  if (depth <= 0 || std::abs(fine - coarse) < tol ||
      std::max({r0, rm, r1}) * (s1 - s0) < 1e-9) {
    return fine;
  }
  return refine_interval(rel_grid_state, s0, sm, r0, rm, set, rule, 0.5 * tol,
                         depth - 1) +
         refine_interval(rel_grid_state, sm, s1, rm, r1, set, rule, 0.5 * tol,
                         depth - 1);
}

}  // namespace detail

// Boundary-crossing probability series with adaptive sub-step integration of
// the rate (relative states between grid points follow the constant-velocity
// interpolation of the inputs) on top of the initial-state overlap mass.
// refine_tol = 0 falls back to the plain trapezoid at the native timestep.
inline ProbabilityTimeSeries boundary_series(const GaussianTrajectory& ego,
                                             const GaussianTrajectory& obs,
                                             const CrossingConfig& config,
                                             double refine_tol = 1e-4,
                                             int max_depth = 6) {
  detail::check_grids(ego, obs);
  const std::size_t steps = ego.states.size();
  const double dt = ego.dt;
  const QuadratureRule& rule = gauss_legendre(config.quadrature_order);
  std::vector<PoseVelocityGaussian> rel(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    rel[k] = relative_state(ego.states[k], obs.states[k]).state;
  }

  // One heading-volume set per distinct (relative heading, sigma, ego
  // heading) triple; CV-propagated scenarios reuse a single set for the whole
  // series, curved candidates get one per step.
  struct Key {
    double mu, sigma, ego_heading;
    bool operator==(const Key& o) const {
      return mu == o.mu && sigma == o.sigma && ego_heading == o.ego_heading;
    }
  };
  std::vector<Key> keys(steps);
  std::vector<std::size_t> set_index(steps);
  std::vector<Key> unique_keys;
  for (std::size_t k = 0; k < steps; ++k) {
    keys[k] = {rel[k].mean[kTheta],
               config.theta_enabled
                   ? std::sqrt(std::max(0.0, rel[k].cov(kTheta, kTheta)))
                   : 0.0,
               ego.states[k].mean[kTheta]};
    std::size_t idx = unique_keys.size();
    for (std::size_t u = 0; u < unique_keys.size(); ++u) {
      if (unique_keys[u] == keys[k]) {
        idx = u;
        break;
      }
    }
    if (idx == unique_keys.size()) unique_keys.push_back(keys[k]);
    set_index[k] = idx;
  }
  std::vector<detail::ThetaVolumeSet> sets;
  sets.reserve(unique_keys.size());
  for (const Key& key : unique_keys) {
    const RectangleSpec ego_spec{ego.shape.length, ego.shape.width,
                                 {0.0, 0.0}, key.ego_heading};
    sets.push_back(detail::ThetaVolumeSet::build(key.mu, key.sigma, ego_spec,
                                                 obs.shape,
                                                 config.theta_truncation,
                                                 config.quadrature_order));
  }

  std::vector<double> rates(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    rates[k] = detail::rate_with_nodes(rel[k], sets[set_index[k]], rule);
  }

  OverlapConfig oc;
  oc.quadrature_order = config.quadrature_order;
  oc.theta_truncation = config.theta_truncation;
  oc.theta_enabled = config.theta_enabled;
  const double initial = overlap_probability_joint_orientation(
      ego.states[0], obs.states[0], ego.shape, obs.shape, oc);

  ProbabilityTimeSeries out;
  out.dt = dt;
  out.method = "boundary";
  out.values.resize(steps);
  double cum = initial;
  out.values[0] = std::min(cum, 1.0);
  for (std::size_t k = 1; k < steps; ++k) {
    double inc;
    const detail::ThetaVolumeSet& set = sets[set_index[k - 1]];
    if (refine_tol > 0.0 &&
        !(rates[k - 1] == 0.0 && rates[k] == 0.0 &&
          detail::interval_certainly_zero(rel[k - 1], rel[k], set))) {
      inc = detail::refine_interval(rel[k - 1], 0.0, dt, rates[k - 1], rates[k],
                                    set, rule, refine_tol, max_depth);
    } else {
      inc = 0.5 * (rates[k - 1] + rates[k]) * dt;
    }
    cum += inc;
    out.values[k] = config.clamp_to_unity ? std::min(cum, 1.0) : cum;
  }
  return out;
}

}  // namespace collprob

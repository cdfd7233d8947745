#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "collprob/gaussian.hpp"
#include "collprob/geometry.hpp"
#include "collprob/overlap.hpp"
#include "collprob/quadrature.hpp"
#include "collprob/series.hpp"

namespace collprob {

struct CrossingConfig {
  int quadrature_order = 51;
  double theta_truncation = 4.0;  // sigma units
  bool theta_enabled = true;
  bool clamp_to_unity = true;

  void validate() const {
    if (quadrature_order < 2 || !(theta_truncation > 0.0)) {
      throw std::invalid_argument(
          "CrossingConfig: need order >= 2 and truncation > 0");
    }
  }
};

struct EdgeParametrization {
  Vec2 start;
  Vec2 end;
  Vec2 outward_normal;  // unit, edge direction rotated -90 degrees
  double length = 0.0;
};

inline std::vector<EdgeParametrization> edge_parametrization(
    const ConvexPolygon& volume) {
  const auto& v = volume.vertices();
  const std::size_t n = v.size();
  std::vector<EdgeParametrization> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    EdgeParametrization e;
    e.start = v[i];
    e.end = v[(i + 1) % n];
    const Vec2 d = e.end - e.start;
    e.length = d.norm();
    e.outward_normal = {d.y / e.length, -d.x / e.length};
    out.push_back(e);
  }
  return out;
}

namespace detail {

// Squared-Mahalanobis cutoff for the positional density along an edge; the
// truncated tail is ~4e-18 of the peak.
inline constexpr double kMahalanobisSqCut = 80.0;
// Panel length along an edge, in units of the smallest positional std.
inline constexpr double kPanelSigmas = 12.0;
// Normal-velocity z beyond which the truncated mean is negligible.
inline constexpr double kSpeedZCut = 9.0;

// Covariance-derived context of the planar (x, y, vx, vy) state; everything
// here is independent of the mean, so one context serves all heading nodes
// and all sub-step means that share a covariance.
struct RateContext {
  Eigen::Matrix2d sxi;
  Eigen::Matrix2d gain;  // S_vx S_x^{-1}
  Eigen::Matrix2d sig_v_cond;
  double norm_const = 0.0;
  double sigma_min = 0.0;
  double lambda_max = 0.0;

  static RateContext from_cov(const Eigen::Matrix4d& cov) {
    const Eigen::Matrix2d sx = cov.topLeftCorner<2, 2>();
    const double det = sx.determinant();
    if (!(det > 1e-24)) {
      throw DegenerateCovarianceError(
          "crossing_rate: singular position covariance");
    }
    RateContext ctx;
    ctx.sxi = sx.inverse();
    ctx.norm_const = 1.0 / (2.0 * M_PI * std::sqrt(det));
    const Eigen::Matrix2d svx = cov.bottomLeftCorner<2, 2>();
    ctx.gain = svx * ctx.sxi;
    ctx.sig_v_cond =
        cov.bottomRightCorner<2, 2>() - ctx.gain * svx.transpose();
    const double tr = sx.trace();
    const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
    ctx.sigma_min = std::sqrt(std::max(1e-300, 0.5 * tr - disc));
    ctx.lambda_max = 0.5 * tr + disc;
    return ctx;
  }
};

// Expected inward flux through the volume boundary:
//   rate = sum_i int_0^1 E[v_n^- | x_i(s)] p_x(x_i(s)) l_i ds,
// with a whole-volume rejection when the density cannot reach the boundary.
inline double crossing_rate_core(const RateContext& ctx,
                                 const Eigen::Vector4d& mean,
                                 const ConvexPolygon& volume,
                                 double bounding_radius,
                                 const QuadratureRule& rule) {
  const Eigen::Vector2d mu_x = mean.head<2>();
  const Eigen::Vector2d mu_v = mean.tail<2>();
  const double center_dist = mu_x.norm();
  if (center_dist > bounding_radius) {
    const double gap = center_dist - bounding_radius;
    if (gap * gap > kMahalanobisSqCut * ctx.lambda_max) return 0.0;
  }

  const auto& verts = volume.vertices();
  const std::size_t n = verts.size();
  double rate = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d p(verts[i].x, verts[i].y);
    const Vec2& q = verts[(i + 1) % n];
    const Eigen::Vector2d ev(q.x - verts[i].x, q.y - verts[i].y);
    const double ell = ev.norm();
    const Eigen::Vector2d nv(ev[1] / ell, -ev[0] / ell);

    const Eigen::Vector2d d0 = p - mu_x;
    const Eigen::Vector2d sxi_e = ctx.sxi * ev;
    const double a2 = ev.dot(sxi_e);
    const double a1 = 2.0 * d0.dot(sxi_e);
    const double a0 = d0.dot(ctx.sxi * d0);
    double lo = 0.0, hi = 1.0;
    if (a2 > 1e-30) {
      const double disc = a1 * a1 - 4.0 * a2 * (a0 - kMahalanobisSqCut);
      if (disc <= 0.0) continue;
      const double r = std::sqrt(disc);
      lo = std::max(0.0, (-a1 - r) / (2.0 * a2));
      hi = std::min(1.0, (-a1 + r) / (2.0 * a2));
    } else if (a0 > kMahalanobisSqCut) {
      continue;
    }
    if (lo >= hi) continue;

    const double sig_vn =
        std::sqrt(std::max(0.0, nv.dot(ctx.sig_v_cond * nv)));
    const Eigen::RowVector2d n_gain = nv.transpose() * ctx.gain;
    const double mu0 = nv.dot(mu_v) + n_gain * d0;
    const double mu1 = n_gain * ev;
    // Outbound edges: the expected inward speed is negligible everywhere on
    // the clipped range.
    const double mu_lo = mu0 + mu1 * lo;
    const double mu_hi = mu0 + mu1 * hi;
    const double z_floor = kSpeedZCut * sig_vn;
    if (mu_lo > z_floor && mu_hi > z_floor) continue;
    // Bound this edge's contribution: E[v_n^-] <= max(-mu, 0) + 0.4 sigma and
    // the density peaks at the minimal Mahalanobis distance on the range.
    // Edges below an absolute rate floor of 1e-12/s are dropped.
    {
      double q_min = std::min((a2 * lo + a1) * lo + a0, (a2 * hi + a1) * hi + a0);
      if (a2 > 1e-30) {
        const double s_star = -0.5 * a1 / a2;
        if (s_star > lo && s_star < hi) {
          q_min = std::min(q_min, a0 - 0.25 * a1 * a1 / a2);
        }
      }
      const double e_max =
          std::max({-mu_lo, -mu_hi, 0.0}) + 0.4 * sig_vn;
      if (ctx.norm_const * std::exp(-0.5 * std::max(q_min, 0.0)) * e_max * ell *
              (hi - lo) < 1e-12) {
        continue;
      }
    }

    const int panels = std::max(
        1, static_cast<int>(std::ceil((hi - lo) * ell /
                                      (kPanelSigmas * ctx.sigma_min))));
    const double step = (hi - lo) / panels;
    double acc = 0.0;
    for (int k = 0; k < panels; ++k) {
      const double mid = lo + step * (k + 0.5);
      const double half = 0.5 * step;
      for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        const double s = mid + half * rule.nodes[j];
        const double qd = (a2 * s + a1) * s + a0;
        const double px = ctx.norm_const * std::exp(-0.5 * qd);
        acc += rule.weights[j] * expected_inward_speed(mu0 + mu1 * s, sig_vn) * px;
      }
    }
    rate += acc * 0.5 * step * ell;
  }
  return std::max(rate, 0.0);
}

inline double bounding_radius_of(const ConvexPolygon& volume) {
  double r = 0.0;
  for (const Vec2& v : volume.vertices()) r = std::max(r, v.norm());
  return r;
}

inline Eigen::Matrix4d planar_cov(const PlanarStateGaussian& st) {
  return st.cov;
}

// Heading quadrature nodes and the per-node collision volumes; reusable as
// long as the relative heading moments and the footprints stay fixed.
struct ThetaVolumeSet {
  AngleNodes nodes;
  std::vector<ConvexPolygon> volumes;
  std::vector<double> radii;
  double mu_theta = 0.0;
  double sigma_theta = 0.0;
  double truncation = 4.0;
  double max_radius = 0.0;

  static ThetaVolumeSet build(double mu_theta, double sigma_theta,
                              const RectangleSpec& ego_shape,
                              const RectangleDims& obs_shape, double truncation,
                              int nodes_per_half) {
    ThetaVolumeSet set;
    set.mu_theta = mu_theta;
    set.sigma_theta = sigma_theta;
    set.truncation = truncation;
    set.nodes = angle_nodes(mu_theta, sigma_theta, truncation, nodes_per_half);
    set.volumes.reserve(set.nodes.angles.size());
    for (double th : set.nodes.angles) {
      set.volumes.push_back(collision_volume(ego_shape, obs_shape, th));
      set.radii.push_back(bounding_radius_of(set.volumes.back()));
      set.max_radius = std::max(set.max_radius, set.radii.back());
    }
    return set;
  }
};

// True when the relative density cannot touch any node volume anywhere on the
// interval between two grid states: the position mean moves linearly (its
// distance to the origin is minimized on the segment) and the positional
// covariance is matrix-convex in time (largest eigenvalue peaks at an
// endpoint). Heading conditioning shifts node means by at most
// |cov_xtheta| * truncation / sigma_theta.
inline bool interval_certainly_zero(const PoseVelocityGaussian& s0,
                                    const PoseVelocityGaussian& s1,
                                    const ThetaVolumeSet& set) {
  const Eigen::Vector2d p0 = s0.mean.head<2>();
  const Eigen::Vector2d p1 = s1.mean.head<2>();
  const Eigen::Vector2d d = p1 - p0;
  const double len2 = d.squaredNorm();
  double t = len2 > 0.0 ? -p0.dot(d) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double seg_dist = (p0 + t * d).norm();

  const auto lmax2 = [](const PoseVelocityGaussian& s) {
    const Eigen::Matrix2d c = s.position_cov();
    const double tr = c.trace();
    const double det = c.determinant();
    return 0.5 * tr + std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
  };
  const double lam = std::max(lmax2(s0), lmax2(s1));

  double shift = 0.0;
  if (set.sigma_theta > 0.0) {
    const auto shift_of = [&](const PoseVelocityGaussian& s) {
      const Eigen::Vector2d c(s.cov(kX, kTheta), s.cov(kY, kTheta));
      return c.norm() * set.truncation / set.sigma_theta;
    };
    shift = std::max(shift_of(s0), shift_of(s1));
  }
  const double gap = seg_dist - set.max_radius - shift;
  return gap > 0.0 && gap * gap > kMahalanobisSqCut * lam;
}

// Rate of one relative state against a prebuilt heading-volume set. The
// covariance context is shared across nodes (conditioning on a value does not
// change the conditional covariance).
inline double rate_with_nodes(const PoseVelocityGaussian& rel,
                              const ThetaVolumeSet& set,
                              const QuadratureRule& rule) {
  const double vth = rel.cov(kTheta, kTheta);
  const PlanarStateGaussian base = rel.conditioned_on_heading(rel.mean[kTheta]);
  const RateContext ctx = RateContext::from_cov(base.cov);
  Eigen::Vector4d gain = Eigen::Vector4d::Zero();
  if (vth > 0.0) {
    gain << rel.cov(kX, kTheta), rel.cov(kY, kTheta), rel.cov(kVx, kTheta),
        rel.cov(kVy, kTheta);
    gain /= vth;
  }
  double total = 0.0;
  for (std::size_t j = 0; j < set.nodes.angles.size(); ++j) {
    const Eigen::Vector4d mean =
        base.mean + gain * (set.nodes.angles[j] - rel.mean[kTheta]);
    total += set.nodes.weights[j] *
             crossing_rate_core(ctx, mean, set.volumes[j], set.radii[j], rule);
  }
  return std::max(total, 0.0);
}

}  // namespace detail

// Crossing rate with the relative heading fixed at its mean (exact reduction
// when heading is uncorrelated with position and velocity).
inline double crossing_rate_fixed_theta(const RelativeStateGaussian& rel,
                                        const ConvexPolygon& volume,
                                        const CrossingConfig& config) {
  config.validate();
  const QuadratureRule& rule = gauss_legendre(config.quadrature_order);
  const PlanarStateGaussian st =
      rel.state.conditioned_on_heading(rel.state.heading_mean());
  const detail::RateContext ctx = detail::RateContext::from_cov(st.cov);
  return detail::crossing_rate_core(ctx, st.mean, volume,
                                    detail::bounding_radius_of(volume), rule);
}

// Conditions the rate on the relative heading (volume, positional density and
// velocity moments all rebuilt per node), then integrates against the heading
// density over mu +- truncation*sigma, unnormalized.
inline double crossing_rate_with_orientation(const RelativeStateGaussian& rel,
                                             const RectangleSpec& ego_shape,
                                             const RectangleDims& obs_shape,
                                             const CrossingConfig& config) {
  config.validate();
  const double mu_th = rel.state.heading_mean();
  const double sigma_th = std::sqrt(std::max(0.0, rel.state.heading_var()));
  const QuadratureRule& rule = gauss_legendre(config.quadrature_order);
  if (!config.theta_enabled || sigma_th == 0.0) {
    const ConvexPolygon vol = collision_volume(ego_shape, obs_shape, mu_th);
    const PlanarStateGaussian st = rel.state.conditioned_on_heading(mu_th);
    const detail::RateContext ctx = detail::RateContext::from_cov(st.cov);
    return detail::crossing_rate_core(ctx, st.mean, vol,
                                      detail::bounding_radius_of(vol), rule);
  }
  const detail::ThetaVolumeSet set = detail::ThetaVolumeSet::build(
      mu_th, sigma_th, ego_shape, obs_shape, config.theta_truncation,
      config.quadrature_order);
  return detail::rate_with_nodes(rel.state, set, rule);
}

struct CrossingResult {
  ProbabilityTimeSeries series;
  std::vector<double> rates;
  bool clamped = false;
};

// Cumulative trapezoidal integration of the crossing rate at the series'
// native timestep, started from the initial spatial-overlap mass (mass inside
// the volume at t = 0 never crosses the boundary but is already in
// collision). Counts expected crossings, so it upper-bounds the first-passage
// probability and is clamped at 1 when configured.
inline CrossingResult crossing_probability(
    const std::vector<RelativeStateGaussian>& traj_rel,
    const RectangleSpec& ego_shape, const RectangleDims& obs_shape,
    const CrossingConfig& config, double dt) {
  if (traj_rel.empty()) {
    throw std::invalid_argument("crossing_probability: empty trajectory");
  }
  if (!(dt > 0.0)) {
    throw std::invalid_argument("crossing_probability: dt must be positive");
  }
  CrossingResult out;
  out.series.dt = dt;
  out.series.method = "boundary";
  out.rates.reserve(traj_rel.size());
  for (const auto& rel : traj_rel) {
    out.rates.push_back(
        crossing_rate_with_orientation(rel, ego_shape, obs_shape, config));
  }
  OverlapConfig oc;
  oc.quadrature_order = config.quadrature_order;
  oc.theta_truncation = config.theta_truncation;
  oc.theta_enabled = config.theta_enabled;
  const double initial =
      overlap_probability_with_orientation(traj_rel[0], ego_shape, obs_shape, oc);
  out.series.values.resize(traj_rel.size());
  double cum = initial;
  out.series.values[0] = std::min(cum, 1.0);
  for (std::size_t k = 1; k < traj_rel.size(); ++k) {
    cum += 0.5 * (out.rates[k - 1] + out.rates[k]) * dt;
    double v = cum;
    if (config.clamp_to_unity && v > 1.0) {
      v = 1.0;
      out.clamped = true;
    }
    out.series.values[k] = v;
  }
  return out;
}

}  // namespace collprob

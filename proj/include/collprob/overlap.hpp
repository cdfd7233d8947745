#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "collprob/gaussian.hpp"
#include "collprob/geometry.hpp"
#include "collprob/quadrature.hpp"

namespace collprob {

struct OverlapConfig {
  int quadrature_order = 51;
  double theta_truncation = 4.0;  // sigma units
  bool theta_enabled = true;

  void validate() const {
    if (quadrature_order < 2 || !(theta_truncation > 0.0)) {
      throw std::invalid_argument(
          "OverlapConfig: need order >= 2 and truncation > 0");
    }
  }
};

namespace detail {

// Integration support of the standard normal; mass beyond is below 1e-16.
inline constexpr double kGaussSupport = 8.5;
// Maximum whitened panel span; keeps per-panel quadrature error ~1e-9.
inline constexpr double kMaxPanelSpan = 6.0;

// Probability mass of the standard 2-D normal inside a whitened CCW polygon,
// via the signed counterclockwise edge sum of
//   int phi(x) (Phi(m x + b) - Phi(0)) dx;
// the enclosed mass is the negated total. Vertical edges contribute nothing.
inline double std_normal_mass_in_polygon(const std::vector<Vec2>& verts,
                                         const QuadratureRule& rule) {
  const std::size_t n = verts.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = verts[i];
    const Vec2& q = verts[(i + 1) % n];
    const double dx = q.x - p.x;
    if (std::abs(dx) < 1e-14) continue;
    const double m = (q.y - p.y) / dx;
    const double b = p.y - m * p.x;
    double lo = std::min(p.x, q.x);
    double hi = std::max(p.x, q.x);
    lo = std::max(lo, -kGaussSupport);
    hi = std::min(hi, kGaussSupport);
    if (lo >= hi) continue;
    const double sign = dx > 0.0 ? 1.0 : -1.0;
    const int panels =
        static_cast<int>(std::ceil((hi - lo) / kMaxPanelSpan));
    const double step = (hi - lo) / panels;
    double acc = 0.0;
    for (int k = 0; k < panels; ++k) {
      const double a = lo + step * k;
      const double mid = a + 0.5 * step;
      const double half = 0.5 * step;
      for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        const double x = mid + half * rule.nodes[j];
        acc += rule.weights[j] * std_normal_pdf(x) *
               (std_normal_cdf(m * x + b) - 0.5);
      }
    }
    total += sign * acc * 0.5 * step;
  }
  return -total;
}

// Largest eigenvalue of a 2x2 covariance, closed form.
inline double lambda_max2(const Eigen::Matrix2d& cov) {
  const double tr = cov.trace();
  const double det = cov.determinant();
  return 0.5 * tr + std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
}

// True when the polygon lies entirely beyond the density support (the
// enclosed mass is below ~1e-16).
inline bool polygon_out_of_support(const Eigen::Vector2d& mean,
                                   double cov_lambda_max,
                                   const ConvexPolygon& volume) {
  Vec2 c{0.0, 0.0};
  for (const Vec2& v : volume.vertices()) c += v;
  c = c * (1.0 / static_cast<double>(volume.size()));
  double radius = 0.0;
  for (const Vec2& v : volume.vertices()) {
    radius = std::max(radius, (v - c).norm());
  }
  const double gap = (Vec2{mean[0], mean[1]} - c).norm() - radius;
  return gap > 0.0 && gap * gap > kGaussSupport * kGaussSupport * cov_lambda_max;
}

// Mass of N(mean, L L^T) inside the polygon for a prefactored covariance.
// A clamp beyond 1e-6 signals a misconfigured integration rather than
// roundoff.
inline double overlap_mass_factored(const Eigen::Vector2d& mean,
                                    const Eigen::Matrix2d& l,
                                    double cov_lambda_max,
                                    const ConvexPolygon& volume,
                                    const QuadratureRule& rule) {
  if (polygon_out_of_support(mean, cov_lambda_max, volume)) return 0.0;
  std::vector<Vec2> w;
  w.reserve(volume.size());
  for (const Vec2& v : volume.vertices()) {
    const Eigen::Vector2d d(v.x - mean[0], v.y - mean[1]);
    const Eigen::Vector2d t = l.triangularView<Eigen::Lower>().solve(d);
    w.push_back({t[0], t[1]});
  }
  const double mass = std_normal_mass_in_polygon(w, rule);
  if (mass < -1e-6 || mass > 1.0 + 1e-6) {
    throw NumericDomainError("overlap: integrated mass outside [0,1] beyond tolerance");
  }
  return std::clamp(mass, 0.0, 1.0);
}

inline double overlap_mass(const Eigen::Vector2d& mean,
                           const Eigen::Matrix2d& cov,
                           const ConvexPolygon& volume,
                           const QuadratureRule& rule) {
  Eigen::LLT<Eigen::Matrix2d> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw DegenerateCovarianceError(
        "overlap: positional covariance not positive-definite");
  }
  return overlap_mass_factored(mean, llt.matrixL(), lambda_max2(cov), volume,
                               rule);
}

// Quadrature nodes against a 1-D normal density over mu +- trunc*sigma,
// split at the mean (support functions of rotated footprints kink there).
struct AngleNodes {
  std::vector<double> angles;
  std::vector<double> weights;  // include the density factor
};

inline AngleNodes angle_nodes(double mu, double sigma, double trunc,
                              int nodes_per_half) {
  AngleNodes out;
  if (sigma <= 0.0) {
    out.angles.push_back(mu);
    out.weights.push_back(1.0);
    return out;
  }
  const QuadratureRule& rule = gauss_legendre(nodes_per_half);
  for (int side = 0; side < 2; ++side) {
    const double a = side == 0 ? mu - trunc * sigma : mu;
    const double b = side == 0 ? mu : mu + trunc * sigma;
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double th = mid + half * rule.nodes[i];
      out.angles.push_back(th);
      out.weights.push_back(rule.weights[i] * half *
                            std_normal_pdf((th - mu) / sigma) / sigma);
    }
  }
  return out;
}

}  // namespace detail

// Spatial-overlap probability for a fixed relative orientation. Accepts the
// 2-D positional Gaussian or a 3-D pose Gaussian (conditioned on its mean
// heading).
inline double overlap_probability_fixed_theta(const GaussianND& rel_pose,
                                              const ConvexPolygon& volume,
                                              int quadrature_order = 51) {
  const QuadratureRule& rule = gauss_legendre(quadrature_order);
  if (rel_pose.dim() == 2) {
    return detail::overlap_mass(rel_pose.mean.head<2>(),
                                rel_pose.cov.topLeftCorner<2, 2>(), volume, rule);
  }
  if (rel_pose.dim() == 3) {
    Eigen::Vector2d mean = rel_pose.mean.head<2>();
    Eigen::Matrix2d cov = rel_pose.cov.topLeftCorner<2, 2>();
    const double vth = rel_pose.cov(2, 2);
    if (vth > 0.0) {
      const Eigen::Vector2d cross = rel_pose.cov.block<2, 1>(0, 2);
      cov -= cross * cross.transpose() / vth;
    }
    return detail::overlap_mass(mean, cov, volume, rule);
  }
  throw std::invalid_argument("overlap_probability_fixed_theta: need 2-D or 3-D");
}

// Eq.-(12)-style integration over the relative heading density: the collision
// volume is rebuilt at every node and the positional density conditioned on
// it. The truncated tail mass is counted as non-colliding (no renormalization).
inline double overlap_probability_with_orientation(const RelativeStateGaussian& rel,
                                                   const RectangleSpec& ego_shape,
                                                   const RectangleDims& obs_shape,
                                                   const OverlapConfig& config) {
  config.validate();
  const double mu_th = rel.state.heading_mean();
  const double sigma_th = std::sqrt(std::max(0.0, rel.state.heading_var()));
  const QuadratureRule& rule = gauss_legendre(config.quadrature_order);
  if (!config.theta_enabled || sigma_th == 0.0) {
    const auto [mean, cov] = rel.state.position_given_heading(mu_th);
    return detail::overlap_mass(mean, cov, collision_volume(ego_shape, obs_shape, mu_th),
                                rule);
  }
  const detail::AngleNodes nodes = detail::angle_nodes(
      mu_th, sigma_th, config.theta_truncation, config.quadrature_order);
  double total = 0.0;
  for (std::size_t i = 0; i < nodes.angles.size(); ++i) {
    const double th = nodes.angles[i];
    const auto [mean, cov] = rel.state.position_given_heading(th);
    total += nodes.weights[i] *
             detail::overlap_mass(mean, cov,
                                  collision_volume(ego_shape, obs_shape, th), rule);
  }
  return std::clamp(total, 0.0, 1.0);
}

// Exact two-agent orientation treatment: tensor quadrature over both heading
// densities, conditioning the relative position on each pair. The relative
// heading form above over-inflates the volume when both headings are
// uncertain (|delta_o - delta_e| has a larger mean than |delta_o|), which
// shows up against state sampling; this variant is what the trajectory
// evaluators use.
inline double overlap_probability_joint_orientation(
    const PoseVelocityGaussian& ego, const PoseVelocityGaussian& obs,
    const RectangleDims& ego_shape, const RectangleDims& obs_shape,
    const OverlapConfig& config) {
  config.validate();
  const double se = config.theta_enabled
                        ? std::sqrt(std::max(0.0, ego.heading_var()))
                        : 0.0;
  const double so = config.theta_enabled
                        ? std::sqrt(std::max(0.0, obs.heading_var()))
                        : 0.0;
  const QuadratureRule& rule = gauss_legendre(config.quadrature_order);
  const Eigen::Vector2d mu_rel = obs.position_mean() - ego.position_mean();
  // Reject far configurations before building any volume: the bounding radius
  // of the Minkowski sum is independent of the headings.
  const double volume_radius =
      0.5 * std::hypot(ego_shape.length, ego_shape.width) +
      0.5 * std::hypot(obs_shape.length, obs_shape.width);
  {
    const Eigen::Matrix2d sum_cov = ego.position_cov() + obs.position_cov();
    const double gap = mu_rel.norm() - volume_radius;
    if (gap > 0.0 && gap * gap > detail::kGaussSupport * detail::kGaussSupport *
                                     detail::lambda_max2(sum_cov)) {
      return 0.0;
    }
  }
  if (se == 0.0 && so == 0.0) {
    const ConvexPolygon vol = minkowski_sum(
        rectangle_footprint({ego_shape.length, ego_shape.width, {0, 0},
                             ego.heading_mean()}),
        rectangle_footprint({obs_shape.length, obs_shape.width, {0, 0},
                             obs.heading_mean()}));
    return detail::overlap_mass(mu_rel, ego.position_cov() + obs.position_cov(),
                                vol, rule);
  }

  // Conditioning x_rel = x_o - x_e on both headings (independent agents).
  Eigen::Vector2d gain_e = Eigen::Vector2d::Zero();
  Eigen::Vector2d gain_o = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = ego.position_cov() + obs.position_cov();
  if (ego.heading_var() > 0.0) {
    const Eigen::Vector2d c(ego.cov(kX, kTheta), ego.cov(kY, kTheta));
    gain_e = c / ego.heading_var();
    cov -= c * c.transpose() / ego.heading_var();
  }
  if (obs.heading_var() > 0.0) {
    const Eigen::Vector2d c(obs.cov(kX, kTheta), obs.cov(kY, kTheta));
    gain_o = c / obs.heading_var();
    cov -= c * c.transpose() / obs.heading_var();
  }
  const int per_half = std::max(2, config.quadrature_order / 8);
  const detail::AngleNodes ne =
      detail::angle_nodes(ego.heading_mean(), se, config.theta_truncation, per_half);
  const detail::AngleNodes no =
      detail::angle_nodes(obs.heading_mean(), so, config.theta_truncation, per_half);
  std::vector<ConvexPolygon> feet_e, feet_o;
  feet_e.reserve(ne.angles.size());
  for (double th : ne.angles) {
    feet_e.push_back(
        rectangle_footprint({ego_shape.length, ego_shape.width, {0, 0}, th}));
  }
  feet_o.reserve(no.angles.size());
  for (double th : no.angles) {
    feet_o.push_back(
        rectangle_footprint({obs_shape.length, obs_shape.width, {0, 0}, th}));
  }
  Eigen::LLT<Eigen::Matrix2d> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw DegenerateCovarianceError(
        "overlap: positional covariance not positive-definite");
  }
  const Eigen::Matrix2d l = llt.matrixL();
  const double lmax = detail::lambda_max2(cov);
  double total = 0.0;
  for (std::size_t i = 0; i < ne.angles.size(); ++i) {
    const Eigen::Vector2d shift_e =
        -gain_e * (ne.angles[i] - ego.heading_mean());
    for (std::size_t j = 0; j < no.angles.size(); ++j) {
      const Eigen::Vector2d mean =
          mu_rel + shift_e + gain_o * (no.angles[j] - obs.heading_mean());
      const ConvexPolygon vol = minkowski_sum(feet_e[i], feet_o[j]);
      total += ne.weights[i] * no.weights[j] *
               detail::overlap_mass_factored(mean, l, lmax, vol, rule);
    }
  }
  return std::clamp(total, 0.0, 1.0);
}

}  // namespace collprob

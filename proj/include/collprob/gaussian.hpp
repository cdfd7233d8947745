#pragma once

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "collprob/errors.hpp"
#include "collprob/geometry.hpp"

namespace collprob {

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779;
inline constexpr double kSqrt2 = 1.4142135623730950488;

inline double std_normal_pdf(double x) {
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

// erfc form avoids cancellation in the lower tail.
inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

inline double std_normal_erf(double x) { return std::erf(x); }

// Truncated mean E[v_n^-] = E[-min(v,0)] for v ~ N(mu, sigma^2):
// -mu*Phi(-z) + sigma*phi(z) with z = mu/sigma; sigma = 0 degenerates to
// max(-mu, 0).
inline double expected_inward_speed(double mu, double sigma) {
  if (sigma < 0.0) throw std::invalid_argument("expected_inward_speed: sigma < 0");
  if (sigma == 0.0) return std::max(-mu, 0.0);
  const double z = mu / sigma;
  if (z > 9.0) return 0.0;        // below 1e-19 * sigma
  if (z < -9.0) return -mu;       // truncation removes ~1e-19 of the mass
  return std::max(0.0, -mu * std_normal_cdf(-z) + sigma * std_normal_pdf(z));
}

struct GaussianND {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  GaussianND() = default;
  GaussianND(Eigen::VectorXd m, Eigen::MatrixXd c)
      : mean(std::move(m)), cov(std::move(c)) {
    if (cov.rows() != cov.cols() || cov.rows() != mean.size()) {
      throw std::invalid_argument("GaussianND: dimension mismatch");
    }
    const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw std::invalid_argument("GaussianND: covariance not symmetric");
    }
  }

  int dim() const { return static_cast<int>(mean.size()); }
};

// State indices of the 5-D (x, y, theta, vx, vy) joint.
enum StateIndex : int { kX = 0, kY = 1, kTheta = 2, kVx = 3, kVy = 4 };

using Vector5 = Eigen::Matrix<double, 5, 1>;
using Matrix5 = Eigen::Matrix<double, 5, 5>;

// Planar (x, y, vx, vy) Gaussian, used once theta is fixed or conditioned out.
struct PlanarStateGaussian {
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();
  Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();

  Eigen::Vector2d position_mean() const { return mean.head<2>(); }
  Eigen::Matrix2d position_cov() const { return cov.topLeftCorner<2, 2>(); }
  Eigen::Vector2d velocity_mean() const { return mean.tail<2>(); }
  Eigen::Matrix2d velocity_cov() const { return cov.bottomRightCorner<2, 2>(); }
  Eigen::Matrix2d vel_pos_cov() const { return cov.bottomLeftCorner<2, 2>(); }
};

struct PoseVelocityGaussian {
  Vector5 mean = Vector5::Zero();
  Matrix5 cov = Matrix5::Zero();

  Eigen::Vector2d position_mean() const { return mean.head<2>(); }
  Eigen::Matrix2d position_cov() const { return cov.topLeftCorner<2, 2>(); }
  double heading_mean() const { return mean[kTheta]; }
  double heading_var() const { return cov(kTheta, kTheta); }
  Eigen::Vector2d velocity_mean() const { return mean.tail<2>(); }
  Eigen::Matrix2d velocity_cov() const { return cov.bottomRightCorner<2, 2>(); }

  void check() const {
    const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw std::invalid_argument("PoseVelocityGaussian: covariance not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix5> es(cov);
    if (es.eigenvalues().minCoeff() < -1e-10 * scale) {
      throw DegenerateCovarianceError(
          "PoseVelocityGaussian: covariance not positive semi-definite");
    }
  }

  // (x, y, vx, vy) given theta = value; exact Gaussian conditioning, a no-op
  // reduction when theta is uncorrelated.
  PlanarStateGaussian conditioned_on_heading(double value) const {
    static constexpr int keep[4] = {kX, kY, kVx, kVy};
    PlanarStateGaussian out;
    const double vth = cov(kTheta, kTheta);
    Eigen::Vector4d cross;
    for (int i = 0; i < 4; ++i) {
      out.mean[i] = mean[keep[i]];
      cross[i] = cov(keep[i], kTheta);
      for (int j = 0; j < 4; ++j) out.cov(i, j) = cov(keep[i], keep[j]);
    }
    if (vth > 0.0) {
      const Eigen::Vector4d gain = cross / vth;
      out.mean += gain * (value - mean[kTheta]);
      out.cov -= gain * cross.transpose();
    }
    return out;
  }

  // (x, y) given theta = value.
  std::pair<Eigen::Vector2d, Eigen::Matrix2d> position_given_heading(
      double value) const {
    const PlanarStateGaussian p = conditioned_on_heading(value);
    return {p.position_mean(), p.position_cov()};
  }
};

// Relative state (obstacle minus ego): convolution of two independent
// Gaussians is Gaussian with summed covariance.
struct RelativeStateGaussian {
  PoseVelocityGaussian state;
};

inline RelativeStateGaussian relative_state(const PoseVelocityGaussian& ego,
                                            const PoseVelocityGaussian& obs) {
  RelativeStateGaussian rel;
  rel.state.mean = obs.mean - ego.mean;
  rel.state.cov = obs.cov + ego.cov;
  return rel;
}

inline GaussianND marginal_pose(const PoseVelocityGaussian& s) {
  return GaussianND(s.mean.head<3>(), s.cov.topLeftCorner<3, 3>());
}

// Affine whitening map: y = W (x - mean), with W Sigma W^T = I. W is the
// inverse Cholesky factor of the covariance permuted to coordinate_order, so
// the first whitened coordinate depends only on the first listed coordinate.
struct WhiteningTransform {
  Eigen::MatrixXd W;
  Eigen::MatrixXd W_inv;
  Eigen::VectorXd mean;
  std::vector<int> coordinate_order;

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return W * (x - mean); }
  Eigen::VectorXd unapply(const Eigen::VectorXd& y) const {
    return W_inv * y + mean;
  }
};

inline WhiteningTransform whiten(const GaussianND& g,
                                 std::vector<int> coordinate_order = {}) {
  const int n = g.dim();
  if (coordinate_order.empty()) {
    coordinate_order.resize(n);
    std::iota(coordinate_order.begin(), coordinate_order.end(), 0);
  }
  if (static_cast<int>(coordinate_order.size()) != n) {
    throw std::invalid_argument("whiten: coordinate_order size mismatch");
  }
  // Near-singular covariances are rejected rather than regularized.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.cov);
  if (es.eigenvalues()[0] <= 0.0 ||
      es.eigenvalues()[0] < 1e-12 * es.eigenvalues()[n - 1]) {
    std::ostringstream msg;
    msg << "whiten: covariance not positive-definite; smallest eigenvalue "
        << es.eigenvalues()[0] << " along direction ["
        << es.eigenvectors().col(0).transpose() << "]";
    throw DegenerateCovarianceError(msg.str());
  }
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) P(i, coordinate_order[i]) = 1.0;
  const Eigen::MatrixXd sig_p = P * g.cov * P.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(sig_p);
  if (llt.info() != Eigen::Success) {
    throw DegenerateCovarianceError("whiten: Cholesky factorization failed");
  }
  const Eigen::MatrixXd L = llt.matrixL();
  WhiteningTransform t;
  t.coordinate_order = std::move(coordinate_order);
  t.W = L.triangularView<Eigen::Lower>().solve(P);
  t.W_inv = t.W.inverse();
  t.mean = g.mean;
  return t;
}

inline std::vector<Vec2> apply_whitening(const WhiteningTransform& t,
                                         const std::vector<Vec2>& points) {
  if (t.W.rows() != 2) {
    throw std::invalid_argument("apply_whitening: transform is not 2-D");
  }
  std::vector<Vec2> out;
  out.reserve(points.size());
  for (const Vec2& p : points) {
    const Eigen::Vector2d y = t.W * (Eigen::Vector2d(p.x, p.y) - t.mean.head<2>());
    out.push_back({y[0], y[1]});
  }
  return out;
}

inline std::vector<Vec2> unapply_whitening(const WhiteningTransform& t,
                                           const std::vector<Vec2>& points) {
  if (t.W.rows() != 2) {
    throw std::invalid_argument("unapply_whitening: transform is not 2-D");
  }
  std::vector<Vec2> out;
  out.reserve(points.size());
  for (const Vec2& p : points) {
    const Eigen::Vector2d x = t.W_inv * Eigen::Vector2d(p.x, p.y) + t.mean.head<2>();
    out.push_back({x[0], x[1]});
  }
  return out;
}

struct ConditionalSpeed {
  double mean = 0.0;   // m/s along the given normal
  double sigma = 0.0;  // >= 0
};

// Eq.-style conditional moments of the normal velocity at position x:
// mu = n^T (mu_v + S_vx S_x^{-1} (x - mu_x)), sigma^2 = n^T (S_v - S_vx
// S_x^{-1} S_xv) n.
inline ConditionalSpeed conditional_normal_velocity(const RelativeStateGaussian& rel,
                                                    const Vec2& x, const Vec2& n) {
  if (std::abs(n.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("conditional_normal_velocity: normal not unit");
  }
  const PoseVelocityGaussian& s = rel.state;
  const Eigen::Matrix2d sx = s.position_cov();
  const double det = sx.determinant();
  if (!(det > 1e-24)) {
    throw DegenerateCovarianceError(
        "conditional_normal_velocity: singular position covariance");
  }
  const Eigen::Matrix2d sxi = sx.inverse();
  const Eigen::Matrix2d svx = s.cov.bottomLeftCorner<2, 2>();
  const Eigen::Vector2d nv(n.x, n.y);
  const Eigen::Vector2d dx =
      Eigen::Vector2d(x.x, x.y) - s.position_mean();
  const Eigen::Vector2d mu_v = s.velocity_mean() + svx * sxi * dx;
  const Eigen::Matrix2d sig_v =
      s.velocity_cov() - svx * sxi * svx.transpose();
  ConditionalSpeed out;
  out.mean = nv.dot(mu_v);
  out.sigma = std::sqrt(std::max(0.0, nv.dot(sig_v * nv)));
  return out;
}

}  // namespace collprob

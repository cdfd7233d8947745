#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "collprob/errors.hpp"

namespace collprob {

inline constexpr double kCollinearTol = 1e-9;   // m^2, cross-product threshold
inline constexpr double kBoundaryTol = 1e-12;   // m, boundary containment slack

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator-() const { return {-x, -y}; }
  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }

  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  double squared_norm() const { return x * x + y * y; }
  Vec2 perp() const { return {-y, x}; }  // +90 degrees
  Vec2 rotated(double angle) const {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * x - s * y, s * x + c * y};
  }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

inline Vec2 unit_from_angle(double angle) {
  return {std::cos(angle), std::sin(angle)};
}

struct RectangleDims {
  double length = 0.0;
  double width = 0.0;
};

struct RectangleSpec {
  double length = 0.0;
  double width = 0.0;
  Vec2 center;
  double heading = 0.0;

  RectangleDims dims() const { return {length, width}; }
};

// Counterclockwise convex polygon. The constructor drops duplicate and
// collinear vertices and rejects anything that is not convex CCW.
class ConvexPolygon {
 public:
  explicit ConvexPolygon(std::vector<Vec2> vertices) {
    normalize(std::move(vertices));
    validate();
  }

  const std::vector<Vec2>& vertices() const { return verts_; }
  std::size_t size() const { return verts_.size(); }
  const Vec2& operator[](std::size_t i) const { return verts_[i]; }

  double area() const {
    double a = 0.0;
    for (std::size_t i = 0; i < verts_.size(); ++i) {
      a += verts_[i].cross(verts_[(i + 1) % verts_.size()]);
    }
    return 0.5 * a;
  }

  Vec2 centroid() const {
    double a = 0.0;
    Vec2 c;
    for (std::size_t i = 0; i < verts_.size(); ++i) {
      const Vec2& p = verts_[i];
      const Vec2& q = verts_[(i + 1) % verts_.size()];
      const double w = p.cross(q);
      a += w;
      c += (p + q) * w;
    }
    return c * (1.0 / (3.0 * a));
  }

  ConvexPolygon translated(const Vec2& t) const {
    std::vector<Vec2> out = verts_;
    for (auto& v : out) v += t;
    return ConvexPolygon(std::move(out));
  }

 private:
  void normalize(std::vector<Vec2> in) {
    for (const auto& v : in) {
      if (!std::isfinite(v.x) || !std::isfinite(v.y)) {
        throw std::invalid_argument("ConvexPolygon: non-finite vertex");
      }
    }
    // Drop consecutive duplicates, then collinear middles.
    std::vector<Vec2> tmp;
    for (const auto& v : in) {
      if (tmp.empty() || (v - tmp.back()).norm() > 1e-12) tmp.push_back(v);
    }
    while (tmp.size() > 1 && (tmp.back() - tmp.front()).norm() <= 1e-12) {
      tmp.pop_back();
    }
    if (tmp.size() < 3) {
      throw std::invalid_argument("ConvexPolygon: fewer than 3 distinct vertices");
    }
    verts_.clear();
    const std::size_t n = tmp.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& prev = tmp[(i + n - 1) % n];
      const Vec2& cur = tmp[i];
      const Vec2& next = tmp[(i + 1) % n];
      if ((cur - prev).cross(next - cur) > kCollinearTol) {
        verts_.push_back(cur);
      } else if ((cur - prev).cross(next - cur) < -kCollinearTol) {
        verts_.push_back(cur);  // keep; validate() rejects reflex turns
      }
      // else: collinear within tolerance, dropped
    }
  }

  void validate() const {
    if (verts_.size() < 3) {
      throw std::invalid_argument("ConvexPolygon: degenerate after normalization");
    }
    const std::size_t n = verts_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 e0 = verts_[(i + 1) % n] - verts_[i];
      const Vec2 e1 = verts_[(i + 2) % n] - verts_[(i + 1) % n];
      if (e0.cross(e1) < -kCollinearTol) {
        throw std::invalid_argument(
            "ConvexPolygon: vertices not convex counterclockwise");
      }
    }
  }

  std::vector<Vec2> verts_;
};

inline ConvexPolygon rectangle_footprint(const RectangleSpec& spec) {
  if (!(spec.length > 0.0) || !(spec.width > 0.0)) {
    throw std::invalid_argument("rectangle_footprint: non-positive dimensions");
  }
  const Vec2 ax = unit_from_angle(spec.heading);
  const Vec2 ay = ax.perp();
  const Vec2 hl = ax * (0.5 * spec.length);
  const Vec2 hw = ay * (0.5 * spec.width);
  return ConvexPolygon({spec.center + hl + hw, spec.center - hl + hw,
                        spec.center - hl - hw, spec.center + hl - hw});
}

namespace detail {

// Index of the lowest (then rightmost) vertex; edges leaving it have polar
// angles covering (0, 2pi] exactly once along the CCW traversal.
inline std::size_t lowest_rightmost(const std::vector<Vec2>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i].y < v[best].y - 1e-15 ||
        (std::abs(v[i].y - v[best].y) <= 1e-15 && v[i].x > v[best].x)) {
      best = i;
    }
  }
  return best;
}

inline double edge_angle(const Vec2& e) {
  double a = std::atan2(e.y, e.x);
  if (a <= 1e-15) a += 2.0 * M_PI;  // map to (0, 2pi]
  return a;
}

}  // namespace detail

// Edge-merge Minkowski sum of convex CCW polygons: edge vectors of both
// operands are merged in polar-angle order starting from the lowest-rightmost
// vertices; parallel edges are fused into one.
inline ConvexPolygon minkowski_sum(const ConvexPolygon& a, const ConvexPolygon& b) {
  const auto& va = a.vertices();
  const auto& vb = b.vertices();
  const std::size_t na = va.size(), nb = vb.size();
  const std::size_t sa = detail::lowest_rightmost(va);
  const std::size_t sb = detail::lowest_rightmost(vb);

  std::vector<Vec2> out;
  out.reserve(na + nb);
  Vec2 cur = va[sa] + vb[sb];
  std::size_t ia = 0, ib = 0;
  while (ia < na || ib < nb) {
    out.push_back(cur);
    Vec2 step;
    if (ia < na && ib < nb) {
      const Vec2 ea = va[(sa + ia + 1) % na] - va[(sa + ia) % na];
      const Vec2 eb = vb[(sb + ib + 1) % nb] - vb[(sb + ib) % nb];
      const double aa = detail::edge_angle(ea);
      const double ab = detail::edge_angle(eb);
      if (std::abs(aa - ab) < 1e-12) {  // parallel: fuse
        step = ea + eb;
        ++ia;
        ++ib;
      } else if (aa < ab) {
        step = ea;
        ++ia;
      } else {
        step = eb;
        ++ib;
      }
    } else if (ia < na) {
      step = va[(sa + ia + 1) % na] - va[(sa + ia) % na];
      ++ia;
    } else {
      step = vb[(sb + ib + 1) % nb] - vb[(sb + ib) % nb];
      ++ib;
    }
    cur += step;
  }
  return ConvexPolygon(std::move(out));
}

// Combined collision volume in the relative frame: ego footprint at its own
// heading, obstacle footprint at ego.heading + relative_heading, both centered
// at the origin.
inline ConvexPolygon collision_volume(const RectangleSpec& ego,
                                      const RectangleDims& obstacle,
                                      double relative_heading) {
  RectangleSpec e = ego;
  e.center = {0.0, 0.0};
  const RectangleSpec o{obstacle.length, obstacle.width, {0.0, 0.0},
                        ego.heading + relative_heading};
  return minkowski_sum(rectangle_footprint(e), rectangle_footprint(o));
}

inline bool contains_point(const ConvexPolygon& poly, const Vec2& p) {
  const auto& v = poly.vertices();
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e = v[(i + 1) % n] - v[i];
    if (e.cross(p - v[i]) < -kBoundaryTol * e.norm()) return false;
  }
  return true;
}

// Separating-axis test over the 4 candidate axes; touching counts as
// intersecting.
inline bool rectangles_intersect(const RectangleSpec& a, const RectangleSpec& b) {
  if (!(a.length > 0.0) || !(a.width > 0.0) || !(b.length > 0.0) ||
      !(b.width > 0.0)) {
    throw std::invalid_argument("rectangles_intersect: non-positive dimensions");
  }
  const Vec2 d = b.center - a.center;
  const std::array<Vec2, 2> axa{unit_from_angle(a.heading),
                                unit_from_angle(a.heading).perp()};
  const std::array<Vec2, 2> axb{unit_from_angle(b.heading),
                                unit_from_angle(b.heading).perp()};
  const std::array<double, 2> ha{0.5 * a.length, 0.5 * a.width};
  const std::array<double, 2> hb{0.5 * b.length, 0.5 * b.width};
  const std::array<Vec2, 4> axes{axa[0], axa[1], axb[0], axb[1]};
  for (const Vec2& ax : axes) {
    const double ra = ha[0] * std::abs(ax.dot(axa[0])) + ha[1] * std::abs(ax.dot(axa[1]));
    const double rb = hb[0] * std::abs(ax.dot(axb[0])) + hb[1] * std::abs(ax.dot(axb[1]));
    if (std::abs(ax.dot(d)) > ra + rb + kBoundaryTol) return false;
  }
  return true;
}

// Separating-axis test over the edge normals of both convex polygons;
// touching counts as intersecting.
inline bool convex_intersect(const ConvexPolygon& a, const ConvexPolygon& b) {
  const auto no_gap_along = [&](const Vec2& axis) {
    double amin = std::numeric_limits<double>::infinity(), amax = -amin;
    double bmin = amin, bmax = -amin;
    for (const Vec2& v : a.vertices()) {
      const double p = axis.dot(v);
      amin = std::min(amin, p);
      amax = std::max(amax, p);
    }
    for (const Vec2& v : b.vertices()) {
      const double p = axis.dot(v);
      bmin = std::min(bmin, p);
      bmax = std::max(bmax, p);
    }
    return amax >= bmin - kBoundaryTol && bmax >= amin - kBoundaryTol;
  };
  const auto axes_ok = [&](const ConvexPolygon& poly) {
    const auto& v = poly.vertices();
    for (std::size_t i = 0; i < v.size(); ++i) {
      Vec2 e = v[(i + 1) % v.size()] - v[i];
      e = e * (1.0 / e.norm());
      if (!no_gap_along(e.perp())) return false;
    }
    return true;
  };
  return axes_ok(a) && axes_ok(b);
}

// Footprint at the mean pose inflated along its body axes by k standard
// deviations of position projected on each axis.
inline ConvexPolygon inflated_obb(const RectangleSpec& footprint,
                                  const Eigen::Matrix2d& position_cov,
                                  double k = 3.0) {
  if ((position_cov - position_cov.transpose()).cwiseAbs().maxCoeff() >
      1e-9 * (1.0 + position_cov.cwiseAbs().maxCoeff())) {
    throw DegenerateCovarianceError("inflated_obb: covariance not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(position_cov);
  if (es.eigenvalues().minCoeff() <
      -1e-12 * std::max(1.0, es.eigenvalues().maxCoeff())) {
    throw DegenerateCovarianceError(
        "inflated_obb: covariance has negative eigenvalue " +
        std::to_string(es.eigenvalues().minCoeff()));
  }
  const Vec2 ax = unit_from_angle(footprint.heading);
  const Vec2 ay = ax.perp();
  const auto proj_sd = [&](const Vec2& u) {
    const Eigen::Vector2d v(u.x, u.y);
    return std::sqrt(std::max(0.0, v.dot(position_cov * v)));
  };
  RectangleSpec inflated = footprint;
  inflated.length += 2.0 * k * proj_sd(ax);
  inflated.width += 2.0 * k * proj_sd(ay);
  return rectangle_footprint(inflated);
}

}  // namespace collprob

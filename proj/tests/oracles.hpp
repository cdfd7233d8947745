#pragma once

// Test-side oracles, implemented independently of the library code paths they
// check: convex hull of point sets, ray-casting containment, polygon
// clipping, Riemann integrators, and a tiny deterministic LCG for test data.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "collprob/geometry.hpp"

namespace oracles {

using collprob::Vec2;

// Deterministic test-data generator (separate from the library RNG).
class Lcg {
 public:
  explicit Lcg(std::uint64_t seed) : state_(seed * 2862933555777941757ull + 1) {}
  double uniform() {
    state_ = state_ * 6364136223846793005ull + 1442695040888963407ull;
    return ((state_ >> 11) + 0.5) * 0x1p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    const double u1 = uniform(), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::uint64_t state_;
};

// Andrew monotone chain; returns CCW hull without collinear points.
inline std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec2& a, const Vec2& b) {
                          return (a - b).norm() < 1e-12;
                        }),
            pts.end());
  const std::size_t n = pts.size();
  if (n < 3) return pts;
  std::vector<Vec2> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 &&
           (hull[k - 1] - hull[k - 2]).cross(pts[i] - hull[k - 2]) <= 1e-12) {
      --k;
    }
    hull[k++] = pts[i];
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = n - 1; i-- > 0;) {
    while (k >= lower &&
           (hull[k - 1] - hull[k - 2]).cross(pts[i] - hull[k - 2]) <= 1e-12) {
      --k;
    }
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

// Ray casting (crossing number), independent of the half-plane test.
inline bool point_in_polygon_raycast(const std::vector<Vec2>& poly, const Vec2& p) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[j];
    const Vec2& b = poly[i];
    // On-edge counts as inside.
    const Vec2 e = b - a;
    const double len = e.norm();
    const double cr = e.cross(p - a) / len;
    const double t = e.dot(p - a) / (len * len);
    if (std::abs(cr) <= 1e-9 && t >= -1e-9 && t <= 1.0 + 1e-9) return true;
    if ((b.y > p.y) != (a.y > p.y)) {
      const double x = a.x + (b.x - a.x) * (p.y - a.y) / (b.y - a.y);
      if (x > p.x) inside = !inside;
    }
  }
  return inside;
}

// Sutherland-Hodgman clip of subject by a convex CCW clip polygon.
inline std::vector<Vec2> clip_convex(const std::vector<Vec2>& subject,
                                     const std::vector<Vec2>& clip) {
  std::vector<Vec2> out = subject;
  const std::size_t n = clip.size();
  for (std::size_t i = 0; i < n && !out.empty(); ++i) {
    const Vec2 a = clip[i];
    const Vec2 b = clip[(i + 1) % n];
    const Vec2 e = b - a;
    std::vector<Vec2> in;
    in.swap(out);
    const std::size_t m = in.size();
    for (std::size_t j = 0; j < m; ++j) {
      const Vec2& p = in[j];
      const Vec2& q = in[(j + 1) % m];
      const double sp = e.cross(p - a);
      const double sq = e.cross(q - a);
      if (sp >= 0.0) out.push_back(p);
      if ((sp > 0.0 && sq < 0.0) || (sp < 0.0 && sq > 0.0)) {
        out.push_back(p + (q - p) * (sp / (sp - sq)));
      }
    }
  }
  return out;
}

inline double polygon_area(const std::vector<Vec2>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    a += poly[i].cross(poly[(i + 1) % poly.size()]);
  }
  return 0.5 * a;
}

}  // namespace oracles

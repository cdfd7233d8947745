#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "collprob/geometry.hpp"
#include "collprob/prediction.hpp"
#include "collprob/rng.hpp"
#include "collprob/series.hpp"

namespace collprob {

struct McConfig {
  int sample_count = 25000;
  std::uint64_t seed = 0;
  bool orientation_enabled = false;
};

struct McResult {
  ProbabilityTimeSeries series;
  std::vector<double> standard_error;
};

namespace detail {

// Stream-id layout: purpose | step | sample. Keeps every (purpose, step,
// sample) triple on its own counter prefix.
inline std::uint64_t stream_id(std::uint64_t purpose, std::uint64_t step,
                               std::uint64_t sample) {
  return (purpose << 56) | (step << 40) | sample;
}

// Cholesky factor tolerant of a positive semi-definite input: zero pivots
// produce zero columns (degenerate directions draw no noise).
template <int N>
Eigen::Matrix<double, N, N> chol_psd(const Eigen::Matrix<double, N, N>& a) {
  Eigen::Matrix<double, N, N> l = Eigen::Matrix<double, N, N>::Zero();
  const double tol = 1e-12 * std::max(1.0, a.diagonal().maxCoeff());
  for (int j = 0; j < N; ++j) {
    double d = a(j, j);
    for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (d <= tol) continue;
    l(j, j) = std::sqrt(d);
    for (int i = j + 1; i < N; ++i) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

inline void check_grids(const GaussianTrajectory& a, const GaussianTrajectory& b) {
  if (a.states.size() != b.states.size() ||
      std::abs(a.dt - b.dt) > 1e-12 * std::max(1.0, a.dt)) {
    throw std::invalid_argument("monte carlo: trajectories on different grids");
  }
  if (a.states.empty()) {
    throw std::invalid_argument("monte carlo: empty trajectory");
  }
}

template <typename Body>
void run_partitioned(int sample_count, int threads, Body&& body) {
  threads = std::max(1, threads);
  if (threads == 1) {
    body(0, sample_count, 0);
    return;
  }
  std::vector<std::thread> pool;
  const int chunk = (sample_count + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int lo = t * chunk;
    const int hi = std::min(sample_count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi, t] { body(lo, hi, t); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

// Per-timestep state sampling: at every step independently, draw paired ego
// and obstacle poses from the predicted marginals and count footprint
// intersections.
inline McResult mc_state_sampling(const GaussianTrajectory& ego_traj,
                                  const GaussianTrajectory& obs_traj,
                                  const McConfig& cfg, int threads = 1) {
  detail::check_grids(ego_traj, obs_traj);
  if (cfg.sample_count < 1) {
    throw std::invalid_argument("mc_state_sampling: sample_count must be >= 1");
  }
  const std::size_t steps = ego_traj.states.size();
  McResult out;
  out.series.dt = ego_traj.dt;
  out.series.method = "mc_state";
  out.series.values.resize(steps);
  out.standard_error.resize(steps);

  for (std::size_t k = 0; k < steps; ++k) {
    const auto& se = ego_traj.states[k];
    const auto& so = obs_traj.states[k];
    const Eigen::Matrix3d le =
        detail::chol_psd<3>(se.cov.topLeftCorner<3, 3>());
    const Eigen::Matrix3d lo =
        detail::chol_psd<3>(so.cov.topLeftCorner<3, 3>());
    const Eigen::Vector3d me = se.mean.head<3>();
    const Eigen::Vector3d mo = so.mean.head<3>();

    std::vector<long long> counts(std::max(1, threads), 0);
    detail::run_partitioned(
        cfg.sample_count, threads, [&](int lo_i, int hi_i, int worker) {
          long long hits = 0;
          for (int i = lo_i; i < hi_i; ++i) {
            RandomStream rng(cfg.seed, detail::stream_id(1, k, i));
            Eigen::Vector3d ze(rng.next_normal(), rng.next_normal(),
                               rng.next_normal());
            Eigen::Vector3d zo(rng.next_normal(), rng.next_normal(),
                               rng.next_normal());
            const Eigen::Vector3d pe = me + le * ze;
            const Eigen::Vector3d po = mo + lo * zo;
            const double the = cfg.orientation_enabled ? pe[2] : me[2];
            const double tho = cfg.orientation_enabled ? po[2] : mo[2];
            const RectangleSpec re{ego_traj.shape.length, ego_traj.shape.width,
                                   {pe[0], pe[1]}, the};
            const RectangleSpec ro{obs_traj.shape.length, obs_traj.shape.width,
                                   {po[0], po[1]}, tho};
            if (rectangles_intersect(re, ro)) ++hits;
          }
          counts[worker] = hits;
        });
    long long total = 0;
    for (long long c : counts) total += c;
    const double p = static_cast<double>(total) / cfg.sample_count;
    out.series.values[k] = p;
    out.standard_error[k] = std::sqrt(p * (1.0 - p) / cfg.sample_count);
  }
  return out;
}

// Full-trajectory sampling: draw the joint initial state of each agent once,
// propagate with the constant-velocity model, and record the first timestep
// of intersection. The series is the first-passage CDF.
inline McResult mc_trajectory_sampling(const GaussianTrajectory& ego_traj,
                                       const GaussianTrajectory& obs_traj,
                                       const McConfig& cfg, int threads = 1) {
  detail::check_grids(ego_traj, obs_traj);
  if (cfg.sample_count < 1) {
    throw std::invalid_argument(
        "mc_trajectory_sampling: sample_count must be >= 1");
  }
  const std::size_t steps = ego_traj.states.size();
  const auto& se = ego_traj.states[0];
  const auto& so = obs_traj.states[0];
  const Matrix5 le = detail::chol_psd<5>(se.cov);
  const Matrix5 lo = detail::chol_psd<5>(so.cov);
  const double dt = ego_traj.dt;

  const int workers = std::max(1, threads);
  std::vector<std::vector<long long>> first_hit(
      workers, std::vector<long long>(steps + 1, 0));
  detail::run_partitioned(
      cfg.sample_count, threads, [&](int lo_i, int hi_i, int worker) {
        auto& hist = first_hit[worker];
        for (int i = lo_i; i < hi_i; ++i) {
          RandomStream rng(cfg.seed, detail::stream_id(2, 0, i));
          Vector5 ze, zo;
          for (int j = 0; j < 5; ++j) ze[j] = rng.next_normal();
          for (int j = 0; j < 5; ++j) zo[j] = rng.next_normal();
          const Vector5 xe = se.mean + le * ze;
          const Vector5 xo = so.mean + lo * zo;
          const double the = cfg.orientation_enabled ? xe[kTheta] : se.mean[kTheta];
          const double tho = cfg.orientation_enabled ? xo[kTheta] : so.mean[kTheta];
          std::size_t hit = steps;  // no collision
          for (std::size_t k = 0; k < steps; ++k) {
            const double t = dt * static_cast<double>(k);
            const RectangleSpec re{
                ego_traj.shape.length, ego_traj.shape.width,
                {xe[kX] + xe[kVx] * t, xe[kY] + xe[kVy] * t}, the};
            const RectangleSpec ro{
                obs_traj.shape.length, obs_traj.shape.width,
                {xo[kX] + xo[kVx] * t, xo[kY] + xo[kVy] * t}, tho};
            if (rectangles_intersect(re, ro)) {
              hit = k;
              break;
            }
          }
          ++hist[hit];
        }
      });

  McResult out;
  out.series.dt = dt;
  out.series.method = "mc_traj";
  out.series.values.resize(steps);
  out.standard_error.resize(steps);
  long long cum = 0;
  for (std::size_t k = 0; k < steps; ++k) {
    for (int w = 0; w < workers; ++w) cum += first_hit[w][k];
    const double p = static_cast<double>(cum) / cfg.sample_count;
    out.series.values[k] = p;
    out.standard_error[k] = std::sqrt(p * (1.0 - p) / cfg.sample_count);
  }
  return out;
}

}  // namespace collprob

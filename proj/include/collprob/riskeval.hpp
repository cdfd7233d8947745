#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <vector>

#include "collprob/evaluate.hpp"
#include "collprob/prediction.hpp"
#include "collprob/series.hpp"

namespace collprob {

struct CandidateBatch {
  std::vector<GaussianTrajectory> candidates;  // ego; typically zero covariance
  std::vector<GaussianTrajectory> obstacles;
  Method method = Method::kBoundary;
};

struct EvalConfig {
  OverlapConfig overlap;
  CrossingConfig crossing;
  double rate_refine_tol = 1e-4;
  int threads = 1;
};

struct CandidateResult {
  std::vector<double> per_obstacle;
  double combined = 0.0;
  bool feasible = true;
};

struct RiskReport {
  std::vector<CandidateResult> results;
  Method method = Method::kBoundary;
  double wall_time_seconds = 0.0;
};

namespace detail {

inline double aggregate_for(Method method, const GaussianTrajectory& cand,
                            const GaussianTrajectory& obstacle,
                            const EvalConfig& config) {
  switch (method) {
    case Method::kOverlap:
      return trajectory_max(overlap_series(cand, obstacle, config.overlap));
    case Method::kOverlapIndependent:
      return trajectory_independent_product(
          overlap_series(cand, obstacle, config.overlap));
    case Method::kBoundary:
      return boundary_series(cand, obstacle, config.crossing,
                             config.rate_refine_tol)
          .final_value();
    default:
      throw std::invalid_argument("evaluate_batch: unsupported method");
  }
}

}  // namespace detail

// Evaluates every candidate against every obstacle. Probabilistic methods
// aggregate per obstacle and combine across obstacles as 1 - prod(1 - P_k)
// (distinct physical agents). Conservative mode flags a candidate infeasible
// when any timestep footprint intersects any 3-sigma OBB.
inline RiskReport evaluate_batch(const CandidateBatch& batch,
                                 const EvalConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  if (batch.candidates.empty()) {
    throw std::invalid_argument("evaluate_batch: no candidates");
  }
  for (const auto& c : batch.candidates) {
    for (const auto& o : batch.obstacles) detail::check_grids(c, o);
  }
  RiskReport report;
  report.method = batch.method;
  report.results.resize(batch.candidates.size());

  std::vector<std::vector<ConvexPolygon>> obbs;
  if (batch.method == Method::kConservativeObb) {
    obbs.reserve(batch.obstacles.size());
    for (const auto& o : batch.obstacles) obbs.push_back(obb_3sigma(o, o.shape));
  }

  const auto eval_one = [&](std::size_t ci) {
    const GaussianTrajectory& cand = batch.candidates[ci];
    CandidateResult res;
    res.per_obstacle.resize(batch.obstacles.size(), 0.0);
    if (batch.method == Method::kConservativeObb) {
      res.feasible = true;
      for (std::size_t oi = 0; oi < batch.obstacles.size() && res.feasible; ++oi) {
        for (std::size_t k = 0; k < cand.states.size(); ++k) {
          const ConvexPolygon foot = rectangle_footprint(cand.footprint_spec_at(k));
          if (convex_intersect(foot, obbs[oi][k])) {
            res.feasible = false;
            break;
          }
        }
      }
      res.combined = res.feasible ? 0.0 : 1.0;
    } else {
      double survive = 1.0;
      for (std::size_t oi = 0; oi < batch.obstacles.size(); ++oi) {
        const double p =
            detail::aggregate_for(batch.method, cand, batch.obstacles[oi], config);
        res.per_obstacle[oi] = p;
        survive *= 1.0 - p;
      }
      res.combined = 1.0 - survive;
      res.feasible = true;
    }
    report.results[ci] = res;
  };

  const int threads = std::max(1, config.threads);
  if (threads == 1) {
    for (std::size_t ci = 0; ci < batch.candidates.size(); ++ci) eval_one(ci);
  } else {
    // Strided assignment: expensive candidates cluster in index ranges, so
    // contiguous chunks would leave workers idle.
    std::vector<std::thread> pool;
    const std::size_t n = batch.candidates.size();
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t ci = t; ci < n; ci += threads) eval_one(ci);
      });
    }
    for (auto& th : pool) th.join();
  }

  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

// Ascending by combined probability, ties broken by candidate index.
inline std::vector<int> rank_candidates(const RiskReport& report) {
  if (report.results.empty()) {
    throw std::invalid_argument("rank_candidates: empty report");
  }
  std::vector<int> order(report.results.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return report.results[a].combined < report.results[b].combined;
  });
  return order;
}

}  // namespace collprob

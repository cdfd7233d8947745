// Acceptance suite: runs every criterion at its stated tolerance and prints
// one PASS/FAIL line per criterion. Exit status is nonzero if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "collprob/collprob.hpp"

using namespace collprob;

namespace {

int failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion,
              detail.c_str());
  if (!ok) ++failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

struct ScenarioRun {
  ProbabilityTimeSeries mc_state, overlap, overlap_ind, mc_traj, boundary;
  std::vector<double> se_state, se_traj;
  double wall_seconds = 0.0;
};

ScenarioRun run_scenario(int id, bool orientation, std::uint64_t seed,
                         int samples, int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  const ScenarioSpec spec = build_scenario(id, orientation);
  const GaussianTrajectory ego =
      agent_trajectory(spec.ego, spec.dt, spec.horizon, orientation);
  const GaussianTrajectory obs =
      agent_trajectory(spec.obstacles[0], spec.dt, spec.horizon, orientation);
  OverlapConfig oc;
  oc.theta_enabled = orientation;
  CrossingConfig cc;
  cc.theta_enabled = orientation;
  McConfig mc;
  mc.sample_count = samples;
  mc.seed = seed;
  mc.orientation_enabled = orientation;

  ScenarioRun out;
  out.overlap = overlap_series(ego, obs, oc);
  out.overlap_ind = independent_product_series(out.overlap);
  out.boundary = boundary_series(ego, obs, cc);
  McResult ms = mc_state_sampling(ego, obs, mc, threads);
  McResult mt = mc_trajectory_sampling(ego, obs, mc, threads);
  out.se_state = ms.standard_error;
  out.se_traj = mt.standard_error;
  out.mc_state = std::move(ms.series);
  out.mc_traj = std::move(mt.series);
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return out;
}

double first_time_at(const ProbabilityTimeSeries& s, double level) {
  for (std::size_t k = 0; k < s.values.size(); ++k) {
    if (s.values[k] >= level) return s.dt * static_cast<double>(k);
  }
  return 1e9;
}

}  // namespace

int main() {
  const std::uint64_t seed = 42;
  const int samples = 25000;
  const int threads = 4;

  const ScenarioRun s1 = run_scenario(1, false, seed, samples, threads);
  const ScenarioRun s1o = run_scenario(1, true, seed, samples, threads);
  const ScenarioRun s2 = run_scenario(2, false, seed, samples, threads);
  const ScenarioRun s2o = run_scenario(2, true, seed, samples, threads);

  // 1. Scenario 1: all five methods reach >= 0.99 at t = 3 s; full comparison
  //    under 60 s at 25000 samples.
  {
    const double finals[5] = {
        s1.mc_state.final_value(), s1.overlap.final_value(),
        s1.overlap_ind.final_value(), s1.mc_traj.final_value(),
        s1.boundary.final_value()};
    const double lowest = *std::min_element(finals, finals + 5);
    const bool ok = lowest >= 0.99 && s1.wall_seconds < 60.0;
    report(1, ok,
           fmt("scenario-1 finals min=%.4f (>=0.99), comparison wall=%.2fs "
               "(<60s)",
               lowest, s1.wall_seconds));
  }

  // 2. Scenario 2 without orientation: boundary final 0.60 +- 0.05 and within
  //    0.02 + 3 SE of MC trajectory sampling at every timestep.
  {
    const double final_bc = s2.boundary.final_value();
    double worst = -1e9;
    std::size_t worst_k = 0;
    for (std::size_t k = 0; k < s2.boundary.values.size(); ++k) {
      const double excess = std::abs(s2.boundary.values[k] - s2.mc_traj.values[k]) -
                            (0.02 + 3.0 * s2.se_traj[k]);
      if (excess > worst) {
        worst = excess;
        worst_k = k;
      }
    }
    const bool ok = std::abs(final_bc - 0.60) <= 0.05 && worst <= 0.0;
    report(2, ok,
           fmt("boundary final=%.4f (0.60+-0.05), worst band excess=%+.4f at "
               "t=%.1f (<=0)",
               final_bc, worst, 0.1 * worst_k));
  }

  // 3. Scenario 2 overlap peak 0.53 +- 0.05 at t = 0.8 +- 0.2 s; decreasing
  //    over the final 0.5 s.
  {
    std::size_t peak_k = 0;
    for (std::size_t k = 0; k < s2.overlap.values.size(); ++k) {
      if (s2.overlap.values[k] > s2.overlap.values[peak_k]) peak_k = k;
    }
    const double peak = s2.overlap.values[peak_k];
    const double t_peak = 0.1 * static_cast<double>(peak_k);
    bool decreasing = true;
    const std::size_t n = s2.overlap.values.size();
    for (std::size_t k = n - 5; k < n; ++k) {
      if (s2.overlap.values[k] >= s2.overlap.values[k - 1]) decreasing = false;
    }
    const bool ok = std::abs(peak - 0.53) <= 0.05 &&
                    std::abs(t_peak - 0.8) <= 0.2 + 1e-9 && decreasing;
    report(3, ok,
           fmt("overlap peak=%.4f (0.53+-0.05) at t=%.1f (0.8+-0.2), final "
               "0.5s decreasing=%s",
               peak, t_peak, decreasing ? "yes" : "no"));
  }

  // 4. Scenario 2 with orientation: boundary final 0.66 +- 0.05, exceeding the
  //    no-orientation value by 0.03 to 0.10.
  {
    const double with_o = s2o.boundary.final_value();
    const double delta = with_o - s2.boundary.final_value();
    const bool ok =
        std::abs(with_o - 0.66) <= 0.05 && delta >= 0.03 && delta <= 0.10;
    report(4, ok,
           fmt("boundary final=%.4f (0.66+-0.05), delta vs no-orientation "
               "=%+.4f (0.03..0.10)",
               with_o, delta));
  }

  // 5. Scenario 1: the independence product reaches 0.999 at least 0.5 s
  //    before MC trajectory sampling does.
  {
    const double t_ind = first_time_at(s1.overlap_ind, 0.999);
    const double t_mc = first_time_at(s1.mc_traj, 0.999);
    const bool ok = t_mc - t_ind >= 0.5 - 1e-9;
    report(5, ok,
           fmt("independent product at 0.999 by t=%.1f, MC trajectory by "
               "t=%.1f, gap=%.1f (>=0.5)",
               t_ind, t_mc, t_mc - t_ind));
  }

  // 6. Overlap vs MC state sampling within 0.02 + 3 SE at every timestep, both
  //    scenarios, both orientation modes.
  {
    double worst = -1e9;
    std::string where;
    const struct {
      const ScenarioRun* run;
      const char* tag;
    } cases[] = {{&s1, "s1"}, {&s1o, "s1+o"}, {&s2, "s2"}, {&s2o, "s2+o"}};
    for (const auto& c : cases) {
      for (std::size_t k = 0; k < c.run->overlap.values.size(); ++k) {
        const double excess =
            std::abs(c.run->overlap.values[k] - c.run->mc_state.values[k]) -
            (0.02 + 3.0 * c.run->se_state[k]);
        if (excess > worst) {
          worst = excess;
          where = fmt("%s t=%.1f", c.tag, 0.1 * k);
        }
      }
    }
    report(6, worst <= 0.0,
           fmt("worst band excess=%+.4f at %s (<=0)", worst, where.c_str()));
  }

  // 7. Runtime targets at quadrature order 51 on the 31-step trajectory.
  {
    const ScenarioSpec spec = build_scenario(2, false);
    const GaussianTrajectory ego = agent_trajectory(spec.ego, 0.1, 3.0, false);
    const GaussianTrajectory obs =
        agent_trajectory(spec.obstacles[0], 0.1, 3.0, false);
    const GaussianTrajectory ego_o = agent_trajectory(spec.ego, 0.1, 3.0, true);
    const GaussianTrajectory obs_o =
        agent_trajectory(spec.obstacles[0], 0.1, 3.0, true);
    OverlapConfig oc_no, oc_yes;
    oc_no.theta_enabled = false;
    oc_yes.theta_enabled = true;
    CrossingConfig cc_no, cc_yes;
    cc_no.theta_enabled = false;
    cc_yes.theta_enabled = true;

    const auto time_best_of = [](int reps, auto&& fn) {
      double best = 1e9;
      for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        best = std::min(best, std::chrono::duration<double>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count());
      }
      return best;
    };
    const double t_ov = time_best_of(5, [&] { overlap_series(ego, obs, oc_no); });
    const double t_ov_o =
        time_best_of(3, [&] { overlap_series(ego_o, obs_o, oc_yes); });
    const double t_bc = time_best_of(5, [&] { boundary_series(ego, obs, cc_no); });
    const double t_bc_o =
        time_best_of(3, [&] { boundary_series(ego_o, obs_o, cc_yes); });

    CandidateBatch batch = make_cutin_batch(Method::kOverlap);
    EvalConfig bcfg;
    bcfg.threads = threads;
    const double t_batch_ov =
        time_best_of(3, [&] { evaluate_batch(batch, bcfg); });
    batch.method = Method::kBoundary;
    const double t_batch_bc =
        time_best_of(3, [&] { evaluate_batch(batch, bcfg); });

    const bool ok = t_ov < 0.010 && t_ov_o < 0.200 && t_bc < 0.030 &&
                    t_bc_o < 0.500 && t_batch_ov < 0.5 && t_batch_bc < 1.0;
    report(7, ok,
           fmt("overlap %.1f/%.1f ms (<10/<200), boundary %.1f/%.1f ms "
               "(<30/<500), batch600 overlap %.2fs (<0.5) boundary %.2fs "
               "(<1.0)",
               1e3 * t_ov, 1e3 * t_ov_o, 1e3 * t_bc, 1e3 * t_bc_o, t_batch_ov,
               t_batch_bc));
  }

  // 8. Property suites at their stated tolerances.
  {
    bool ok = true;
    std::string detail;

    // Quadrature polynomial exactness, degree <= 2n-1, relative error 1e-12.
    for (int order : {2, 8, 51}) {
      const QuadratureRule& rule = gauss_legendre(order);
      for (int d = 0; d <= 2 * order - 1; ++d) {
        const double got = integrate(
            rule, [&](double x) { return std::pow(x, d); }, -1.0, 1.0);
        const double closed = d % 2 == 1 ? 0.0 : 2.0 / (d + 1);
        if (std::abs(got - closed) > 1e-12 * std::max(1.0, std::abs(closed))) {
          ok = false;
          detail += fmt("[quad n=%d d=%d] ", order, d);
        }
      }
    }

    // Whitening over 1000 random SPD matrices.
    {
      RandomStream rng(3, 0);
      int bad = 0;
      for (int it = 0; it < 1000; ++it) {
        Eigen::Matrix3d a;
        for (int i = 0; i < 3; ++i) {
          for (int j = 0; j < 3; ++j) a(i, j) = rng.next_normal();
        }
        const Eigen::Matrix3d cov =
            a * a.transpose() + 1e-4 * Eigen::Matrix3d::Identity();
        const WhiteningTransform t =
            whiten(GaussianND(Eigen::Vector3d::Zero(), cov));
        if ((t.W * cov * t.W.transpose() - Eigen::Matrix3d::Identity())
                .cwiseAbs()
                .maxCoeff() > 1e-10) {
          ++bad;
        }
      }
      if (bad != 0) {
        ok = false;
        detail += fmt("[whiten %d/1000] ", bad);
      }
    }

    // Minkowski containment, 1e5 samples, zero mismatches.
    {
      RandomStream rng(5, 0);
      const RectangleSpec ra{3.0, 1.4, {0.3, -0.1}, 0.5};
      const RectangleSpec rb{2.1, 0.9, {-0.6, 0.8}, -1.2};
      const ConvexPolygon m =
          minkowski_sum(rectangle_footprint(ra), rectangle_footprint(rb));
      int mismatches = 0;
      for (int i = 0; i < 100000; ++i) {
        const auto sample = [&](const RectangleSpec& r) {
          const Vec2 local{r.length * (rng.next_uniform() - 0.5),
                           r.width * (rng.next_uniform() - 0.5)};
          return r.center + local.rotated(r.heading);
        };
        if (!contains_point(m, sample(ra) + sample(rb))) ++mismatches;
      }
      if (mismatches != 0) {
        ok = false;
        detail += fmt("[minkowski %d] ", mismatches);
      }
    }

    // Collision-volume equivalence, 1e5 samples, zero mismatches.
    {
      RandomStream rng(7, 0);
      const RectangleSpec ego{5.0, 2.02, {0, 0}, 0.0};
      int mismatches = 0;
      for (int i = 0; i < 100000; ++i) {
        const double th = (2.0 * rng.next_uniform() - 1.0) * M_PI;
        const Vec2 x{14.0 * (rng.next_uniform() - 0.5),
                     14.0 * (rng.next_uniform() - 0.5)};
        const bool inside =
            contains_point(collision_volume(ego, {5.0, 2.02}, th), x);
        const bool hit = rectangles_intersect({5.0, 2.02, {0, 0}, 0.0},
                                              {5.0, 2.02, x, th});
        if (inside != hit) ++mismatches;
      }
      if (mismatches != 0) {
        ok = false;
        detail += fmt("[volume-equiv %d] ", mismatches);
      }
    }

    // Truncated-mean speed against sampling, 3 sigma.
    {
      RandomStream rng(9, 0);
      const double mu = -0.43, sigma = 0.81;
      const int n = 2000000;
      double sum = 0.0, sum2 = 0.0;
      for (int i = 0; i < n; ++i) {
        const double v = mu + sigma * rng.next_normal();
        const double inward = std::max(-v, 0.0);
        sum += inward;
        sum2 += inward * inward;
      }
      const double mean = sum / n;
      const double se = std::sqrt((sum2 / n - mean * mean) / n);
      if (std::abs(expected_inward_speed(mu, sigma) - mean) > 3.0 * se + 1e-6) {
        ok = false;
        detail += "[inward-speed] ";
      }
    }

    // Fixed-theta overlap against the separable closed form, abs error 1e-6.
    {
      const GaussianND g(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity());
      double worst = 0.0;
      for (const double half : {0.5, 1.0, 1.7, 2.5}) {
        const double expect = std::pow(
            std_normal_cdf(half) - std_normal_cdf(-half), 2.0);
        const double got = overlap_probability_fixed_theta(
            g, rectangle_footprint({2 * half, 2 * half, {0, 0}, 0.0}));
        worst = std::max(worst, std::abs(got - expect));
      }
      if (worst > 1e-6) {
        ok = false;
        detail += fmt("[overlap-closed %.2e] ", worst);
      }
    }

    // Crossing rate against a Riemann line-integral oracle, relative 1e-8.
    {
      PoseVelocityGaussian s;
      s.mean << 0.4, -0.3, 0.0, 0.0, 0.0;
      Eigen::Matrix2d sx;
      sx << 0.35, 0.08, 0.08, 0.22;
      s.cov.topLeftCorner<2, 2>() = sx;
      const double sigma_v = 0.8;
      s.cov.bottomRightCorner<2, 2>() =
          sigma_v * sigma_v * Eigen::Matrix2d::Identity();
      const ConvexPolygon poly =
          minkowski_sum(rectangle_footprint({2.0, 1.0, {0, 0}, 0.2}),
                        rectangle_footprint({1.4, 0.8, {0, 0}, -0.7}));
      CrossingConfig cfg;
      const double got =
          crossing_rate_fixed_theta(RelativeStateGaussian{s}, poly, cfg);
      const Eigen::Matrix2d prec = sx.inverse();
      const double norm = 1.0 / (2.0 * M_PI * std::sqrt(sx.determinant()));
      double line = 0.0;
      for (const auto& e : edge_parametrization(poly)) {
        const int n = 200000;
        const auto f = [&](double t) {
          const Vec2 x = e.start + (e.end - e.start) * t;
          const Eigen::Vector2d d(x.x - 0.4, x.y + 0.3);
          return norm * std::exp(-0.5 * d.dot(prec * d));
        };
        double acc = f(0.0) + f(1.0);
        for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(i / double(n));
        line += acc / (3.0 * n) * e.length;
      }
      const double expect = sigma_v * std_normal_pdf(0.0) * line;
      if (std::abs(got - expect) > 1e-8 * expect) {
        ok = false;
        detail += fmt("[crossing-riemann rel=%.2e] ", std::abs(got - expect) / expect);
      }
    }

    // MC determinism across worker partitions, bit-identical.
    {
      const ScenarioSpec spec = build_scenario(2, true);
      const GaussianTrajectory ego = agent_trajectory(spec.ego, 0.1, 3.0, true);
      const GaussianTrajectory obs =
          agent_trajectory(spec.obstacles[0], 0.1, 3.0, true);
      McConfig mc;
      mc.sample_count = 5003;
      mc.seed = 11;
      mc.orientation_enabled = true;
      const McResult a = mc_trajectory_sampling(ego, obs, mc, 1);
      const McResult b = mc_trajectory_sampling(ego, obs, mc, 4);
      const McResult c = mc_trajectory_sampling(ego, obs, mc, 8);
      if (a.series.values != b.series.values ||
          a.series.values != c.series.values) {
        ok = false;
        detail += "[mc-determinism] ";
      }
    }

    report(8, ok,
           ok ? "quadrature/whitening/minkowski/volume/inward-speed/overlap/"
                "crossing/determinism property suites all at tolerance"
              : "failed: " + detail);
  }

  // 9. Cut-in fixture: the conservative filter rejects all 600 candidates
  //    while both probabilistic rankings find a low-risk candidate.
  {
    CandidateBatch batch = make_cutin_batch(Method::kConservativeObb);
    EvalConfig cfg;
    cfg.threads = threads;
    const RiskReport obb = evaluate_batch(batch, cfg);
    long feasible = 0;
    for (const auto& r : obb.results) feasible += r.feasible ? 1 : 0;

    batch.method = Method::kBoundary;
    const RiskReport bc = evaluate_batch(batch, cfg);
    const double best_bc = bc.results[rank_candidates(bc).front()].combined;

    batch.method = Method::kOverlap;
    const RiskReport om = evaluate_batch(batch, cfg);
    const double best_om = om.results[rank_candidates(om).front()].combined;

    const bool ok = feasible == 0 && best_bc < 0.5 && best_om < 0.5 &&
                    !bc.results.empty();
    report(9, ok,
           fmt("conservative feasible=%ld/600 (=0), boundary best=%.4f (<0.5), "
               "overlap-max best=%.4f (<0.5)",
               feasible, best_bc, best_om));
  }

  std::printf("%s: %d criterion failure(s)\n", failures == 0 ? "OK" : "FAILED",
              failures);
  return failures == 0 ? 0 : 1;
}

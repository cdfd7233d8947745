#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "collprob/collprob.hpp"

namespace fs = std::filesystem;
using namespace collprob;

namespace {

struct RunOptions {
  std::string scenario = "1";
  std::string methods = "all";
  bool orientation = false;
  int samples = 25000;
  std::uint64_t seed = 0;
  int quad_order = 51;
  double dt = 0.0;  // 0: keep the scenario's grid
  std::string out_dir = ".";
  int threads = 1;
  bool svg = false;
};

int threads_from_env(int cli_value) {
  if (cli_value > 0) return cli_value;
  if (const char* env = std::getenv("COLLPROB_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

ScenarioSpec resolve_scenario(const std::string& name) {
  if (name == "1" || name == "2") {
    return build_scenario(name == "1" ? 1 : 2, false);
  }
  if (name == "builtin:empty") {
    ScenarioSpec spec = build_scenario(1, false);
    spec.obstacles.clear();
    return spec;
  }
  return io::load_scenario(name);
}

std::vector<Method> parse_methods(const std::string& list) {
  if (list == "all") {
    return {Method::kMcState, Method::kOverlap, Method::kOverlapIndependent,
            Method::kMcTraj, Method::kBoundary};
  }
  std::vector<Method> out;
  std::string item;
  std::stringstream ss(list);
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(method_from_name(item));
  }
  if (out.empty()) throw std::invalid_argument("no methods selected");
  return out;
}

struct MethodRun {
  ProbabilityTimeSeries series;
  double wall_seconds = 0.0;
  std::vector<double> standard_error;
};

std::map<Method, MethodRun> run_methods(const ScenarioSpec& spec,
                                        const std::vector<Method>& methods,
                                        const RunOptions& opt) {
  ScenarioSpec s = spec;
  s.orientation_enabled = opt.orientation;
  if (opt.dt > 0.0) s.dt = opt.dt;
  const auto steps = static_cast<std::size_t>(std::llround(s.horizon / s.dt)) + 1;

  const GaussianTrajectory ego =
      agent_trajectory(s.ego, s.dt, s.horizon, s.orientation_enabled);
  std::vector<GaussianTrajectory> obstacles;
  for (const auto& o : s.obstacles) {
    obstacles.push_back(agent_trajectory(o, s.dt, s.horizon, s.orientation_enabled));
  }

  OverlapConfig oc;
  oc.quadrature_order = opt.quad_order;
  oc.theta_enabled = s.orientation_enabled;
  CrossingConfig cc;
  cc.quadrature_order = opt.quad_order;
  cc.theta_enabled = s.orientation_enabled;
  McConfig mc;
  mc.sample_count = opt.samples;
  mc.seed = opt.seed;
  mc.orientation_enabled = s.orientation_enabled;

  // Per-method series against each obstacle, combined across obstacles as
  // 1 - prod(1 - P_k) per timestep; an empty scenario yields all zeros.
  std::map<Method, MethodRun> out;
  for (Method m : methods) {
    MethodRun run;
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<ProbabilityTimeSeries> per_obstacle;
    for (const auto& obs : obstacles) {
      switch (m) {
        case Method::kMcState: {
          McResult r = mc_state_sampling(ego, obs, mc, opt.threads);
          run.standard_error = r.standard_error;
          per_obstacle.push_back(std::move(r.series));
          break;
        }
        case Method::kMcTraj: {
          McResult r = mc_trajectory_sampling(ego, obs, mc, opt.threads);
          run.standard_error = r.standard_error;
          per_obstacle.push_back(std::move(r.series));
          break;
        }
        case Method::kOverlap:
          per_obstacle.push_back(overlap_series(ego, obs, oc));
          break;
        case Method::kOverlapIndependent:
          per_obstacle.push_back(
              independent_product_series(overlap_series(ego, obs, oc)));
          break;
        case Method::kBoundary:
          per_obstacle.push_back(boundary_series(ego, obs, cc));
          break;
        default:
          throw std::invalid_argument("method not usable in run mode");
      }
    }
    run.series.dt = s.dt;
    run.series.method = method_name(m);
    run.series.values.assign(steps, 0.0);
    for (std::size_t k = 0; k < steps; ++k) {
      double survive = 1.0;
      for (const auto& ser : per_obstacle) survive *= 1.0 - ser.values[k];
      run.series.values[k] = 1.0 - survive;
    }
    run.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    out.emplace(m, std::move(run));
  }
  return out;
}

int cmd_run(const RunOptions& opt) {
  const ScenarioSpec spec = resolve_scenario(opt.scenario);
  const std::vector<Method> methods = parse_methods(opt.methods);
  const auto runs = run_methods(spec, methods, opt);

  fs::create_directories(opt.out_dir);
  std::map<Method, ProbabilityTimeSeries> series;
  for (const auto& [m, r] : runs) series.emplace(m, r.series);
  const fs::path csv = fs::path(opt.out_dir) / "probabilities.csv";
  io::write_probabilities_csv(csv.string(), series);

  nlohmann::json summary{{"format_version", 1},
                         {"scenario", opt.scenario},
                         {"orientation_enabled", opt.orientation},
                         {"seed", opt.seed},
                         {"samples", opt.samples},
                         {"quadrature_order", opt.quad_order}};
  for (const auto& [m, r] : runs) {
    nlohmann::json entry{{"final", r.series.final_value()},
                         {"max", trajectory_max(r.series)},
                         {"wall_time_seconds", r.wall_seconds}};
    if (!r.standard_error.empty()) {
      entry["standard_error_final"] = r.standard_error.back();
    }
    summary["methods"][method_name(m)] = entry;
  }
  const fs::path sj = fs::path(opt.out_dir) / "summary.json";
  std::ofstream sout(sj);
  if (!sout) {
    std::cerr << "error: cannot write " << sj << "\n";
    return 1;
  }
  sout << summary.dump(2) << "\n";

  if (opt.svg) {
    io::write_svg_plot((fs::path(opt.out_dir) / "plot.svg").string(), series);
  }
  std::cout << "wrote " << csv.string() << "\n";
  for (const auto& [m, r] : runs) {
    std::printf("%-20s final=%.6f max=%.6f wall=%.4fs\n", method_name(m),
                r.series.final_value(), trajectory_max(r.series), r.wall_seconds);
  }
  return 0;
}

int cmd_bench(const RunOptions& opt, int repetitions) {
  if (repetitions < 3) {
    std::cerr << "error: --reps must be >= 3\n";
    return 2;
  }
  const ScenarioSpec spec = resolve_scenario(opt.scenario);
  const std::vector<Method> methods = parse_methods(opt.methods);

  struct Row {
    std::string name;
    bool orientation;
    double median_s, p95_s;
    std::string extra;
  };
  std::vector<Row> rows;
  std::map<Method, ProbabilityTimeSeries> reference;
  for (bool orient : {false, true}) {
    RunOptions o = opt;
    o.orientation = orient;
    for (Method m : methods) {
      std::vector<double> times;
      run_methods(spec, {m}, o);  // warm-up, excluded
      for (int r = 0; r < repetitions; ++r) {
        const auto runs = run_methods(spec, {m}, o);
        times.push_back(runs.at(m).wall_seconds);
        if (!orient) reference[m] = runs.at(m).series;
      }
      std::sort(times.begin(), times.end());
      Row row;
      row.name = method_name(m);
      row.orientation = orient;
      row.median_s = times[times.size() / 2];
      row.p95_s = times[static_cast<std::size_t>(
          std::min<double>(times.size() - 1.0, std::ceil(0.95 * times.size()) - 1))];
      if (m == Method::kMcState || m == Method::kMcTraj) {
        row.extra = "samples=" + std::to_string(opt.samples);
      }
      rows.push_back(row);
    }
  }
  std::printf("%-20s %-12s %-12s %-12s %s\n", "method", "orientation",
              "median_s", "p95_s", "notes");
  for (const auto& r : rows) {
    std::printf("%-20s %-12s %-12.6f %-12.6f %s\n", r.name.c_str(),
                r.orientation ? "with" : "without", r.median_s, r.p95_s,
                r.extra.c_str());
  }
  fs::create_directories(opt.out_dir);
  const fs::path bcsv = fs::path(opt.out_dir) / "bench.csv";
  std::FILE* f = std::fopen(bcsv.string().c_str(), "wb");
  if (!f) {
    std::cerr << "error: cannot write " << bcsv << "\n";
    return 1;
  }
  std::fprintf(f, "method,orientation,median_s,p95_s,notes\n");
  for (const auto& r : rows) {
    std::fprintf(f, "%s,%s,%.9g,%.9g,%s\n", r.name.c_str(),
                 r.orientation ? "with" : "without", r.median_s, r.p95_s,
                 r.extra.c_str());
  }
  std::fclose(f);
  std::cout << "wrote " << bcsv.string() << "\n";
  return 0;
}

int cmd_batch(const std::string& input, const std::string& method_override,
              const std::string& out_dir, int threads) {
  CandidateBatch batch = io::load_batch(input);
  if (!method_override.empty()) {
    batch.method = method_from_name(method_override);
  }
  EvalConfig config;
  config.threads = threads;
  const RiskReport report = evaluate_batch(batch, config);

  fs::create_directories(out_dir);
  const fs::path rp = fs::path(out_dir) / "report.json";
  std::ofstream out(rp);
  if (!out) {
    std::cerr << "error: cannot write " << rp << "\n";
    return 1;
  }
  out << io::report_to_json(report).dump(2) << "\n";

  if (batch.method == Method::kConservativeObb) {
    long feasible = 0;
    for (const auto& r : report.results) feasible += r.feasible ? 1 : 0;
    std::printf("%ld feasible candidates of %zu\n", feasible,
                report.results.size());
  } else {
    const auto order = rank_candidates(report);
    const int best = order.front();
    std::printf("best candidate: %d risk=%.6f (of %zu candidates)\n", best,
                report.results[best].combined, report.results.size());
  }
  std::printf("wall time: %.3fs\n", report.wall_time_seconds);
  std::cout << "wrote " << rp.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collision probability estimation for uncertain trajectories"};
  app.require_subcommand(1);

  RunOptions opt;
  int threads_cli = 0;
  int reps = 5;
  std::string batch_input, batch_method, batch_out = ".";

  CLI::App* run = app.add_subcommand("run", "Evaluate a scenario with the selected methods");
  run->add_option("--scenario", opt.scenario, "Built-in id (1|2|builtin:empty) or JSON path");
  run->add_option("--methods", opt.methods, "Comma list or 'all'");
  run->add_flag("--orientation,!--no-orientation", opt.orientation,
                "Enable heading uncertainty");
  run->add_option("--samples", opt.samples, "Monte Carlo sample count")
      ->check(CLI::PositiveNumber);
  run->add_option("--seed", opt.seed, "Random seed");
  run->add_option("--quad-order", opt.quad_order, "Gauss-Legendre order")
      ->check(CLI::Range(2, 512));
  run->add_option("--dt", opt.dt, "Resample the scenario grid (seconds)");
  run->add_option("--out", opt.out_dir, "Output directory");
  run->add_option("--threads", threads_cli, "Worker threads (env COLLPROB_THREADS)");
  run->add_flag("--svg", opt.svg, "Also write plot.svg");

  CLI::App* bench = app.add_subcommand("bench", "Benchmark the selected methods");
  bench->add_option("--scenario", opt.scenario, "Built-in id or JSON path");
  bench->add_option("--methods", opt.methods, "Comma list or 'all'");
  bench->add_option("--samples", opt.samples, "Monte Carlo sample count");
  bench->add_option("--seed", opt.seed, "Random seed");
  bench->add_option("--quad-order", opt.quad_order, "Gauss-Legendre order");
  bench->add_option("--reps", reps, "Repetitions (>= 3)");
  bench->add_option("--out", opt.out_dir, "Output directory");
  bench->add_option("--threads", threads_cli, "Worker threads");

  CLI::App* batch = app.add_subcommand("batch", "Evaluate a candidate batch file");
  batch->add_option("--input", batch_input, "Batch JSON file")->required();
  batch->add_option("--method", batch_method,
                    "Override: overlap-max|overlap-independent|boundary|conservative-obb");
  batch->add_option("--out", batch_out, "Output directory");
  batch->add_option("--threads", threads_cli, "Worker threads");

  CLI11_PARSE(app, argc, argv);
  opt.threads = threads_from_env(threads_cli);

  try {
    if (run->parsed()) return cmd_run(opt);
    if (bench->parsed()) return cmd_bench(opt, reps);
    if (batch->parsed()) {
      return cmd_batch(batch_input, batch_method, batch_out, opt.threads);
    }
  } catch (const io::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

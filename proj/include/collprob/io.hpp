#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "collprob/evaluate.hpp"
#include "collprob/prediction.hpp"
#include "collprob/riskeval.hpp"
#include "collprob/series.hpp"

namespace collprob::io {

using nlohmann::json;

struct SchemaError : std::runtime_error {
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_with_location(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Recover line/column from the byte offset for a precise message.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw SchemaError(path + ":" + std::to_string(line) + ":" +
                      std::to_string(col) + ": " + e.what());
  }
}

template <typename T>
T require(const json& j, const std::string& where, const std::string& key) {
  if (!j.contains(key)) throw SchemaError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(where + "." + key + ": " + e.what());
  }
}

inline json agent_to_json(const AgentInit& a) {
  return json{
      {"position", {a.position.x, a.position.y}},
      {"position_cov",
       {{a.position_cov(0, 0), a.position_cov(0, 1)},
        {a.position_cov(1, 0), a.position_cov(1, 1)}}},
      {"speed", a.speed},
      {"sigma_speed", a.sigma_speed},
      {"heading", a.heading},
      {"sigma_heading", a.sigma_heading},
      {"shape", {{"length", a.shape.length}, {"width", a.shape.width}}}};
}

inline AgentInit agent_from_json(const json& j, const std::string& where) {
  AgentInit a;
  const auto pos = require<std::vector<double>>(j, where, "position");
  if (pos.size() != 2) throw SchemaError(where + ".position: expected [x, y]");
  a.position = {pos[0], pos[1]};
  const auto cov = require<std::vector<std::vector<double>>>(j, where, "position_cov");
  if (cov.size() != 2 || cov[0].size() != 2 || cov[1].size() != 2) {
    throw SchemaError(where + ".position_cov: expected 2x2 matrix");
  }
  a.position_cov << cov[0][0], cov[0][1], cov[1][0], cov[1][1];
  a.speed = require<double>(j, where, "speed");
  a.sigma_speed = require<double>(j, where, "sigma_speed");
  a.heading = require<double>(j, where, "heading");
  a.sigma_heading = require<double>(j, where, "sigma_heading");
  const json shape = require<json>(j, where, "shape");
  a.shape.length = require<double>(shape, where + ".shape", "length");
  a.shape.width = require<double>(shape, where + ".shape", "width");
  if (!(a.shape.length > 0.0) || !(a.shape.width > 0.0)) {
    throw SchemaError(where + ".shape: dimensions must be positive");
  }
  return a;
}

}  // namespace detail

inline json scenario_to_json(const ScenarioSpec& spec) {
  json obstacles = json::array();
  for (const auto& o : spec.obstacles) obstacles.push_back(detail::agent_to_json(o));
  return json{{"format_version", 1},
              {"dt", spec.dt},
              {"horizon", spec.horizon},
              {"orientation_enabled", spec.orientation_enabled},
              {"ego", detail::agent_to_json(spec.ego)},
              {"obstacles", obstacles}};
}

inline ScenarioSpec scenario_from_json(const json& j) {
  if (detail::require<int>(j, "$", "format_version") != 1) {
    throw SchemaError("$.format_version: unsupported version");
  }
  ScenarioSpec spec;
  spec.dt = detail::require<double>(j, "$", "dt");
  spec.horizon = detail::require<double>(j, "$", "horizon");
  if (!(spec.dt > 0.0) || !(spec.horizon >= 0.0)) {
    throw SchemaError("$.dt/horizon: need dt > 0 and horizon >= 0");
  }
  spec.orientation_enabled = detail::require<bool>(j, "$", "orientation_enabled");
  spec.ego = detail::agent_from_json(detail::require<json>(j, "$", "ego"), "$.ego");
  const json obstacles = detail::require<json>(j, "$", "obstacles");
  if (!obstacles.is_array()) throw SchemaError("$.obstacles: expected an array");
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    spec.obstacles.push_back(detail::agent_from_json(
        obstacles[i], "$.obstacles[" + std::to_string(i) + "]"));
  }
  return spec;
}

inline void save_scenario(const ScenarioSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError(path + ": cannot open for writing");
  out << scenario_to_json(spec).dump(2) << "\n";
}

inline ScenarioSpec load_scenario(const std::string& path) {
  return scenario_from_json(detail::parse_with_location(path));
}

// ----- batch files -----

struct BatchObstacleSpec {
  Vec2 position;
  Vec2 velocity;
  double heading = 0.0;
  RectangleDims shape;
  double sigma_pos = 0.3;
  double sigma_v = 0.15;
};

inline json batch_to_json(const CandidateBatch& batch,
                          const std::vector<BatchObstacleSpec>& obstacles,
                          double dt, double horizon) {
  json candidates = json::array();
  for (const auto& c : batch.candidates) {
    json states = json::array();
    for (const auto& s : c.states) {
      states.push_back({s.mean[kX], s.mean[kY], s.mean[kTheta], s.mean[kVx],
                        s.mean[kVy]});
    }
    candidates.push_back(json{{"states", states}});
  }
  json obs = json::array();
  for (const auto& o : obstacles) {
    obs.push_back(json{{"position", {o.position.x, o.position.y}},
                       {"velocity", {o.velocity.x, o.velocity.y}},
                       {"heading", o.heading},
                       {"shape",
                        {{"length", o.shape.length}, {"width", o.shape.width}}},
                       {"sigma_pos", o.sigma_pos},
                       {"sigma_v", o.sigma_v}});
  }
  const RectangleDims ego_shape =
      batch.candidates.empty() ? RectangleDims{} : batch.candidates[0].shape;
  return json{{"format_version", 1},
              {"dt", dt},
              {"horizon", horizon},
              {"method", method_name(batch.method)},
              {"ego_shape",
               {{"length", ego_shape.length}, {"width", ego_shape.width}}},
              {"candidates", candidates},
              {"obstacles", obs}};
}

inline CandidateBatch batch_from_json(const json& j) {
  if (detail::require<int>(j, "$", "format_version") != 1) {
    throw SchemaError("$.format_version: unsupported version");
  }
  const double dt = detail::require<double>(j, "$", "dt");
  const double horizon = detail::require<double>(j, "$", "horizon");
  if (!(dt > 0.0)) throw SchemaError("$.dt: must be positive");
  CandidateBatch batch;
  batch.method = method_from_name(detail::require<std::string>(j, "$", "method"));
  const json shape = detail::require<json>(j, "$", "ego_shape");
  RectangleDims ego_shape;
  ego_shape.length = detail::require<double>(shape, "$.ego_shape", "length");
  ego_shape.width = detail::require<double>(shape, "$.ego_shape", "width");
  const json cands = detail::require<json>(j, "$", "candidates");
  if (!cands.is_array() || cands.empty()) {
    throw SchemaError("$.candidates: expected a non-empty array");
  }
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt)) + 1;
  for (std::size_t ci = 0; ci < cands.size(); ++ci) {
    const std::string where = "$.candidates[" + std::to_string(ci) + "]";
    const auto states =
        detail::require<std::vector<std::vector<double>>>(cands[ci], where, "states");
    if (states.size() != steps) {
      throw SchemaError(where + ".states: expected " + std::to_string(steps) +
                        " states on the shared grid");
    }
    GaussianTrajectory traj;
    traj.dt = dt;
    traj.shape = ego_shape;
    traj.states.resize(states.size());
    for (std::size_t k = 0; k < states.size(); ++k) {
      if (states[k].size() != 5) {
        throw SchemaError(where + ".states[" + std::to_string(k) +
                          "]: expected [x, y, theta, vx, vy]");
      }
      traj.states[k].mean << states[k][0], states[k][1], states[k][2],
          states[k][3], states[k][4];
    }
    batch.candidates.push_back(std::move(traj));
  }
  const json obs = detail::require<json>(j, "$", "obstacles");
  if (!obs.is_array()) throw SchemaError("$.obstacles: expected an array");
  for (std::size_t oi = 0; oi < obs.size(); ++oi) {
    const std::string where = "$.obstacles[" + std::to_string(oi) + "]";
    const auto pos = detail::require<std::vector<double>>(obs[oi], where, "position");
    const auto vel = detail::require<std::vector<double>>(obs[oi], where, "velocity");
    if (pos.size() != 2 || vel.size() != 2) {
      throw SchemaError(where + ": position/velocity must be [x, y]");
    }
    const json oshape = detail::require<json>(obs[oi], where, "shape");
    RectangleDims dims;
    dims.length = detail::require<double>(oshape, where + ".shape", "length");
    dims.width = detail::require<double>(oshape, where + ".shape", "width");
    const double heading = detail::require<double>(obs[oi], where, "heading");
    const double sp = detail::require<double>(obs[oi], where, "sigma_pos");
    const double sv = detail::require<double>(obs[oi], where, "sigma_v");
    batch.obstacles.push_back(forecast_uncertainty(
        {pos[0], pos[1]}, {vel[0], vel[1]}, heading, dims, dt, horizon, sp, sv));
  }
  return batch;
}

inline CandidateBatch load_batch(const std::string& path) {
  return batch_from_json(detail::parse_with_location(path));
}

inline json report_to_json(const RiskReport& report) {
  json cands = json::array();
  for (std::size_t i = 0; i < report.results.size(); ++i) {
    const auto& r = report.results[i];
    cands.push_back(json{{"index", i},
                         {"per_obstacle", r.per_obstacle},
                         {"combined", r.combined},
                         {"feasible", r.feasible}});
  }
  json ranking = json::array();
  if (report.method != Method::kConservativeObb) {
    for (int idx : rank_candidates(report)) ranking.push_back(idx);
  }
  return json{{"format_version", 1},
              {"method", method_name(report.method)},
              {"wall_time_seconds", report.wall_time_seconds},
              {"candidates", cands},
              {"ranking", ranking}};
}

// ----- CSV / SVG -----

// Canonical column order of the comparison CSV.
inline const std::vector<Method>& csv_method_order() {
  static const std::vector<Method> order{Method::kMcState, Method::kOverlap,
                                         Method::kOverlapIndependent,
                                         Method::kMcTraj, Method::kBoundary};
  return order;
}

inline void write_probabilities_csv(
    const std::string& path,
    const std::map<Method, ProbabilityTimeSeries>& series) {
  if (series.empty()) throw std::invalid_argument("CSV: no series selected");
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error(path + ": cannot open for writing");
  std::string header = "t";
  std::size_t steps = 0;
  double dt = 0.0;
  for (Method m : csv_method_order()) {
    const auto it = series.find(m);
    if (it == series.end()) continue;
    header += ",";
    header += method_name(m);
    steps = it->second.values.size();
    dt = it->second.dt;
  }
  std::fprintf(f, "%s\n", header.c_str());
  for (std::size_t k = 0; k < steps; ++k) {
    std::fprintf(f, "%.3f", dt * static_cast<double>(k));
    for (Method m : csv_method_order()) {
      const auto it = series.find(m);
      if (it == series.end()) continue;
      std::fprintf(f, ",%.9g", it->second.values[k]);
    }
    std::fprintf(f, "\n");
  }
  std::fclose(f);
}

// Probability-vs-time curves, one polyline per method, axes in seconds and
// percent.
inline void write_svg_plot(const std::string& path,
                           const std::map<Method, ProbabilityTimeSeries>& series) {
  static const std::map<Method, std::string> colors{
      {Method::kMcState, "#000000"},      {Method::kOverlap, "#d62728"},
      {Method::kOverlapIndependent, "#ff7f0e"}, {Method::kMcTraj, "#2ca02c"},
      {Method::kBoundary, "#1f77b4"},
  };
  const int width = 720, height = 540;
  const double ml = 70, mr = 20, mt = 20, mb = 90;
  double t_max = 0.0;
  for (const auto& [m, s] : series) {
    t_max = std::max(t_max, s.dt * static_cast<double>(s.values.size() - 1));
  }
  if (t_max <= 0.0) t_max = 1.0;
  const auto sx = [&](double t) { return ml + (width - ml - mr) * t / t_max; };
  const auto sy = [&](double p) {
    return mt + (height - mt - mb) * (1.0 - p);
  };
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
      << "' height='" << height << "' font-family='sans-serif' font-size='13'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  for (int g = 0; g <= 10; ++g) {
    const double y = sy(g / 10.0);
    out << "<line x1='" << ml << "' y1='" << y << "' x2='" << width - mr
        << "' y2='" << y << "' stroke='#dddddd'/>\n";
    out << "<text x='" << ml - 8 << "' y='" << y + 4
        << "' text-anchor='end'>" << g * 10 << "</text>\n";
  }
  for (double t = 0.0; t <= t_max + 1e-9; t += 0.5) {
    const double x = sx(t);
    out << "<line x1='" << x << "' y1='" << sy(0) << "' x2='" << x << "' y2='"
        << sy(0) + 5 << "' stroke='black'/>\n";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", t);
    out << "<text x='" << x << "' y='" << sy(0) + 20
        << "' text-anchor='middle'>" << buf << "</text>\n";
  }
  out << "<line x1='" << ml << "' y1='" << sy(0) << "' x2='" << width - mr
      << "' y2='" << sy(0) << "' stroke='black'/>\n";
  out << "<line x1='" << ml << "' y1='" << sy(0) << "' x2='" << ml << "' y2='"
      << sy(1) << "' stroke='black'/>\n";
  out << "<text x='" << (ml + width - mr) / 2 << "' y='" << height - mb + 45
      << "' text-anchor='middle'>Time in s</text>\n";
  out << "<text x='18' y='" << (mt + height - mb) / 2
      << "' text-anchor='middle' transform='rotate(-90 18 "
      << (mt + height - mb) / 2 << ")'>Collision probability in %</text>\n";
  double lx = ml + 10;
  for (Method m : csv_method_order()) {
    const auto it = series.find(m);
    if (it == series.end()) continue;
    const auto& s = it->second;
    out << "<polyline fill='none' stroke='" << colors.at(m)
        << "' stroke-width='2' points='";
    for (std::size_t k = 0; k < s.values.size(); ++k) {
      out << sx(s.dt * static_cast<double>(k)) << "," << sy(s.values[k]) << " ";
    }
    out << "'/>\n";
    out << "<rect x='" << lx << "' y='" << height - 32 << "' width='18' height='4' fill='"
        << colors.at(m) << "'/>\n";
    out << "<text x='" << lx + 24 << "' y='" << height - 26 << "'>"
        << method_name(m) << "</text>\n";
    lx += 24 + 10 + 9.0 * std::string(method_name(m)).size();
  }
  out << "</svg>\n";
}

}  // namespace collprob::io

#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace collprob {

// Per-timestep probability values on a uniform grid, tagged with the method
// that produced them.
struct ProbabilityTimeSeries {
  double dt = 0.0;
  std::vector<double> values;
  std::string method;

  double time_at(std::size_t i) const { return dt * static_cast<double>(i); }
  double final_value() const { return values.empty() ? 0.0 : values.back(); }
};

inline double trajectory_max(const ProbabilityTimeSeries& series) {
  if (series.values.empty()) {
    throw std::invalid_argument("trajectory_max: empty series");
  }
  return *std::max_element(series.values.begin(), series.values.end());
}

// 1 - prod(1 - p_t): valid only under (counterfactual) temporal independence.
inline double trajectory_independent_product(const ProbabilityTimeSeries& series) {
  if (series.values.empty()) {
    throw std::invalid_argument("trajectory_independent_product: empty series");
  }
  double survive = 1.0;
  for (double p : series.values) {
    if (p < 0.0 || p > 1.0) {
      throw std::invalid_argument(
          "trajectory_independent_product: value outside [0, 1]");
    }
    survive *= 1.0 - p;
  }
  return 1.0 - survive;
}

// Running form of the independence product, one value per timestep.
inline ProbabilityTimeSeries independent_product_series(
    const ProbabilityTimeSeries& per_step) {
  ProbabilityTimeSeries out;
  out.dt = per_step.dt;
  out.method = "overlap_independent";
  out.values.reserve(per_step.values.size());
  double survive = 1.0;
  for (double p : per_step.values) {
    if (p < 0.0 || p > 1.0) {
      throw std::invalid_argument(
          "independent_product_series: value outside [0, 1]");
    }
    survive *= 1.0 - p;
    out.values.push_back(1.0 - survive);
  }
  return out;
}

}  // namespace collprob

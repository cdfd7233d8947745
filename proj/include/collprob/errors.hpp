#pragma once

#include <stdexcept>
#include <string>

namespace collprob {

// Covariance is not usable for the requested operation (not symmetric
// positive-(semi)definite, or singular where strict definiteness is needed).
struct DegenerateCovarianceError : std::runtime_error {
  explicit DegenerateCovarianceError(const std::string& what)
      : std::runtime_error(what) {}
};

// An integrand or intermediate value left the representable domain
// (NaN/Inf at a quadrature node, clamp beyond the diagnostic threshold).
struct NumericDomainError : std::runtime_error {
  explicit NumericDomainError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace collprob

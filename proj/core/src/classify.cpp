#include "fracdiff/classify.hpp"

#include <cmath>

#include "fracdiff/error.hpp"

namespace fracdiff {

std::string to_string(Classification c) {
  switch (c) {
    case Classification::Extinct: return "extinct";
    case Classification::Persistent: return "persistent";
    case Classification::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

double tail_slope(const std::vector<double>& masses, const std::vector<double>& eps_values) {
  require(masses.size() == eps_values.size() && masses.size() >= 3, ErrorKind::InvalidInput,
          "tail slope needs at least three (eps, mass) pairs");
  const std::size_t n = masses.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = n - 3; k < n; ++k) {
    const double x = std::log(eps_values[k]), y = std::log(masses[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (3.0 * sxy - sx * sy) / (3.0 * sxx - sx * sx);
}

Classification classify_extinction(const std::vector<double>& masses, const std::vector<double>& eps_values,
                                   double reference_mass, const ClassificationRule& rule) {
  require(masses.size() == eps_values.size(), ErrorKind::InvalidInput, "masses and eps values differ in length");
  for (double m : masses) require(m > 0.0 && std::isfinite(m), ErrorKind::InvalidInput, "masses must be positive");
  if (masses.size() < 4) return Classification::Inconclusive;

  bool decreasing = true;
  for (std::size_t k = 1; k < masses.size(); ++k) decreasing = decreasing && masses[k] < masses[k - 1];
  const double last = masses.back(), prev = masses[masses.size() - 2];
  if (decreasing && last <= rule.theta * reference_mass && tail_slope(masses, eps_values) >= rule.sigma) {
    return Classification::Extinct;
  }
  if (std::abs(last - prev) <= rule.stabilization * prev && last >= rule.persistence_floor * masses.front()) {
    return Classification::Persistent;
  }
  return Classification::Inconclusive;
}

}  // namespace fracdiff

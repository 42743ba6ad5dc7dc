#pragma once

#include <string>
#include <vector>

namespace fracdiff {

enum class Classification { Extinct, Persistent, Inconclusive };
std::string to_string(Classification c);

/// Thresholds of the finite-eps extinction rule.
struct ClassificationRule {
  double theta = 0.05;             // final mass <= theta * reference mass
  double sigma = 0.1;              // log-log slope over the last three eps values
  double stabilization = 0.05;     // relative change of the last two masses
  double persistence_floor = 0.5;  // final mass >= floor * first mass
};

/// Summary of an eps-sweep: ball masses of u_eps over a fixed ball.
struct SweepResult {
  std::vector<double> eps_values;
  std::vector<double> ball_masses;
  double tau = 0.0;             // sampling time (0 for elliptic sweeps)
  double reference_mass = 0.0;  // ball mass of the data
  double slope = 0.0;
  Classification classification = Classification::Inconclusive;
  bool all_converged = true;
};

/// Least-squares slope of log m against log eps over the last three points.
double tail_slope(const std::vector<double>& masses, const std::vector<double>& eps_values);

/// Extinct iff masses strictly decrease, the final mass is at most
/// theta * reference_mass and the tail slope is at least sigma. Persistent
/// iff the last two masses differ by at most `stabilization` (relative) and
/// the final mass keeps at least `persistence_floor` of the first.
/// Fewer than four points is Inconclusive.
Classification classify_extinction(const std::vector<double>& masses, const std::vector<double>& eps_values,
                                   double reference_mass, const ClassificationRule& rule = {});

}  // namespace fracdiff

#pragma once

#include <string>
#include <vector>

#include "fracdiff/extinction.hpp"

namespace fracdiff::cli {

/// Every tunable of the command-line front end. Text form:
///   [section]
///   key = value   # comment
/// Unknown keys are errors; keys not given keep the defaults below.
struct RunConfig {
  // [grid]
  int dimension = 1;
  double half_width = 20.0;
  int points = 1024;
  // [operator]
  double s = 0.5;
  std::string kind = "truncated-quadrature";
  // [problem]
  std::string nonlinearity = "log";
  double eps = 1e-2;
  std::string far_field = "floor";
  double tail_exponent = 0.0;
  std::string initial = "gaussian";  // gaussian | bump | log-half
  double amplitude = 1.0;
  double width = 1.0;
  double lambda = 1.0;
  // [time]
  double t_end = 0.1;
  double dt = 1e-2;
  int samples = 4;
  int max_halvings = 6;
  // [solver]
  double tol = -1.0;
  int max_iter = 60;
  int dense_limit = 512;
  int max_linear_iter = 5000;
  int band = 32;
  // [sweep]
  std::vector<double> eps_values{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  double tau = 0.1;
  double ball_radius = 1.0;
  double theta = 0.05;
  double sigma = 0.1;
  double stabilization = 0.05;
  double persistence_floor = 0.5;
  // [phase]
  std::vector<double> s_values{0.3, 0.5, 0.75, 0.9};
  std::vector<double> n_values{0.0, 0.2, 0.5, 0.8, 0.9, 1.0};
  double phase_half_width = 80.0;
  int phase_points = 2048;
  double phase_dt = 1e-2;
  std::string phase_far_field = "fitted-tail";
  double exclusion_band = 0.1;
  int threads = 0;

  /// Cross-key checks (operator kind against dimension, tau against t_end).
  void validate() const;

  UniformGrid grid() const;
  OperatorSpec operator_spec() const;
  Field initial_field(const UniformGrid& g) const;
  SolverOptions solver_options() const;
  ClassificationRule rule() const;
  BallSpec ball() const;
  ParabolicProblem parabolic() const;
  PhaseProtocol phase_protocol() const;
};

/// Qualified names "section.key" of every key, in serialisation order.
const std::vector<std::string>& config_keys();

/// Value of a key in canonical text form.
std::string config_value(const RunConfig& c, const std::string& key);

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical text: every section and key in fixed order, shortest
/// round-trip numbers. parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& c);

/// Shortest decimal text that reads back to the same double.
std::string format_number(double x);

/// The valid key closest to `key` in edit distance.
std::string nearest_key(const std::string& key);

bool operator==(const RunConfig& a, const RunConfig& b);

}  // namespace fracdiff::cli

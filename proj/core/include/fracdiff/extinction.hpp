#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "fracdiff/classify.hpp"
#include "fracdiff/parabolic.hpp"

namespace fracdiff {

/// Runs `tmpl` once per eps (strictly decreasing) up to tau and records the
/// ball mass of u_eps(tau) = v_eps(tau) + eps. Every run starts from u0 + eps.
/// Fewer than 4 values, or any failed run, gives Inconclusive.
SweepResult epsilon_sweep(const ParabolicProblem& tmpl, const std::vector<double>& eps_list, double tau,
                          const BallSpec& ball, const ClassificationRule& rule = {});

/// Fixed 1D protocol shared by every point of a phase scan.
struct PhaseProtocol {
  double half_width = 80.0;
  int points = 2048;
  double dt = 1e-2;
  double tau = 0.1;
  std::vector<double> eps_values{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  double ball_radius = 1.0;
  /// Initial data amplitude * exp(-x^2 / width^2).
  double amplitude = 1.0;
  double width = 1.0;
  FarField far_field = FarField::FittedTail;
  ClassificationRule rule;
  /// Points with |n - (2s - 1)| below this are skipped by phase_diagram.
  double exclusion_band = 0.1;
  /// 0 selects std::thread::hardware_concurrency().
  unsigned threads = 0;
  SolverOptions solver;

  void validate() const;
  /// The protocol with M doubled and dt halved.
  PhaseProtocol refined() const;
};

struct PhasePoint {
  double s = 0.0;
  double n = 0.0;  // 0 selects the logarithm
  Classification classification = Classification::Inconclusive;
  double margin = 0.0;  // |n - (2s - 1)|
  double final_mass = 0.0;
  double slope = 0.0;
  std::vector<double> ball_masses;
  std::string failure;
};

/// Distance |n - (2s - 1)| to the critical line.
double critical_margin(double s, double n);

/// Runs the listed (s, n) points concurrently; failures are recorded on the
/// point as Inconclusive. Output order follows the input.
std::vector<PhasePoint> phase_points(const std::vector<std::pair<double, double>>& points,
                                     const PhaseProtocol& protocol);

/// Cartesian scan of s_grid x n_grid, minus the near-critical band.
std::vector<PhasePoint> phase_diagram(const std::vector<double>& s_grid, const std::vector<double>& n_grid,
                                      const PhaseProtocol& protocol);

enum class GreenRegime { Supercritical, OneDSupHalf };
std::string to_string(GreenRegime r);

/// Selects the regime from (N, s); throws UnsupportedRegime for N = 1, s = 1/2.
GreenRegime green_regime(int N, double s);

struct GreenIdentityReport {
  std::size_t node = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  GreenRegime regime = GreenRegime::Supercritical;
};

/// `count` Chebyshev-Lobatto times in [tau_star, tau], increasing.
std::vector<double> green_sample_times(double tau_star, double tau, int count = 33);

/// lhs(x) = int_{tau*}^{tau} phi_eps(v(x, t)) dt by Clenshaw-Curtis over the
/// snapshots at green_sample_times(tau_star, tau, count), and
/// rhs = G * rho with rho = v(tau*) - v(tau) and G the Riesz kernel
/// (Supercritical) or c_{1,s}|y|^{2s-1} (OneDSupHalf). In the OneDSupHalf
/// regime both sides are reported relative to the node nearest 0.
std::vector<GreenIdentityReport> verify_green_identity(const Trajectory& tr, const ParabolicProblem& p,
                                                       const std::vector<std::size_t>& x_nodes, double tau_star,
                                                       double tau, int count = 33);

/// 2 (T - t) / (1 + x^2), an exact solution for s = 1/2 and phi = log.
struct LogHalf {
  double T = 1.0;
};
/// C (T - t)^{1/(1-m)} |x|^{-2s/(1-m)}, separate-variables solution of
/// d_t u + (-Delta)^s (u^m / m) = 0 in 1D for the constant of
/// very_singular_constant.
struct VerySingular {
  double m = -1.0;
  double s = 0.5;
  double C = 1.0;
  double T = 1.0;
};
using ExplicitKind = std::variant<LogHalf, VerySingular>;

double explicit_solution(const ExplicitKind& kind, double x, double t);

/// The C making VerySingular an exact 1D solution. Throws DomainError when
/// none exists (gamma = -2sm/(1-m) must lie in (2s - 1, 2s)).
double very_singular_constant(double m, double s);

struct TailFit {
  double exponent = 0.0;
  double r_squared = 0.0;
  /// False when the slope is <= -3 or the fit is poor (r^2 < 0.99).
  bool power_like = false;
};

/// Log-log least-squares fit of f against |x| over the outer third of a 1D
/// grid. Throws InvalidInput on nonpositive tail values.
TailFit tail_decay_probe(const Field& f);

struct ContinuityReport {
  std::vector<double> deltas;
  std::vector<double> distances;  // |u_{1/2 + delta}(t) - u_{1/2}(t)|_1
  bool failed = false;
  std::string failure;
};

/// Runs `base` (s = 1/2) and its copies at s = 1/2 + delta up to t.
ContinuityReport s_continuity_probe(const ParabolicProblem& base, const std::vector<double>& deltas, double t);

}  // namespace fracdiff

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fracdiff/elliptic.hpp"

namespace fracdiff {

/// d_t u + (-Delta)^s phi(u) = 0 with u(0) = u0 + eps, marched in the
/// shifted variable v = u - eps by implicit Euler.
struct ParabolicProblem {
  OperatorSpec op_spec;
  Nonlinearity nl = Nonlinearity::logarithmic();
  double eps = 1e-2;
  Field initial{UniformGrid{1, 1.0, 8}, std::vector<double>(8, 0.0)};
  double t_end = 1.0;
  double dt = 1e-2;
  FarField far_field = FarField::Floor;
  double tail_exponent = 0.0;
  /// Ball for the per-step ball mass; centred, radius L/4 when unset.
  std::optional<BallSpec> ball;
  SolverOptions solver;
  /// Maximum number of dt halvings when a step fails to converge.
  int max_halvings = 6;

  void validate() const;
  BallSpec summary_ball() const;
};

/// Per-step summary of the state v (mass, norms) and of u = v + eps (ball mass).
struct StepSummary {
  double t = 0.0;
  double mass = 0.0;
  double ball_mass = 0.0;
  double l_inf = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct Trajectory {
  std::vector<double> times;     // sample times, snapshots[k] is v at times[k]
  std::vector<Field> snapshots;  // shifted states v (floor = eps)
  std::vector<StepSummary> summaries;
  int steps = 0;
  int halvings = 0;
  int newton_iterations = 0;
  bool failed = false;
  std::string failure;

  /// Snapshot at sample time t (exact match); throws InvalidInput if absent.
  const Field& at(double t) const;
};

struct StepResult {
  Field state;
  SolveReport report;
};

/// One implicit Euler step v -> v_next with v_next + dt A phi_eps(v_next) = v.
/// Throws StepFailure if Newton does not converge.
StepResult step(const Field& state, const ParabolicProblem& p, const EllipticSolver& solver, double dt);
StepResult step(const Field& state, const ParabolicProblem& p);

/// Marches to t_end. Steps are of size dt, shortened to land exactly on each
/// sample time; a failed step is retried as two half steps, recursively up to
/// `max_halvings` times, after which the run stops with `failed` set.
Trajectory evolve(const ParabolicProblem& p, const std::vector<double>& sample_times);

struct DiagnosticsReport {
  double mass_drift = 0.0;            // max_t |m(t) - m(0)| / m(0)
  double max_step_mass_change = 0.0;  // max over steps of |m_k - m_{k-1}| / m(0)
  bool linf_monotone = true;          // |v|_inf nonincreasing up to 1e-10 (1 + |v0|_inf)
  double linf_increase = 0.0;
  double lp_excess = 0.0;             // max over snapshots, p in {1,2,inf} of |v(t)|_p - |v0|_p
  double ab_violation = 0.0;          // max of (u(t2)/u(t1) - (t2/t1)^{1/(n+1)})_+ over snapshot pairs
  bool ab_applicable = true;          // false for custom nonlinearities
};

/// Evaluated from the trajectory alone; Aronson-Benilan pairs use snapshots
/// at positive times, u = v + eps, and n = 0 for the logarithm.
DiagnosticsReport diagnostics(const Trajectory& tr, const ParabolicProblem& p);

/// |(u1(t) - u2(t))_+|_1 - |(u1(0) - u2(0))_+|_1 for two runs that differ
/// only in their initial data.
double contraction_check(const ParabolicProblem& p1, const ParabolicProblem& p2, double t);

struct ChainReport {
  bool holds = false;
  double max_violation = 0.0;  // max of (w - u)_+ over the original box
  double tolerance = 0.0;
};

/// Dirichlet chain w_eps <= u_eps: the Dirichlet problem (Restricted or
/// Spectral) on the box with data mask * u0 against the whole-space
/// approximation on the doubled box (same spacing) with data u0, both
/// regularised with the same eps, compared at time t on the box.
ChainReport dirichlet_chain(const Field& u0, const Field& mask, double s, const Nonlinearity& nl, double eps, double t,
                            double dt, OperatorKind dirichlet_kind);
bool dirichlet_chain_check(const Field& u0, const Field& mask, double s, const Nonlinearity& nl, double eps, double t,
                           double dt, OperatorKind dirichlet_kind = OperatorKind::DirichletRestricted);

}  // namespace fracdiff

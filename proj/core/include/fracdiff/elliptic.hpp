#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fracdiff/classify.hpp"
#include "fracdiff/fraclap.hpp"
#include "fracdiff/grid.hpp"
#include "fracdiff/nonlinearity.hpp"

namespace fracdiff {

/// What the unknown is outside the box [-L, L].
///   Floor     - u = eps (v = 0) outside: the exterior sits at the
///               regularisation level.
///   PowerTail - v continued from each edge node x_e as v_e (x_e / y)^p,
///               p = N + 2s unless `tail_exponent` > 0; 1D
///               truncated-quadrature only. Reduces to Floor when the edge
///               values vanish.
///   FittedTail  - PowerTail with p = -(outer_power_slope of the source),
///               clamped to [N + 0.05, N + 2s]; N + 2s when the fit is
///               unavailable. In time stepping the source is the previous
///               state, so the exponent follows the solution's own tail.
enum class FarField { Floor, PowerTail, FittedTail };
std::string to_string(FarField f);
FarField parse_far_field(const std::string& text);

/// v + lambda (-Delta)^s phi_eps(v) = g in the shifted variable v = u - eps.
struct EllipticProblem {
  DiscreteOperator op;
  RegularizedNonlinearity rnl;
  Field source;
  double lambda = 1.0;
  FarField far_field = FarField::Floor;
  double tail_exponent = 0.0;
};

struct SolverOptions {
  /// Absolute residual tolerance; a negative value selects 1e-10 (1 + |g|_inf).
  double tol = -1.0;
  int max_iter = 60;
  /// Grids up to this many nodes use a dense Cholesky factorisation.
  std::size_t dense_limit = 512;
  int max_linear_iter = 5000;
  /// Half bandwidth of the near-field preconditioner (1D kernel operators).
  int band = 32;
};

struct SolveReport {
  int iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
  int damping_events = 0;
  int linear_iterations = 0;
  double tolerance = 0.0;
};

struct EllipticSolution {
  Field v;
  SolveReport report;
};

/// v + lambda A phi_eps(v) - g, nodewise. Throws DomainError on v < 0.
Field residual(const EllipticProblem& p, const Field& v);

/// J(v) d = d + lambda A (phi_eps'(v) d), the Jacobian of the residual.
Field jacobian_apply(const EllipticProblem& p, const Field& v, const Field& direction);

/// Damped Newton solver. Small grids use a dense Cholesky factorisation;
/// larger ones preconditioned CG, with a banded near-field Cholesky
/// preconditioner for 1D kernel operators and Jacobi otherwise.
class EllipticSolver {
 public:
  explicit EllipticSolver(DiscreteOperator op, SolverOptions options = {});

  const DiscreteOperator& op() const noexcept { return op_; }
  const SolverOptions& options() const noexcept { return options_; }

  /// Solves p (whose operator must be this solver's); `guess` seeds Newton,
  /// defaulting to the source clipped at 0.
  EllipticSolution solve(const EllipticProblem& p, const Field* guess = nullptr) const;

 private:
  struct Band;
  DiscreteOperator op_;
  SolverOptions options_;
  std::shared_ptr<const std::vector<double>> dense_;
  std::shared_ptr<const Band> band_;
};

EllipticSolution solve_elliptic(const EllipticProblem& p, const SolverOptions& options = {},
                                const Field* guess = nullptr);

/// Solves u_eps + A phi(u_eps) = f + eps for each eps (strictly decreasing,
/// warm-started) and records the ball mass of u_eps = v_eps + eps.
SweepResult elliptic_epsilon_sweep(const Field& f, const OperatorSpec& op_spec, const Nonlinearity& nl,
                                   const std::vector<double>& eps_list, const BallSpec& ball,
                                   const ClassificationRule& rule = {}, const SolverOptions& options = {},
                                   FarField far_field = FarField::Floor);

}  // namespace fracdiff

#include "fracdiff/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

namespace fracdiff {

namespace {

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double norm_inf(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

void check_problem(const EllipticProblem& p) {
  require(p.source.grid() == p.op.grid(), ErrorKind::InvalidInput, "source grid does not match operator grid");
  require(std::isfinite(p.lambda) && p.lambda > 0.0, ErrorKind::InvalidParameter, "lambda must be positive");
  require(p.source.min() >= 0.0, ErrorKind::InvalidInput, "elliptic source must be nonnegative");
  require(p.far_field == FarField::Floor ||
              (p.op.kind() == OperatorKind::TruncatedQuadrature && p.op.grid().dimension() == 1),
          ErrorKind::InvalidInput, "the power-tail far field is available for 1D truncated-quadrature only");
  require(std::isfinite(p.tail_exponent) && p.tail_exponent >= 0.0, ErrorKind::InvalidParameter,
          "tail exponent must be >= 0");
}

// Gauss-Laguerre rule (weight e^{-x}) by Golub-Welsch.
const std::pair<std::vector<double>, std::vector<double>>& laguerre_rule() {
  static const auto rule = [] {
    constexpr int n = 64;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
      J(k, k) = 2.0 * k + 1.0;
      if (k + 1 < n) J(k, k + 1) = J(k + 1, k) = k + 1.0;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    std::vector<double> x(n), w(n);
    for (int k = 0; k < n; ++k) {
      x[static_cast<std::size_t>(k)] = es.eigenvalues()(k);
      w[static_cast<std::size_t>(k)] = es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
    }
    return std::make_pair(x, w);
  }();
  return rule;
}

// Exterior part of A phi_eps(v) for the power-tail far field. For node i and
// the right side, with d = L - x_i and y = x_i + d e^{sigma/(2s)},
//   E_i = c int_L^inf (phi_eps(v_ext(y)) - phi_e) (y - x_i)^{-1-2s} dy
//       = c d^{-2s}/(2s) int_0^inf (phi_eps(v_ext(y)) - phi_e) e^{-sigma} dsigma,
// the constant part phi_e being carried by the discrete edge tails.
class PowerTail {
 public:
  explicit PowerTail(const EllipticProblem& p) {
    const auto& g = p.op.grid();
    const double s = p.op.spec().s;
    const double pw = exponent(p);
    const double L = g.half_width();
    const int M = g.points_per_axis();
    const double xe = g.coordinate(M - 1);
    const auto& [nodes, weights] = laguerre_rule();
    Q_ = nodes.size();
    const auto n = static_cast<std::size_t>(M);
    ratio_.resize(2 * n * Q_);
    weight_.resize(2 * n * Q_);
    for (std::size_t side = 0; side < 2; ++side) {
      for (std::size_t i = 0; i < n; ++i) {
        // Mirror the left side onto the right.
        const double x = side == 0 ? g.coordinate(static_cast<int>(i)) : -g.coordinate(static_cast<int>(i));
        const double d = L - x;
        const double scale = p.op.normalization() * std::pow(d, -2.0 * s) / (2.0 * s);
        for (std::size_t q = 0; q < Q_; ++q) {
          const double y = x + d * std::exp(nodes[q] / (2.0 * s));
          ratio_[(side * n + i) * Q_ + q] = std::isfinite(y) ? std::pow(xe / y, pw) : 0.0;
          weight_[(side * n + i) * Q_ + q] = scale * weights[q];
        }
      }
    }
  }

  static double exponent(const EllipticProblem& p) {
    const double n = p.op.grid().dimension();
    const double top = n + 2.0 * p.op.spec().s;
    if (p.far_field == FarField::FittedTail) {
      const auto slope = outer_power_slope(p.source);
      return slope ? std::clamp(-*slope, std::min(n + 0.05, top), top) : top;
    }
    return p.tail_exponent > 0.0 ? p.tail_exponent : top;
  }

  // out_i -= exterior contribution beyond the discrete edge tails.
  void subtract(const EllipticProblem& p, std::span<const double> v, std::span<double> out) const {
    const std::size_t n = v.size();
    const double edge[2] = {v[n - 1], v[0]};
    for (std::size_t side = 0; side < 2; ++side) {
      if (edge[side] == 0.0) continue;
      const double phi_e = p.rnl.value(edge[side]);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t base = (side * n + i) * Q_;
        double acc = 0.0;
        for (std::size_t q = 0; q < Q_; ++q) acc += weight_[base + q] * (p.rnl.value(edge[side] * ratio_[base + q]) - phi_e);
        out[i] -= acc;
      }
    }
  }

  // Derivative of the exterior contribution with respect to the right
  // (side 0) or left (side 1) edge value, without the discrete edge tail.
  void derivative(const EllipticProblem& p, std::span<const double> v, std::size_t side, std::span<double> out) const {
    const std::size_t n = v.size();
    const double e = side == 0 ? v[n - 1] : v[0];
    const double dphi_e = p.rnl.derivative(e);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t base = (side * n + i) * Q_;
      double acc = 0.0;
      for (std::size_t q = 0; q < Q_; ++q) {
        const double r = ratio_[base + q];
        acc += weight_[base + q] * (p.rnl.derivative(e * r) * r - dphi_e);
      }
      out[i] = acc;
    }
  }

 private:
  std::size_t Q_ = 0;
  std::vector<double> ratio_;
  std::vector<double> weight_;
};

// A phi with the far field applied; `tail` is null for the Floor far field.
void apply_closed(const EllipticProblem& p, const PowerTail* tail, std::span<const double> v,
                  std::span<const double> w, std::span<double> out) {
  p.op.apply(w, out);
  if (tail != nullptr) {
    const auto tl = p.op.tails_left(), tr = p.op.tails_right();
    const double left = w.front(), right = w.back();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= tl[i] * left + tr[i] * right;
    tail->subtract(p, v, out);
  }
}

// r = v + lambda A phi_eps(v) - g; `w` is scratch of the grid size.
void residual_into(const EllipticProblem& p, const PowerTail* tail, std::span<const double> v, std::span<double> w,
                   std::span<double> r) {
  for (std::size_t i = 0; i < v.size(); ++i) w[i] = p.rnl.value(v[i]);
  apply_closed(p, tail, v, w, r);
  const auto g = p.source.values();
  for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i] + p.lambda * r[i] - g[i];
}

std::optional<PowerTail> make_tail(const EllipticProblem& p) {
  if (p.far_field != FarField::Floor) return PowerTail(p);
  return std::nullopt;
}

// Preconditioned CG on (diag(dinv) + lambda A) y = b, started from y = 0.
using SparseLLT = Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::NaturalOrdering<int>>;

// `banded` (optional) is a factorisation of diag(dinv) + lambda A_band;
// without it the preconditioner is Jacobi.
int pcg(const EllipticProblem& p, std::span<const double> dinv, std::span<const double> b, std::span<double> y,
        double abs_tol, int max_iter, const SparseLLT* banded) {
  const std::size_t n = b.size();
  const auto adiag = p.op.diagonal();
  std::vector<double> r(b.begin(), b.end()), z(n), d(n), q(n), precond(n);
  for (std::size_t i = 0; i < n; ++i) precond[i] = 1.0 / (dinv[i] + p.lambda * adiag[i]);
  auto apply_precond = [&] {
    if (banded != nullptr) {
      Eigen::Map<Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(n)) =
          banded->solve(Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(n)));
    } else {
      for (std::size_t i = 0; i < n; ++i) z[i] = precond[i] * r[i];
    }
  };
  std::fill(y.begin(), y.end(), 0.0);
  apply_precond();
  d = z;
  double rz = 0.0;
  for (std::size_t i = 0; i < n; ++i) rz += r[i] * z[i];
  int it = 0;
  while (it < max_iter && norm2(r) > abs_tol) {
    p.op.apply(d, q);
    double dq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      q[i] = dinv[i] * d[i] + p.lambda * q[i];
      dq += d[i] * q[i];
    }
    if (!(dq > 0.0)) break;
    const double alpha = rz / dq;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] += alpha * d[i];
      r[i] -= alpha * q[i];
    }
    apply_precond();
    double rz_new = 0.0;
    for (std::size_t i = 0; i < n; ++i) rz_new += r[i] * z[i];
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) d[i] = z[i] + beta * d[i];
    ++it;
  }
  return it;
}

}  // namespace

std::string to_string(FarField f) {
  switch (f) {
    case FarField::Floor:
      return "floor";
    case FarField::PowerTail:
      return "power-tail";
    case FarField::FittedTail:
      return "fitted-tail";
  }
  return "?";
}

FarField parse_far_field(const std::string& text) {
  if (text == "floor") return FarField::Floor;
  if (text == "power-tail") return FarField::PowerTail;
  if (text == "fitted-tail") return FarField::FittedTail;
  fail(ErrorKind::Config, "far field must be 'floor', 'power-tail' or 'fitted-tail', got '" + text + "'");
}

Field residual(const EllipticProblem& p, const Field& v) {
  check_problem(p);
  require(v.grid() == p.op.grid(), ErrorKind::InvalidInput, "state grid does not match operator grid");
  for (double x : v.values()) require(x >= 0.0, ErrorKind::DomainError, "residual needs v >= 0");
  const auto tail = make_tail(p);
  std::vector<double> w(v.size()), r(v.size());
  residual_into(p, tail ? &*tail : nullptr, v.values(), w, r);
  return Field(v.grid(), std::move(r), Field::default_exterior(v.grid()));
}

Field jacobian_apply(const EllipticProblem& p, const Field& v, const Field& direction) {
  check_problem(p);
  require(v.grid() == p.op.grid() && direction.grid() == p.op.grid(), ErrorKind::InvalidInput,
          "state grid does not match operator grid");
  const std::size_t n = v.size();
  std::vector<double> w(n), out(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = p.rnl.derivative(v[i]) * direction[i];
  p.op.apply(w, out);
  if (const auto tail = make_tail(p)) {
    const auto tl = p.op.tails_left(), tr = p.op.tails_right();
    std::vector<double> dr(n), dl(n);
    tail->derivative(p, v.values(), 0, dr);
    tail->derivative(p, v.values(), 1, dl);
    for (std::size_t i = 0; i < n; ++i) {
      out[i] -= tl[i] * w.front() + tr[i] * w.back() + dr[i] * direction[n - 1] + dl[i] * direction[0];
    }
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = direction[i] + p.lambda * out[i];
  return Field(v.grid(), std::move(out), Field::default_exterior(v.grid()));
}

// Near-field band |i - j| <= b of a 1D kernel operator, lower triangle.
struct EllipticSolver::Band {
  Eigen::SparseMatrix<double> lower;
};

EllipticSolver::EllipticSolver(DiscreteOperator op, SolverOptions options)
    : op_(std::move(op)), options_(options) {
  require(options_.max_iter >= 1, ErrorKind::InvalidParameter, "max_iter must be >= 1");
  require(options_.band >= 0, ErrorKind::InvalidParameter, "band must be >= 0");
  const std::size_t n = op_.grid().size();
  if (n <= options_.dense_limit) {
    dense_ = std::make_shared<const std::vector<double>>(op_.dense_matrix());
  } else if (op_.is_kernel() && op_.grid().dimension() == 1 && options_.band > 0) {
    const auto diag = op_.diagonal();
    std::vector<Eigen::Triplet<double>> entries;
    const auto b = static_cast<std::size_t>(options_.band);
    for (std::size_t j = 0; j < n; ++j) {
      entries.emplace_back(static_cast<int>(j), static_cast<int>(j), diag[j]);
      for (std::size_t i = j + 1; i < std::min(n, j + b + 1); ++i) {
        entries.emplace_back(static_cast<int>(i), static_cast<int>(j), -op_.weight(i, j));
      }
    }
    auto band = std::make_shared<Band>();
    band->lower.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    band->lower.setFromTriplets(entries.begin(), entries.end());
    band_ = std::move(band);
  }
}

EllipticSolution EllipticSolver::solve(const EllipticProblem& p, const Field* guess) const {
  check_problem(p);
  require(p.op.grid() == op_.grid() && p.op.kind() == op_.kind() && p.op.spec().s == op_.spec().s,
          ErrorKind::InvalidInput, "problem operator differs from the solver operator");
  const auto& grid = op_.grid();
  const std::size_t n = grid.size();

  SolveReport rep;
  rep.tolerance = options_.tol > 0.0 ? options_.tol : 1e-10 * (1.0 + norm_inf(p.source.values()));

  std::vector<double> v(n);
  const auto seed = guess != nullptr ? guess->values() : p.source.values();
  if (guess != nullptr) require(guess->grid() == grid, ErrorKind::InvalidInput, "guess grid mismatch");
  for (std::size_t i = 0; i < n; ++i) v[i] = std::max(0.0, seed[i]);

  const auto tail_storage = make_tail(p);
  const PowerTail* tail = tail_storage ? &*tail_storage : nullptr;
  std::vector<double> w(n), r(n), rn(n), vn(n), dinv(n), y(n), b(n), phiv(n), ul, ur, zl, zr;
  const bool closed_form = p.rnl.base().kind() != Nonlinearity::Kind::Custom;
  // Supremum of the range of phi_eps: eps^{-n} for powers, unbounded for log.
  const double w_sup = p.rnl.base().kind() == Nonlinearity::Kind::Power
                           ? std::pow(p.rnl.eps(), -p.rnl.base().exponent())
                           : std::numeric_limits<double>::infinity();
  if (tail != nullptr) {
    ul.resize(n);
    ur.resize(n);
    zl.resize(n);
    zr.resize(n);
  }
  residual_into(p, tail, v, w, r);
  double res_inf = norm_inf(r), res2 = norm2(r);

  Eigen::MatrixXd K;
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::SparseMatrix<double> P;
  SparseLLT banded;
  if (band_) {
    P = p.lambda * band_->lower;
    banded.analyzePattern(P);
  }
  // On periodic grids the columns of A sum to zero, so a step linearised in v
  // changes the mass by exactly -sum(r). One such step after convergence
  // makes the discrete mass identity hold to roundoff; the w-variable steps
  // only hold it to the tolerance.
  bool polish = op_.kind() == OperatorKind::PeriodicSpectral;
  while ((res_inf > rep.tolerance || polish) && rep.iterations < options_.max_iter) {
    const bool polishing = res_inf <= rep.tolerance;
    if (polishing) polish = false;
    ++rep.iterations;
    for (std::size_t i = 0; i < n; ++i) {
      dinv[i] = 1.0 / p.rnl.derivative(v[i]);
      b[i] = -r[i];
    }
    // S y = b with S = D^{-1} + lambda A symmetric positive definite.
    auto spd_solve = [&](std::span<const double> rhs, std::span<double> out) {
      if (dense_) {
        Eigen::Map<Eigen::VectorXd> om(out.data(), static_cast<Eigen::Index>(n));
        const Eigen::Map<const Eigen::VectorXd> rm(rhs.data(), static_cast<Eigen::Index>(n));
        om = llt.info() == Eigen::Success ? Eigen::VectorXd(llt.solve(rm)) : Eigen::VectorXd(K.ldlt().solve(rm));
      } else {
        // Relative accuracy of at least 1e-10: the far-field Woodbury update
        // is built from these solves and amplifies their error.
        const double target = band_ ? std::min(0.05 * rep.tolerance / std::max(norm2(b), 1e-300), 1e-10) * norm2(rhs)
                                    : std::max(std::min(1e-2 * res2, res2 * res2), 0.05 * rep.tolerance) *
                                          (norm2(rhs) / std::max(norm2(b), 1e-300));
        rep.linear_iterations +=
            pcg(p, dinv, rhs, out, target, options_.max_linear_iter, band_ ? &banded : nullptr);
      }
    };
    if (dense_) {
      K = p.lambda * Eigen::Map<const Eigen::MatrixXd>(dense_->data(), static_cast<Eigen::Index>(n),
                                                         static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += dinv[i];
      llt.compute(K);
    } else if (band_) {
      for (std::size_t i = 0; i < n; ++i) {
        P.coeffRef(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) =
            p.lambda * band_->lower.coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) + dinv[i];
      }
      banded.factorize(P);
    }
    spd_solve(b, y);
    if (tail != nullptr) {
      // The far field adds -lambda (u_l e_0^T + u_r e_last^T) in the y variable;
      // Woodbury on the rank-2 term.
      const auto tl = p.op.tails_left(), tr = p.op.tails_right();
      tail->derivative(p, v, 1, ul);
      tail->derivative(p, v, 0, ur);
      for (std::size_t i = 0; i < n; ++i) {
        ul[i] = tl[i] + ul[i] * dinv.front();
        ur[i] = tr[i] + ur[i] * dinv.back();
      }
      spd_solve(ul, zl);
      spd_solve(ur, zr);
      Eigen::Matrix2d C;
      C << 1.0 - p.lambda * zl.front(), -p.lambda * zr.front(), -p.lambda * zl.back(), 1.0 - p.lambda * zr.back();
      const Eigen::Vector2d coef = C.partialPivLu().solve(Eigen::Vector2d(y.front(), y.back())) * p.lambda;
      for (std::size_t i = 0; i < n; ++i) y[i] += zl[i] * coef(0) + zr[i] * coef(1);
    }
    // y is the Newton step in w = phi_eps(v). Closed-form nonlinearities map
    // w + alpha y back through the inverse (w <= 0 gives v = 0); custom ones
    // take the linearised step v + alpha D^{-1} y projected onto v >= 0.
    // Backtracking on |R|_2.
    if (polishing) {
      bool feasible = true;
      for (std::size_t i = 0; i < n; ++i) {
        vn[i] = v[i] + dinv[i] * y[i];
        feasible = feasible && vn[i] >= 0.0;
      }
      if (feasible) {
        residual_into(p, tail, vn, w, rn);
        if (norm_inf(rn) <= rep.tolerance) {
          v.swap(vn);
          r.swap(rn);
          res_inf = norm_inf(r);
          res2 = norm2(r);
        }
      }
      continue;
    }
    if (closed_form) {
      for (std::size_t i = 0; i < n; ++i) phiv[i] = p.rnl.value(v[i]);
    }
    double alpha = 1.0;
    bool accepted = false;
    double best2 = res2;
    for (int k = 0; k < 40; ++k) {
      bool feasible = true;
      if (closed_form) {
        for (std::size_t i = 0; i < n && feasible; ++i) {
          const double wt = phiv[i] + alpha * y[i];
          if (wt <= 0.0) {
            vn[i] = 0.0;
          } else if (wt < w_sup) {
            vn[i] = p.rnl.inverse(wt);
            feasible = std::isfinite(vn[i]);
          } else {
            feasible = false;
          }
        }
      } else {
        for (std::size_t i = 0; i < n; ++i) vn[i] = std::max(0.0, v[i] + alpha * dinv[i] * y[i]);
      }
      if (!feasible) {
        alpha *= 0.5;
        continue;
      }
      residual_into(p, tail, vn, w, rn);
      const double trial = norm2(rn);
      if (trial <= (1.0 - 1e-4 * alpha) * res2 || (trial < best2 && norm_inf(rn) <= rep.tolerance)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
    if (alpha < 1.0) ++rep.damping_events;
    v.swap(vn);
    r.swap(rn);
    res_inf = norm_inf(r);
    res2 = norm2(r);
  }
  rep.final_residual = res_inf;
  rep.converged = res_inf <= rep.tolerance;
  return {Field(grid, std::move(v), Field::default_exterior(grid), p.rnl.eps()), rep};
}

EllipticSolution solve_elliptic(const EllipticProblem& p, const SolverOptions& options, const Field* guess) {
  return EllipticSolver(p.op, options).solve(p, guess);
}

SweepResult elliptic_epsilon_sweep(const Field& f, const OperatorSpec& op_spec, const Nonlinearity& nl,
                                   const std::vector<double>& eps_list, const BallSpec& ball,
                                   const ClassificationRule& rule, const SolverOptions& options,
                                   FarField far_field) {
  require(!eps_list.empty(), ErrorKind::InvalidParameter, "eps list is empty");
  for (std::size_t k = 1; k < eps_list.size(); ++k) {
    require(eps_list[k] < eps_list[k - 1], ErrorKind::InvalidParameter, "eps list must be strictly decreasing");
  }
  require(f.grid() == op_spec.grid, ErrorKind::InvalidInput, "data grid does not match operator grid");
  const EllipticSolver solver(DiscreteOperator::build(op_spec), options);

  SweepResult out;
  out.tau = 0.0;
  out.reference_mass = ball_mass(f, ball);
  std::optional<Field> warm;
  for (double eps : eps_list) {
    const EllipticProblem p{solver.op(), RegularizedNonlinearity(nl, eps), f, 1.0, far_field};
    auto sol = solver.solve(p, warm ? &*warm : nullptr);
    out.all_converged = out.all_converged && sol.report.converged;
    std::vector<double> u(sol.v.values().begin(), sol.v.values().end());
    for (double& x : u) x += eps;
    out.eps_values.push_back(eps);
    out.ball_masses.push_back(ball_mass(Field(f.grid(), std::move(u), Field::default_exterior(f.grid())), ball));
    warm = std::move(sol.v);
  }
  if (out.eps_values.size() >= 3) out.slope = tail_slope(out.ball_masses, out.eps_values);
  out.classification = out.all_converged
                           ? classify_extinction(out.ball_masses, out.eps_values, out.reference_mass, rule)
                           : Classification::Inconclusive;
  return out;
}

}  // namespace fracdiff

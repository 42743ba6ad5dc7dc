#include "fracdiff/parabolic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fracdiff {

namespace {

constexpr double kTimeSlack = 1e-12;

StepSummary summarize(double t, const Field& v, const BallSpec& ball, double eps) {
  StepSummary s;
  s.t = t;
  s.mass = integral(v);
  std::vector<double> u(v.values().begin(), v.values().end());
  for (double& x : u) x += eps;
  s.ball_mass = ball_mass(Field(v.grid(), std::move(u), Field::default_exterior(v.grid())), ball);
  s.l_inf = lp_norm(v, std::numeric_limits<double>::infinity());
  s.min = v.min();
  s.max = v.max();
  return s;
}

EllipticProblem step_problem(const Field& state, const ParabolicProblem& p, const EllipticSolver& solver,
                             double dt) {
  return EllipticProblem{solver.op(), RegularizedNonlinearity(p.nl, p.eps),
                         Field(state.grid(), std::vector<double>(state.values().begin(), state.values().end()),
                               Field::default_exterior(state.grid())),
                         dt, p.far_field, p.tail_exponent};
}

}  // namespace

void ParabolicProblem::validate() const {
  op_spec.validate();
  require(std::isfinite(eps) && eps > 0.0, ErrorKind::InvalidParameter, "eps must be positive");
  require(std::isfinite(dt) && dt > 0.0 && std::isfinite(t_end) && t_end > 0.0 && dt <= t_end,
          ErrorKind::InvalidParameter, "need 0 < dt <= t_end");
  require(initial.grid() == op_spec.grid, ErrorKind::InvalidInput, "initial data grid does not match operator grid");
  require(initial.min() >= 0.0, ErrorKind::InvalidInput, "initial data must be nonnegative");
  require(max_halvings >= 0, ErrorKind::InvalidParameter, "max_halvings must be >= 0");
}

BallSpec ParabolicProblem::summary_ball() const {
  if (ball) return *ball;
  return BallSpec{std::vector<double>(static_cast<std::size_t>(op_spec.grid.dimension()), 0.0),
                  0.25 * op_spec.grid.half_width()};
}

const Field& Trajectory::at(double t) const {
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (std::abs(times[k] - t) <= kTimeSlack * std::max(1.0, std::abs(t))) return snapshots[k];
  }
  fail(ErrorKind::InvalidInput, "no snapshot at t = " + std::to_string(t));
}

StepResult step(const Field& state, const ParabolicProblem& p, const EllipticSolver& solver, double dt) {
  require(state.min() >= 0.0, ErrorKind::InvalidInput, "state must be nonnegative");
  const auto prob = step_problem(state, p, solver, dt);
  auto sol = solver.solve(prob, &state);
  if (!sol.report.converged) {
    fail(ErrorKind::StepFailure, "Newton did not converge (residual " + std::to_string(sol.report.final_residual) +
                                     " after " + std::to_string(sol.report.iterations) + " iterations)");
  }
  return {std::move(sol.v), sol.report};
}

StepResult step(const Field& state, const ParabolicProblem& p) {
  p.validate();
  const EllipticSolver solver(DiscreteOperator::build(p.op_spec), p.solver);
  return step(state, p, solver, p.dt);
}

Trajectory evolve(const ParabolicProblem& p, const std::vector<double>& sample_times) {
  p.validate();
  std::vector<double> samples = sample_times;
  std::sort(samples.begin(), samples.end());
  samples.erase(std::unique(samples.begin(), samples.end()), samples.end());
  for (double t : samples) {
    require(t >= 0.0 && t <= p.t_end * (1.0 + kTimeSlack), ErrorKind::InvalidParameter,
            "sample times must lie in [0, t_end]");
  }

  const EllipticSolver solver(DiscreteOperator::build(p.op_spec), p.solver);
  const BallSpec ball = p.summary_ball();
  Trajectory tr;
  Field v = p.initial.with_floor(p.eps);
  double t = 0.0;
  tr.summaries.push_back(summarize(t, v, ball, p.eps));
  std::size_t next = 0;
  auto take_samples = [&] {
    while (next < samples.size() && samples[next] <= t + kTimeSlack * std::max(1.0, t)) {
      tr.times.push_back(samples[next]);
      tr.snapshots.push_back(v);
      ++next;
    }
  };
  take_samples();

  // Advances v over [t, t + h] with 2^depth equal substeps on failure.
  auto advance = [&](auto&& self, double h, int depth) -> bool {
    try {
      auto r = step(v, p, solver, h);
      tr.newton_iterations += r.report.iterations;
      v = std::move(r.state);
      return true;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::StepFailure) throw;
      if (depth >= p.max_halvings) {
        tr.failure = e.what();
        return false;
      }
      ++tr.halvings;
      return self(self, 0.5 * h, depth + 1) && self(self, 0.5 * h, depth + 1);
    }
  };

  while (t < p.t_end * (1.0 - kTimeSlack)) {
    double target = std::min(t + p.dt, p.t_end);
    if (next < samples.size() && samples[next] < target) target = samples[next];
    if (!advance(advance, target - t, 0)) {
      tr.failed = true;
      break;
    }
    t = target;
    ++tr.steps;
    tr.summaries.push_back(summarize(t, v, ball, p.eps));
    take_samples();
  }
  return tr;
}

DiagnosticsReport diagnostics(const Trajectory& tr, const ParabolicProblem& p) {
  DiagnosticsReport d;
  require(!tr.summaries.empty(), ErrorKind::InvalidInput, "empty trajectory");
  const double m0 = tr.summaries.front().mass;
  const double l0 = tr.summaries.front().l_inf;
  const double mscale = m0 > 0.0 ? m0 : 1.0;
  for (std::size_t k = 0; k < tr.summaries.size(); ++k) {
    const auto& s = tr.summaries[k];
    d.mass_drift = std::max(d.mass_drift, std::abs(s.mass - m0) / mscale);
    if (k > 0) {
      const auto& prev = tr.summaries[k - 1];
      d.max_step_mass_change = std::max(d.max_step_mass_change, std::abs(s.mass - prev.mass) / mscale);
      d.linf_increase = std::max(d.linf_increase, s.l_inf - prev.l_inf);
    }
  }
  d.linf_monotone = d.linf_increase <= 1e-10 * (1.0 + l0);

  const double inf = std::numeric_limits<double>::infinity();
  for (const auto& snap : tr.snapshots) {
    for (double q : {1.0, 2.0, inf}) d.lp_excess = std::max(d.lp_excess, lp_norm(snap, q) - lp_norm(p.initial, q));
  }

  d.ab_applicable = p.nl.kind() != Nonlinearity::Kind::Custom;
  if (d.ab_applicable) {
    const double a = 1.0 / (p.nl.exponent() + 1.0);
    for (std::size_t k1 = 0; k1 < tr.times.size(); ++k1) {
      if (tr.times[k1] <= 0.0) continue;
      for (std::size_t k2 = k1 + 1; k2 < tr.times.size(); ++k2) {
        const double bound = std::pow(tr.times[k2] / tr.times[k1], a);
        const auto u1 = tr.snapshots[k1].values(), u2 = tr.snapshots[k2].values();
        for (std::size_t i = 0; i < u1.size(); ++i) {
          d.ab_violation = std::max(d.ab_violation, (u2[i] + p.eps) / (u1[i] + p.eps) - bound);
        }
      }
    }
  }
  return d;
}

double contraction_check(const ParabolicProblem& p1, const ParabolicProblem& p2, double t) {
  require(p1.op_spec.grid == p2.op_spec.grid && p1.op_spec.kind == p2.op_spec.kind && p1.op_spec.s == p2.op_spec.s &&
              p1.eps == p2.eps && p1.dt == p2.dt && p1.nl.name() == p2.nl.name() && p1.far_field == p2.far_field,
          ErrorKind::InvalidInput, "contraction check needs identical problems up to the initial data");
  auto a = p1, b = p2;
  a.t_end = b.t_end = t;
  const auto ta = evolve(a, {t});
  const auto tb = evolve(b, {t});
  require(!ta.failed && !tb.failed, ErrorKind::Inconclusive, "contraction check: a run failed");
  const auto& ua = ta.at(t);
  const auto& ub = tb.at(t);
  const double h = p1.op_spec.grid.cell_volume();
  std::vector<double> now(ua.size()), before(ua.size());
  for (std::size_t i = 0; i < ua.size(); ++i) {
    now[i] = std::max(0.0, ua[i] - ub[i]) * h;
    before[i] = std::max(0.0, p1.initial[i] - p2.initial[i]) * h;
  }
  return pairwise_sum(now) - pairwise_sum(before);
}

ChainReport dirichlet_chain(const Field& u0, const Field& mask, double s, const Nonlinearity& nl, double eps, double t,
                            double dt, OperatorKind dirichlet_kind) {
  const auto& g = u0.grid();
  require(g.dimension() == 1 && g.topology() == Topology::Truncated, ErrorKind::UnsupportedDimension,
          "the Dirichlet chain is implemented on 1D truncated grids");
  require(mask.grid() == g, ErrorKind::InvalidInput, "mask grid does not match data grid");
  require(dirichlet_kind == OperatorKind::DirichletRestricted || dirichlet_kind == OperatorKind::DirichletSpectral,
          ErrorKind::InvalidParameter, "chain needs a Dirichlet operator kind");
  require(g.points_per_axis() % 2 == 0, ErrorKind::InvalidParameter, "chain needs an even number of points");
  for (double m : mask.values()) require(m == 0.0 || m == 1.0, ErrorKind::InvalidInput, "mask must be 0/1");

  const int M = g.points_per_axis();
  std::vector<double> masked(u0.size());
  for (std::size_t i = 0; i < masked.size(); ++i) masked[i] = mask[i] * u0[i];

  ParabolicProblem dir;
  dir.op_spec = {s, dirichlet_kind, g};
  dir.nl = nl;
  dir.eps = eps;
  dir.initial = Field(g, std::move(masked));
  dir.t_end = t;
  dir.dt = std::min(dt, t);

  // Whole-space approximation on the doubled box with aligned nodes.
  const UniformGrid big(1, 2.0 * g.half_width(), 2 * M);
  std::vector<double> wide(big.size(), 0.0);
  for (int i = 0; i < M; ++i) wide[static_cast<std::size_t>(i + M / 2)] = u0[static_cast<std::size_t>(i)];
  ParabolicProblem cauchy = dir;
  cauchy.op_spec = {s, OperatorKind::TruncatedQuadrature, big};
  cauchy.initial = Field(big, std::move(wide));

  const auto tw = evolve(dir, {t});
  const auto tu = evolve(cauchy, {t});
  require(!tw.failed && !tu.failed, ErrorKind::Inconclusive, "Dirichlet chain: a run failed");
  const auto& w = tw.at(t);
  const auto& u = tu.at(t);

  ChainReport rep;
  const double gmax = std::max(1.0, u0.max());
  rep.tolerance = 2.0 * 1e-10 * (1.0 + gmax);
  for (int i = 0; i < M; ++i) {
    rep.max_violation = std::max(rep.max_violation, w[static_cast<std::size_t>(i)] -
                                                        u[static_cast<std::size_t>(i + M / 2)]);
  }
  rep.holds = rep.max_violation <= rep.tolerance;
  return rep;
}

bool dirichlet_chain_check(const Field& u0, const Field& mask, double s, const Nonlinearity& nl, double eps, double t,
                           double dt, OperatorKind dirichlet_kind) {
  return dirichlet_chain(u0, mask, s, nl, eps, t, dt, dirichlet_kind).holds;
}

}  // namespace fracdiff

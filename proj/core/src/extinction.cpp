#include "fracdiff/extinction.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

namespace fracdiff {

SweepResult epsilon_sweep(const ParabolicProblem& tmpl, const std::vector<double>& eps_list, double tau,
                          const BallSpec& ball, const ClassificationRule& rule) {
  require(!eps_list.empty(), ErrorKind::InvalidParameter, "eps list is empty");
  for (std::size_t k = 0; k < eps_list.size(); ++k) {
    require(std::isfinite(eps_list[k]) && eps_list[k] > 0.0, ErrorKind::InvalidParameter, "eps must be positive");
    require(k == 0 || eps_list[k] < eps_list[k - 1], ErrorKind::InvalidParameter,
            "eps list must be strictly decreasing");
  }
  require(std::isfinite(tau) && tau > 0.0, ErrorKind::InvalidParameter, "tau must be positive");

  SweepResult out;
  out.tau = tau;
  out.reference_mass = ball_mass(tmpl.initial, ball);
  for (double eps : eps_list) {
    ParabolicProblem p = tmpl;
    p.eps = eps;
    p.t_end = tau;
    p.dt = std::min(tmpl.dt, tau);
    p.ball = ball;
    const auto tr = evolve(p, {tau});
    if (tr.failed) {
      out.all_converged = false;
      break;
    }
    out.eps_values.push_back(eps);
    out.ball_masses.push_back(tr.summaries.back().ball_mass);
  }
  if (out.eps_values.size() >= 3) out.slope = tail_slope(out.ball_masses, out.eps_values);
  out.classification = out.all_converged
                           ? classify_extinction(out.ball_masses, out.eps_values, out.reference_mass, rule)
                           : Classification::Inconclusive;
  return out;
}

void PhaseProtocol::validate() const {
  require(std::isfinite(half_width) && half_width > 0.0, ErrorKind::InvalidParameter, "half width must be positive");
  require(points >= 8, ErrorKind::InvalidParameter, "need at least 8 points");
  require(std::isfinite(dt) && dt > 0.0 && std::isfinite(tau) && tau >= dt, ErrorKind::InvalidParameter,
          "need 0 < dt <= tau");
  require(ball_radius > 0.0 && width > 0.0 && amplitude > 0.0, ErrorKind::InvalidParameter,
          "ball radius, width and amplitude must be positive");
  require(exclusion_band >= 0.0, ErrorKind::InvalidParameter, "exclusion band must be >= 0");
}

PhaseProtocol PhaseProtocol::refined() const {
  PhaseProtocol r = *this;
  r.points *= 2;
  r.dt *= 0.5;
  return r;
}

double critical_margin(double s, double n) { return std::abs(n - (2.0 * s - 1.0)); }

namespace {

PhasePoint run_point(double s, double n, const PhaseProtocol& pr) {
  PhasePoint pt;
  pt.s = s;
  pt.n = n;
  pt.margin = critical_margin(s, n);
  try {
    require(n >= 0.0, ErrorKind::InvalidParameter, "n must be >= 0");
    const UniformGrid g(1, pr.half_width, pr.points);
    ParabolicProblem p;
    p.op_spec = {s, OperatorKind::TruncatedQuadrature, g};
    p.nl = n == 0.0 ? Nonlinearity::logarithmic() : Nonlinearity::power(n);
    const double a = pr.amplitude, w = pr.width;
    p.initial = Field::sample(g, [a, w](auto x) { return a * std::exp(-x[0] * x[0] / (w * w)); });
    p.t_end = pr.tau;
    p.dt = pr.dt;
    p.far_field = pr.far_field;
    p.solver = pr.solver;
    const auto res = epsilon_sweep(p, pr.eps_values, pr.tau, BallSpec{{0.0}, pr.ball_radius}, pr.rule);
    pt.classification = res.classification;
    pt.ball_masses = res.ball_masses;
    pt.slope = res.slope;
    pt.final_mass = res.ball_masses.empty() ? 0.0 : res.ball_masses.back();
    if (!res.all_converged) pt.failure = "a run in the sweep failed to converge";
  } catch (const std::exception& e) {
    pt.classification = Classification::Inconclusive;
    pt.failure = e.what();
  }
  return pt;
}

}  // namespace

std::vector<PhasePoint> phase_points(const std::vector<std::pair<double, double>>& points,
                                     const PhaseProtocol& protocol) {
  protocol.validate();
  std::vector<PhasePoint> out(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < points.size(); k = next++) {
      out[k] = run_point(points[k].first, points[k].second, protocol);
    }
  };
  unsigned threads = protocol.threads != 0 ? protocol.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(points.size(), 1)));
  std::vector<std::jthread> pool;
  for (unsigned k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  return out;
}

std::vector<PhasePoint> phase_diagram(const std::vector<double>& s_grid, const std::vector<double>& n_grid,
                                      const PhaseProtocol& protocol) {
  std::vector<std::pair<double, double>> points;
  for (double s : s_grid) {
    for (double n : n_grid) {
      if (critical_margin(s, n) >= protocol.exclusion_band) points.emplace_back(s, n);
    }
  }
  return phase_points(points, protocol);
}

std::string to_string(GreenRegime r) {
  return r == GreenRegime::Supercritical ? "supercritical" : "one-d-sup-half";
}

GreenRegime green_regime(int N, double s) {
  require(std::isfinite(s) && s > 0.0 && s < 1.0, ErrorKind::InvalidParameter, "s must lie in (0,1)");
  if (N > 2.0 * s) return GreenRegime::Supercritical;
  if (N == 1 && s > 0.5) return GreenRegime::OneDSupHalf;
  fail(ErrorKind::UnsupportedRegime, "no Green identity for N = " + std::to_string(N) + ", s = " + std::to_string(s));
}

std::vector<double> green_sample_times(double tau_star, double tau, int count) {
  require(count >= 2, ErrorKind::InvalidParameter, "need at least two quadrature times");
  require(std::isfinite(tau_star) && tau_star >= 0.0 && tau > tau_star, ErrorKind::InvalidParameter,
          "need 0 <= tau_star < tau");
  const int n = count - 1;
  const double mid = 0.5 * (tau + tau_star), half = 0.5 * (tau - tau_star);
  std::vector<double> t(static_cast<std::size_t>(count));
  for (int k = 0; k <= n; ++k) t[static_cast<std::size_t>(k)] = mid - half * std::cos(std::numbers::pi * k / n);
  t.front() = tau_star;
  t.back() = tau;
  return t;
}

namespace {

// Clenshaw-Curtis weights on [-1, 1] at cos(k pi / n), k = 0..n.
std::vector<double> clenshaw_curtis(int n) {
  std::vector<double> w(static_cast<std::size_t>(n + 1));
  for (int k = 0; k <= n; ++k) {
    double acc = 1.0;
    for (int j = 1; 2 * j <= n; ++j) {
      const double b = 2 * j == n ? 1.0 : 2.0;
      acc -= b / (4.0 * j * j - 1.0) * std::cos(2.0 * std::numbers::pi * j * k / n);
    }
    w[static_cast<std::size_t>(k)] = (k == 0 || k == n ? 1.0 : 2.0) * acc / n;
  }
  return w;
}

// Potential of the mass pushed out of a 1D box with the floor far field.
// With W the time-integrated phi on the box (zero outside), the exterior
// density is rho(y) = -c int_box W(z) |y - z|^{-1-2s} dz for |y| > L; it is
// sampled on geometrically graded cells out to 1e8 L and convolved with
// c_{1,s} |x - y|^{2s-1}.
std::vector<double> exterior_potential(const UniformGrid& g, double s, const std::vector<double>& W) {
  const double L = g.half_width(), h = g.spacing();
  const double c = normalization_constant(1, s), cr = riesz_constant(1, s);
  std::vector<double> y, width;
  for (double e = L, w = h; e - L < 1e8 * L; e += w, w *= 1.02) {
    y.push_back(e + 0.5 * w);
    width.push_back(w);
  }
  const std::size_t n = g.size();
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = g.coordinate(static_cast<int>(i));
  std::vector<double> out(n, 0.0);
  std::vector<double> terms(n);
  for (double side : {1.0, -1.0}) {
    for (std::size_t k = 0; k < y.size(); ++k) {
      const double yk = side * y[k];
      for (std::size_t j = 0; j < n; ++j) terms[j] = W[j] * std::pow(std::abs(yk - x[j]), -1.0 - 2.0 * s);
      const double rho = -c * h * pairwise_sum(terms) * width[k];
      for (std::size_t i = 0; i < n; ++i) out[i] += cr * rho * std::pow(std::abs(x[i] - yk), 2.0 * s - 1.0);
    }
  }
  return out;
}

}  // namespace

std::vector<GreenIdentityReport> verify_green_identity(const Trajectory& tr, const ParabolicProblem& p,
                                                       const std::vector<std::size_t>& x_nodes, double tau_star,
                                                       double tau, int count) {
  const auto& g = p.op_spec.grid;
  const GreenRegime regime = green_regime(g.dimension(), p.op_spec.s);
  for (std::size_t i : x_nodes) require(i < g.size(), ErrorKind::InvalidInput, "node index out of range");
  require(tau >= tau_star, ErrorKind::InvalidParameter, "need tau_star <= tau");

  std::vector<GreenIdentityReport> out;
  out.reserve(x_nodes.size());
  if (tau == tau_star) {
    for (std::size_t i : x_nodes) out.push_back({i, 0.0, 0.0, 0.0, regime});
    return out;
  }

  const auto times = green_sample_times(tau_star, tau, count);
  const auto w = clenshaw_curtis(count - 1);
  const double half = 0.5 * (tau - tau_star);
  const RegularizedNonlinearity rnl(p.nl, p.eps);
  std::vector<double> lhs(g.size(), 0.0);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto v = tr.at(times[k]).values();
    for (std::size_t i = 0; i < g.size(); ++i) lhs[i] += half * w[k] * rnl.value(v[i]);
  }

  const auto a = tr.at(tau_star).values(), b = tr.at(tau).values();
  std::vector<double> rho(g.size());
  for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = a[i] - b[i];
  const Field rho_field(g, std::move(rho), Exterior::ZeroOutside);
  Field rhs = regime == GreenRegime::Supercritical ? riesz_potential(rho_field, p.op_spec.s)
                                                   : green_potential_1d(rho_field, p.op_spec.s);
  if (g.dimension() == 1 && p.far_field == FarField::Floor) {
    const auto ext = exterior_potential(g, p.op_spec.s, lhs);
    std::vector<double> sum(rhs.values().begin(), rhs.values().end());
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += ext[i];
    rhs = Field(g, std::move(sum), Exterior::ZeroOutside);
  }

  double lhs0 = 0.0, rhs0 = 0.0;
  if (regime == GreenRegime::OneDSupHalf) {
    std::size_t i0 = 0;
    for (std::size_t i = 1; i < g.size(); ++i) {
      if (std::abs(g.coordinate(static_cast<int>(i))) < std::abs(g.coordinate(static_cast<int>(i0)))) i0 = i;
    }
    lhs0 = lhs[i0];
    rhs0 = rhs[i0];
  }
  for (std::size_t i : x_nodes) {
    GreenIdentityReport r{i, lhs[i] - lhs0, rhs[i] - rhs0, 0.0, regime};
    r.residual = std::abs(r.lhs - r.rhs);
    out.push_back(r);
  }
  return out;
}

double explicit_solution(const ExplicitKind& kind, double x, double t) {
  require(std::isfinite(x) && std::isfinite(t), ErrorKind::DomainError, "x and t must be finite");
  if (const auto* lh = std::get_if<LogHalf>(&kind)) {
    require(t <= lh->T, ErrorKind::DomainError, "LogHalf is defined for t <= T");
    return 2.0 * (lh->T - t) / (1.0 + x * x);
  }
  const auto& vs = std::get<VerySingular>(kind);
  require(vs.m < 1.0, ErrorKind::DomainError, "VerySingular needs m < 1");
  require(x != 0.0, ErrorKind::DomainError, "VerySingular is singular at x = 0");
  require(t <= vs.T, ErrorKind::DomainError, "VerySingular is defined for t <= T");
  return vs.C * std::pow(vs.T - t, 1.0 / (1.0 - vs.m)) * std::pow(std::abs(x), -2.0 * vs.s / (1.0 - vs.m));
}

double very_singular_constant(double m, double s) {
  require(std::isfinite(s) && s > 0.0 && s < 1.0, ErrorKind::InvalidParameter, "s must lie in (0,1)");
  require(m < 1.0 && m != 0.0, ErrorKind::DomainError, "need m < 1, m != 0");
  const double a = 1.0 / (1.0 - m);
  const double gamma = -2.0 * s * m / (1.0 - m);
  require(gamma > -1.0 && gamma < 2.0 * s, ErrorKind::DomainError, "profile exponent out of range");
  // (-Delta)^s |x|^gamma = kappa |x|^{gamma - 2s} in 1D.
  const double kappa = std::pow(4.0, s) * std::tgamma(0.5 * (1.0 + gamma)) * std::tgamma(s - 0.5 * gamma) /
                       (std::tgamma(-0.5 * gamma) * std::tgamma(0.5 * (1.0 + gamma) - s));
  const double c = kappa / (a * m);
  require(std::isfinite(c) && c > 0.0, ErrorKind::DomainError, "no very singular solution for these (m, s)");
  return std::pow(c, 1.0 / (1.0 - m));
}

TailFit tail_decay_probe(const Field& f) {
  const auto& g = f.grid();
  require(g.dimension() == 1, ErrorKind::UnsupportedDimension, "tail probe is 1D only");
  const double cut = 2.0 * g.half_width() / 3.0;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double x = std::abs(g.coordinate(static_cast<int>(i)));
    if (x < cut) continue;
    require(f[i] > 0.0, ErrorKind::InvalidInput, "tail values must be positive");
    lx.push_back(std::log(x));
    ly.push_back(std::log(f[i]));
  }
  require(lx.size() >= 3, ErrorKind::InvalidInput, "too few tail nodes");
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    mx += lx[k] / n;
    my += ly[k] / n;
  }
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
    syy += (ly[k] - my) * (ly[k] - my);
  }
  require(sxx > 0.0, ErrorKind::InvalidInput, "degenerate tail abscissae");
  TailFit fit;
  fit.exponent = sxy / sxx;
  fit.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  fit.power_like = fit.exponent > -3.0 && fit.r_squared >= 0.99;
  return fit;
}

ContinuityReport s_continuity_probe(const ParabolicProblem& base, const std::vector<double>& deltas, double t) {
  require(base.op_spec.s == 0.5, ErrorKind::InvalidParameter, "the base problem must have s = 1/2");
  for (double d : deltas) {
    require(std::isfinite(d) && d >= 0.0 && 0.5 + d < 1.0, ErrorKind::InvalidParameter,
            "deltas must lie in [0, 1/2)");
  }
  ContinuityReport rep;
  auto run = [&](double s) {
    ParabolicProblem p = base;
    p.op_spec.s = s;
    p.t_end = t;
    p.dt = std::min(base.dt, t);
    return evolve(p, {t});
  };
  const auto ref = run(0.5);
  if (ref.failed) {
    rep.failed = true;
    rep.failure = "s = 1/2 run: " + ref.failure;
    return rep;
  }
  const auto& u = ref.at(t);
  const double h = base.op_spec.grid.cell_volume();
  for (double d : deltas) {
    const auto tr = run(0.5 + d);
    if (tr.failed) {
      rep.failed = true;
      rep.failure = "s = " + std::to_string(0.5 + d) + " run: " + tr.failure;
      break;
    }
    const auto& w = tr.at(t);
    std::vector<double> diff(u.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = std::abs(w[i] - u[i]) * h;
    rep.deltas.push_back(d);
    rep.distances.push_back(pairwise_sum(diff));
  }
  return rep;
}

}  // namespace fracdiff

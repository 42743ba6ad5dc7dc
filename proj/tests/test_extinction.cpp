#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <functional>

#include "doctest.h"
#include "fracdiff/extinction.hpp"

using namespace fracdiff;

namespace {

// (-Delta)^s f(x) in 1D as c int_0^inf (2 f(x) - f(x + z) - f(x - z)) z^{-1-2s} dz.
// [0, d] uses the Taylor term -f''(x) z^{1-2s}; the rest is split at a
// (the distance to a possible singularity of f) and 2a.
double frac_lap_oracle(const std::function<double(double)>& f, double f2, double x, double s, double a) {
  const double d = 1e-4;
  auto integrand = [&](double z) { return (2.0 * f(x) - f(x + z) - f(x - z)) * std::pow(z, -1.0 - 2.0 * s); };
  boost::math::quadrature::tanh_sinh<double> ts;
  boost::math::quadrature::exp_sinh<double> es;
  const double near = -f2 * std::pow(d, 2.0 - 2.0 * s) / (2.0 - 2.0 * s);
  const double total = near + ts.integrate(integrand, d, a) + ts.integrate(integrand, a, 2.0 * a) +
                       es.integrate([&](double z) { return integrand(z + 2.0 * a); });
  return normalization_constant(1, s) * total;
}

Field gaussian(const UniformGrid& g, double a = 1.0) {
  return Field::sample(g, [&](const std::vector<double>& x) { return a * std::exp(-x[0] * x[0]); });
}

ParabolicProblem power_problem(const UniformGrid& g, double s, double n, double eps, double t_end, double dt) {
  ParabolicProblem p;
  p.op_spec = {s, OperatorKind::TruncatedQuadrature, g};
  p.nl = n > 0.0 ? Nonlinearity::power(n) : Nonlinearity::logarithmic();
  p.eps = eps;
  p.initial = gaussian(g);
  p.t_end = t_end;
  p.dt = dt;
  return p;
}

}  // namespace

TEST_CASE("classification rule") {
  const std::vector<double> eps{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  CHECK(classify_extinction({1.0, 0.1, 0.01, 1e-3, 1e-4}, eps, 1.5) == Classification::Extinct);
  CHECK(classify_extinction({1.0, 1.0, 1.0, 1.0, 1.0}, eps, 1.5) == Classification::Persistent);
  CHECK(classify_extinction({1.0, 0.5, 1.0, 0.5, 1.0}, eps, 1.5) == Classification::Inconclusive);
  CHECK(classify_extinction({1.0, 0.1}, {1e-1, 1e-2}, 1.5) == Classification::Inconclusive);
  CHECK_THROWS_AS(classify_extinction({1.0, 0.0, 0.0, 0.0}, {1e-1, 1e-2, 1e-3, 1e-4}, 1.5), Error);
  // Decreasing but with a shallow tail slope.
  CHECK(classify_extinction({1.0, 0.1, 0.04, 0.035, 0.034}, eps, 1.5) == Classification::Inconclusive);
  // Stabilised but having lost most of the mass first.
  CHECK(classify_extinction({1.0, 0.3, 0.3, 0.3, 0.3}, eps, 1.5) == Classification::Inconclusive);
  ClassificationRule loose;
  loose.persistence_floor = 0.2;
  CHECK(classify_extinction({1.0, 0.3, 0.3, 0.3, 0.3}, eps, 1.5, loose) == Classification::Persistent);
  CHECK(tail_slope({1.0, 0.1, 0.01, 1e-3}, {1e-1, 1e-2, 1e-3, 1e-4}) == doctest::Approx(1.0));
}

TEST_CASE("critical margin and Green regimes") {
  CHECK(critical_margin(0.75, 0.2) == doctest::Approx(0.3));
  CHECK(critical_margin(0.3, 0.5) == doctest::Approx(0.9));
  CHECK(green_regime(1, 0.3) == GreenRegime::Supercritical);
  CHECK(green_regime(1, 0.75) == GreenRegime::OneDSupHalf);
  CHECK(green_regime(2, 0.9) == GreenRegime::Supercritical);
  CHECK_THROWS_AS(green_regime(1, 0.5), Error);
}

TEST_CASE("Green sample times") {
  const auto t = green_sample_times(0.1, 0.5);
  REQUIRE(t.size() == 33);
  CHECK(t.front() == doctest::Approx(0.1));
  CHECK(t.back() == doctest::Approx(0.5));
  for (std::size_t k = 1; k < t.size(); ++k) CHECK(t[k] > t[k - 1]);
  // Chebyshev-Lobatto nodes cluster at both ends.
  CHECK(t[1] - t[0] < t[17] - t[16]);
}

TEST_CASE("Green identity on an empty interval") {
  const UniformGrid g(1, 10.0, 128);
  auto p = power_problem(g, 0.3, 1.0, 1e-2, 0.1, 0.01);
  const auto tr = evolve(p, {0.0, 0.05, 0.1});
  REQUIRE_FALSE(tr.failed);
  const auto rep = verify_green_identity(tr, p, {32, 64, 96}, 0.05, 0.05, 1);
  REQUIRE(rep.size() == 3);
  for (const auto& r : rep) {
    CHECK(r.lhs == 0.0);
    CHECK(r.rhs == 0.0);
    CHECK(r.residual == 0.0);
  }
}

TEST_CASE("explicit log solution") {
  const LogHalf lh{1.0};
  CHECK(explicit_solution(lh, 0.0, 0.0) == 2.0);
  for (double x : {-3.0, 0.0, 7.5}) CHECK(explicit_solution(lh, x, 1.0) == 0.0);
  CHECK_THROWS_AS(explicit_solution(lh, 0.0, 1.5), Error);

  // d_t U + (-Delta)^{1/2} log U at x = 0, t = 0.25.
  const double t = 0.25;
  const double dt = (explicit_solution(lh, 0.0, t + 1e-6) - explicit_solution(lh, 0.0, t - 1e-6)) / 2e-6;
  const double lap = frac_lap_oracle([&](double y) { return std::log(explicit_solution(lh, y, t)); }, -2.0, 0.0, 0.5, 1.0);
  CHECK(std::abs(dt + lap) <= 1e-3);
}

TEST_CASE("very singular solution") {
  // d_t U + (-Delta)^s (U^m / m) = 0 at x = 1, t = 0.25 with the library constant;
  // confirms the time factor (T - t).
  for (auto [m, s] : {std::pair{-1.0, 0.5}, std::pair{-0.5, 0.3}, std::pair{-1.0, 0.75}}) {
    CAPTURE(m);
    CAPTURE(s);
    const VerySingular vs{m, s, very_singular_constant(m, s), 1.0};
    const double t = 0.25, x = 1.0;
    const double h = 1e-6;
    const double dt = (explicit_solution(vs, x, t + h) - explicit_solution(vs, x, t - h)) / (2.0 * h);
    auto f = [&](double y) { return std::pow(explicit_solution(vs, y, t), m) / m; };
    const double a = 2.0 * s * m / (1.0 - m);  // f ~ |y|^{-a} up to a constant factor
    const double f2 = f(x) * a * (a + 1.0);
    const double lap = frac_lap_oracle(f, f2, x, s, 1.0);
    CHECK(std::abs(dt + lap) <= 1e-6 * std::abs(dt));
  }
  CHECK_THROWS_AS(very_singular_constant(0.5, 0.75), Error);
  CHECK_THROWS_AS(explicit_solution(VerySingular{-1.0, 0.5, 1.0, 1.0}, 0.0, 0.5), Error);
  CHECK_THROWS_AS(explicit_solution(VerySingular{1.5, 0.5, 1.0, 1.0}, 1.0, 0.5), Error);
}

TEST_CASE("tail decay probe") {
  const UniformGrid g(1, 100.0, 1024);
  const auto p = tail_decay_probe(Field::sample(g, [](const std::vector<double>& x) { return std::pow(std::abs(x[0]), -0.5); }));
  CHECK(p.exponent == doctest::Approx(-0.5).epsilon(0.04));
  CHECK(p.power_like);
  const UniformGrid h(1, 6.0, 256);
  const auto q = tail_decay_probe(gaussian(h));
  CHECK(q.exponent <= -3.0);
  CHECK_FALSE(q.power_like);
  CHECK_THROWS_AS(tail_decay_probe(Field::constant(h, 0.0)), Error);
}

TEST_CASE("persistent tail is at least as heavy as the lower bound") {
  // s = 0.8, n = 0.3 on the phase protocol grid at eps = 1e-5. The lower
  // bound u >~ |x|^{-(2s-1)/n} = |x|^{-2} constrains only from below; the
  // fitted exponent at finite L follows the far-field closure.
  const PhaseProtocol proto;
  const UniformGrid g(1, proto.half_width, proto.points);
  auto p = power_problem(g, 0.8, 0.3, 1e-5, proto.tau, proto.dt);
  p.far_field = proto.far_field;
  const auto tr = evolve(p, {0.0, proto.tau});
  REQUIRE_FALSE(tr.failed);
  const auto fit = tail_decay_probe(tr.at(proto.tau));
  CHECK(fit.power_like);
  CHECK(fit.exponent >= -2.0 * 1.25);
}

TEST_CASE("sweeps") {
  const UniformGrid g(1, 20.0, 256);
  auto p = power_problem(g, 0.3, 1.0, 1e-1, 0.1, 0.01);
  const BallSpec ball{{0.0}, 1.0};
  const auto single = epsilon_sweep(p, {1e-2}, 0.1, ball);
  CHECK(single.classification == Classification::Inconclusive);
  CHECK(single.ball_masses.size() == 1);
  CHECK_THROWS_AS(epsilon_sweep(p, {1e-2, 1e-1, 1e-3, 1e-4}, 0.1, ball), Error);

  const std::vector<double> eps{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  const auto ex = epsilon_sweep(p, eps, 0.1, ball);
  CHECK(ex.classification == Classification::Extinct);
  for (std::size_t k = 1; k < ex.ball_masses.size(); ++k) CHECK(ex.ball_masses[k] < ex.ball_masses[k - 1]);
}

TEST_CASE("phase points keep input order and do not depend on threads") {
  PhaseProtocol proto;
  proto.half_width = 20.0;
  proto.points = 256;
  proto.eps_values = {1e-1, 1e-2, 1e-3, 1e-4};
  const std::vector<std::pair<double, double>> pts{{0.9, 0.5}, {0.3, 1.0}, {0.5, 0.0}};
  proto.threads = 1;
  const auto a = phase_points(pts, proto);
  proto.threads = 3;
  const auto b = phase_points(pts, proto);
  REQUIRE(a.size() == 3);
  REQUIRE(b.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(a[k].s == pts[k].first);
    CHECK(a[k].n == pts[k].second);
    CHECK(a[k].classification == b[k].classification);
    CHECK(a[k].ball_masses == b[k].ball_masses);
    CHECK(a[k].margin == doctest::Approx(critical_margin(pts[k].first, pts[k].second)));
  }
  // The near-critical band is dropped from a scan.
  const auto scan = phase_diagram({0.75}, {0.2, 0.45, 0.5}, proto);
  REQUIRE(scan.size() == 1);
  CHECK(scan[0].n == 0.2);
  CHECK(phase_diagram({}, {0.5}, proto).empty());
}

TEST_CASE("s-continuity probe") {
  const UniformGrid g(1, 10.0, 256);
  const auto p = power_problem(g, 0.5, 1.0, 1e-2, 0.1, 0.01);
  const auto zero = s_continuity_probe(p, {0.0}, 0.1);
  REQUIRE(zero.distances.size() == 1);
  CHECK(zero.distances[0] == 0.0);
  const auto r = s_continuity_probe(p, {0.2, 0.1, 0.05, 0.025}, 0.1);
  REQUIRE_FALSE(r.failed);
  REQUIRE(r.distances.size() == 4);
  for (std::size_t k = 1; k < 4; ++k) CHECK(r.distances[k] < r.distances[k - 1]);
}

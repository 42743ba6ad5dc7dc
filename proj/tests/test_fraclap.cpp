#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <random>

#include "doctest.h"
#include "fracdiff/fraclap.hpp"

using namespace fracdiff;

namespace {

// (-Delta)^s exp(-x^2) in 1D through its Fourier integral.
double gaussian_fraclap_1d(double x, double s) {
  auto f = [&](double xi) { return std::pow(xi, 2.0 * s) * std::sqrt(M_PI) * std::exp(-xi * xi / 4.0) * std::cos(xi * x); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 40.0, 15, 1e-13) / M_PI;
}

// (-Delta)^s exp(-|x|^2) in 2D through the Hankel transform.
double gaussian_fraclap_2d(double r, double s) {
  auto f = [&](double k) {
    return std::pow(k, 2.0 * s) * M_PI * std::exp(-k * k / 4.0) * boost::math::cyl_bessel_j(0, k * r) * k;
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 40.0, 15, 1e-13) / (2.0 * M_PI);
}

// (-Delta)^{-s} exp(-x^2) in 1D for s < 1/2.
double gaussian_riesz_1d(double x, double s) {
  boost::math::quadrature::tanh_sinh<double> ts;
  auto f = [&](double xi) { return std::pow(xi, -2.0 * s) * std::sqrt(M_PI) * std::exp(-xi * xi / 4.0) * std::cos(xi * x); };
  return ts.integrate(f, 0.0, 40.0) / M_PI;
}

double gaussian(const std::vector<double>& x) {
  double r2 = 0.0;
  for (double xi : x) r2 += xi * xi;
  return std::exp(-r2);
}

double dot(const Field& a, const Field& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

Field random_field(const UniformGrid& g, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::vector<double> v(g.size());
  for (double& x : v) x = normal(rng);
  return Field(g, std::move(v), Field::default_exterior(g));
}

}  // namespace

TEST_CASE("normalization constant") {
  CHECK(normalization_constant(1, 0.5) == doctest::Approx(1.0 / M_PI).epsilon(1e-14));
  for (int N : {1, 2}) {
    for (double s = 0.1; s < 0.95; s += 0.1) {
      const double c = normalization_constant(N, s);
      CHECK(c > 0.0);
      const double oracle = std::pow(4.0, s) * boost::math::tgamma(N / 2.0 + s) /
                            (std::pow(M_PI, N / 2.0) * std::abs(boost::math::tgamma(-s)));
      CHECK(c == doctest::Approx(oracle).epsilon(1e-13));
    }
  }
  CHECK(normalization_constant(1, 0.01) < 0.01);
  CHECK_THROWS_AS(normalization_constant(1, 1.0), Error);
  CHECK_THROWS_AS(normalization_constant(1, 0.0), Error);
}

TEST_CASE("riesz constant") {
  CHECK(riesz_constant(1, 0.3) == doctest::Approx(boost::math::tgamma(0.2) / (std::pow(4.0, 0.3) * std::sqrt(M_PI) *
                                                                              boost::math::tgamma(0.3))));
  CHECK(riesz_constant(1, 0.75) < 0.0);
  CHECK(riesz_constant(2, 0.75) > 0.0);
}

TEST_CASE("spec validation") {
  const UniformGrid g(1, 1.0, 16);
  CHECK_THROWS_AS(DiscreteOperator::build({0.5, OperatorKind::PeriodicSpectral, g}), Error);
  CHECK_THROWS_AS(DiscreteOperator::build({0.5, OperatorKind::TruncatedQuadrature, g.with_topology(Topology::Periodic)}),
                  Error);
  CHECK_THROWS_AS(DiscreteOperator::build({1.0, OperatorKind::TruncatedQuadrature, g}), Error);
  CHECK_THROWS_AS(DiscreteOperator::build({0.5, OperatorKind::TruncatedQuadrature, UniformGrid(3, 1.0, 8)}), Error);
}

TEST_CASE("periodic spectral: constants and single modes") {
  const UniformGrid g(1, 2.0, 64, Topology::Periodic);
  const double s = 0.35;
  const auto op = DiscreteOperator::build({s, OperatorKind::PeriodicSpectral, g});
  const auto zero = op.apply(Field::constant(g, 3.0));
  for (double x : zero.values()) CHECK(std::abs(x) < 1e-13);
  for (int k : {1, 5, 17}) {
    const double freq = M_PI * k / 2.0;
    const auto f = Field::sample(g, [&](const std::vector<double>& x) { return std::cos(freq * x[0]); });
    const auto af = op.apply(f);
    const double mult = std::pow(freq, 2.0 * s);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(af[i] == doctest::Approx(mult * f[i]).epsilon(1e-11).scale(1.0));
  }
}

TEST_CASE("truncated quadrature against the Fourier oracle, 1D") {
  // Piecewise-linear interpolation against the singular kernel converges
  // like h^{2 - 2s}.
  for (double s : {0.3, 0.5, 0.75}) {
    std::vector<double> errs;
    for (int M : {512, 1024, 2048}) {
      const UniformGrid g(1, 10.0, M);
      const auto op = DiscreteOperator::build({s, OperatorKind::TruncatedQuadrature, g});
      const auto af = op.apply(Field::sample(g, gaussian));
      double err = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.coordinate(static_cast<int>(i));
        if (std::abs(x) <= 3.0) err = std::max(err, std::abs(af[i] - gaussian_fraclap_1d(x, s)));
      }
      errs.push_back(err);
    }
    CAPTURE(s);
    CHECK(errs.back() < 1e-2);
    const double rate = std::log2(errs[1] / errs[2]);
    CHECK(rate == doctest::Approx(2.0 - 2.0 * s).epsilon(0.1));
  }
}

TEST_CASE("truncated quadrature against the Hankel oracle, 2D") {
  const double s = 0.5;
  std::vector<double> errs;
  for (int M : {48, 96}) {
    const UniformGrid g(2, 6.0, M);
    const auto op = DiscreteOperator::build({s, OperatorKind::TruncatedQuadrature, g});
    const auto af = op.apply(Field::sample(g, gaussian));
    double err = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double r = std::sqrt(g.radius_squared(k));
      if (r > 2.0) continue;
      const double ref = gaussian_fraclap_2d(r, s);
      err = std::max(err, std::abs(af[k] - ref));
      scale = std::max(scale, std::abs(ref));
    }
    errs.push_back(err / scale);
  }
  CHECK(errs[1] < 5e-2);
  CHECK(errs[1] < 0.6 * errs[0]);
}

TEST_CASE("log anchor at moderate resolution") {
  // -log(1 + x^2) has (-Delta)^{1/2} value 2 at the origin; the zero exterior
  // would cut off the log growth, so the field is continued by its edge values.
  const UniformGrid g(1, 200.0, 8192);
  const auto op = DiscreteOperator::build({0.5, OperatorKind::TruncatedQuadrature, g});
  const auto f = Field::sample(g, [](const std::vector<double>& x) { return -std::log1p(x[0] * x[0]); })
                     .with_exterior(Exterior::ConstantOutside);
  const auto af = op.apply(f);
  CHECK(af[4096] == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("linearity, symmetry and positivity on random fields") {
  std::mt19937_64 rng(7);
  const UniformGrid line(1, 4.0, 128), square(2, 2.0, 16);
  const std::vector<OperatorSpec> specs{
      {0.3, OperatorKind::TruncatedQuadrature, line},
      {0.8, OperatorKind::DirichletRestricted, line},
      {0.6, OperatorKind::DirichletSpectral, line},
      {0.4, OperatorKind::PeriodicSpectral, line.with_topology(Topology::Periodic)},
      {0.7, OperatorKind::TruncatedQuadrature, square},
  };
  for (const auto& spec : specs) {
    const auto op = DiscreteOperator::build(spec);
    const auto& g = spec.grid;
    const auto f = random_field(g, rng), h = random_field(g, rng);
    std::vector<double> comb(g.size());
    for (std::size_t k = 0; k < comb.size(); ++k) comb[k] = 2.5 * f[k] - 0.75 * h[k];
    const auto ac = op.apply(Field(g, comb, f.exterior()));
    const auto af = op.apply(f), ah = op.apply(h);
    double lin = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < comb.size(); ++k) {
      lin = std::max(lin, std::abs(ac[k] - (2.5 * af[k] - 0.75 * ah[k])));
      scale = std::max(scale, std::abs(ac[k]));
    }
    CHECK(lin <= 1e-13 * scale);
    CHECK(std::abs(dot(af, h) - dot(f, ah)) <= 1e-12 * std::sqrt(dot(af, af) * dot(h, h)));
    for (int k = 0; k < 100; ++k) {
      const auto x = random_field(g, rng);
      CHECK(dot(op.apply(x), x) >= 0.0);
    }
  }
}

TEST_CASE("kernel weights are nonnegative and symmetric") {
  const UniformGrid g(1, 3.0, 64);
  for (auto kind : {OperatorKind::TruncatedQuadrature, OperatorKind::DirichletRestricted}) {
    const auto op = DiscreteOperator::build({0.45, kind, g});
    for (double w : op.weights().subspan(1)) CHECK(w >= 0.0);
    for (double t : op.tails()) CHECK(t >= 0.0);
    CHECK(op.weight(3, 17) == op.weight(17, 3));
    CHECK(op.weight(5, 5) == 0.0);
  }
}

TEST_CASE("discrete Stroock-Varopoulos") {
  std::mt19937_64 rng(11);
  const UniformGrid g(1, 4.0, 128);
  for (auto kind : {OperatorKind::TruncatedQuadrature, OperatorKind::DirichletRestricted}) {
    const auto op = DiscreteOperator::build({0.6, kind, g});
    for (double delta : {1.0, 0.1}) {
      for (int k = 0; k < 100; ++k) {
        const auto f = random_field(g, rng);
        std::vector<double> pf(g.size());
        for (std::size_t i = 0; i < pf.size(); ++i) pf[i] = std::max(0.0, std::tanh(f[i] / delta));
        CHECK(dot(Field(g, pf), op.apply(f)) >= 0.0);
      }
    }
  }
}

TEST_CASE("Stroock-Varopoulos energy bound on a 64-node matrix") {
  // <p(f), A f> >= |A^{1/2} Psi(f)|^2 with p' = (Psi')^2; for p = max(0, tanh(y)),
  // Psi(y) = int_0^y sech(t) dt on y > 0 and 0 below.
  const UniformGrid g(1, 2.0, 64);
  const auto op = DiscreteOperator::build({0.5, OperatorKind::TruncatedQuadrature, g});
  const auto dense = op.dense_matrix();
  const std::size_t n = g.size();
  std::mt19937_64 rng(5);
  const auto f = random_field(g, rng);
  std::vector<double> pf(n), psi(n), apsi(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    pf[i] = std::max(0.0, std::tanh(f[i]));
    psi[i] = f[i] > 0.0 ? 2.0 * std::atan(std::tanh(f[i] / 2.0)) : 0.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) apsi[i] += dense[i * n + j] * psi[j];
  }
  double energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) energy += psi[i] * apsi[i];
  CHECK(dot(Field(g, pf), op.apply(f)) >= energy - 1e-12 * std::abs(energy));
}

TEST_CASE("restricted and spectral Dirichlet operators differ") {
  const UniformGrid g(1, 1.0, 64);
  const auto f = Field::sample(g, [](const std::vector<double>& x) { return 1.0 - x[0] * x[0] + 0.3 * x[0]; });
  const auto a = DiscreteOperator::build({0.5, OperatorKind::DirichletRestricted, g}).apply(f);
  const auto b = DiscreteOperator::build({0.5, OperatorKind::DirichletSpectral, g}).apply(f);
  double diff = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) diff = std::max(diff, std::abs(a[k] - b[k]));
  CHECK(diff > 1e-2);
}

TEST_CASE("periodic and truncated kinds agree on a bump") {
  // Discrepancy O(h^{2-2s}) + O(L^{-1-2s}); doubling L at fixed h leaves the
  // first term, so L doubles while h halves.
  const double s = 0.3;
  auto bump = [](const std::vector<double>& x) {
    return std::abs(x[0]) < 1.0 ? std::exp(-1.0 / (1.0 - x[0] * x[0])) : 0.0;
  };
  double prev = 0.0;
  for (int level = 0; level < 3; ++level) {
    const double L = 8.0 * (1 << level);
    const int M = 256 << (2 * level);
    const UniformGrid g(1, L, M);
    const auto a = DiscreteOperator::build({s, OperatorKind::TruncatedQuadrature, g}).apply(Field::sample(g, bump));
    const auto gp = g.with_topology(Topology::Periodic);
    const auto b = DiscreteOperator::build({s, OperatorKind::PeriodicSpectral, gp}).apply(Field::sample(gp, bump));
    double err = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) err = std::max(err, std::abs(a[k] - b[k]));
    if (prev > 0.0) CHECK(err <= 0.5 * prev);
    prev = err;
  }
}

TEST_CASE("riesz potential against the Fourier oracle") {
  const double s = 0.3;
  const UniformGrid g(1, 40.0, 4096);
  const auto w = riesz_potential(Field::sample(g, gaussian), s);
  double err = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.coordinate(static_cast<int>(i));
    if (std::abs(x) > 5.0) continue;
    const double ref = gaussian_riesz_1d(x, s);
    err = std::max(err, std::abs(w[i] - ref));
    scale = std::max(scale, ref);
  }
  CHECK(err / scale < 1e-3);
}

TEST_CASE("riesz potential inverts the operator") {
  // Fourth derivative of a Gaussian: its first moments vanish, so A f decays
  // like |x|^{-5-2s} and the box holds all of it.
  const double s = 0.3;
  const UniformGrid g(1, 40.0, 4096);
  const auto f = Field::sample(g, [](const std::vector<double>& x) {
    const double y = x[0] * x[0];
    return (16.0 * y * y - 48.0 * y + 12.0) * std::exp(-y);
  });
  const auto back = riesz_potential(DiscreteOperator::build({s, OperatorKind::TruncatedQuadrature, g}).apply(f), s);
  std::vector<double> diff(f.size());
  for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = back[k] - f[k];
  CHECK(lp_norm(f.with_values(diff), 2.0) / lp_norm(f, 2.0) <= 1e-3);
}

TEST_CASE("riesz potential preconditions and far-field decay") {
  const UniformGrid g(1, 40.0, 512);
  CHECK_THROWS_AS(riesz_potential(Field::constant(g, 1.0), 0.5), Error);
  CHECK_THROWS_AS(riesz_potential(Field::constant(g, 1.0), 0.7), Error);

  const double s = 0.3;
  auto bump = Field::sample(g, [&](const std::vector<double>& x) { return std::abs(x[0]) < 0.2 ? 1.0 : 0.0; });
  const auto w = riesz_potential(bump, s);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.coordinate(static_cast<int>(i));
    if (x < 5.0 || x > 30.0) continue;
    const double lx = std::log(x), ly = std::log(w[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++count;
  }
  const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  CHECK(slope == doctest::Approx(2.0 * s - 1.0).epsilon(0.05));
}

TEST_CASE("one dimensional kernel") {
  CHECK(one_d_kernel(0.0, 0.75) == 0.0);
  CHECK(one_d_kernel(4.0, 0.75) == doctest::Approx(2.0));
  CHECK_THROWS_AS(one_d_kernel(1.0, 0.5), Error);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int k = 0; k < 1000; ++k) {
    const double x = u(rng), y = u(rng), s = 0.55 + 0.4 * (k % 10) / 10.0;
    CHECK(std::abs(one_d_kernel(x, s) - one_d_kernel(y, s)) <= std::pow(std::abs(x - y), 2.0 * s - 1.0) + 1e-12);
  }
}

TEST_CASE("apply is deterministic across calls and copies") {
  const UniformGrid g(1, 10.0, 4096);
  const auto op = DiscreteOperator::build({0.4, OperatorKind::TruncatedQuadrature, g});
  const auto copy = op;
  const auto f = Field::sample(g, gaussian);
  const auto a = op.apply(f), b = copy.apply(f);
  for (std::size_t k = 0; k < a.size(); ++k) REQUIRE(a[k] == b[k]);
}

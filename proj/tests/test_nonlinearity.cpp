#include <cmath>
#include <limits>

#include "doctest.h"
#include "fracdiff/nonlinearity.hpp"

using namespace fracdiff;

TEST_CASE("phi values") {
  CHECK(phi(Nonlinearity::power(1.0), 2.0) == doctest::Approx(-0.5));
  CHECK(phi(Nonlinearity::logarithmic(), 1.0) == 0.0);
  CHECK(phi(Nonlinearity::power(2.0), 0.1) == doctest::Approx(-100.0));
  CHECK_THROWS_AS(phi(Nonlinearity::logarithmic(), 0.0), Error);
  CHECK_THROWS_AS(Nonlinearity::power(0.0), Error);
  CHECK(phi(Nonlinearity::power(1.0), 1e-12) < -1e6);
  CHECK(phi(Nonlinearity::logarithmic(), 1e-12) < -27.0);
}

TEST_CASE("phi is strictly increasing on a geometric sample") {
  // geometric_sample is ordered from u_max down.
  const auto us = geometric_sample(1e8, 400, 16.0);
  for (const auto& nl : {Nonlinearity::power(0.3), Nonlinearity::power(1.7), Nonlinearity::logarithmic()}) {
    for (std::size_t k = 1; k < us.size(); ++k) {
      CHECK(nl.derivative(us[k]) > 0.0);
      CHECK(nl.value(us[k]) < nl.value(us[k - 1]));
    }
  }
}

TEST_CASE("regularised nonlinearity") {
  const RegularizedNonlinearity r(Nonlinearity::power(1.0), 1.0);
  CHECK(phi_eps(r, 0.0) == 0.0);
  CHECK(phi_eps(r, 1.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(phi_eps(r, -1e-3), Error);
  CHECK(phi_eps(RegularizedNonlinearity(Nonlinearity::power(1.0), 1e-8), 1.0) > 1e6);

  for (double eps : {1.0, 1e-2, 1e-4, 1e-6}) {
    for (const auto& nl : {Nonlinearity::power(0.5), Nonlinearity::logarithmic()}) {
      const RegularizedNonlinearity re(nl, eps);
      CHECK(phi_eps(re, 0.0) == 0.0);
      double prev = std::numeric_limits<double>::infinity();
      for (double v : geometric_sample(1e3, 200, 20.0)) {
        const double w = phi_eps(re, v);
        CHECK(w < prev);
        CHECK(std::isfinite(w));
        prev = w;
        const double h = 1e-5 * std::max(v, eps);
        if (v > h) {
          const double fd = (phi_eps(re, v + h) - phi_eps(re, v - h)) / (2.0 * h);
          CHECK(fd == doctest::Approx(phi_eps_prime(re, v)).epsilon(1e-6));
        }
      }
    }
  }
}

TEST_CASE("regularised values avoid cancellation") {
  // phi_eps(v) for tiny v against a long double evaluation of the difference.
  const RegularizedNonlinearity r(Nonlinearity::power(0.7), 1e-3);
  const double v = 1e-12;
  const long double e = 1e-3L, vv = 1e-12L;
  const long double ref = -std::pow(e + vv, -0.7L) + std::pow(e, -0.7L);
  CHECK(phi_eps(r, v) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-6));
  const RegularizedNonlinearity rl(Nonlinearity::logarithmic(), 1.0);
  CHECK(phi_eps(rl, 1e-15) == doctest::Approx(1e-15).epsilon(1e-10));
}

TEST_CASE("regularised inverse") {
  for (const auto& nl : {Nonlinearity::power(0.9), Nonlinearity::logarithmic()}) {
    const RegularizedNonlinearity r(nl, 1e-4);
    for (double v : {0.0, 1e-10, 1e-4, 1.0, 50.0}) {
      CHECK(r.inverse(r.value(v)) == doctest::Approx(v).epsilon(1e-9).scale(1e-14));
    }
  }
}

TEST_CASE("beta") {
  CHECK(beta(Nonlinearity::power(1.0), -0.5) == doctest::Approx(2.0));
  CHECK(beta(Nonlinearity::logarithmic(), 0.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(beta(Nonlinearity::power(1.0), 0.5), Error);
  for (const auto& nl : {Nonlinearity::power(0.4), Nonlinearity::power(2.0), Nonlinearity::logarithmic()}) {
    for (double u : {1e-3, 1.0, 1e3}) CHECK(beta(nl, phi(nl, u)) == doctest::Approx(u).epsilon(1e-12));
  }
  const auto custom = Nonlinearity::custom([](double u) { return std::log(u) + u; },
                                           [](double u) { return 1.0 / u + 1.0; });
  for (double u : {1e-3, 1.0, 30.0}) CHECK(beta(custom, custom.value(u)) == doctest::Approx(u).epsilon(1e-10));
}

TEST_CASE("grammar") {
  const auto p = Nonlinearity::parse("power:1.5");
  CHECK(p.kind() == Nonlinearity::Kind::Power);
  CHECK(p.exponent() == 1.5);
  CHECK(Nonlinearity::parse("log").kind() == Nonlinearity::Kind::Logarithmic);
  CHECK_THROWS_AS(Nonlinearity::parse("power:"), Error);
  CHECK_THROWS_AS(Nonlinearity::parse("power:1.5x"), Error);
  CHECK_THROWS_AS(Nonlinearity::parse("exp"), Error);
}

TEST_CASE("slowness order") {
  const auto base = Nonlinearity::power(1.0);
  const auto half = Nonlinearity::custom([&](double u) { return 0.5 * base.value(u); },
                                         [&](double u) { return 0.5 * base.derivative(u); });
  const auto sample = geometric_sample(10.0, 200, 8.0);
  CHECK(is_slower(half, base, sample) == Slowness::Slower);
  CHECK(is_slower(base, base, sample) == Slowness::Slower);
  // 2u^{-3} and u^{-2} cross at u = 2.
  CHECK(is_slower(Nonlinearity::power(2.0), base, sample) == Slowness::NotSlower);
  CHECK(is_slower(Nonlinearity::power(2.0), base, geometric_sample(1.9, 200, 8.0)) == Slowness::NotSlower);
  CHECK(is_slower(base, Nonlinearity::power(2.0), geometric_sample(1.9, 200, 8.0)) == Slowness::Slower);
}

TEST_CASE("singular bound constant") {
  for (double n : {0.3, 1.0, 2.5}) CHECK(singular_bound_constant(Nonlinearity::power(n), n, 7.0, 100) == doctest::Approx(n));
  CHECK(singular_bound_constant(Nonlinearity::logarithmic(), 0.0, 10.0, 100) == doctest::Approx(1.0));
  // phi' u^{3} = u on (0, 1]: the infimum is the smallest sample.
  const double c = singular_bound_constant(Nonlinearity::power(1.0), 2.0, 1.0, 100);
  CHECK(c >= 0.0);
  CHECK(c < 1e-6);
}

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fracdiff/error.hpp"

namespace fracdiff {

/// Singular nonlinearity phi on (0, inf) with phi(0+) = -inf:
///   Power(n):     phi(u) = -u^{-n},  n > 0
///   Logarithmic:  phi(u) = log u
///   Custom:       user-supplied phi and phi' (strictly increasing)
class Nonlinearity {
 public:
  enum class Kind { Power, Logarithmic, Custom };
  using Fn = std::function<double(double)>;

  static Nonlinearity power(double n);
  static Nonlinearity logarithmic();
  static Nonlinearity custom(Fn phi, Fn derivative, std::string name = "custom");
  /// Grammar: `power:<n>` | `log`.
  static Nonlinearity parse(const std::string& text);

  Kind kind() const noexcept { return kind_; }
  /// n for Power, 0 for Logarithmic, NaN for Custom.
  double exponent() const noexcept;
  std::string name() const;

  double value(double u) const;
  double derivative(double u) const;
  /// beta = phi^{-1}; closed form for Power and Logarithmic, bracketed
  /// bisection for Custom.
  double inverse(double w) const;

 private:
  Nonlinearity(Kind kind, double n, Fn phi, Fn dphi, std::string name)
      : kind_(kind), n_(n), phi_(std::move(phi)), dphi_(std::move(dphi)), name_(std::move(name)) {}

  Kind kind_;
  double n_;
  Fn phi_;
  Fn dphi_;
  std::string name_;
};

/// phi_eps(v) = phi(v + eps) - phi(eps) on v >= 0, evaluated without the
/// cancellation of the literal difference.
class RegularizedNonlinearity {
 public:
  RegularizedNonlinearity(Nonlinearity base, double eps);

  const Nonlinearity& base() const noexcept { return base_; }
  double eps() const noexcept { return eps_; }

  double value(double v) const;
  double derivative(double v) const;
  /// phi_eps^{-1}(w), the shifted inverse used by the v-form resolvent.
  double inverse(double w) const;

 private:
  Nonlinearity base_;
  double eps_;
  double phi_at_eps_;
};

double phi(const Nonlinearity& nl, double u);
double phi_eps(const RegularizedNonlinearity& rnl, double v);
double phi_eps_prime(const RegularizedNonlinearity& rnl, double v);
double beta(const Nonlinearity& nl, double w);

/// Geometric sample of (0, u_max]: `count` points spanning `decades` decades below u_max.
std::vector<double> geometric_sample(double u_max, int count, double decades = 12.0);

enum class Slowness { Slower, NotSlower };
std::string to_string(Slowness s);

/// Slower iff Phi' <= phi' at every sample point (1e-12 relative slack).
Slowness is_slower(const Nonlinearity& Phi, const Nonlinearity& phi, const std::vector<double>& sample);

/// inf of phi'(u) u^{n+1} over a geometric sample of (0, M]; a strictly
/// positive result certifies phi'(u) >= C(M) u^{-(n+1)} on the sample.
double singular_bound_constant(const Nonlinearity& nl, double n, double M, int samples);

}  // namespace fracdiff

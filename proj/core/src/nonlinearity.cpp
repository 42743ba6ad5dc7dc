#include "fracdiff/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fracdiff {

Nonlinearity Nonlinearity::power(double n) {
  require(std::isfinite(n) && n > 0.0, ErrorKind::InvalidParameter, "power nonlinearity needs n > 0");
  return Nonlinearity(Kind::Power, n, nullptr, nullptr, "power");
}

Nonlinearity Nonlinearity::logarithmic() {
  return Nonlinearity(Kind::Logarithmic, 0.0, nullptr, nullptr, "log");
}

Nonlinearity Nonlinearity::custom(Fn phi, Fn derivative, std::string name) {
  require(static_cast<bool>(phi) && static_cast<bool>(derivative), ErrorKind::InvalidParameter,
          "custom nonlinearity needs phi and phi'");
  return Nonlinearity(Kind::Custom, std::numeric_limits<double>::quiet_NaN(), std::move(phi),
                      std::move(derivative), std::move(name));
}

Nonlinearity Nonlinearity::parse(const std::string& text) {
  if (text == "log") return logarithmic();
  if (text.rfind("power:", 0) == 0) {
    const std::string num = text.substr(6);
    std::size_t used = 0;
    double n = 0.0;
    try {
      n = std::stod(num, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == num.size() && !num.empty(), ErrorKind::Config,
            "nonlinearity exponent is not a number: '" + num + "'");
    return power(n);
  }
  fail(ErrorKind::Config, "nonlinearity must be 'power:<n>' or 'log', got '" + text + "'");
}

double Nonlinearity::exponent() const noexcept { return n_; }

std::string Nonlinearity::name() const {
  if (kind_ == Kind::Power) {
    std::ostringstream os;
    os.precision(17);
    os << "power:" << n_;
    return os.str();
  }
  return name_;
}

double Nonlinearity::value(double u) const {
  require(u > 0.0, ErrorKind::DomainError, "phi evaluated at the singular level u <= 0");
  switch (kind_) {
    case Kind::Power: return -std::pow(u, -n_);
    case Kind::Logarithmic: return std::log(u);
    case Kind::Custom: return phi_(u);
  }
  return 0.0;
}

double Nonlinearity::derivative(double u) const {
  require(u > 0.0, ErrorKind::DomainError, "phi' evaluated at the singular level u <= 0");
  switch (kind_) {
    case Kind::Power: return n_ * std::pow(u, -n_ - 1.0);
    case Kind::Logarithmic: return 1.0 / u;
    case Kind::Custom: return dphi_(u);
  }
  return 0.0;
}

double Nonlinearity::inverse(double w) const {
  switch (kind_) {
    case Kind::Power:
      require(w < 0.0, ErrorKind::DomainError, "beta: power nonlinearity has range (-inf, 0)");
      return std::pow(-w, -1.0 / n_);
    case Kind::Logarithmic: return std::exp(w);
    case Kind::Custom: {
      double lo = 1e-300, hi = 1.0;
      while (phi_(hi) < w) {
        hi *= 2.0;
        require(hi < 1e300, ErrorKind::DomainError, "beta: value above the range of phi");
      }
      require(phi_(lo) <= w, ErrorKind::DomainError, "beta: value below the range of phi");
      for (int it = 0; it < 2000 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = (hi / lo > 4.0) ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
        (phi_(mid) < w ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
  }
  return 0.0;
}

RegularizedNonlinearity::RegularizedNonlinearity(Nonlinearity base, double eps)
    : base_(std::move(base)), eps_(eps), phi_at_eps_(0.0) {
  require(std::isfinite(eps) && eps > 0.0, ErrorKind::InvalidParameter, "eps must be positive");
  phi_at_eps_ = base_.value(eps_);
}

double RegularizedNonlinearity::value(double v) const {
  require(v >= 0.0, ErrorKind::DomainError, "phi_eps evaluated at v < 0");
  switch (base_.kind()) {
    case Nonlinearity::Kind::Power: {
      const double n = base_.exponent();
      // eps^{-n} (1 - (1 + v/eps)^{-n})
      return -std::pow(eps_, -n) * std::expm1(-n * std::log1p(v / eps_));
    }
    case Nonlinearity::Kind::Logarithmic: return std::log1p(v / eps_);
    case Nonlinearity::Kind::Custom: return base_.value(v + eps_) - phi_at_eps_;
  }
  return 0.0;
}

double RegularizedNonlinearity::derivative(double v) const {
  require(v >= 0.0, ErrorKind::DomainError, "phi_eps' evaluated at v < 0");
  return base_.derivative(v + eps_);
}

double RegularizedNonlinearity::inverse(double w) const {
  switch (base_.kind()) {
    case Nonlinearity::Kind::Power: {
      const double n = base_.exponent();
      // w = eps^{-n}(1 - (1+v/eps)^{-n})  =>  v = eps((1 - w eps^n)^{-1/n} - 1)
      const double a = w * std::pow(eps_, n);
      require(a < 1.0, ErrorKind::DomainError, "phi_eps inverse: value above the range");
      return eps_ * std::expm1(-std::log1p(-a) / n);
    }
    case Nonlinearity::Kind::Logarithmic: return eps_ * std::expm1(w);
    case Nonlinearity::Kind::Custom: return base_.inverse(w + phi_at_eps_) - eps_;
  }
  return 0.0;
}

double phi(const Nonlinearity& nl, double u) { return nl.value(u); }
double phi_eps(const RegularizedNonlinearity& rnl, double v) { return rnl.value(v); }
double phi_eps_prime(const RegularizedNonlinearity& rnl, double v) { return rnl.derivative(v); }
double beta(const Nonlinearity& nl, double w) { return nl.inverse(w); }

std::vector<double> geometric_sample(double u_max, int count, double decades) {
  require(u_max > 0.0 && count >= 2, ErrorKind::InvalidParameter, "geometric sample needs u_max > 0, count >= 2");
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    out[static_cast<std::size_t>(k)] = u_max * std::pow(10.0, -decades * k / (count - 1));
  }
  return out;
}

std::string to_string(Slowness s) { return s == Slowness::Slower ? "slower" : "not-slower"; }

Slowness is_slower(const Nonlinearity& Phi, const Nonlinearity& phi, const std::vector<double>& sample) {
  for (double r : sample) {
    const double a = Phi.derivative(r);
    const double b = phi.derivative(r);
    if (a > b + 1e-12 * std::abs(b)) return Slowness::NotSlower;
  }
  return Slowness::Slower;
}

double singular_bound_constant(const Nonlinearity& nl, double n, double M, int samples) {
  require(M > 0.0, ErrorKind::InvalidParameter, "singular bound needs M > 0");
  double inf = std::numeric_limits<double>::infinity();
  for (double u : geometric_sample(M, samples)) {
    inf = std::min(inf, nl.derivative(u) * std::pow(u, n + 1.0));
  }
  return std::max(inf, 0.0);
}

}  // namespace fracdiff

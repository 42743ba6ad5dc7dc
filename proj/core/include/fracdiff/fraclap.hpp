#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fracdiff/grid.hpp"

namespace fracdiff {

enum class OperatorKind { PeriodicSpectral, TruncatedQuadrature, DirichletRestricted, DirichletSpectral };

std::string to_string(OperatorKind k);
OperatorKind parse_operator_kind(const std::string& text);

struct OperatorSpec {
  double s = 0.5;
  OperatorKind kind = OperatorKind::TruncatedQuadrature;
  UniformGrid grid{1, 1.0, 8};

  /// Throws InvalidSpec / InvalidParameter on an inconsistent spec.
  void validate() const;
};

/// c(N,s) = 4^s Gamma(N/2 + s) / (pi^{N/2} |Gamma(-s)|), the constant that
/// makes the singular integral agree with the Fourier symbol |xi|^{2s}.
double normalization_constant(int N, double s);

/// c_{N,s} = Gamma(N/2 - s) / (4^s pi^{N/2} Gamma(s)) of the Riesz kernel
/// |y|^{2s-N}. Negative for N = 1, s > 1/2 (the growing 1D Green kernel).
double riesz_constant(int N, double s);

/// One realisation of (-Delta)^s on a grid. Immutable and cheap to copy;
/// `apply` is reentrant.
///
/// Kernel kinds (TruncatedQuadrature, DirichletRestricted) are stored as a
/// translation-invariant table of nonnegative weights w(offset) plus
/// per-node tail coefficients t_i collecting the exterior of the box:
///   (A f)_i = sum_{j != i} w_{ij} (f_i - f_j) + t_i f_i      (zero exterior)
/// In 1D the weights integrate the kernel exactly against the piecewise
/// linear interpolant of the nodal values, with a quadratic near field on
/// |z| < h; in 2D they are exact cell averages with a five-point
/// near-field correction. Tails are exact exterior integrals.
///
/// Spectral kinds store one multiplier per mode: |pi k / L|^{2s} for the
/// periodic box, lambda_k^s of the discrete Dirichlet Laplacian (sine
/// basis) for DirichletSpectral.
class DiscreteOperator {
 public:
  static DiscreteOperator build(const OperatorSpec& spec);

  const OperatorSpec& spec() const noexcept;
  const UniformGrid& grid() const noexcept { return spec().grid; }
  OperatorKind kind() const noexcept { return spec().kind; }
  double normalization() const noexcept;
  bool is_kernel() const noexcept;

  /// Spectral kinds: multiplier per mode (FFT / sine-transform layout).
  std::span<const double> multipliers() const;
  /// Kernel kinds: weight by nonnegative offset multi-index (size M^N,
  /// entry 0 unused), and tail coefficient per node.
  std::span<const double> weights() const;
  std::span<const double> tails() const;
  /// 1D kernel kinds: the parts of the tail left and right of the box, used
  /// to continue a field by its edge values (empty otherwise).
  std::span<const double> tails_left() const;
  std::span<const double> tails_right() const;
  /// Diagonal of the matrix representation.
  std::span<const double> diagonal() const;

  /// Kernel weight between two flat nodes (0 on the diagonal).
  double weight(std::size_t i, std::size_t j) const;

  Field apply(const Field& f) const;
  /// Raw apply with the exterior implied by the kind (zero or periodic).
  void apply(std::span<const double> in, std::span<double> out) const;

  /// Row-major dense matrix of the operator; intended for small grids.
  std::vector<double> dense_matrix() const;

  struct Impl;

 private:
  explicit DiscreteOperator(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

/// Discrete (-Delta)^{-s}: convolution with c_{N,s} |y|^{2s-N} using exact
/// cell averages of the kernel. Requires N > 2s and a zero exterior.
Field riesz_potential(const Field& f, double s);

/// 1D convolution with c_{1,s} |y|^{2s-1} (cell-averaged), s != 1/2. For
/// s < 1/2 this is riesz_potential; for s > 1/2 the kernel grows and the
/// result is defined up to the choice of origin, so only differences
/// W(x) - W(x0) are meaningful.
Field green_potential_1d(const Field& f, double s);

/// |x|^{2s-1}, the growth profile of the 1D Green kernel for s in (1/2, 1).
double one_d_kernel(double x, double s);

}  // namespace fracdiff

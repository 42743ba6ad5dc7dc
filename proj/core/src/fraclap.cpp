#include "fracdiff/fraclap.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "fft.hpp"

namespace fracdiff {

namespace {

using boost::math::quadrature::gauss;
constexpr double kPi = std::numbers::pi;

// Kernel sums switch from direct summation to FFT convolution above this many nodes.
constexpr std::size_t kDirectLimit = 1024;

template <class F>
double gl(F&& f, double a, double b) {
  return gauss<double, 20>::integrate(f, a, b);
}

// Integral of (x^2 + y^2)^{power} over [x0, x1] x [y0, y1], split into
// `split` x `split` subcells.
double cell_integral(double power, double x0, double x1, double y0, double y1, int split) {
  double total = 0.0;
  const double dx = (x1 - x0) / split, dy = (y1 - y0) / split;
  for (int a = 0; a < split; ++a) {
    for (int b = 0; b < split; ++b) {
      const double xa = x0 + a * dx, ya = y0 + b * dy;
      total += gauss<double, 10>::integrate(
          [&](double x) {
            return gauss<double, 10>::integrate([&](double y) { return std::pow(x * x + y * y, power); }, ya,
                                                ya + dy);
          },
          xa, xa + dx);
    }
  }
  return total;
}

// Integral over the cell [p-1/2, p+1/2] x [q-1/2, q+1/2] (p, q >= 0, not both 0).
double offset_cell_integral(double power, int p, int q) {
  const int far = std::max(p, q);
  const int split = far >= 4 ? 1 : (far >= 2 ? 4 : 8);
  return cell_integral(power, p - 0.5, p + 0.5, q - 0.5, q + 0.5, split);
}

// Integral over the unit square centred at 0 of |z|^{2a}, a > -1: eight
// copies of the triangle 0 <= y <= x <= 1/2 in polar form.
double centre_cell_integral(double a) {
  return 8.0 * gl([&](double t) { return std::pow(0.5 / std::cos(t), 2.0 * a + 2.0) / (2.0 * a + 2.0); }, 0.0,
                  kPi / 4.0);
}

// Integral over [0, alpha] of cos^{2s}(phi), via sin^2(alpha) = r^2/(1+r^2) with r = tan(alpha).
double cos_power_integral(double s, double r) {
  const double x = r * r / (1.0 + r * r);
  return 0.5 * boost::math::beta(0.5, s + 0.5, x);
}

// Integral of rho(theta)^{-2s} over all directions from (x, y), rho being the
// distance to the boundary of [-L, L]^2 along the ray.
double exterior_angular_integral(double s, double L, double x, double y) {
  const double d[4] = {L - x, L + x, L - y, L + y};
  // For each wall: its distance and the two distances to its corners along the wall.
  const double side[4][2] = {{d[2], d[3]}, {d[2], d[3]}, {d[0], d[1]}, {d[0], d[1]}};
  double total = 0.0;
  for (int w = 0; w < 4; ++w) {
    total += std::pow(d[w], -2.0 * s) *
             (cos_power_integral(s, side[w][0] / d[w]) + cos_power_integral(s, side[w][1] / d[w]));
  }
  return total;
}

std::vector<int> embedded_dims(int N, int M) { return std::vector<int>(static_cast<std::size_t>(N), 2 * M); }

// Linear convolution out_i = sum_j table(|i - j|) f_j on the box, zero outside.
class Convolver {
 public:
  Convolver() = default;
  Convolver(int N, int M, std::vector<double> table) : N_(N), M_(M), table_(std::move(table)) {
    n_ = table_.size();
    if (n_ > kDirectLimit) {
      const int E = 2 * M_;
      std::vector<double> gen(N_ == 1 ? static_cast<std::size_t>(E) : static_cast<std::size_t>(E) * E, 0.0);
      auto wrap = [&](int k) { return k < M_ ? k : (k > M_ ? E - k : -1); };
      if (N_ == 1) {
        for (int k = 0; k < E; ++k) {
          const int a = wrap(k);
          if (a >= 0) gen[static_cast<std::size_t>(k)] = table_[static_cast<std::size_t>(a)];
        }
      } else {
        for (int k1 = 0; k1 < E; ++k1) {
          const int a = wrap(k1);
          if (a < 0) continue;
          for (int k2 = 0; k2 < E; ++k2) {
            const int b = wrap(k2);
            if (b >= 0) {
              gen[static_cast<std::size_t>(k1) * E + k2] =
                  table_[static_cast<std::size_t>(a) * M_ + static_cast<std::size_t>(b)];
            }
          }
        }
      }
      circulant_.emplace(detail::RealCirculant::from_generator(embedded_dims(N_, M_), gen));
    }
  }

  void convolve(std::span<const double> in, std::span<double> out) const {
    if (!circulant_) {
      direct(in, out);
      return;
    }
    const int E = 2 * M_;
    std::vector<double> buf(circulant_->size(), 0.0);
    if (N_ == 1) {
      std::copy(in.begin(), in.end(), buf.begin());
    } else {
      for (int i = 0; i < M_; ++i) {
        std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(i) * M_, M_,
                    buf.begin() + static_cast<std::ptrdiff_t>(i) * E);
      }
    }
    circulant_->apply(buf, buf);
    if (N_ == 1) {
      std::copy_n(buf.begin(), M_, out.begin());
    } else {
      for (int i = 0; i < M_; ++i) {
        std::copy_n(buf.begin() + static_cast<std::ptrdiff_t>(i) * E, M_,
                    out.begin() + static_cast<std::ptrdiff_t>(i) * M_);
      }
    }
  }

  double entry(std::size_t i, std::size_t j) const {
    if (N_ == 1) return table_[static_cast<std::size_t>(std::abs(static_cast<long>(i) - static_cast<long>(j)))];
    const long M = M_;
    const long a = std::abs(static_cast<long>(i) / M - static_cast<long>(j) / M);
    const long b = std::abs(static_cast<long>(i) % M - static_cast<long>(j) % M);
    return table_[static_cast<std::size_t>(a * M + b)];
  }

  const std::vector<double>& table() const noexcept { return table_; }

 private:
  void direct(std::span<const double> in, std::span<double> out) const {
    for (std::size_t i = 0; i < n_; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n_; ++j) acc += entry(i, j) * in[j];
      out[i] = acc;
    }
  }

  int N_ = 1;
  int M_ = 0;
  std::size_t n_ = 0;
  std::vector<double> table_;
  std::optional<detail::RealCirculant> circulant_;
};

}  // namespace

std::string to_string(OperatorKind k) {
  switch (k) {
    case OperatorKind::PeriodicSpectral: return "periodic-spectral";
    case OperatorKind::TruncatedQuadrature: return "truncated-quadrature";
    case OperatorKind::DirichletRestricted: return "dirichlet-restricted";
    case OperatorKind::DirichletSpectral: return "dirichlet-spectral";
  }
  return "unknown";
}

OperatorKind parse_operator_kind(const std::string& text) {
  for (auto k : {OperatorKind::PeriodicSpectral, OperatorKind::TruncatedQuadrature, OperatorKind::DirichletRestricted,
                 OperatorKind::DirichletSpectral}) {
    if (text == to_string(k)) return k;
  }
  fail(ErrorKind::Config, "unknown operator kind '" + text +
                              "' (expected periodic-spectral, truncated-quadrature, dirichlet-restricted, "
                              "dirichlet-spectral)");
}

void OperatorSpec::validate() const {
  require(std::isfinite(s) && s > 0.0 && s < 1.0, ErrorKind::InvalidParameter, "s must lie in (0,1)");
  require(grid.dimension() <= 2, ErrorKind::UnsupportedDimension, "operators support N <= 2");
  const bool periodic = grid.topology() == Topology::Periodic;
  require(periodic == (kind == OperatorKind::PeriodicSpectral), ErrorKind::InvalidSpec,
          to_string(kind) + " is incompatible with a " + to_string(grid.topology()) + " grid");
  require(kind != OperatorKind::PeriodicSpectral || grid.points_per_axis() % 2 == 0, ErrorKind::InvalidSpec,
          "periodic-spectral needs an even number of points per axis");
}

double normalization_constant(int N, double s) {
  require(N >= 1, ErrorKind::InvalidParameter, "dimension must be >= 1");
  require(std::isfinite(s) && s > 0.0 && s < 1.0, ErrorKind::InvalidParameter, "s must lie in (0,1)");
  return std::pow(4.0, s) * std::tgamma(0.5 * N + s) / (std::pow(kPi, 0.5 * N) * std::abs(std::tgamma(-s)));
}

double riesz_constant(int N, double s) {
  require(N >= 1, ErrorKind::InvalidParameter, "dimension must be >= 1");
  require(std::isfinite(s) && s > 0.0 && s < 1.0, ErrorKind::InvalidParameter, "s must lie in (0,1)");
  return std::tgamma(0.5 * N - s) / (std::pow(4.0, s) * std::pow(kPi, 0.5 * N) * std::tgamma(s));
}

struct DiscreteOperator::Impl {
  OperatorSpec spec;
  double c = 0.0;
  bool kernel = false;
  std::vector<double> multipliers;
  std::vector<double> weights;
  std::vector<double> tails;
  std::vector<double> tails_left;   // 1D: exterior weight left of the box
  std::vector<double> tails_right;  // 1D: exterior weight right of the box
  std::vector<double> diagonal;
  Convolver conv;
  std::optional<detail::RealCirculant> periodic;
  std::optional<detail::SineMultiplier> sine;

  void apply(std::span<const double> in, std::span<double> out) const {
    if (kernel) {
      conv.convolve(in, out);
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = diagonal[i] * in[i] - out[i];
    } else if (periodic) {
      periodic->apply(in, out);
    } else {
      sine->apply(in, out);
    }
  }
};

namespace {

// 1D dimensionless weights: the kernel integrated against the piecewise
// linear interpolant for |z| >= 1 plus the quadratic near field on |z| < 1.
void build_kernel_1d(DiscreteOperator::Impl& im) {
  const double s = im.spec.s;
  const int M = im.spec.grid.points_per_axis();
  const double scale = im.c * std::pow(im.spec.grid.spacing(), -2.0 * s);
  auto K = [s](double z) { return std::pow(z, -1.0 - 2.0 * s); };
  auto rising = [&](int k) { return gl([&](double z) { return (z - k + 1) * K(z); }, k - 1.0, double(k)); };
  auto falling = [&](int k) { return gl([&](double z) { return (k + 1 - z) * K(z); }, double(k), k + 1.0); };
  // Sum of the dimensionless weights at offsets >= k.
  auto tail_from = [&](int k) {
    if (k == 1) return 1.0 / (2.0 * s) + 1.0 / (2.0 - 2.0 * s);
    return std::pow(double(k), -2.0 * s) / (2.0 * s) + rising(k);
  };

  im.weights.assign(static_cast<std::size_t>(M), 0.0);
  for (int k = 1; k < M; ++k) {
    double w = falling(k);
    if (k == 1) w += 1.0 / (2.0 - 2.0 * s);
    else w += rising(k);
    im.weights[static_cast<std::size_t>(k)] = scale * w;
  }
  std::vector<double> T(static_cast<std::size_t>(M) + 1, 0.0);
  for (int k = 1; k <= M; ++k) T[static_cast<std::size_t>(k)] = scale * tail_from(k);

  const auto n = static_cast<std::size_t>(M);
  im.tails_left.resize(n);
  im.tails_right.resize(n);
  im.tails.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    im.tails_left[i] = T[i + 1];
    im.tails_right[i] = T[n - i];
    im.tails[i] = im.tails_left[i] + im.tails_right[i];
  }
  im.diagonal.assign(n, 2.0 * T[1]);
}

// 2D: exact cell integrals of the kernel, five-point near field on the
// centre cell, exact exterior integral for the tails.
void build_kernel_2d(DiscreteOperator::Impl& im) {
  const double s = im.spec.s;
  const auto& g = im.spec.grid;
  const int M = g.points_per_axis();
  const double h = g.spacing();
  const double scale = im.c * std::pow(h, -2.0 * s);
  const double near = 0.25 * centre_cell_integral(-s);  // per axis neighbour, dimensionless

  const auto m = static_cast<std::size_t>(M);
  im.weights.assign(m * m, 0.0);
  for (int p = 0; p < M; ++p) {
    for (int q = p; q < M; ++q) {
      if (p == 0 && q == 0) continue;
      double w = offset_cell_integral(-1.0 - s, p, q);
      if (p + q == 1) w += near;
      im.weights[static_cast<std::size_t>(p) * m + static_cast<std::size_t>(q)] = scale * w;
      im.weights[static_cast<std::size_t>(q) * m + static_cast<std::size_t>(p)] = scale * w;
    }
  }
  // Total weight per row over the whole plane: the exterior of the centre
  // cell plus the four near-field neighbours.
  const double total = 8.0 * gl([&](double t) { return std::pow(0.5 / std::cos(t), -2.0 * s); }, 0.0, kPi / 4.0) /
                           (2.0 * s) +
                       4.0 * near;
  im.diagonal.assign(g.size(), scale * total);

  im.tails.resize(g.size());
  const double L = g.half_width();
  for (std::size_t k = 0; k < g.size(); ++k) {
    const int i1 = g.axis_index(k, 0), i2 = g.axis_index(k, 1);
    double t = im.c / (2.0 * s) * exterior_angular_integral(s, L, g.coordinate(i1), g.coordinate(i2));
    const int missing = (i1 == 0) + (i1 == M - 1) + (i2 == 0) + (i2 == M - 1);
    t += missing * scale * near;
    im.tails[k] = t;
  }
}

void build_periodic(DiscreteOperator::Impl& im) {
  const auto& g = im.spec.grid;
  const int M = g.points_per_axis();
  const double s = im.spec.s;
  const double k0 = kPi / g.half_width();
  auto freq = [M](int k) { return k <= M / 2 ? k : k - M; };
  double mean = 0.0;
  std::vector<int> dims;
  if (g.dimension() == 1) {
    dims = {M};
    for (int k = 0; k <= M / 2; ++k) im.multipliers.push_back(std::pow(k0 * k, 2.0 * s));
    for (int k = 0; k < M; ++k) mean += std::pow(k0 * std::abs(freq(k)), 2.0 * s);
    mean /= M;
  } else {
    dims = {M, M};
    for (int a = 0; a < M; ++a) {
      for (int b = 0; b <= M / 2; ++b) {
        const double k2 = double(freq(a)) * freq(a) + double(b) * b;
        im.multipliers.push_back(std::pow(k0 * k0 * k2, s));
      }
      for (int b = 0; b < M; ++b) {
        const double k2 = double(freq(a)) * freq(a) + double(freq(b)) * freq(b);
        mean += std::pow(k0 * k0 * k2, s);
      }
    }
    mean /= double(M) * M;
  }
  im.diagonal.assign(g.size(), mean);
  im.periodic.emplace(dims, im.multipliers);
}

void build_dirichlet_spectral(DiscreteOperator::Impl& im) {
  const auto& g = im.spec.grid;
  const int M = g.points_per_axis();
  const double s = im.spec.s;
  const double h = g.spacing();
  const auto m = static_cast<std::size_t>(M);
  std::vector<double> lam(m);
  for (int k = 0; k < M; ++k) {
    const double sn = std::sin((k + 1) * kPi / (2.0 * M));
    lam[static_cast<std::size_t>(k)] = 4.0 / (h * h) * sn * sn;
  }
  // Squared normalised eigenvector entries: P[k][i] = phi_k(i)^2.
  std::vector<double> P(m * m);
  for (int k = 0; k < M; ++k) {
    for (int i = 0; i < M; ++i) {
      const double v = std::sin(kPi * (k + 1) * (i + 0.5) / M);
      P[static_cast<std::size_t>(k) * m + static_cast<std::size_t>(i)] = v * v * (k + 1 == M ? 1.0 : 2.0) / M;
    }
  }
  std::vector<int> dims;
  if (g.dimension() == 1) {
    dims = {M};
    for (double l : lam) im.multipliers.push_back(std::pow(l, s));
    im.diagonal.assign(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      for (std::size_t i = 0; i < m; ++i) im.diagonal[i] += im.multipliers[k] * P[k * m + i];
    }
  } else {
    dims = {M, M};
    im.multipliers.resize(m * m);
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) im.multipliers[a * m + b] = std::pow(lam[a] + lam[b], s);
    }
    // diag(i1, i2) = sum_{a,b} P[a][i1] mult[a][b] P[b][i2]
    std::vector<double> tmp(m * m, 0.0);  // tmp[i1][b]
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t i1 = 0; i1 < m; ++i1) {
        const double pa = P[a * m + i1];
        for (std::size_t b = 0; b < m; ++b) tmp[i1 * m + b] += pa * im.multipliers[a * m + b];
      }
    }
    im.diagonal.assign(m * m, 0.0);
    for (std::size_t i1 = 0; i1 < m; ++i1) {
      for (std::size_t b = 0; b < m; ++b) {
        const double t = tmp[i1 * m + b];
        for (std::size_t i2 = 0; i2 < m; ++i2) im.diagonal[i1 * m + i2] += t * P[b * m + i2];
      }
    }
  }
  im.sine.emplace(dims, im.multipliers);
}

}  // namespace

DiscreteOperator DiscreteOperator::build(const OperatorSpec& spec) {
  spec.validate();
  auto im = std::make_shared<Impl>();
  im->spec = spec;
  im->c = normalization_constant(spec.grid.dimension(), spec.s);
  switch (spec.kind) {
    case OperatorKind::TruncatedQuadrature:
    case OperatorKind::DirichletRestricted:
      im->kernel = true;
      if (spec.grid.dimension() == 1) build_kernel_1d(*im);
      else build_kernel_2d(*im);
      im->conv = Convolver(spec.grid.dimension(), spec.grid.points_per_axis(), im->weights);
      break;
    case OperatorKind::PeriodicSpectral: build_periodic(*im); break;
    case OperatorKind::DirichletSpectral: build_dirichlet_spectral(*im); break;
  }
  return DiscreteOperator(std::move(im));
}

const OperatorSpec& DiscreteOperator::spec() const noexcept { return impl_->spec; }
double DiscreteOperator::normalization() const noexcept { return impl_->c; }
bool DiscreteOperator::is_kernel() const noexcept { return impl_->kernel; }
std::span<const double> DiscreteOperator::multipliers() const { return impl_->multipliers; }
std::span<const double> DiscreteOperator::weights() const { return impl_->weights; }
std::span<const double> DiscreteOperator::tails() const { return impl_->tails; }
std::span<const double> DiscreteOperator::tails_left() const { return impl_->tails_left; }
std::span<const double> DiscreteOperator::tails_right() const { return impl_->tails_right; }
std::span<const double> DiscreteOperator::diagonal() const { return impl_->diagonal; }

double DiscreteOperator::weight(std::size_t i, std::size_t j) const {
  require(impl_->kernel, ErrorKind::InvalidSpec, "weight() is defined for kernel operators only");
  require(i < grid().size() && j < grid().size(), ErrorKind::InvalidInput, "node index out of range");
  return i == j ? 0.0 : impl_->conv.entry(i, j);
}

void DiscreteOperator::apply(std::span<const double> in, std::span<double> out) const {
  require(in.size() == grid().size() && out.size() == grid().size(), ErrorKind::InvalidInput,
          "operator input/output size does not match grid");
  impl_->apply(in, out);
}

Field DiscreteOperator::apply(const Field& f) const {
  require(f.grid() == grid(), ErrorKind::InvalidInput, "field grid does not match operator grid");
  if (f.exterior() == Exterior::ConstantOutside) {
    require(kind() == OperatorKind::TruncatedQuadrature, ErrorKind::InvalidInput,
            "constant exterior is only meaningful for truncated-quadrature");
  }
  std::vector<double> out(f.size());
  impl_->apply(f.values(), out);
  if (f.exterior() == Exterior::ConstantOutside) {
    const double left = f[0], right = f[f.size() - 1];
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] -= impl_->tails_left[i] * left + impl_->tails_right[i] * right;
    }
  }
  return Field(grid(), std::move(out), Field::default_exterior(grid()));
}

std::vector<double> DiscreteOperator::dense_matrix() const {
  const std::size_t n = grid().size();
  std::vector<double> A(n * n), e(n, 0.0), col(n);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    impl_->apply(e, col);
    e[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) A[i * n + j] = col[i];
  }
  // Symmetrise away transform round-off.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = 0.5 * (A[i * n + j] + A[j * n + i]);
      A[i * n + j] = A[j * n + i] = v;
    }
  }
  return A;
}

namespace {

// Cell averages of c_{1,s} |y|^{2s-1} over the cells at offsets 0..M-1.
std::vector<double> green_table_1d(int M, double h, double s) {
  std::vector<double> table(static_cast<std::size_t>(M));
  const double scale = riesz_constant(1, s) * std::pow(h, 2.0 * s) / (2.0 * s);
  table[0] = scale * 2.0 * std::pow(0.5, 2.0 * s);
  for (int k = 1; k < M; ++k) {
    table[static_cast<std::size_t>(k)] = scale * (std::pow(k + 0.5, 2.0 * s) - std::pow(k - 0.5, 2.0 * s));
  }
  return table;
}

}  // namespace

Field riesz_potential(const Field& f, double s) {
  const auto& g = f.grid();
  const int N = g.dimension();
  require(std::isfinite(s) && s > 0.0 && s < 1.0, ErrorKind::InvalidParameter, "s must lie in (0,1)");
  require(N > 2.0 * s, ErrorKind::SubcriticalError, "the Riesz potential needs N > 2s");
  require(N <= 2, ErrorKind::UnsupportedDimension, "riesz_potential supports N <= 2");
  require(f.exterior() == Exterior::ZeroOutside, ErrorKind::InvalidInput, "riesz_potential needs a zero exterior");
  const int M = g.points_per_axis();
  const double h = g.spacing();
  const double c = riesz_constant(N, s);
  const auto m = static_cast<std::size_t>(M);
  std::vector<double> table;
  if (N == 1) {
    table = green_table_1d(M, h, s);
  } else {
    table.assign(m * m, 0.0);
    const double scale = c * std::pow(h, 2.0 * s);
    table[0] = scale * centre_cell_integral(s - 1.0);
    for (int p = 0; p < M; ++p) {
      for (int q = p; q < M; ++q) {
        if (p == 0 && q == 0) continue;
        const double w = scale * offset_cell_integral(s - 1.0, p, q);
        table[static_cast<std::size_t>(p) * m + static_cast<std::size_t>(q)] = w;
        table[static_cast<std::size_t>(q) * m + static_cast<std::size_t>(p)] = w;
      }
    }
  }
  Convolver conv(N, M, std::move(table));
  std::vector<double> out(f.size());
  conv.convolve(f.values(), out);
  return Field(g, std::move(out), Exterior::ZeroOutside);
}

Field green_potential_1d(const Field& f, double s) {
  const auto& g = f.grid();
  require(g.dimension() == 1, ErrorKind::UnsupportedDimension, "green_potential_1d is 1D only");
  require(std::isfinite(s) && s > 0.0 && s < 1.0 && s != 0.5, ErrorKind::InvalidParameter,
          "green_potential_1d needs s in (0,1), s != 1/2");
  require(f.exterior() == Exterior::ZeroOutside, ErrorKind::InvalidInput, "green_potential_1d needs a zero exterior");
  Convolver conv(1, g.points_per_axis(), green_table_1d(g.points_per_axis(), g.spacing(), s));
  std::vector<double> out(f.size());
  conv.convolve(f.values(), out);
  return Field(g, std::move(out), Exterior::ZeroOutside);
}

double one_d_kernel(double x, double s) {
  require(std::isfinite(s) && s > 0.5 && s < 1.0, ErrorKind::InvalidParameter, "one_d_kernel needs s in (1/2, 1)");
  return std::pow(std::abs(x), 2.0 * s - 1.0);
}

}  // namespace fracdiff

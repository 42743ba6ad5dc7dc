#include "fracdiff/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace fracdiff {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::InvalidSpec: return "invalid-spec";
    case ErrorKind::DomainError: return "domain-error";
    case ErrorKind::UnsupportedDimension: return "unsupported-dimension";
    case ErrorKind::SubcriticalError: return "subcritical-error";
    case ErrorKind::UnsupportedRegime: return "unsupported-regime";
    case ErrorKind::StepFailure: return "step-failure";
    case ErrorKind::Inconclusive: return "inconclusive";
    case ErrorKind::Config: return "config-error";
    case ErrorKind::Io: return "io-error";
  }
  return "error";
}

std::string to_string(Topology t) { return t == Topology::Periodic ? "periodic" : "truncated"; }

std::string to_string(Exterior e) {
  switch (e) {
    case Exterior::ZeroOutside: return "zero";
    case Exterior::PeriodicWrap: return "periodic";
    case Exterior::ConstantOutside: return "constant";
  }
  return "?";
}

UniformGrid::UniformGrid(int dimension, double half_width, int points_per_axis, Topology topology)
    : dimension_(dimension), half_width_(half_width), points_(points_per_axis), topology_(topology) {
  require(dimension >= 1, ErrorKind::InvalidParameter, "grid dimension must be >= 1");
  require(std::isfinite(half_width) && half_width > 0.0, ErrorKind::InvalidParameter,
          "grid half width must be positive");
  require(points_per_axis >= 8, ErrorKind::InvalidParameter, "grid needs at least 8 points per axis");
  std::size_t n = 1;
  for (int d = 0; d < dimension; ++d) {
    require(n <= std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(points_),
            ErrorKind::InvalidParameter, "grid too large");
    n *= static_cast<std::size_t>(points_);
  }
  size_ = n;
}

double UniformGrid::cell_volume() const noexcept { return std::pow(spacing(), dimension_); }

int UniformGrid::axis_index(std::size_t flat, int axis) const noexcept {
  std::size_t stride = 1;
  for (int d = dimension_ - 1; d > axis; --d) stride *= static_cast<std::size_t>(points_);
  return static_cast<int>((flat / stride) % static_cast<std::size_t>(points_));
}

std::vector<double> UniformGrid::node(std::size_t flat) const {
  std::vector<double> x(static_cast<std::size_t>(dimension_));
  for (int d = dimension_ - 1; d >= 0; --d) {
    x[static_cast<std::size_t>(d)] = coordinate(static_cast<int>(flat % static_cast<std::size_t>(points_)));
    flat /= static_cast<std::size_t>(points_);
  }
  return x;
}

double UniformGrid::radius_squared(std::size_t flat) const noexcept {
  double r2 = 0.0;
  for (int d = 0; d < dimension_; ++d) {
    const double x = coordinate(static_cast<int>(flat % static_cast<std::size_t>(points_)));
    r2 += x * x;
    flat /= static_cast<std::size_t>(points_);
  }
  return r2;
}

std::string UniformGrid::checksum() const {
  // FNV-1a over the defining parameters.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t word) {
    for (int b = 0; b < 8; ++b) {
      h ^= (word >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  mix(static_cast<std::uint64_t>(dimension_));
  mix(std::bit_cast<std::uint64_t>(half_width_));
  mix(static_cast<std::uint64_t>(points_));
  mix(topology_ == Topology::Periodic ? 1u : 0u);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Field::Field(UniformGrid grid, std::vector<double> values, Exterior exterior, double floor)
    : grid_(grid), values_(std::move(values)), exterior_(exterior), floor_(floor) {
  require(values_.size() == grid_.size(), ErrorKind::InvalidInput, "field size does not match grid");
  require((exterior_ == Exterior::PeriodicWrap) == (grid_.topology() == Topology::Periodic),
          ErrorKind::InvalidInput, "exterior convention inconsistent with grid topology");
  require(exterior_ != Exterior::ConstantOutside || grid_.dimension() == 1,
          ErrorKind::UnsupportedDimension, "constant exterior is only defined in 1D");
  require(std::isfinite(floor_) && floor_ >= 0.0, ErrorKind::InvalidInput, "field floor must be >= 0");
  require(all_finite(), ErrorKind::InvalidInput, "field values must be finite");
}

Field Field::constant(const UniformGrid& grid, double value) {
  return Field(grid, std::vector<double>(grid.size(), value), default_exterior(grid));
}

double Field::min() const { return *std::min_element(values_.begin(), values_.end()); }
double Field::max() const { return *std::max_element(values_.begin(), values_.end()); }

bool Field::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

void require_same_grid(const Field& a, const Field& b) {
  require(a.grid() == b.grid(), ErrorKind::InvalidInput, "fields live on different grids");
}

double pairwise_sum(std::span<const double> xs) noexcept {
  if (xs.size() <= 16) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

double lp_norm(const Field& f, double p) {
  require(p >= 1.0, ErrorKind::InvalidParameter, "lp_norm requires p >= 1");
  const auto v = f.values();
  if (std::isinf(p)) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  std::vector<double> terms(v.size());
  if (p == 1.0) {
    std::transform(v.begin(), v.end(), terms.begin(), [](double x) { return std::abs(x); });
    return pairwise_sum(terms) * f.grid().cell_volume();
  }
  if (p == 2.0) {
    std::transform(v.begin(), v.end(), terms.begin(), [](double x) { return x * x; });
    return std::sqrt(pairwise_sum(terms) * f.grid().cell_volume());
  }
  std::transform(v.begin(), v.end(), terms.begin(), [p](double x) { return std::pow(std::abs(x), p); });
  return std::pow(pairwise_sum(terms) * f.grid().cell_volume(), 1.0 / p);
}

double integral(const Field& f) { return pairwise_sum(f.values()) * f.grid().cell_volume(); }

double ball_mass(const Field& f, const BallSpec& ball) {
  const auto& g = f.grid();
  require(static_cast<int>(ball.center.size()) == g.dimension(), ErrorKind::InvalidParameter,
          "ball centre has wrong dimension");
  require(ball.radius > 0.0, ErrorKind::InvalidParameter, "ball radius must be positive");
  for (double c : ball.center) {
    require(c - ball.radius >= -g.half_width() && c + ball.radius <= g.half_width(),
            ErrorKind::InvalidParameter, "ball does not fit inside the grid box");
  }
  std::vector<double> terms;
  terms.reserve(f.size());
  const double r2 = ball.radius * ball.radius;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const auto x = g.node(k);
    double d2 = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) d2 += (x[a] - ball.center[a]) * (x[a] - ball.center[a]);
    if (d2 <= r2) terms.push_back(std::abs(f[k]));
  }
  return pairwise_sum(terms) * g.cell_volume();
}

namespace {

// Node indices ordered by |x|, positive side first when |x| ties.
std::vector<std::size_t> centre_out_order(const UniformGrid& g) {
  std::vector<std::size_t> order(g.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&g](std::size_t a, std::size_t b) {
    const double xa = g.coordinate(static_cast<int>(a));
    const double xb = g.coordinate(static_cast<int>(b));
    const double ra = std::abs(xa), rb = std::abs(xb);
    if (ra != rb) return ra < rb;
    return xa > xb;
  });
  return order;
}

}  // namespace

Field decreasing_rearrangement(const Field& f) {
  require(f.grid().dimension() == 1, ErrorKind::UnsupportedDimension,
          "rearrangement is implemented for 1D grids only");
  for (double x : f.values()) require(x >= 0.0, ErrorKind::InvalidInput, "rearrangement needs f >= 0");
  std::vector<double> sorted(f.values().begin(), f.values().end());
  std::stable_sort(sorted.begin(), sorted.end(), std::greater<>());
  const auto order = centre_out_order(f.grid());
  std::vector<double> out(f.size());
  for (std::size_t r = 0; r < order.size(); ++r) out[order[r]] = sorted[r];
  return f.with_values(std::move(out));
}

std::string to_string(Concentration c) {
  switch (c) {
    case Concentration::Equal: return "equal";
    case Concentration::Less: return "less";
    case Concentration::Greater: return "greater";
    case Concentration::Incomparable: return "incomparable";
  }
  return "?";
}

namespace {

std::vector<double> cumulative_ball_masses(const Field& rearranged) {
  const auto& g = rearranged.grid();
  const double h = g.spacing();
  const auto order = centre_out_order(g);
  std::vector<double> out;
  std::size_t next = 0;
  double acc = 0.0;
  for (int k = 0; k < g.points_per_axis(); ++k) {
    const double r = (k + 0.5) * h;
    while (next < order.size() && std::abs(g.coordinate(static_cast<int>(order[next]))) <= r) {
      acc += rearranged[order[next]] * h;
      ++next;
    }
    out.push_back(acc);
  }
  return out;
}

}  // namespace

Concentration concentration_compare(const Field& u, const Field& v) {
  require_same_grid(u, v);
  const auto cu = cumulative_ball_masses(decreasing_rearrangement(u));
  const auto cv = cumulative_ball_masses(decreasing_rearrangement(v));
  const double tol = 1e-12 * std::max(cu.back(), cv.back());
  bool le = true, ge = true;
  for (std::size_t k = 0; k < cu.size(); ++k) {
    if (cu[k] > cv[k] + tol) le = false;
    if (cu[k] < cv[k] - tol) ge = false;
  }
  if (le && ge) return Concentration::Equal;
  if (le) return Concentration::Less;
  if (ge) return Concentration::Greater;
  return Concentration::Incomparable;
}

void write_csv(std::ostream& out, const Field& f) {
  const auto& g = f.grid();
  for (int d = 0; d < g.dimension(); ++d) out << 'x' << d << ',';
  out << "value\n";
  char buf[32];
  for (std::size_t k = 0; k < f.size(); ++k) {
    for (double x : g.node(k)) {
      std::snprintf(buf, sizeof buf, "%.17g,", x);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g\n", f[k]);
    out << buf;
  }
}

void write_csv(const std::string& path, const Field& f) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot open " + path);
  write_csv(out, f);
  require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + path);
}

Field read_csv(std::istream& in, const UniformGrid& grid) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::InvalidInput, "empty field CSV");
  std::vector<double> values;
  values.reserve(grid.size());
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    require(row < grid.size(), ErrorKind::InvalidInput, "field CSV has too many rows");
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> cols;
    while (std::getline(ss, cell, ',')) cols.push_back(std::stod(cell));
    require(static_cast<int>(cols.size()) == grid.dimension() + 1, ErrorKind::InvalidInput,
            "field CSV row has wrong column count");
    const auto x = grid.node(row);
    for (std::size_t d = 0; d < x.size(); ++d) {
      require(std::abs(cols[d] - x[d]) <= 1e-12 * (1.0 + std::abs(x[d])), ErrorKind::InvalidInput,
              "field CSV coordinates do not match the grid");
    }
    values.push_back(cols.back());
    ++row;
  }
  require(row == grid.size(), ErrorKind::InvalidInput, "field CSV has too few rows");
  return Field(grid, std::move(values), Field::default_exterior(grid));
}

std::optional<double> outer_power_slope(const Field& f) {
  const auto& g = f.grid();
  require(g.dimension() == 1, ErrorKind::UnsupportedDimension, "power slope fit is 1D only");
  const double cut = 2.0 * g.half_width() / 3.0;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double x = std::abs(g.coordinate(static_cast<int>(i)));
    if (x < cut || !(f[i] > 0.0)) continue;
    const double lx = std::log(x), ly = std::log(f[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++count;
  }
  if (count < 3) return std::nullopt;
  const double den = count * sxx - sx * sx;
  if (!(den > 0.0)) return std::nullopt;
  return (count * sxy - sx * sy) / den;
}

}  // namespace fracdiff

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fracdiff/error.hpp"

namespace fracdiff {

enum class Topology { Truncated, Periodic };

/// Exterior convention of a sampled field: what the field is taken to be
/// outside the box [-L, L]^N.
///   ZeroOutside     - identically zero (decaying unknowns, Dirichlet data).
///   PeriodicWrap    - periodic continuation (Periodic grids only).
///   ConstantOutside - continued by the nearest edge value; 1D only, used to
///                     evaluate the operator on data that does not decay.
enum class Exterior { ZeroOutside, PeriodicWrap, ConstantOutside };

std::string to_string(Topology t);
std::string to_string(Exterior e);

/// Uniform cell-centred grid on [-L, L]^N with M points per axis.
/// Node i sits at -L + (i + 1/2) h with h = 2L / M; multi-indices are
/// flattened lexicographically (axis 0 varies slowest).
class UniformGrid {
 public:
  UniformGrid(int dimension, double half_width, int points_per_axis,
              Topology topology = Topology::Truncated);

  int dimension() const noexcept { return dimension_; }
  double half_width() const noexcept { return half_width_; }
  int points_per_axis() const noexcept { return points_; }
  Topology topology() const noexcept { return topology_; }

  double spacing() const noexcept { return 2.0 * half_width_ / points_; }
  /// Volume of one cell, h^N.
  double cell_volume() const noexcept;
  /// Total node count M^N.
  std::size_t size() const noexcept { return size_; }

  /// Coordinate of index i along any axis.
  double coordinate(int i) const noexcept { return -half_width_ + (i + 0.5) * spacing(); }
  /// Axis index of flat node `flat` along `axis`.
  int axis_index(std::size_t flat, int axis) const noexcept;
  /// Coordinates of a flat node (size = dimension()).
  std::vector<double> node(std::size_t flat) const;
  /// Squared Euclidean norm of the node position.
  double radius_squared(std::size_t flat) const noexcept;

  /// Same grid with a different topology.
  UniformGrid with_topology(Topology t) const { return {dimension_, half_width_, points_, t}; }

  /// Stable hex digest of (N, L, M, topology); recorded in run manifests.
  std::string checksum() const;

  friend bool operator==(const UniformGrid& a, const UniformGrid& b) noexcept {
    return a.dimension_ == b.dimension_ && a.half_width_ == b.half_width_ &&
           a.points_ == b.points_ && a.topology_ == b.topology_;
  }

 private:
  int dimension_;
  double half_width_;
  int points_;
  Topology topology_;
  std::size_t size_;
};

/// Grid-sampled function. `floor` records the additive constant when the
/// field is the shifted variable v of a regularised state u = v + floor.
class Field {
 public:
  Field(UniformGrid grid, std::vector<double> values,
        Exterior exterior = Exterior::ZeroOutside, double floor = 0.0);
  /// Constant field with the exterior convention implied by the topology.
  static Field constant(const UniformGrid& grid, double value);
  template <class Fn>
  static Field sample(const UniformGrid& grid, Fn&& fn) {
    std::vector<double> values(grid.size());
    for (std::size_t k = 0; k < values.size(); ++k) values[k] = fn(grid.node(k));
    return Field(grid, std::move(values), default_exterior(grid));
  }
  static Exterior default_exterior(const UniformGrid& grid) noexcept {
    return grid.topology() == Topology::Periodic ? Exterior::PeriodicWrap : Exterior::ZeroOutside;
  }

  const UniformGrid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  std::vector<double>& data() noexcept { return values_; }
  const std::vector<double>& data() const noexcept { return values_; }
  Exterior exterior() const noexcept { return exterior_; }
  double floor() const noexcept { return floor_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t k) const noexcept { return values_[k]; }
  double& operator[](std::size_t k) noexcept { return values_[k]; }

  Field with_values(std::vector<double> values) const {
    return Field(grid_, std::move(values), exterior_, floor_);
  }
  Field with_floor(double floor) const { return Field(grid_, values_, exterior_, floor); }
  Field with_exterior(Exterior e) const { return Field(grid_, values_, e, floor_); }

  double min() const;
  double max() const;
  bool all_finite() const noexcept;

 private:
  UniformGrid grid_;
  std::vector<double> values_;
  Exterior exterior_;
  double floor_;
};

struct BallSpec {
  std::vector<double> center;
  double radius = 1.0;
};

void require_same_grid(const Field& a, const Field& b);

/// Midpoint-rule L^p norm; p = infinity gives the max of |values|.
double lp_norm(const Field& f, double p);
/// Midpoint-rule integral of the values (signed).
double integral(const Field& f);
/// Midpoint-rule integral of |f| over nodes whose centres lie in the ball.
double ball_mass(const Field& f, const BallSpec& ball);

/// Symmetric decreasing rearrangement on a 1D grid. Nodes are filled in
/// order of increasing |x| (positive side first on ties of |x|) with the
/// values sorted in decreasing order.
Field decreasing_rearrangement(const Field& f);

enum class Concentration { Equal, Less, Greater, Incomparable };
std::string to_string(Concentration c);

/// Concentration order of u and v (u ≺ v is `Less`) from cumulative masses
/// of the rearrangements at radii (k + 1/2) h.
Concentration concentration_compare(const Field& u, const Field& v);

/// CSV with header `x0[,x1,...],value`, lexicographic rows, 17 significant digits.
void write_csv(std::ostream& out, const Field& f);
void write_csv(const std::string& path, const Field& f);
/// Reads values back onto `grid`; coordinates must match the grid nodes.
Field read_csv(std::istream& in, const UniformGrid& grid);

/// Pairwise (tree) summation; result independent of how callers split work.
double pairwise_sum(std::span<const double> xs) noexcept;

/// Least-squares slope of log f against log |x| over the nodes of the outer
/// third of a 1D grid (|x| >= 2L/3) where f > 0; empty with fewer than 3 such
/// nodes.
std::optional<double> outer_power_slope(const Field& f);

}  // namespace fracdiff

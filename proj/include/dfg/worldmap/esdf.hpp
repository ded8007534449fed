#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace dfg::worldmap {

/// Cell (i, j) has its centre at origin + resolution * (i, j); i runs along
/// +x, j along +y.
struct GridGeometry {
  int width = 0;
  int height = 0;
  double resolution = 1.0;
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();

  Eigen::Vector2d cell_center(int i, int j) const {
    return origin + resolution * Eigen::Vector2d(i, j);
  }
  bool in_bounds(int i, int j) const { return i >= 0 && j >= 0 && i < width && j < height; }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(i);
  }
};

class OccupancyGrid {
 public:
  /// All cells free. Throws std::invalid_argument for non-positive size or
  /// resolution.
  explicit OccupancyGrid(GridGeometry geometry);

  const GridGeometry& geometry() const { return geometry_; }
  int width() const { return geometry_.width; }
  int height() const { return geometry_.height; }
  double resolution() const { return geometry_.resolution; }

  bool occupied(int i, int j) const { return cells_[geometry_.index(i, j)] != 0; }
  void set_occupied(int i, int j, bool occ = true) {
    cells_.at(geometry_.index(i, j)) = occ ? 1 : 0;
  }
  std::size_t occupied_count() const;

  /// Marks every cell whose centre lies within `radius` of `center`.
  void fill_disk(const Eigen::Vector2d& center, double radius);
  /// Marks every cell whose centre lies in the axis-aligned box.
  void fill_box(const Eigen::Vector2d& lo, const Eigen::Vector2d& hi);

  /// True when a disc intersects any occupied cell, each cell being the
  /// square of side `resolution` around its centre.
  bool disc_hits_occupied(const Eigen::Vector2d& center, double radius) const;

 private:
  GridGeometry geometry_;
  std::vector<std::uint8_t> cells_;
};

class GridParseError : public std::runtime_error {
 public:
  GridParseError(const std::string& what, int line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Text format: a header line "width height resolution origin_x origin_y",
/// then `height` rows of `width` characters, '#' occupied and '.' free. The
/// first row is the top of the map (largest y).
OccupancyGrid parse_grid(std::istream& in);
OccupancyGrid load_grid(const std::filesystem::path& path);
void write_grid(std::ostream& out, const OccupancyGrid& grid);

/// Distance assigned to every cell of a grid with no occupied cell.
inline constexpr double kNoObstacleDistance = 1e9;

/// Euclidean distance field over a grid: distance in metres from each cell
/// centre to the nearest occupied cell centre (0 on occupied cells).
class EsdfGrid {
 public:
  EsdfGrid(GridGeometry geometry, std::vector<double> distances);

  const GridGeometry& geometry() const { return geometry_; }
  double at(int i, int j) const { return distances_[geometry_.index(i, j)]; }

  /// Bilinear interpolation between the four surrounding cell centres.
  /// Returns 0 outside the hull of cell centres.
  double query(const Eigen::Vector2d& p) const;

  /// Gradient of the bilinear surface used by query (1/m scaling of a
  /// unitless direction). Zero outside the grid.
  Eigen::Vector2d gradient(const Eigen::Vector2d& p) const;

  /// query() and gradient() in one pass.
  double query(const Eigen::Vector2d& p, Eigen::Vector2d* gradient) const;

 private:
  GridGeometry geometry_;
  std::vector<double> distances_;
};

/// Exact distance transform (two separable passes of the lower envelope of
/// parabolas). Throws std::invalid_argument for an empty grid.
EsdfGrid compute_esdf(const OccupancyGrid& grid);

}  // namespace dfg::worldmap

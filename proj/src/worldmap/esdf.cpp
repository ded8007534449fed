#include "dfg/worldmap/esdf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace dfg::worldmap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Squared distance transform of one line: d[q] = min_p (q - p)^2 + f[p].
// Sites with infinite f are skipped; if all are infinite the output is too.
void distance_transform_1d(const std::vector<double>& f, std::vector<double>& d) {
  const int n = static_cast<int>(f.size());
  std::vector<int> v(static_cast<std::size_t>(n));
  std::vector<double> z(static_cast<std::size_t>(n) + 1);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    const double fq = f[static_cast<std::size_t>(q)];
    if (fq == kInf) continue;
    double s = -kInf;
    while (k >= 0) {
      const int p = v[static_cast<std::size_t>(k)];
      s = ((fq + q * q) - (f[static_cast<std::size_t>(p)] + p * p)) / (2.0 * (q - p));
      if (s > z[static_cast<std::size_t>(k)]) break;
      --k;
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = (k == 0) ? -kInf : s;
    z[static_cast<std::size_t>(k) + 1] = kInf;
  }
  d.assign(static_cast<std::size_t>(n), kInf);
  if (k < 0) return;
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<std::size_t>(j) + 1] < q) ++j;
    const int p = v[static_cast<std::size_t>(j)];
    d[static_cast<std::size_t>(q)] =
        static_cast<double>((q - p) * (q - p)) + f[static_cast<std::size_t>(p)];
  }
}

}  // namespace

OccupancyGrid::OccupancyGrid(GridGeometry geometry) : geometry_(std::move(geometry)) {
  if (geometry_.width <= 0 || geometry_.height <= 0) {
    throw std::invalid_argument("grid must have at least one cell");
  }
  if (!(geometry_.resolution > 0.0)) {
    throw std::invalid_argument("grid resolution must be positive");
  }
  cells_.assign(static_cast<std::size_t>(geometry_.width) *
                    static_cast<std::size_t>(geometry_.height),
                0);
}

std::size_t OccupancyGrid::occupied_count() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), 1));
}

void OccupancyGrid::fill_disk(const Eigen::Vector2d& center, double radius) {
  for (int j = 0; j < height(); ++j) {
    for (int i = 0; i < width(); ++i) {
      if ((geometry_.cell_center(i, j) - center).norm() <= radius) set_occupied(i, j);
    }
  }
}

void OccupancyGrid::fill_box(const Eigen::Vector2d& lo, const Eigen::Vector2d& hi) {
  for (int j = 0; j < height(); ++j) {
    for (int i = 0; i < width(); ++i) {
      const Eigen::Vector2d c = geometry_.cell_center(i, j);
      if ((c.array() >= lo.array()).all() && (c.array() <= hi.array()).all()) {
        set_occupied(i, j);
      }
    }
  }
}

bool OccupancyGrid::disc_hits_occupied(const Eigen::Vector2d& center, double radius) const {
  const double res = resolution();
  const double half = 0.5 * res;
  const Eigen::Vector2d rel = (center - geometry_.origin) / res;
  const int reach = static_cast<int>(std::ceil(radius / res)) + 1;
  const int ci = static_cast<int>(std::lround(rel.x()));
  const int cj = static_cast<int>(std::lround(rel.y()));
  for (int j = std::max(0, cj - reach); j <= std::min(height() - 1, cj + reach); ++j) {
    for (int i = std::max(0, ci - reach); i <= std::min(width() - 1, ci + reach); ++i) {
      if (!occupied(i, j)) continue;
      const Eigen::Vector2d c = geometry_.cell_center(i, j);
      const double dx = std::max(0.0, std::abs(center.x() - c.x()) - half);
      const double dy = std::max(0.0, std::abs(center.y() - c.y()) - half);
      if (dx * dx + dy * dy < radius * radius) return true;
    }
  }
  return false;
}

OccupancyGrid parse_grid(std::istream& in) {
  std::string line;
  int line_no = 0;
  GridGeometry g;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) break;
  }
  std::istringstream header(line);
  if (!(header >> g.width >> g.height >> g.resolution >> g.origin.x() >> g.origin.y())) {
    throw GridParseError("expected 'width height resolution origin_x origin_y'", line_no);
  }
  if (g.width <= 0 || g.height <= 0 || !(g.resolution > 0.0)) {
    throw GridParseError("grid size and resolution must be positive", line_no);
  }
  OccupancyGrid grid(g);
  for (int row = 0; row < g.height; ++row) {
    if (!std::getline(in, line)) {
      throw GridParseError("expected " + std::to_string(g.height) + " rows", line_no + 1);
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (static_cast<int>(line.size()) != g.width) {
      throw GridParseError("row has " + std::to_string(line.size()) + " cells, expected " +
                               std::to_string(g.width),
                           line_no);
    }
    const int j = g.height - 1 - row;
    for (int i = 0; i < g.width; ++i) {
      const char c = line[static_cast<std::size_t>(i)];
      if (c == '#') {
        grid.set_occupied(i, j);
      } else if (c != '.') {
        throw GridParseError(std::string("unexpected character '") + c + "'", line_no);
      }
    }
  }
  return grid;
}

OccupancyGrid load_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open grid file " + path.string());
  return parse_grid(in);
}

void write_grid(std::ostream& out, const OccupancyGrid& grid) {
  const auto& g = grid.geometry();
  out << g.width << ' ' << g.height << ' ' << g.resolution << ' ' << g.origin.x() << ' '
      << g.origin.y() << '\n';
  for (int j = g.height - 1; j >= 0; --j) {
    for (int i = 0; i < g.width; ++i) out << (grid.occupied(i, j) ? '#' : '.');
    out << '\n';
  }
}

EsdfGrid::EsdfGrid(GridGeometry geometry, std::vector<double> distances)
    : geometry_(std::move(geometry)), distances_(std::move(distances)) {
  if (distances_.size() != static_cast<std::size_t>(geometry_.width) *
                               static_cast<std::size_t>(geometry_.height)) {
    throw std::invalid_argument("distance array does not match grid size");
  }
}

double EsdfGrid::query(const Eigen::Vector2d& p) const { return query(p, nullptr); }

Eigen::Vector2d EsdfGrid::gradient(const Eigen::Vector2d& p) const {
  Eigen::Vector2d g;
  query(p, &g);
  return g;
}

double EsdfGrid::query(const Eigen::Vector2d& p, Eigen::Vector2d* gradient) const {
  if (gradient != nullptr) gradient->setZero();
  const double res = geometry_.resolution;
  const double u = (p.x() - geometry_.origin.x()) / res;
  const double v = (p.y() - geometry_.origin.y()) / res;
  if (!(u >= 0.0 && v >= 0.0 && u <= geometry_.width - 1 && v <= geometry_.height - 1)) {
    return 0.0;
  }
  const int i0 = std::min(static_cast<int>(std::floor(u)), std::max(geometry_.width - 2, 0));
  const int j0 = std::min(static_cast<int>(std::floor(v)), std::max(geometry_.height - 2, 0));
  const int i1 = std::min(i0 + 1, geometry_.width - 1);
  const int j1 = std::min(j0 + 1, geometry_.height - 1);
  const double fu = u - i0;
  const double fv = v - j0;
  const double d00 = at(i0, j0);
  const double d10 = at(i1, j0);
  const double d01 = at(i0, j1);
  const double d11 = at(i1, j1);
  if (gradient != nullptr) {
    if (i1 != i0) gradient->x() = ((1.0 - fv) * (d10 - d00) + fv * (d11 - d01)) / res;
    if (j1 != j0) gradient->y() = ((1.0 - fu) * (d01 - d00) + fu * (d11 - d10)) / res;
  }
  return (1.0 - fu) * (1.0 - fv) * d00 + fu * (1.0 - fv) * d10 + (1.0 - fu) * fv * d01 +
         fu * fv * d11;
}

EsdfGrid compute_esdf(const OccupancyGrid& grid) {
  const auto& g = grid.geometry();
  const auto w = static_cast<std::size_t>(g.width);
  const auto h = static_cast<std::size_t>(g.height);
  std::vector<double> sq(w * h, kInf);
  for (int j = 0; j < g.height; ++j) {
    for (int i = 0; i < g.width; ++i) {
      if (grid.occupied(i, j)) sq[g.index(i, j)] = 0.0;
    }
  }
  std::vector<double> f, d;
  // Along x.
  f.resize(w);
  for (std::size_t j = 0; j < h; ++j) {
    for (std::size_t i = 0; i < w; ++i) f[i] = sq[j * w + i];
    distance_transform_1d(f, d);
    for (std::size_t i = 0; i < w; ++i) sq[j * w + i] = d[i];
  }
  // Along y.
  f.resize(h);
  for (std::size_t i = 0; i < w; ++i) {
    for (std::size_t j = 0; j < h; ++j) f[j] = sq[j * w + i];
    distance_transform_1d(f, d);
    for (std::size_t j = 0; j < h; ++j) sq[j * w + i] = d[j];
  }
  std::vector<double> dist(w * h);
  for (std::size_t n = 0; n < w * h; ++n) {
    dist[n] = (sq[n] == kInf) ? kNoObstacleDistance : std::sqrt(sq[n]) * g.resolution;
  }
  return EsdfGrid(g, std::move(dist));
}

}  // namespace dfg::worldmap

#include "stmg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace stmg {

void ChannelGeometry::validate() const {
  if (!(length > 0.0) || !(height > 0.0)) {
    throw Error("ChannelGeometry: length and height must be positive");
  }
  if (!cylinder) return;
  const auto& c = *cylinder;
  const double r = 0.5 * c.diameter;
  if (!(r > 0.0)) throw Error("ChannelGeometry: cylinder diameter must be positive");
  if (c.center[0] - r <= 0.0 || c.center[0] + r >= length || c.center[1] - r <= 0.0 ||
      c.center[1] + r >= height) {
    std::ostringstream msg;
    msg << "ChannelGeometry: cylinder at (" << c.center[0] << ", " << c.center[1]
        << ") with diameter " << c.diameter << " touches or crosses the channel walls";
    throw Error(msg.str());
  }
}

ChannelGeometry ChannelGeometry::dfg_2d() { return ChannelGeometry{}; }

ChannelGeometry ChannelGeometry::unit_square() {
  return ChannelGeometry{1.0, 1.0, std::nullopt};
}

namespace {

constexpr std::array<std::array<int, 2>, 4> kFaceVertices{{{0, 1}, {1, 2}, {3, 2}, {0, 3}}};

std::uint64_t spread_bits(std::uint64_t v) {
  v &= 0x1fffff;
  v = (v | v << 32) & 0x1f00000000ffffULL;
  v = (v | v << 16) & 0x1f0000ff0000ffULL;
  v = (v | v << 8) & 0x100f00f00f00f00fULL;
  v = (v | v << 4) & 0x10c30c30c30c30c3ULL;
  v = (v | v << 2) & 0x1249249249249249ULL;
  return v;
}

double signed_area(const std::array<Vec2, 4>& p) {
  double a = 0.0;
  for (int i = 0; i < 4; ++i) {
    const auto& u = p[i];
    const auto& w = p[(i + 1) % 4];
    a += u[0] * w[1] - w[0] * u[1];
  }
  return 0.5 * a;
}

// Merges coincident points produced by different blocks.
class VertexPool {
 public:
  explicit VertexPool(double tol) : tol_(tol) {}

  Index insert(Vec2 p) {
    const auto kx = static_cast<std::int64_t>(std::llround(p[0] / tol_));
    const auto ky = static_cast<std::int64_t>(std::llround(p[1] / tol_));
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = buckets_.find(key(kx + dx, ky + dy));
        if (it == buckets_.end()) continue;
        for (Index id : it->second) {
          if (std::hypot(points_[id][0] - p[0], points_[id][1] - p[1]) < tol_) return id;
        }
      }
    }
    const auto id = static_cast<Index>(points_.size());
    points_.push_back(p);
    buckets_[key(kx, ky)].push_back(id);
    return id;
  }

  std::vector<Vec2> release() { return std::move(points_); }

 private:
  static std::uint64_t key(std::int64_t x, std::int64_t y) {
    return static_cast<std::uint64_t>(x) * 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint64_t>(y);
  }

  double tol_;
  std::vector<Vec2> points_;
  std::unordered_map<std::uint64_t, std::vector<Index>> buckets_;
};

using BlockMap = std::function<Vec2(double, double)>;

void add_block(VertexPool& pool, std::vector<Cell>& cells, const BlockMap& map, int nx, int ny) {
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      std::array<Vec2, 4> p{map(double(i) / nx, double(j) / ny), map(double(i + 1) / nx, double(j) / ny),
                            map(double(i + 1) / nx, double(j + 1) / ny),
                            map(double(i) / nx, double(j + 1) / ny)};
      if (signed_area(p) < 0.0) std::swap(p[1], p[3]);
      Cell cell;
      for (int v = 0; v < 4; ++v) cell.vertices[v] = pool.insert(p[v]);
      cells.push_back(cell);
    }
  }
}

BlockMap bilinear_block(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  // a=(0,0), b=(1,0), c=(1,1), d=(0,1)
  return [=](double s, double t) -> Vec2 {
    return {(1 - s) * (1 - t) * a[0] + s * (1 - t) * b[0] + s * t * c[0] + (1 - s) * t * d[0],
            (1 - s) * (1 - t) * a[1] + s * (1 - t) * b[1] + s * t * c[1] + (1 - s) * t * d[1]};
  };
}

// Tags boundary faces (faces used by exactly one cell) from their location.
void tag_boundary(MeshLevel& level, const ChannelGeometry& geom) {
  std::map<std::pair<Index, Index>, int> use;
  for (const auto& cell : level.cells) {
    for (const auto& fv : kFaceVertices) {
      const Index a = cell.vertices[fv[0]];
      const Index b = cell.vertices[fv[1]];
      ++use[{std::min(a, b), std::max(a, b)}];
    }
  }
  const double tol = 1e-9 * std::max(geom.length, geom.height);
  for (auto& cell : level.cells) {
    for (int f = 0; f < 4; ++f) {
      const Index a = cell.vertices[kFaceVertices[f][0]];
      const Index b = cell.vertices[kFaceVertices[f][1]];
      if (use[{std::min(a, b), std::max(a, b)}] != 1) continue;
      const Vec2& pa = level.vertices[a];
      const Vec2& pb = level.vertices[b];
      const Vec2 m{0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])};
      if (std::abs(pa[0]) < tol && std::abs(pb[0]) < tol) {
        cell.faces[f] = BoundaryTag::kInflow;
      } else if (std::abs(pa[0] - geom.length) < tol && std::abs(pb[0] - geom.length) < tol) {
        cell.faces[f] = BoundaryTag::kOutflow;
      } else if ((std::abs(pa[1]) < tol && std::abs(pb[1]) < tol) ||
                 (std::abs(pa[1] - geom.height) < tol && std::abs(pb[1] - geom.height) < tol)) {
        cell.faces[f] = BoundaryTag::kWall;
      } else if (geom.cylinder) {
        const auto& c = *geom.cylinder;
        if (std::hypot(m[0] - c.center[0], m[1] - c.center[1]) > 0.5 * c.diameter + tol) {
          throw Error("tag_boundary: boundary face away from all known boundary parts");
        }
        cell.faces[f] = BoundaryTag::kWall;
        cell.obstacle[f] = true;
      } else {
        throw Error("tag_boundary: boundary face away from all known boundary parts");
      }
    }
  }
}

}  // namespace

HierarchicalMesh::HierarchicalMesh(MeshLevel coarse, ChannelGeometry geometry)
    : geometry_(std::move(geometry)) {
  Vec2 lo{1e300, 1e300};
  Vec2 hi{-1e300, -1e300};
  for (const auto& p : coarse.vertices) {
    lo = {std::min(lo[0], p[0]), std::min(lo[1], p[1])};
    hi = {std::max(hi[0], p[0]), std::max(hi[1], p[1])};
  }
  box_lo_ = lo;
  box_extent_ = std::max(hi[0] - lo[0], hi[1] - lo[1]);
  finish_level(coarse);
  levels_.push_back(std::move(coarse));
}

void HierarchicalMesh::finish_level(MeshLevel& level) const {
  // Morton renumbering of the cells
  const Index n = level.num_cells();
  std::vector<std::uint64_t> keys(n);
  for (Index c = 0; c < n; ++c) {
    const Vec2 m = cell_centroid(level, c);
    const double scale = double(1 << 21) - 1.0;
    const auto qx = static_cast<std::uint64_t>(
        std::clamp((m[0] - box_lo_[0]) / box_extent_, 0.0, 1.0) * scale);
    const auto qy = static_cast<std::uint64_t>(
        std::clamp((m[1] - box_lo_[1]) / box_extent_, 0.0, 1.0) * scale);
    keys[c] = spread_bits(qx) | (spread_bits(qy) << 1);
  }
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return keys[a] < keys[b]; });
  std::vector<Cell> sorted;
  sorted.reserve(n);
  for (Index c : order) sorted.push_back(level.cells[c]);
  level.cells = std::move(sorted);

  level.edges.clear();
  level.cell_edges.assign(n, {});
  std::map<std::pair<Index, Index>, Index> edge_ids;
  for (Index c = 0; c < n; ++c) {
    const auto& cell = level.cells[c];
    for (int f = 0; f < 4; ++f) {
      const Index a = cell.vertices[kFaceVertices[f][0]];
      const Index b = cell.vertices[kFaceVertices[f][1]];
      const std::pair<Index, Index> key{std::min(a, b), std::max(a, b)};
      auto [it, inserted] = edge_ids.try_emplace(key, level.num_edges());
      if (inserted) level.edges.push_back({key.first, key.second});
      level.cell_edges[c][f] = it->second;
    }
  }
}

void HierarchicalMesh::refine_uniform() {
  const MeshLevel& coarse = levels_.back();
  MeshLevel fine;
  const Index nv = coarse.num_vertices();
  const Index ne = coarse.num_edges();
  fine.vertices = coarse.vertices;
  fine.vertices.resize(nv + ne + coarse.num_cells());
  for (Index e = 0; e < ne; ++e) {
    const auto& a = coarse.vertices[coarse.edges[e][0]];
    const auto& b = coarse.vertices[coarse.edges[e][1]];
    fine.vertices[nv + e] = {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
  }
  for (Index c = 0; c < coarse.num_cells(); ++c) {
    fine.vertices[nv + ne + c] = map_to_physical(coarse, c, {0.5, 0.5});
  }

  fine.cells.reserve(4 * coarse.num_cells());
  for (Index c = 0; c < coarse.num_cells(); ++c) {
    const Cell& parent = coarse.cells[c];
    const auto& ce = coarse.cell_edges[c];
    // vertex at parent lattice point (a,b), a,b in {0,1,2}
    auto lattice = [&](int a, int b) -> Index {
      if (a == 1 && b == 1) return nv + ne + c;
      if (b == 0) return a == 0 ? parent.vertices[0] : a == 2 ? parent.vertices[1] : nv + ce[0];
      if (b == 2) return a == 0 ? parent.vertices[3] : a == 2 ? parent.vertices[2] : nv + ce[2];
      return a == 0 ? nv + ce[3] : nv + ce[1];
    };
    for (int q = 0; q < 4; ++q) {
      const int qx = q % 2;
      const int qy = q / 2;
      Cell child;
      child.vertices = {lattice(qx, qy), lattice(qx + 1, qy), lattice(qx + 1, qy + 1),
                        lattice(qx, qy + 1)};
      child.parent = c;
      child.quadrant = q;
      const std::array<bool, 4> on_parent_face{qy == 0, qx == 1, qy == 1, qx == 0};
      for (int f = 0; f < 4; ++f) {
        if (on_parent_face[f]) {
          child.faces[f] = parent.faces[f];
          child.obstacle[f] = parent.obstacle[f];
        }
      }
      fine.cells.push_back(child);
    }
  }
  finish_level(fine);
  MeshLevel& coarse_mut = levels_.back();
  for (Index f = 0; f < fine.num_cells(); ++f) {
    const Cell& cell = fine.cells[f];
    coarse_mut.cells[cell.parent].children[cell.quadrant] = f;
  }
  levels_.push_back(std::move(fine));
  partition(num_ranks_);
}

void HierarchicalMesh::partition(int num_ranks) {
  if (num_ranks < 1) throw Error("partition: num_ranks must be >= 1");
  num_ranks_ = num_ranks;
  for (auto& level : levels_) {
    const auto sizes = partition_sizes(level.num_cells(), num_ranks);
    Index c = 0;
    for (int p = 0; p < num_ranks; ++p) {
      for (Index i = 0; i < sizes[p]; ++i) level.cells[c++].owner = p;
    }
  }
}

std::vector<Index> partition_sizes(Index num_cells, int ranks) {
  if (ranks < 1) throw Error("partition_sizes: ranks must be >= 1");
  std::vector<Index> sizes(ranks, num_cells / ranks);
  for (Index p = 0; p < num_cells % ranks; ++p) ++sizes[p];
  return sizes;
}

HierarchicalMesh generate_rectangle_mesh(Vec2 lo, Vec2 hi, int nx, int ny) {
  if (nx < 1 || ny < 1) throw Error("generate_rectangle_mesh: nx, ny must be >= 1");
  ChannelGeometry geom{hi[0] - lo[0], hi[1] - lo[1], std::nullopt};
  geom.validate();
  VertexPool pool(1e-10 * std::max(geom.length, geom.height));
  std::vector<Cell> cells;
  add_block(pool, cells,
            bilinear_block({0.0, 0.0}, {geom.length, 0.0}, {geom.length, geom.height},
                           {0.0, geom.height}),
            nx, ny);
  MeshLevel level;
  level.vertices = pool.release();
  level.cells = std::move(cells);
  tag_boundary(level, geom);
  for (auto& p : level.vertices) p = {p[0] + lo[0], p[1] + lo[1]};
  return HierarchicalMesh(std::move(level), geom);
}

HierarchicalMesh generate_channel_mesh(const ChannelGeometry& geom, int n0) {
  geom.validate();
  if (n0 < 1) throw Error("generate_channel_mesh: n0 must be >= 1");
  if (!geom.cylinder) {
    const int ratio = std::max(1, static_cast<int>(std::lround(geom.length / geom.height)));
    return generate_rectangle_mesh({0.0, 0.0}, {geom.length, geom.height}, n0 * ratio, n0);
  }

  const auto& cyl = *geom.cylinder;
  const double cx = cyl.center[0];
  const double cy = cyl.center[1];
  const double radius = 0.5 * cyl.diameter;
  // half width of the square box that holds the O-grid ring
  const double b = 0.5 * std::min({cx, cy, geom.height - cy});
  if (b < 1.2 * radius || cx + b >= geom.length) {
    throw Error("generate_channel_mesh: cylinder too close to the channel walls for the O-grid");
  }

  VertexPool pool(1e-10 * std::max(geom.length, geom.height));
  std::vector<Cell> cells;
  const std::array<double, 4> xs{0.0, cx - b, cx, cx + b};
  const std::array<double, 5> ys{0.0, cy - b, cy, cy + b, geom.height};
  auto rect = [&](double x0, double x1, double y0, double y1) {
    add_block(pool, cells, bilinear_block({x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}), n0, n0);
  };
  // left column
  for (int j = 0; j < 4; ++j) rect(xs[0], xs[1], ys[j], ys[j + 1]);
  // below and above the ring box
  for (int i = 1; i < 3; ++i) {
    rect(xs[i], xs[i + 1], ys[0], ys[1]);
    rect(xs[i], xs[i + 1], ys[3], ys[4]);
  }
  // O-grid ring: s runs along the angle, t from the circle to the box
  const std::array<Vec2, 9> box_points{Vec2{cx + b, cy}, {cx + b, cy + b}, {cx, cy + b},
                                       {cx - b, cy + b}, {cx - b, cy},     {cx - b, cy - b},
                                       {cx, cy - b},     {cx + b, cy - b}, {cx + b, cy}};
  for (int k = 0; k < 8; ++k) {
    const Vec2 p0 = box_points[k];
    const Vec2 p1 = box_points[k + 1];
    add_block(pool, cells,
              [=](double s, double t) -> Vec2 {
                const double theta = (k + s) * std::numbers::pi / 4.0;
                const Vec2 inner{cx + radius * std::cos(theta), cy + radius * std::sin(theta)};
                const Vec2 outer{(1 - s) * p0[0] + s * p1[0], (1 - s) * p0[1] + s * p1[1]};
                if (t == 0.0) return inner;
                return {(1 - t) * inner[0] + t * outer[0], (1 - t) * inner[1] + t * outer[1]};
              },
              n0, n0);
  }
  // downstream columns
  const double x_right = cx + b;
  const int columns =
      std::max(1, static_cast<int>(std::lround((geom.length - x_right) / (2.0 * b))));
  for (int i = 0; i < columns; ++i) {
    const double x0 = x_right + (geom.length - x_right) * i / columns;
    const double x1 = i + 1 == columns ? geom.length
                                       : x_right + (geom.length - x_right) * (i + 1) / columns;
    for (int j = 0; j < 4; ++j) rect(x0, x1, ys[j], ys[j + 1]);
  }

  MeshLevel level;
  level.vertices = pool.release();
  level.cells = std::move(cells);
  tag_boundary(level, geom);
  return HierarchicalMesh(std::move(level), geom);
}

Vec2 map_to_physical(const MeshLevel& level, Index cell, Vec2 ref) {
  const auto& v = level.cells[cell].vertices;
  const Vec2& a = level.vertices[v[0]];
  const Vec2& b = level.vertices[v[1]];
  const Vec2& c = level.vertices[v[2]];
  const Vec2& d = level.vertices[v[3]];
  const double s = ref[0];
  const double t = ref[1];
  return {(1 - s) * (1 - t) * a[0] + s * (1 - t) * b[0] + s * t * c[0] + (1 - s) * t * d[0],
          (1 - s) * (1 - t) * a[1] + s * (1 - t) * b[1] + s * t * c[1] + (1 - s) * t * d[1]};
}

std::array<std::array<double, 2>, 2> map_jacobian(const MeshLevel& level, Index cell, Vec2 ref) {
  const auto& v = level.cells[cell].vertices;
  const Vec2& a = level.vertices[v[0]];
  const Vec2& b = level.vertices[v[1]];
  const Vec2& c = level.vertices[v[2]];
  const Vec2& d = level.vertices[v[3]];
  const double s = ref[0];
  const double t = ref[1];
  std::array<std::array<double, 2>, 2> jac{};
  for (int i = 0; i < 2; ++i) {
    jac[i][0] = (1 - t) * (b[i] - a[i]) + t * (c[i] - d[i]);
    jac[i][1] = (1 - s) * (d[i] - a[i]) + s * (c[i] - b[i]);
  }
  return jac;
}

double cell_area(const MeshLevel& level, Index cell) {
  const auto& v = level.cells[cell].vertices;
  return signed_area({level.vertices[v[0]], level.vertices[v[1]], level.vertices[v[2]],
                      level.vertices[v[3]]});
}

double cell_diameter(const MeshLevel& level, Index cell) {
  const auto& v = level.cells[cell].vertices;
  const auto dist = [&](int i, int j) {
    const Vec2& p = level.vertices[v[i]];
    const Vec2& q = level.vertices[v[j]];
    return std::hypot(p[0] - q[0], p[1] - q[1]);
  };
  return std::max(dist(0, 2), dist(1, 3));
}

Vec2 cell_centroid(const MeshLevel& level, Index cell) {
  const auto& v = level.cells[cell].vertices;
  Vec2 m{0.0, 0.0};
  for (Index id : v) {
    m[0] += 0.25 * level.vertices[id][0];
    m[1] += 0.25 * level.vertices[id][1];
  }
  return m;
}

Vec2 face_reference_point(int face, double s) {
  switch (face) {
    case 0: return {s, 0.0};
    case 1: return {1.0, s};
    case 2: return {s, 1.0};
    default: return {0.0, s};
  }
}

std::pair<Vec2, double> face_normal(const MeshLevel& level, Index cell, int face) {
  const auto& v = level.cells[cell].vertices;
  const Vec2& a = level.vertices[v[kFaceVertices[face][0]]];
  const Vec2& b = level.vertices[v[kFaceVertices[face][1]]];
  const double dx = b[0] - a[0];
  const double dy = b[1] - a[1];
  const double len = std::hypot(dx, dy);
  // faces 0 and 1 run counter-clockwise, faces 2 and 3 clockwise
  const double sign = (face == 0 || face == 1) ? 1.0 : -1.0;
  return {{sign * dy / len, -sign * dx / len}, len};
}

std::optional<PointLocation> locate_point(const MeshLevel& level, Vec2 point) {
  constexpr double kTol = 1e-10;
  for (Index c = 0; c < level.num_cells(); ++c) {
    const auto& v = level.cells[c].vertices;
    Vec2 lo{1e300, 1e300};
    Vec2 hi{-1e300, -1e300};
    for (Index id : v) {
      lo = {std::min(lo[0], level.vertices[id][0]), std::min(lo[1], level.vertices[id][1])};
      hi = {std::max(hi[0], level.vertices[id][0]), std::max(hi[1], level.vertices[id][1])};
    }
    const double pad = 1e-9 * std::max(hi[0] - lo[0], hi[1] - lo[1]);
    if (point[0] < lo[0] - pad || point[0] > hi[0] + pad || point[1] < lo[1] - pad ||
        point[1] > hi[1] + pad) {
      continue;
    }
    Vec2 ref{0.5, 0.5};
    for (int it = 0; it < 30; ++it) {
      const Vec2 x = map_to_physical(level, c, ref);
      const auto j = map_jacobian(level, c, ref);
      const double det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
      const double rx = point[0] - x[0];
      const double ry = point[1] - x[1];
      const double ds = (j[1][1] * rx - j[0][1] * ry) / det;
      const double dt = (-j[1][0] * rx + j[0][0] * ry) / det;
      ref = {ref[0] + ds, ref[1] + dt};
      if (std::abs(ds) + std::abs(dt) < 1e-15) break;
    }
    if (ref[0] >= -kTol && ref[0] <= 1 + kTol && ref[1] >= -kTol && ref[1] <= 1 + kTol) {
      return PointLocation{c, {std::clamp(ref[0], 0.0, 1.0), std::clamp(ref[1], 0.0, 1.0)}};
    }
  }
  return std::nullopt;
}

void write_vtk(std::ostream& out, const MeshLevel& level,
               const std::vector<std::pair<std::string, std::vector<double>>>& cell_data) {
  out << "# vtk DataFile Version 3.0\nstmg mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << level.num_vertices() << " double\n";
  out.precision(17);
  for (const auto& p : level.vertices) out << p[0] << ' ' << p[1] << " 0\n";
  out << "CELLS " << level.num_cells() << ' ' << 5 * level.num_cells() << '\n';
  for (const auto& cell : level.cells) {
    out << 4;
    for (Index v : cell.vertices) out << ' ' << v;
    out << '\n';
  }
  out << "CELL_TYPES " << level.num_cells() << '\n';
  for (Index c = 0; c < level.num_cells(); ++c) out << "9\n";
  out << "CELL_DATA " << level.num_cells() << '\n';
  out << "SCALARS owner int 1\nLOOKUP_TABLE default\n";
  for (const auto& cell : level.cells) out << cell.owner << '\n';
  for (const auto& [name, values] : cell_data) {
    if (static_cast<Index>(values.size()) != level.num_cells()) {
      throw Error("write_vtk: cell data '" + name + "' has wrong size");
    }
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : values) out << v << '\n';
  }
}

}  // namespace stmg

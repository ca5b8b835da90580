#pragma once

// Hierarchy of nested, uniformly refined quadrilateral meshes of a channel
// with an optional circular obstacle.
//
// Cells are straight-sided quadrilaterals with counter-clockwise vertex order
// v0=(0,0), v1=(1,0), v2=(1,1), v3=(0,1) in reference coordinates; the cell
// map is the bilinear interpolant of the vertices. Local face f is
//   f=0: eta=0 (v0->v1), f=1: xi=1 (v1->v2), f=2: eta=1 (v3->v2), f=3: xi=0 (v0->v3).
// A child in quadrant q = qx + 2*qy has the map F_parent(((qx + xi)/2, (qy + eta)/2)).
//
// Level 0 is the coarsest level. Cells on every level are numbered in Morton
// order of their centroids.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stmg/types.hpp"

namespace stmg {

enum class BoundaryTag : std::uint8_t { kNone = 0, kInflow = 1, kWall = 2, kOutflow = 3 };

struct Cylinder {
  Vec2 center{0.2, 0.2};
  double diameter = 0.1;
};

struct ChannelGeometry {
  double length = 2.2;
  double height = 0.41;
  std::optional<Cylinder> cylinder = Cylinder{};

  /// Throws Error if the cylinder does not lie strictly inside the channel.
  void validate() const;

  static ChannelGeometry dfg_2d();
  static ChannelGeometry unit_square();
};

struct Cell {
  std::array<Index, 4> vertices{};
  std::array<BoundaryTag, 4> faces{};
  // true for boundary faces that discretise the obstacle
  std::array<bool, 4> obstacle{};
  Index parent = -1;
  int quadrant = -1;
  std::array<Index, 4> children{-1, -1, -1, -1};
  int owner = 0;

  [[nodiscard]] bool refined() const { return children[0] >= 0; }
};

struct MeshLevel {
  std::vector<Vec2> vertices;
  std::vector<Cell> cells;
  // unique edges as (lower vertex id, higher vertex id)
  std::vector<std::array<Index, 2>> edges;
  // per cell, the edge id of each local face
  std::vector<std::array<Index, 4>> cell_edges;

  [[nodiscard]] Index num_cells() const { return static_cast<Index>(cells.size()); }
  [[nodiscard]] Index num_vertices() const { return static_cast<Index>(vertices.size()); }
  [[nodiscard]] Index num_edges() const { return static_cast<Index>(edges.size()); }
};

class HierarchicalMesh {
 public:
  HierarchicalMesh() = default;
  HierarchicalMesh(MeshLevel coarse, ChannelGeometry geometry);

  [[nodiscard]] int num_levels() const { return static_cast<int>(levels_.size()); }
  [[nodiscard]] const MeshLevel& level(int g) const { return levels_.at(g); }
  [[nodiscard]] MeshLevel& level(int g) { return levels_.at(g); }
  [[nodiscard]] const MeshLevel& finest() const { return levels_.back(); }
  [[nodiscard]] const ChannelGeometry& geometry() const { return geometry_; }
  [[nodiscard]] int num_ranks() const { return num_ranks_; }

  void refine_uniform();
  void partition(int num_ranks);

 private:
  void finish_level(MeshLevel& level) const;

  std::vector<MeshLevel> levels_;
  ChannelGeometry geometry_;
  Vec2 box_lo_{0.0, 0.0};
  double box_extent_ = 1.0;
  int num_ranks_ = 1;
};

/// Coarse all-quad mesh of the channel. Without a cylinder the channel is a
/// structured (n0 * round(L/H)) x n0 grid; with a cylinder an O-grid ring of
/// 8*n0 cells surrounds it inside a structured block layout. Cylinder polygon
/// vertices lie on the circle.
HierarchicalMesh generate_channel_mesh(const ChannelGeometry& geometry, int n0);

/// Structured nx x ny rectangle mesh; left=inflow, right=outflow, others=wall.
HierarchicalMesh generate_rectangle_mesh(Vec2 lo, Vec2 hi, int nx, int ny);

/// Contiguous block sizes when splitting n cells into `ranks` parts.
std::vector<Index> partition_sizes(Index num_cells, int ranks);

// Geometry of the bilinear cell map.
Vec2 map_to_physical(const MeshLevel& level, Index cell, Vec2 ref);
/// Jacobian dF/dxi as {{dx/dxi, dx/deta}, {dy/dxi, dy/deta}}.
std::array<std::array<double, 2>, 2> map_jacobian(const MeshLevel& level, Index cell, Vec2 ref);
double cell_area(const MeshLevel& level, Index cell);
double cell_diameter(const MeshLevel& level, Index cell);
Vec2 cell_centroid(const MeshLevel& level, Index cell);

/// Reference coordinates of the point on face f at face parameter s in [0,1].
Vec2 face_reference_point(int face, double s);
/// Outward unit normal and length of local face f.
std::pair<Vec2, double> face_normal(const MeshLevel& level, Index cell, int face);

struct PointLocation {
  Index cell = -1;
  Vec2 ref{};
};

/// Finds a cell containing `point` (brute force with Newton inversion of the
/// bilinear map).
std::optional<PointLocation> locate_point(const MeshLevel& level, Vec2 point);

/// Legacy VTK ASCII unstructured grid of one level; optional per-cell data.
void write_vtk(std::ostream& out, const MeshLevel& level,
               const std::vector<std::pair<std::string, std::vector<double>>>& cell_data = {});

}  // namespace stmg

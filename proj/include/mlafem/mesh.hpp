#ifndef MLAFEM_MESH_HPP
#define MLAFEM_MESH_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace mlafem
{

using VertexId = std::int32_t;
using TriangleId = std::int32_t;

inline constexpr std::int32_t kNone = -1;

struct Point
{
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point &, const Point &) = default;
};

// Undirected edge, stored with a < b. Edges are identified by their endpoints.
struct Edge
{
  VertexId a = kNone;
  VertexId b = kNone;

  Edge() = default;
  Edge(VertexId u, VertexId v) : a(u < v ? u : v), b(u < v ? v : u) {}

  std::uint64_t key() const
  {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
  }
  friend bool operator==(const Edge &, const Edge &) = default;
  friend auto operator<=>(const Edge &, const Edge &) = default;
};

// Vertices are stored counterclockwise with the newest vertex last, so the refinement
// edge is always (vertices[0], vertices[1]).
struct Triangle
{
  std::array<VertexId, 3> vertices{kNone, kNone, kNone};
  int level = 0;  // number of bisections since the initial mesh
  TriangleId parent = kNone;
  std::array<TriangleId, 2> children{kNone, kNone};

  bool is_leaf() const { return children[0] == kNone; }
  VertexId newest_vertex() const { return vertices[2]; }
  Edge refinement_edge() const { return {vertices[0], vertices[1]}; }
  // Edge opposite local vertex i.
  Edge edge(int i) const { return {vertices[(i + 1) % 3], vertices[(i + 2) % 3]}; }

  friend bool operator==(const Triangle &, const Triangle &) = default;
};

// Vertices live on an integer lattice of spacing 2^-kLatticeLevel / n0, which makes
// bisection midpoints and grid indices exact for any n0.
inline constexpr int kLatticeLevel = 30;
using LatticePoint = std::array<std::int64_t, 2>;

struct ConformityReport
{
  std::vector<VertexId> hanging_nodes;  // vertices strictly inside an edge of a leaf
  std::vector<Edge> unmatched_edges;    // interior edges with a single incident leaf
  std::vector<Edge> overfull_edges;     // edges with more than two incident leaves

  bool conforming() const
  {
    return hanging_nodes.empty() && unmatched_edges.empty() && overfull_edges.empty();
  }
};

// Triangulation of the unit square refined by newest vertex bisection. The full
// refinement history is kept: refined triangles stay in the triangle array with links to
// their children, and only leaves form the current triangulation. Vertex and triangle
// ids are never reused, so a mesh obtained by refining a copy shares all ids with it.
class Mesh
{
public:
  struct TriangleRecord
  {
    std::array<VertexId, 3> vertices;
    int refinement_edge = 2;  // local index of the refinement edge (edge opposite vertex i)
    int level = 0;
  };

  // n0 x n0 squares, each split along the lower-left to upper-right diagonal.
  static Mesh initial(int n0);

  // Builds a mesh from raw leaf data. The result has no refinement history; the
  // optional vertex parents (bisected edge endpoints) enable prolongation onto it.
  static Mesh from_parts(int n0, std::vector<Point> vertices,
                         std::span<const TriangleRecord> triangles,
                         std::vector<std::array<VertexId, 2>> vertex_parents = {});

  int n0() const { return n0_; }
  // Finest dyadic grid level holding all vertices: spacing 2^-max_level / n0.
  int max_level() const { return max_level_; }

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }
  std::size_t num_leaves() const { return num_leaves_; }

  std::span<const Point> vertices() const { return vertices_; }
  const Point &vertex(VertexId v) const { return vertices_.at(v); }
  const LatticePoint &lattice(VertexId v) const { return lattice_.at(v); }
  const Triangle &triangle(TriangleId t) const { return triangles_.at(t); }
  std::span<const Triangle> triangles() const { return triangles_; }

  // Endpoints of the edge a vertex bisected, or {kNone, kNone} for initial vertices.
  const std::array<VertexId, 2> &vertex_parents(VertexId v) const
  {
    return vertex_parents_.at(v);
  }

  // Leaf triangle ids in ascending order.
  std::vector<TriangleId> leaves() const;

  bool is_boundary_vertex(VertexId v) const;
  bool is_boundary_edge(const Edge &e) const;

  // Leaf triangles incident to an edge of the current triangulation (zero, one or two).
  std::array<TriangleId, 2> edge_triangles(const Edge &e) const;
  // Leaf across the given local edge of leaf t, if any.
  std::optional<TriangleId> neighbor(TriangleId t, int local_edge) const;

  double area(TriangleId t) const;
  double diameter(TriangleId t) const;

  // Bisects t together with the neighbor across its refinement edge. An incompatible
  // neighbor is bisected first (repeatedly, through an explicit worklist); a
  // refinement edge on the boundary bisects t alone.
  void refine_in_pair(TriangleId t);
  // Two levels of bisection of the leaf t: t is replaced by four similar triangles.
  void refine_triangle(TriangleId t);
  // Refines every current leaf twice.
  void uniform_refine();
  // Bisects until every descendant of t has at least the given depth below t. Unlike
  // refine_triangle, t need not be a leaf.
  void refine_to_depth(TriangleId t, int depth);

  ConformityReport check_conformity() const;

  friend bool operator==(const Mesh &lhs, const Mesh &rhs);

private:
  struct EdgeSlots
  {
    std::array<TriangleId, 2> triangles{kNone, kNone};
  };

  VertexId add_vertex(const LatticePoint &p, std::array<VertexId, 2> parents);
  VertexId midpoint(VertexId a, VertexId b);
  std::array<TriangleId, 2> bisect(TriangleId t, VertexId mid);
  void attach(TriangleId t);
  void detach(TriangleId t);
  void require_leaf(TriangleId t) const;

  int n0_ = 1;
  int max_level_ = 0;
  std::vector<LatticePoint> lattice_;
  std::vector<Point> vertices_;
  std::vector<std::array<VertexId, 2>> vertex_parents_;
  std::vector<Triangle> triangles_;
  std::size_t num_leaves_ = 0;
  std::unordered_map<std::uint64_t, EdgeSlots> edges_;
  std::unordered_map<std::uint64_t, VertexId> midpoints_;
};

// Maps each vertex to (row, col) = (round(y * n0 * 2^level), round(x * n0 * 2^level)) on
// the (n0 * 2^level + 1)^2 tensor grid. Throws if a vertex is not a grid point.
std::vector<std::array<int, 2>> node_grid_index(const Mesh &mesh, int level);

// Number of grid points per side at a level.
inline int grid_size(int n0, int level) { return (n0 << level) + 1; }

}  // namespace mlafem

#endif  // MLAFEM_MESH_HPP

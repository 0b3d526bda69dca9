#include "mlafem/mesh.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace mlafem
{

namespace
{

constexpr std::int64_t kLatticeUnit = std::int64_t{1} << kLatticeLevel;

int lattice_grid_level(const LatticePoint &p)
{
  int level = 0;
  for (auto c : p)
  {
    if (c != 0)
    {
      const int tz = std::countr_zero(static_cast<std::uint64_t>(c));
      level = std::max(level, kLatticeLevel - std::min(tz, kLatticeLevel));
    }
  }
  return level;
}

double cross(const Point &o, const Point &a, const Point &b)
{
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double squared_length(const Point &a, const Point &b)
{
  const double dx = b.x - a.x, dy = b.y - a.y;
  return dx * dx + dy * dy;
}

}  // namespace

Mesh Mesh::initial(int n0)
{
  if (n0 < 1)
  {
    throw std::invalid_argument("initial mesh resolution n0 must be positive, got " +
                                std::to_string(n0));
  }
  Mesh mesh;
  mesh.n0_ = n0;
  const std::int64_t step = kLatticeUnit;
  for (int j = 0; j <= n0; j++)
  {
    for (int i = 0; i <= n0; i++)
    {
      mesh.add_vertex({i * step, j * step}, {kNone, kNone});
    }
  }
  const auto id = [n0](int i, int j) { return static_cast<VertexId>(j * (n0 + 1) + i); };
  for (int j = 0; j < n0; j++)
  {
    for (int i = 0; i < n0; i++)
    {
      const VertexId ll = id(i, j), lr = id(i + 1, j), ur = id(i + 1, j + 1),
                     ul = id(i, j + 1);
      // Hypotenuse ll-ur is the refinement edge of both halves.
      Triangle lower, upper;
      lower.vertices = {ur, ll, lr};
      upper.vertices = {ll, ur, ul};
      for (const auto &t : {lower, upper})
      {
        mesh.triangles_.push_back(t);
        mesh.attach(static_cast<TriangleId>(mesh.triangles_.size() - 1));
        mesh.num_leaves_++;
      }
    }
  }
  return mesh;
}

Mesh Mesh::from_parts(int n0, std::vector<Point> vertices,
                      std::span<const TriangleRecord> triangles,
                      std::vector<std::array<VertexId, 2>> vertex_parents)
{
  if (n0 < 1)
  {
    throw std::invalid_argument("n0 must be positive");
  }
  if (!vertex_parents.empty() && vertex_parents.size() != vertices.size())
  {
    throw std::invalid_argument("vertex parent list does not match the vertex count");
  }
  Mesh mesh;
  mesh.n0_ = n0;
  const double scale = static_cast<double>(n0) * static_cast<double>(kLatticeUnit);
  for (std::size_t v = 0; v < vertices.size(); v++)
  {
    const auto &p = vertices[v];
    LatticePoint q;
    for (int k = 0; k < 2; k++)
    {
      const double s = (k == 0 ? p.x : p.y) * scale;
      const double r = std::round(s);
      if (!std::isfinite(s) || std::abs(s - r) > 1e-6 || r < 0.0 || r > scale)
      {
        throw std::invalid_argument("vertex " + std::to_string(v) +
                                    " is not on the dyadic grid of the unit square");
      }
      q[k] = static_cast<std::int64_t>(r);
    }
    std::array<VertexId, 2> parents{kNone, kNone};
    if (!vertex_parents.empty())
    {
      parents = vertex_parents[v];
      if (parents[0] != kNone &&
          (parents[0] < 0 || parents[1] < 0 || parents[0] >= static_cast<VertexId>(v) ||
           parents[1] >= static_cast<VertexId>(v)))
      {
        throw std::invalid_argument("vertex parents must precede the vertex");
      }
    }
    mesh.add_vertex(q, parents);
    if (parents[0] != kNone)
    {
      mesh.midpoints_[Edge(parents[0], parents[1]).key()] = static_cast<VertexId>(v);
    }
  }
  const auto nv = static_cast<VertexId>(mesh.vertices_.size());
  for (const auto &rec : triangles)
  {
    if (rec.refinement_edge < 0 || rec.refinement_edge > 2)
    {
      throw std::invalid_argument("refinement edge index must be 0, 1 or 2");
    }
    for (auto v : rec.vertices)
    {
      if (v < 0 || v >= nv)
      {
        throw std::invalid_argument("triangle references unknown vertex " +
                                    std::to_string(v));
      }
    }
    Triangle t;
    const int k = rec.refinement_edge;
    t.vertices = {rec.vertices[(k + 1) % 3], rec.vertices[(k + 2) % 3], rec.vertices[k]};
    t.level = rec.level;
    const double orientation = cross(mesh.vertices_[t.vertices[0]],
                                     mesh.vertices_[t.vertices[1]],
                                     mesh.vertices_[t.vertices[2]]);
    if (orientation == 0.0)
    {
      throw std::invalid_argument("degenerate triangle");
    }
    if (orientation < 0.0)
    {
      std::swap(t.vertices[0], t.vertices[1]);
    }
    mesh.triangles_.push_back(t);
    mesh.attach(static_cast<TriangleId>(mesh.triangles_.size() - 1));
    mesh.num_leaves_++;
  }
  return mesh;
}

VertexId Mesh::add_vertex(const LatticePoint &p, std::array<VertexId, 2> parents)
{
  const double scale = static_cast<double>(n0_) * static_cast<double>(kLatticeUnit);
  lattice_.push_back(p);
  vertices_.push_back({static_cast<double>(p[0]) / scale, static_cast<double>(p[1]) / scale});
  vertex_parents_.push_back(parents);
  max_level_ = std::max(max_level_, lattice_grid_level(p));
  return static_cast<VertexId>(vertices_.size() - 1);
}

VertexId Mesh::midpoint(VertexId a, VertexId b)
{
  const Edge e(a, b);
  if (auto it = midpoints_.find(e.key()); it != midpoints_.end())
  {
    return it->second;
  }
  const auto &pa = lattice_[a];
  const auto &pb = lattice_[b];
  if ((pa[0] + pb[0]) % 2 != 0 || (pa[1] + pb[1]) % 2 != 0)
  {
    throw std::length_error("refinement exceeds the supported depth of " +
                            std::to_string(kLatticeLevel) + " grid levels");
  }
  const VertexId m = add_vertex({(pa[0] + pb[0]) / 2, (pa[1] + pb[1]) / 2}, {e.a, e.b});
  midpoints_.emplace(e.key(), m);
  return m;
}

std::vector<TriangleId> Mesh::leaves() const
{
  std::vector<TriangleId> out;
  out.reserve(num_leaves_);
  for (std::size_t t = 0; t < triangles_.size(); t++)
  {
    if (triangles_[t].is_leaf())
    {
      out.push_back(static_cast<TriangleId>(t));
    }
  }
  return out;
}

bool Mesh::is_boundary_vertex(VertexId v) const
{
  const std::int64_t top = n0_ * kLatticeUnit;
  const auto &p = lattice_.at(v);
  return p[0] == 0 || p[1] == 0 || p[0] == top || p[1] == top;
}

bool Mesh::is_boundary_edge(const Edge &e) const
{
  const std::int64_t top = n0_ * kLatticeUnit;
  const auto &p = lattice_.at(e.a);
  const auto &q = lattice_.at(e.b);
  for (int k = 0; k < 2; k++)
  {
    if (p[k] == q[k] && (p[k] == 0 || p[k] == top))
    {
      return true;
    }
  }
  return false;
}

std::array<TriangleId, 2> Mesh::edge_triangles(const Edge &e) const
{
  if (auto it = edges_.find(e.key()); it != edges_.end())
  {
    return it->second.triangles;
  }
  return {kNone, kNone};
}

std::optional<TriangleId> Mesh::neighbor(TriangleId t, int local_edge) const
{
  require_leaf(t);
  for (auto s : edge_triangles(triangles_[t].edge(local_edge)))
  {
    if (s != kNone && s != t)
    {
      return s;
    }
  }
  return std::nullopt;
}

double Mesh::area(TriangleId t) const
{
  const auto &v = triangles_.at(t).vertices;
  return 0.5 * cross(vertices_[v[0]], vertices_[v[1]], vertices_[v[2]]);
}

double Mesh::diameter(TriangleId t) const
{
  const auto &v = triangles_.at(t).vertices;
  return std::sqrt(std::max({squared_length(vertices_[v[0]], vertices_[v[1]]),
                             squared_length(vertices_[v[1]], vertices_[v[2]]),
                             squared_length(vertices_[v[2]], vertices_[v[0]])}));
}

void Mesh::attach(TriangleId t)
{
  for (int i = 0; i < 3; i++)
  {
    auto &slots = edges_[triangles_[t].edge(i).key()].triangles;
    if (slots[0] == kNone)
    {
      slots[0] = t;
    }
    else if (slots[1] == kNone)
    {
      slots[1] = t;
    }
    else
    {
      throw std::logic_error("edge shared by more than two triangles");
    }
  }
}

void Mesh::detach(TriangleId t)
{
  for (int i = 0; i < 3; i++)
  {
    auto it = edges_.find(triangles_[t].edge(i).key());
    if (it == edges_.end())
    {
      continue;
    }
    auto &slots = it->second.triangles;
    for (auto &s : slots)
    {
      if (s == t)
      {
        s = kNone;
      }
    }
    if (slots[0] == kNone && slots[1] == kNone)
    {
      edges_.erase(it);
    }
    else if (slots[0] == kNone)
    {
      std::swap(slots[0], slots[1]);
    }
  }
}

void Mesh::require_leaf(TriangleId t) const
{
  if (t < 0 || static_cast<std::size_t>(t) >= triangles_.size())
  {
    throw std::out_of_range("unknown triangle id " + std::to_string(t));
  }
  if (!triangles_[t].is_leaf())
  {
    throw std::invalid_argument("triangle " + std::to_string(t) + " is not a leaf");
  }
}

std::array<TriangleId, 2> Mesh::bisect(TriangleId t, VertexId mid)
{
  const Triangle parent = triangles_[t];
  detach(t);
  Triangle c0, c1;
  c0.vertices = {parent.vertices[2], parent.vertices[0], mid};
  c1.vertices = {parent.vertices[1], parent.vertices[2], mid};
  c0.level = c1.level = parent.level + 1;
  c0.parent = c1.parent = t;
  const auto id0 = static_cast<TriangleId>(triangles_.size());
  triangles_.push_back(c0);
  triangles_.push_back(c1);
  attach(id0);
  attach(id0 + 1);
  triangles_[t].children = {id0, id0 + 1};
  num_leaves_++;
  return {id0, id0 + 1};
}

void Mesh::refine_in_pair(TriangleId t)
{
  require_leaf(t);
  std::vector<TriangleId> work{t};
  while (!work.empty())
  {
    const TriangleId current = work.back();
    if (!triangles_[current].is_leaf())
    {
      work.pop_back();
      continue;
    }
    const Edge e = triangles_[current].refinement_edge();
    TriangleId other = kNone;
    for (auto s : edge_triangles(e))
    {
      if (s != kNone && s != current)
      {
        other = s;
      }
    }
    if (other == kNone)
    {
      if (!is_boundary_edge(e))
      {
        throw std::logic_error("refinement edge of triangle " + std::to_string(current) +
                               " has no neighbor but is interior");
      }
      bisect(current, midpoint(e.a, e.b));
      work.pop_back();
    }
    else if (triangles_[other].refinement_edge() == e)
    {
      const VertexId m = midpoint(e.a, e.b);
      bisect(current, m);
      bisect(other, m);
      work.pop_back();
    }
    else
    {
      if (work.size() > num_leaves_)
      {
        throw std::logic_error("newest vertex bisection does not terminate; the initial "
                               "refinement edges are not compatible");
      }
      work.push_back(other);
    }
  }
}

void Mesh::refine_to_depth(TriangleId t, int depth)
{
  if (t < 0 || static_cast<std::size_t>(t) >= triangles_.size())
  {
    throw std::out_of_range("unknown triangle id " + std::to_string(t));
  }
  if (depth <= 0)
  {
    return;
  }
  if (triangles_[t].is_leaf())
  {
    refine_in_pair(t);
  }
  const auto children = triangles_[t].children;
  for (auto c : children)
  {
    refine_to_depth(c, depth - 1);
  }
}

void Mesh::refine_triangle(TriangleId t)
{
  require_leaf(t);
  refine_to_depth(t, 2);
}

void Mesh::uniform_refine()
{
  for (auto t : leaves())
  {
    refine_to_depth(t, 2);
  }
}

ConformityReport Mesh::check_conformity() const
{
  ConformityReport report;
  std::unordered_map<std::uint64_t, int> incidence;
  std::unordered_set<VertexId> used;
  for (const auto &t : triangles_)
  {
    if (!t.is_leaf())
    {
      continue;
    }
    for (int i = 0; i < 3; i++)
    {
      incidence[t.edge(i).key()]++;
      used.insert(t.vertices[i]);
    }
  }
  for (const auto &[key, count] : incidence)
  {
    const Edge e(static_cast<VertexId>(key >> 32), static_cast<VertexId>(key & 0xffffffffu));
    if (count > 2)
    {
      report.overfull_edges.push_back(e);
    }
    else if (count == 1 && !is_boundary_edge(e))
    {
      report.unmatched_edges.push_back(e);
    }
  }
  std::sort(report.unmatched_edges.begin(), report.unmatched_edges.end());
  std::sort(report.overfull_edges.begin(), report.overfull_edges.end());

  // Vertices strictly inside an unmatched edge, found with exact lattice arithmetic.
  std::unordered_set<VertexId> hanging;
  for (const auto &e : report.unmatched_edges)
  {
    const auto &p = lattice_[e.a];
    const auto &q = lattice_[e.b];
    const __int128 dx = q[0] - p[0], dy = q[1] - p[1];
    for (auto v : used)
    {
      if (v == e.a || v == e.b)
      {
        continue;
      }
      const auto &r = lattice_[v];
      const __int128 rx = r[0] - p[0], ry = r[1] - p[1];
      if (dx * ry - dy * rx != 0)
      {
        continue;
      }
      const __int128 dot = dx * rx + dy * ry;
      if (dot > 0 && dot < dx * dx + dy * dy)
      {
        hanging.insert(v);
      }
    }
  }
  report.hanging_nodes.assign(hanging.begin(), hanging.end());
  std::sort(report.hanging_nodes.begin(), report.hanging_nodes.end());
  return report;
}

bool operator==(const Mesh &lhs, const Mesh &rhs)
{
  return lhs.n0_ == rhs.n0_ && lhs.lattice_ == rhs.lattice_ &&
         lhs.vertex_parents_ == rhs.vertex_parents_ && lhs.triangles_ == rhs.triangles_;
}

std::vector<std::array<int, 2>> node_grid_index(const Mesh &mesh, int level)
{
  if (level < 0 || level > kLatticeLevel)
  {
    throw std::invalid_argument("grid level out of range: " + std::to_string(level));
  }
  const int shift = kLatticeLevel - level;
  const std::int64_t mask = (std::int64_t{1} << shift) - 1;
  std::vector<std::array<int, 2>> index(mesh.num_vertices());
  for (std::size_t v = 0; v < mesh.num_vertices(); v++)
  {
    const auto &p = mesh.lattice(static_cast<VertexId>(v));
    if ((p[0] & mask) != 0 || (p[1] & mask) != 0)
    {
      throw std::invalid_argument("vertex " + std::to_string(v) +
                                  " is not a point of the level-" + std::to_string(level) +
                                  " grid");
    }
    index[v] = {static_cast<int>(p[1] >> shift), static_cast<int>(p[0] >> shift)};
  }
  return index;
}

}  // namespace mlafem

#include "mlafem/estimator.hpp"

#include <cmath>
#include <string>

namespace mlafem
{

namespace
{

Point gradient(const FeFunction &u, TriangleId t)
{
  const auto &mesh = u.space().mesh();
  const auto g = barycentric_gradients(mesh, t);
  const auto &v = mesh.triangle(t).vertices;
  Point out;
  for (int a = 0; a < 3; a++)
  {
    out.x += u[v[a]] * g[a].x;
    out.y += u[v[a]] * g[a].y;
  }
  return out;
}

// Unit normal of the edge pointing away from the third vertex of t.
Point outward_normal(const Mesh &mesh, TriangleId t, const Edge &e)
{
  const Point &a = mesh.vertex(e.a), &b = mesh.vertex(e.b);
  VertexId opposite = kNone;
  for (auto v : mesh.triangle(t).vertices)
  {
    if (v != e.a && v != e.b)
    {
      opposite = v;
    }
  }
  const Point &c = mesh.vertex(opposite);
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  Point n{(b.y - a.y) / len, -(b.x - a.x) / len};
  if (n.x * (c.x - a.x) + n.y * (c.y - a.y) > 0.0)
  {
    n = {-n.x, -n.y};
  }
  return n;
}

void require_same_mesh(const FeFunction &a, const FeFunction &b)
{
  if (&a.space().mesh() != &b.space().mesh() && !(a.space().mesh() == b.space().mesh()))
  {
    throw std::invalid_argument("estimate: functions live on different meshes");
  }
}

}  // namespace

double EdgeJump::integral_sq() const
{
  const double mid = 0.5 * (at_a + at_b);
  return length / 6.0 * (at_a * at_a + 4.0 * mid * mid + at_b * at_b);
}

EdgeJump jump(const FeFunction &kappa, const FeFunction &u, const Edge &edge,
              TriangleId first, TriangleId second)
{
  require_same_mesh(kappa, u);
  const auto &mesh = u.space().mesh();
  const auto adjacent = mesh.edge_triangles(edge);
  const bool matches = (adjacent[0] == first && adjacent[1] == second) ||
                       (adjacent[0] == second && adjacent[1] == first);
  if (first == kNone || second == kNone || first == second || !matches)
  {
    throw std::invalid_argument("jump requires the two leaves adjacent to an interior edge");
  }
  const Point g1 = gradient(u, first), g2 = gradient(u, second);
  const Point n1 = outward_normal(mesh, first, edge), n2 = outward_normal(mesh, second, edge);
  const double flux = (g1.x * n1.x + g1.y * n1.y) + (g2.x * n2.x + g2.y * n2.y);
  const Point &a = mesh.vertex(edge.a), &b = mesh.vertex(edge.b);
  return {kappa[edge.a] * flux, kappa[edge.b] * flux, std::hypot(b.x - a.x, b.y - a.y)};
}

EdgeJump jump(const FeFunction &kappa, const FeFunction &u, const Edge &edge)
{
  const auto adjacent = u.space().mesh().edge_triangles(edge);
  if (adjacent[0] == kNone || adjacent[1] == kNone)
  {
    throw std::invalid_argument("jump is undefined on boundary edge (" +
                                std::to_string(edge.a) + ", " + std::to_string(edge.b) + ")");
  }
  return jump(kappa, u, edge, adjacent[0], adjacent[1]);
}

EstimatorField estimate(const FeFunction &kappa, const FeFunction &f, const FeFunction &u)
{
  require_same_mesh(kappa, u);
  require_same_mesh(f, u);
  const auto &space = u.space();
  const auto &mesh = space.mesh();

  EstimatorField field;
  field.mesh = space.mesh_ptr();
  field.leaves.assign(space.leaves().begin(), space.leaves().end());
  field.eta_sq.assign(field.leaves.size(), 0.0);

  for (std::size_t k = 0; k < field.leaves.size(); k++)
  {
    const TriangleId t = field.leaves[k];
    const auto &v = mesh.triangle(t).vertices;
    const double h = mesh.diameter(t);

    // f_h + div(kappa_h grad u_h) = f_h + grad kappa_h . grad u_h, linear on T.
    const Point gu = gradient(u, t), gk = gradient(kappa, t);
    const double div = gk.x * gu.x + gk.y * gu.y;
    double sum = 0.0, sum_sq = 0.0;
    for (int a = 0; a < 3; a++)
    {
      const double r = f[v[a]] + div;
      sum += r;
      sum_sq += r * r;
    }
    const double volume = mesh.area(t) / 12.0 * (sum_sq + sum * sum);

    double edges = 0.0;
    for (int i = 0; i < 3; i++)
    {
      const Edge e = mesh.triangle(t).edge(i);
      const auto adjacent = mesh.edge_triangles(e);
      if (adjacent[0] == kNone || adjacent[1] == kNone)
      {
        continue;
      }
      const TriangleId other = adjacent[0] == t ? adjacent[1] : adjacent[0];
      edges += jump(kappa, u, e, t, other).integral_sq();
    }
    field.eta_sq[k] = h * h * volume + h * edges;
  }
  for (double e : field.eta_sq)
  {
    field.total_sq += e;
  }
  return field;
}

}  // namespace mlafem

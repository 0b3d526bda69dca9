#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <catch_amalgamated.hpp>
#include "mlafem/io.hpp"
#include "mlafem/mesh.hpp"

using namespace mlafem;
using Catch::Approx;

namespace
{

double squared(const Point &a, const Point &b)
{
  return (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y);
}

// Legs equal, hypotenuse is the refinement edge, smallest angle 45 degrees.
bool right_isosceles(const Mesh &mesh, TriangleId t)
{
  const auto &v = mesh.triangle(t).vertices;
  const Point &a = mesh.vertex(v[0]), &b = mesh.vertex(v[1]), &c = mesh.vertex(v[2]);
  const double hyp = squared(a, b), leg1 = squared(b, c), leg2 = squared(c, a);
  if (std::abs(leg1 - leg2) > 1e-12 * hyp || std::abs(hyp - 2 * leg1) > 1e-12 * hyp)
  {
    return false;
  }
  double min_angle = std::numbers::pi;
  const std::array<Point, 3> p{a, b, c};
  for (int k = 0; k < 3; k++)
  {
    const Point &o = p[k], &q = p[(k + 1) % 3], &r = p[(k + 2) % 3];
    const double ang = std::abs(std::atan2((q.x - o.x) * (r.y - o.y) - (q.y - o.y) * (r.x - o.x),
                                           (q.x - o.x) * (r.x - o.x) + (q.y - o.y) * (r.y - o.y)));
    min_angle = std::min(min_angle, ang);
  }
  return std::abs(min_angle - std::numbers::pi / 4) <= 1e-12 && mesh.area(t) > 0.0;
}

}  // namespace

TEST_CASE("Initial mesh counts", "[mesh]")
{
  for (int n0 : {1, 2, 4})
  {
    const auto mesh = Mesh::initial(n0);
    CHECK(mesh.num_vertices() == static_cast<std::size_t>((n0 + 1) * (n0 + 1)));
    CHECK(mesh.num_leaves() == static_cast<std::size_t>(2 * n0 * n0));
    CHECK(mesh.max_level() == 0);
    CHECK(mesh.check_conformity().conforming());
    for (auto t : mesh.leaves())
    {
      CHECK(mesh.triangle(t).level == 0);
      CHECK(right_isosceles(mesh, t));
      const auto e = mesh.triangle(t).refinement_edge();
      CHECK(e != Edge(mesh.triangle(t).newest_vertex(), e.a));
      CHECK(mesh.triangle(t).newest_vertex() != e.a);
      CHECK(mesh.triangle(t).newest_vertex() != e.b);
    }
  }
  CHECK_THROWS_AS(Mesh::initial(0), std::invalid_argument);
}

TEST_CASE("Refine in pair on a compatible pair", "[mesh]")
{
  for (TriangleId t : {0, 1})
  {
    auto mesh = Mesh::initial(1);
    mesh.refine_in_pair(t);
    CHECK(mesh.num_vertices() == 5);
    CHECK(mesh.num_leaves() == 4);
    CHECK(mesh.vertex(4) == Point{0.5, 0.5});
    CHECK(mesh.check_conformity().conforming());
    for (auto leaf : mesh.leaves())
    {
      CHECK(mesh.triangle(leaf).newest_vertex() == 4);
      CHECK(mesh.triangle(leaf).level == 1);
    }
  }
}

TEST_CASE("Refine in pair with a boundary refinement edge bisects one triangle", "[mesh]")
{
  auto mesh = Mesh::initial(1);
  mesh.refine_in_pair(0);
  // Children of triangle 0 have the square's lower and right sides as refinement edges.
  const auto leaves_before = mesh.num_leaves();
  const TriangleId child = mesh.triangle(0).children[0];
  REQUIRE(mesh.is_boundary_edge(mesh.triangle(child).refinement_edge()));
  mesh.refine_in_pair(child);
  CHECK(mesh.num_leaves() == leaves_before + 1);
  CHECK(mesh.check_conformity().conforming());
}

TEST_CASE("Refine in pair recurses into an incompatible neighbor", "[mesh]")
{
  auto mesh = Mesh::initial(2);
  // Lower triangle of the lower-left square; one child then has the interior leg x = 0.5,
  // which the neighboring square's upper triangle does not use as refinement edge.
  mesh.refine_in_pair(0);
  REQUIRE(mesh.num_leaves() == 10);
  TriangleId inner = kNone;
  for (auto c : mesh.triangle(0).children)
  {
    if (!mesh.is_boundary_edge(mesh.triangle(c).refinement_edge()))
    {
      inner = c;
    }
  }
  REQUIRE(inner != kNone);
  const auto neighbor = mesh.neighbor(inner, 2);
  REQUIRE(neighbor.has_value());
  REQUIRE(mesh.triangle(*neighbor).refinement_edge() != mesh.triangle(inner).refinement_edge());
  mesh.refine_in_pair(inner);
  // Neighbor pair (+2), then the now compatible pair (+2).
  CHECK(mesh.num_leaves() == 14);
  CHECK(!mesh.triangle(*neighbor).is_leaf());
  CHECK(mesh.check_conformity().conforming());
}

TEST_CASE("Refine triangle on the two-triangle mesh", "[mesh]")
{
  // By hand: the pair is bisected through the center (4 triangles), then both children of
  // the refined triangle are bisected alone across the square's boundary (6 triangles,
  // 7 vertices); the other triangle keeps its two halves.
  auto mesh = Mesh::initial(1);
  mesh.refine_triangle(0);
  CHECK(mesh.num_leaves() == 6);
  CHECK(mesh.num_vertices() == 7);
  CHECK(mesh.check_conformity().conforming());
  int grandchildren = 0;
  for (auto t : mesh.leaves())
  {
    CHECK(right_isosceles(mesh, t));
    if (mesh.triangle(t).level == 2)
    {
      grandchildren++;
      CHECK(std::sqrt(squared(mesh.vertex(mesh.triangle(t).vertices[2]),
                              mesh.vertex(mesh.triangle(t).vertices[0]))) ==
            Approx(0.5));
    }
  }
  CHECK(grandchildren == 4);
  CHECK_THROWS_AS(mesh.refine_triangle(0), std::invalid_argument);
  CHECK_THROWS_AS(mesh.refine_triangle(1000), std::out_of_range);
  CHECK_THROWS_AS(mesh.refine_in_pair(-1), std::out_of_range);
}

TEST_CASE("Uniform refinement reaches the finer grid", "[mesh]")
{
  auto mesh = Mesh::initial(2);
  mesh.uniform_refine();
  CHECK(mesh.num_vertices() == 25);
  CHECK(mesh.num_leaves() == 32);
  CHECK(mesh.check_conformity().conforming());
  mesh.uniform_refine();
  const auto fine = Mesh::initial(8);
  std::set<std::pair<double, double>> a, b;
  for (auto p : mesh.vertices())
  {
    a.insert({p.x, p.y});
  }
  for (auto p : fine.vertices())
  {
    b.insert({p.x, p.y});
  }
  CHECK(a == b);
  // Bisection alternates the diagonals, so only the leaf sizes match the finer mesh.
  CHECK(mesh.num_leaves() == fine.num_leaves());
  for (auto t : mesh.leaves())
  {
    CHECK(mesh.area(t) == Approx(1.0 / 128).epsilon(1e-14));
  }
}

TEST_CASE("Refine triangle on every leaf is uniform refinement", "[mesh]")
{
  std::mt19937 rng(3);
  auto base = Mesh::initial(2);
  for (int k = 0; k < 10; k++)
  {
    const auto leaves = base.leaves();
    base.refine_triangle(leaves[rng() % leaves.size()]);
  }
  auto uniform = base;
  uniform.uniform_refine();
  CHECK(uniform.num_leaves() == 4 * base.num_leaves());
  CHECK(uniform.check_conformity().conforming());
  auto by_hand = base;
  for (auto t : base.leaves())
  {
    by_hand.refine_to_depth(t, 2);
  }
  CHECK(by_hand == uniform);
}

TEST_CASE("Conformity report finds a hanging node", "[mesh]")
{
  // Unit square: left half one triangle pair, right half split so (0.5, 0.5) hangs on the
  // left triangle's edge x = 0.5.
  std::vector<Point> vertices{{0, 0}, {0.5, 0}, {0.5, 1}, {0, 1}, {0.5, 0.5}, {1, 0}, {1, 1}};
  std::vector<Mesh::TriangleRecord> tris{
      {{0, 1, 2}, 1, 0}, {{0, 2, 3}, 1, 0}, {{1, 5, 4}, 2, 1},
      {{5, 6, 4}, 2, 1}, {{6, 2, 4}, 2, 1}};
  const auto mesh = Mesh::from_parts(1, vertices, tris);
  const auto report = mesh.check_conformity();
  CHECK_FALSE(report.conforming());
  REQUIRE(report.hanging_nodes.size() == 1);
  CHECK(report.hanging_nodes[0] == 4);
}

TEST_CASE("Random refinement keeps the mesh conforming and right isosceles", "[mesh][fuzz]")
{
  std::mt19937_64 rng(20240601);
  auto mesh = Mesh::initial(4);
  for (int k = 0; k < 1000; k++)
  {
    const auto leaves = mesh.leaves();
    std::uniform_int_distribution<std::size_t> pick(0, leaves.size() - 1);
    mesh.refine_triangle(leaves[pick(rng)]);
    if (k % 100 == 99)
    {
      REQUIRE(mesh.check_conformity().conforming());
    }
  }
  REQUIRE(mesh.check_conformity().conforming());
  for (auto t : mesh.leaves())
  {
    REQUIRE(right_isosceles(mesh, t));
  }
  // Nesting: every vertex is a point of the max_level grid.
  CHECK_NOTHROW(node_grid_index(mesh, mesh.max_level()));
}

TEST_CASE("Refinement is deterministic", "[mesh]")
{
  const auto run = [] {
    std::mt19937 rng(11);
    auto mesh = Mesh::initial(3);
    for (int k = 0; k < 50; k++)
    {
      const auto leaves = mesh.leaves();
      mesh.refine_triangle(leaves[rng() % leaves.size()]);
    }
    return mesh;
  };
  CHECK(run() == run());
}

TEST_CASE("Node grid index", "[mesh]")
{
  auto mesh = Mesh::initial(2);
  auto index = node_grid_index(mesh, 0);
  std::set<std::array<int, 2>> covered(index.begin(), index.end());
  CHECK(covered.size() == 9);
  CHECK(index[0] == std::array<int, 2>{0, 0});
  CHECK(index[2] == std::array<int, 2>{0, 2});  // (x, y) = (1, 0)
  CHECK(index[6] == std::array<int, 2>{2, 0});  // (x, y) = (0, 1)

  mesh.refine_in_pair(0);
  const VertexId mid = static_cast<VertexId>(mesh.num_vertices() - 1);
  CHECK(mesh.vertex(mid) == Point{0.25, 0.25});
  CHECK_THROWS_AS(node_grid_index(mesh, 0), std::invalid_argument);
  index = node_grid_index(mesh, 1);
  CHECK(index[mid] == std::array<int, 2>{1, 1});
  CHECK(mesh.max_level() == 1);
}

TEST_CASE("Non-dyadic n0 keeps exact grid coordinates", "[mesh]")
{
  auto mesh = Mesh::initial(3);
  mesh.uniform_refine();
  mesh.uniform_refine();
  const auto index = node_grid_index(mesh, 2);
  const int size = grid_size(3, 2);
  std::set<std::array<int, 2>> covered(index.begin(), index.end());
  CHECK(covered.size() == static_cast<std::size_t>(size * size));
}

TEST_CASE("Mesh JSON round trip preserves refinement behavior", "[mesh][io]")
{
  std::mt19937 rng(5);
  auto mesh = Mesh::initial(2);
  for (int k = 0; k < 12; k++)
  {
    const auto leaves = mesh.leaves();
    mesh.refine_triangle(leaves[rng() % leaves.size()]);
  }
  const auto json = mesh_to_json(mesh);
  CHECK(json.at("triangles").size() == mesh.num_leaves());
  auto loaded = mesh_from_json(json);
  CHECK(loaded.num_vertices() == mesh.num_vertices());
  CHECK(loaded.max_level() == mesh.max_level());
  CHECK(loaded.check_conformity().conforming());

  // Twice refining either copy creates the same vertices in the same order.
  auto a = mesh;
  auto b = loaded;
  a.uniform_refine();
  b.uniform_refine();
  REQUIRE(a.num_vertices() == b.num_vertices());
  for (std::size_t v = 0; v < a.num_vertices(); v++)
  {
    REQUIRE(a.lattice(static_cast<VertexId>(v)) == b.lattice(static_cast<VertexId>(v)));
  }
}

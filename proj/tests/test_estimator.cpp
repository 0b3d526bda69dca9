#include <cmath>
#include <numeric>
#include <catch_amalgamated.hpp>
#include "mlafem/estimator.hpp"
#include "mlafem/problems.hpp"
#include "oracles.hpp"

using namespace mlafem;
using Catch::Approx;

namespace
{

FeSpacePtr space_of(const Mesh &mesh) { return FeSpace::create(std::make_shared<const Mesh>(mesh)); }

// Outward unit normal of leaf t on edge e.
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
  if (n.x * (c.x - a.x) + n.y * (c.y - a.y) > 0)
  {
    n = {-n.x, -n.y};
  }
  return n;
}

}  // namespace

TEST_CASE("Zero data gives zero indicators", "[estimator]")
{
  const auto space = space_of(Mesh::initial(3));
  const auto one = interpolate(space, [](const Point &) { return 1.0; });
  const auto zero = FeFunction::zero(space);
  const auto eta = estimate(one, zero, zero);
  CHECK(eta.leaves.size() == space->mesh().num_leaves());
  CHECK(eta.total_sq == 0.0);
  for (double e : eta.eta_sq)
  {
    CHECK(e == 0.0);
  }
}

TEST_CASE("Volume term alone scales like the fourth power of the mesh size", "[estimator]")
{
  // u = 0 and f = 1: no jumps, eta_T^2 = h_T^2 |T| with h_T = sqrt(2) / n0, |T| = 1 / (2 n0^2).
  for (int n0 : {1, 2, 4, 8})
  {
    const auto space = space_of(Mesh::initial(n0));
    const auto one = interpolate(space, [](const Point &) { return 1.0; });
    const auto eta = estimate(one, one, FeFunction::zero(space));
    const double l = 1.0 / n0;
    for (double e : eta.eta_sq)
    {
      CHECK(e == Approx(l * l * l * l).epsilon(1e-13));
    }
    CHECK(eta.total_sq == Approx(2.0 * l * l).epsilon(1e-12));
  }
}

TEST_CASE("Edge jumps agree with finite-difference normal fluxes", "[estimator]")
{
  auto mesh = Mesh::initial(2);
  mesh.refine_triangle(3);
  const auto space = space_of(mesh);
  const auto kappa = interpolate(space, [](const Point &x) { return 1.0 + x.x + x.y * x.y; });
  const auto u = interpolate(space, [](const Point &x) {
    return std::sin(std::numbers::pi * x.x) * x.y * (1 - x.y);
  });
  int interior = 0;
  for (auto t : space->leaves())
  {
    for (int i = 0; i < 3; i++)
    {
      const Edge e = mesh.triangle(t).edge(i);
      if (mesh.is_boundary_edge(e))
      {
        CHECK_THROWS_AS(jump(kappa, u, e), std::invalid_argument);
        continue;
      }
      const auto sides = mesh.edge_triangles(e);
      REQUIRE(sides[0] != kNone);
      REQUIRE(sides[1] != kNone);
      interior++;
      const Point g1 = oracle::fd_gradient(u, sides[0]), g2 = oracle::fd_gradient(u, sides[1]);
      const Point n1 = outward_normal(mesh, sides[0], e), n2 = outward_normal(mesh, sides[1], e);
      const double flux = g1.x * n1.x + g1.y * n1.y + g2.x * n2.x + g2.y * n2.y;
      const auto j = jump(kappa, u, e);
      CHECK(j.at_a == Approx(kappa[e.a] * flux).margin(1e-7));
      CHECK(j.at_b == Approx(kappa[e.b] * flux).margin(1e-7));
      const Point &a = mesh.vertex(e.a), &b = mesh.vertex(e.b);
      CHECK(j.length == Approx(std::hypot(b.x - a.x, b.y - a.y)));
      // Either side order gives the same jump.
      const auto swapped = jump(kappa, u, e, sides[1], sides[0]);
      CHECK(swapped.at_a == Approx(j.at_a).margin(1e-14));
      CHECK(swapped.at_b == Approx(j.at_b).margin(1e-14));
    }
  }
  CHECK(interior > 0);
}

TEST_CASE("Squared jump integral is exact for linear jumps", "[estimator]")
{
  const EdgeJump j{1.0, 3.0, 2.0};
  // Integral of (1 + s)^2 over s in [0, 2].
  CHECK(j.integral_sq() == Approx(26.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("Indicators of the hat function", "[estimator]")
{
  // Center hat on initial_mesh(2), kappa = 1, f = 0: gradients have length 2 on every patch
  // triangle; each interior edge of the patch carries a constant jump.
  const auto mesh = Mesh::initial(2);
  const auto space = space_of(mesh);
  Vector nodal = Vector::Zero(9);
  nodal[4] = 1.0;
  const FeFunction hat(space, nodal);
  const auto one = interpolate(space, [](const Point &) { return 1.0; });
  const auto eta = estimate(one, FeFunction::zero(space), hat);
  double total = 0.0;
  for (std::size_t k = 0; k < eta.leaves.size(); k++)
  {
    const auto t = eta.leaves[k];
    double edge_sum = 0.0;
    for (int i = 0; i < 3; i++)
    {
      const Edge e = mesh.triangle(t).edge(i);
      if (!mesh.is_boundary_edge(e))
      {
        edge_sum += jump(one, hat, e).integral_sq();
      }
    }
    CHECK(eta.eta_sq[k] == Approx(mesh.diameter(t) * edge_sum).epsilon(1e-14));
    total += eta.eta_sq[k];
  }
  CHECK(eta.total_sq == Approx(total).epsilon(1e-14));
  CHECK(eta.total_sq > 0.0);
}

TEST_CASE("Estimator decreases under uniform refinement", "[estimator]")
{
  const auto problem = CookieProblem{}.instance({0.7, 0.2});
  auto mesh = Mesh::initial(4);
  double previous = std::numeric_limits<double>::infinity();
  for (int level = 0; level < 4; level++)
  {
    const auto space = space_of(mesh);
    const auto kappa = interpolate(space, problem.kappa);
    const auto f = interpolate(space, problem.f);
    const auto u = solve_galerkin(kappa, f);
    const auto eta = estimate(kappa, f, u);
    const double sum = std::accumulate(eta.eta_sq.begin(), eta.eta_sq.end(), 0.0);
    CHECK(eta.total_sq == Approx(sum).epsilon(1e-12));
    CHECK(eta.total_sq < previous);
    previous = eta.total_sq;
    mesh.uniform_refine();
  }
}

TEST_CASE("Estimator rejects functions on different meshes", "[estimator]")
{
  const auto a = space_of(Mesh::initial(2));
  const auto b = space_of(Mesh::initial(3));
  const auto one_a = interpolate(a, [](const Point &) { return 1.0; });
  const auto one_b = interpolate(b, [](const Point &) { return 1.0; });
  CHECK_THROWS_AS(estimate(one_a, one_a, one_b), std::invalid_argument);
}

TEST_CASE("Linear functions have no residual", "[estimator]")
{
  auto mesh = Mesh::initial(3);
  mesh.refine_triangle(5);
  mesh.refine_triangle(mesh.leaves().back());
  const auto space = space_of(mesh);
  const auto kappa = interpolate(space, [](const Point &) { return 2.5; });
  const auto u = interpolate(space, [](const Point &x) { return 0.3 + x.x - 2 * x.y; });
  const auto eta = estimate(kappa, FeFunction::zero(space), u);
  for (double e : eta.eta_sq)
  {
    CHECK(e <= 1e-28);
  }
}

TEST_CASE("Estimator decreases for the manufactured problem", "[estimator]")
{
  const auto problem = ManufacturedProblem::instance();
  auto mesh = Mesh::initial(2);
  double previous = std::numeric_limits<double>::infinity();
  for (int level = 0; level < 4; level++)
  {
    const auto space = space_of(mesh);
    const auto kappa = interpolate(space, problem.kappa);
    const auto f = interpolate(space, problem.f);
    const auto eta = estimate(kappa, f, solve_galerkin(kappa, f));
    CHECK(eta.total_sq < previous);
    previous = eta.total_sq;
    mesh.uniform_refine();
  }
}

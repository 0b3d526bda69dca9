#include "mlafem/fem.hpp"

#include <cmath>
#include <string>

namespace mlafem
{

namespace
{

void require_same_mesh(const FeSpace &a, const FeSpace &b, const char *what)
{
  if (&a.mesh() != &b.mesh() && !(a.mesh() == b.mesh()))
  {
    throw std::invalid_argument(std::string(what) + ": functions live on different meshes");
  }
}

double quadratic_form(const SparseMatrix &m, const Vector &v)
{
  return std::max(0.0, v.dot(m * v));
}

}  // namespace

FeSpace::FeSpace(std::shared_ptr<const Mesh> mesh) : mesh_(std::move(mesh))
{
  leaves_ = mesh_->leaves();
  node_to_dof_.assign(mesh_->num_vertices(), kNone);
  for (std::size_t v = 0; v < mesh_->num_vertices(); v++)
  {
    if (!mesh_->is_boundary_vertex(static_cast<VertexId>(v)))
    {
      node_to_dof_[v] = static_cast<int>(free_nodes_.size());
      free_nodes_.push_back(static_cast<VertexId>(v));
    }
  }
}

std::shared_ptr<const FeSpace> FeSpace::create(std::shared_ptr<const Mesh> mesh)
{
  if (!mesh)
  {
    throw std::invalid_argument("FeSpace requires a mesh");
  }
  return std::shared_ptr<const FeSpace>(new FeSpace(std::move(mesh)));
}

FeFunction::FeFunction(FeSpacePtr space, Vector nodal)
  : space_(std::move(space)), nodal_(std::move(nodal))
{
  if (!space_ || static_cast<std::size_t>(nodal_.size()) != space_->num_nodes())
  {
    throw std::invalid_argument("coefficient vector does not match the space");
  }
}

FeFunction FeFunction::zero(FeSpacePtr space)
{
  const auto n = static_cast<Eigen::Index>(space->num_nodes());
  return {std::move(space), Vector::Zero(n)};
}

FeFunction FeFunction::from_dofs(FeSpacePtr space, const Vector &dofs)
{
  if (static_cast<std::size_t>(dofs.size()) != space->num_dofs())
  {
    throw std::invalid_argument("dof vector does not match the space");
  }
  Vector nodal = Vector::Zero(static_cast<Eigen::Index>(space->num_nodes()));
  const auto free = space->free_nodes();
  for (std::size_t i = 0; i < free.size(); i++)
  {
    nodal[free[i]] = dofs[static_cast<Eigen::Index>(i)];
  }
  return {std::move(space), std::move(nodal)};
}

Vector FeFunction::dofs() const
{
  const auto free = space_->free_nodes();
  Vector out(static_cast<Eigen::Index>(free.size()));
  for (std::size_t i = 0; i < free.size(); i++)
  {
    out[static_cast<Eigen::Index>(i)] = nodal_[free[i]];
  }
  return out;
}

FeFunction interpolate(FeSpacePtr space, const ScalarField &g)
{
  const auto &mesh = space->mesh();
  Vector nodal(static_cast<Eigen::Index>(space->num_nodes()));
  for (std::size_t v = 0; v < mesh.num_vertices(); v++)
  {
    const double value = g(mesh.vertex(static_cast<VertexId>(v)));
    if (!std::isfinite(value))
    {
      throw std::invalid_argument("field is not finite at vertex " + std::to_string(v));
    }
    nodal[static_cast<Eigen::Index>(v)] = value;
  }
  return {std::move(space), std::move(nodal)};
}

std::array<Point, 3> barycentric_gradients(const Mesh &mesh, TriangleId t)
{
  const auto &v = mesh.triangle(t).vertices;
  const Point &p0 = mesh.vertex(v[0]), &p1 = mesh.vertex(v[1]), &p2 = mesh.vertex(v[2]);
  const double twice_area = (p1.x - p0.x) * (p2.y - p0.y) - (p1.y - p0.y) * (p2.x - p0.x);
  return {Point{(p1.y - p2.y) / twice_area, (p2.x - p1.x) / twice_area},
          Point{(p2.y - p0.y) / twice_area, (p0.x - p2.x) / twice_area},
          Point{(p0.y - p1.y) / twice_area, (p1.x - p0.x) / twice_area}};
}

namespace
{

// Symmetric element loop; (i, j) and (j, i) receive bitwise identical contributions in the
// same order, so the assembled matrix is exactly symmetric.
template <typename Local, typename Index>
SparseMatrix assemble_matrix(const FeSpace &space, std::size_t n, Local &&local, Index &&index)
{
  const auto &mesh = space.mesh();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(space.leaves().size() * 9);
  for (auto t : space.leaves())
  {
    const auto &v = mesh.triangle(t).vertices;
    const auto k = local(t);
    for (int a = 0; a < 3; a++)
    {
      const int i = index(v[a]);
      if (i == kNone)
      {
        continue;
      }
      for (int b = 0; b < 3; b++)
      {
        const int j = index(v[b]);
        if (j != kNone)
        {
          triplets.emplace_back(i, j, k[std::min(a, b)][std::max(a, b)]);
        }
      }
    }
  }
  SparseMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

std::array<std::array<double, 3>, 3> local_stiffness(const FeSpace &space, TriangleId t,
                                                     const FeFunction *kappa)
{
  const auto &mesh = space.mesh();
  const auto g = barycentric_gradients(mesh, t);
  const auto &v = mesh.triangle(t).vertices;
  double scale = mesh.area(t);
  if (kappa)
  {
    scale *= ((*kappa)[v[0]] + (*kappa)[v[1]] + (*kappa)[v[2]]) / 3.0;
  }
  std::array<std::array<double, 3>, 3> k{};
  for (int a = 0; a < 3; a++)
  {
    for (int b = a; b < 3; b++)
    {
      k[a][b] = scale * (g[a].x * g[b].x + g[a].y * g[b].y);
    }
  }
  return k;
}

std::array<std::array<double, 3>, 3> local_mass(const Mesh &mesh, TriangleId t)
{
  const double d = mesh.area(t) / 12.0;
  return {{{2 * d, d, d}, {0.0, 2 * d, d}, {0.0, 0.0, 2 * d}}};
}

}  // namespace

SparseMatrix stiffness_matrix(const FeSpace &space, const FeFunction *kappa)
{
  if (kappa)
  {
    require_same_mesh(space, kappa->space(), "stiffness_matrix");
  }
  return assemble_matrix(
      space, space.num_nodes(), [&](TriangleId t) { return local_stiffness(space, t, kappa); },
      [](VertexId v) { return static_cast<int>(v); });
}

SparseMatrix mass_matrix(const FeSpace &space)
{
  return assemble_matrix(
      space, space.num_nodes(), [&](TriangleId t) { return local_mass(space.mesh(), t); },
      [](VertexId v) { return static_cast<int>(v); });
}

LinearSystem assemble(const FeSpace &space, const FeFunction &kappa, const FeFunction &f)
{
  require_same_mesh(space, kappa.space(), "assemble");
  require_same_mesh(space, f.space(), "assemble");
  for (Eigen::Index v = 0; v < kappa.nodal().size(); v++)
  {
    if (!(kappa.nodal()[v] > 0.0))
    {
      throw std::invalid_argument("permeability must be positive; vertex " +
                                  std::to_string(v) + " has " +
                                  std::to_string(kappa.nodal()[v]));
    }
  }
  LinearSystem system;
  system.matrix = assemble_matrix(
      space, space.num_dofs(), [&](TriangleId t) { return local_stiffness(space, t, &kappa); },
      [&](VertexId v) { return space.dof(v); });

  const auto &mesh = space.mesh();
  system.rhs = Vector::Zero(static_cast<Eigen::Index>(space.num_dofs()));
  for (auto t : space.leaves())
  {
    const auto &v = mesh.triangle(t).vertices;
    const auto m = local_mass(mesh, t);
    for (int a = 0; a < 3; a++)
    {
      const int i = space.dof(v[a]);
      if (i == kNone)
      {
        continue;
      }
      double sum = 0.0;
      for (int b = 0; b < 3; b++)
      {
        sum += m[std::min(a, b)][std::max(a, b)] * f[v[b]];
      }
      system.rhs[i] += sum;
    }
  }
  return system;
}

namespace
{

// z = (D + U)^-1 D (D + L)^-1 r
void symmetric_gauss_seidel(const SparseMatrix &a, const Vector &diag, const Vector &r,
                            Vector &z)
{
  const Eigen::Index n = a.rows();
  for (Eigen::Index i = 0; i < n; i++)
  {
    double sum = r[i];
    for (SparseMatrix::InnerIterator it(a, i); it; ++it)
    {
      if (it.col() < i)
      {
        sum -= it.value() * z[it.col()];
      }
    }
    z[i] = sum / diag[i];
  }
  for (Eigen::Index i = n - 1; i >= 0; i--)
  {
    double sum = 0.0;
    for (SparseMatrix::InnerIterator it(a, i); it; ++it)
    {
      if (it.col() > i)
      {
        sum -= it.value() * z[it.col()];
      }
    }
    z[i] += sum / diag[i];
  }
}

}  // namespace

Vector solve(const LinearSystem &system, const SolverOptions &options, SolveStats *stats)
{
  const auto &a = system.matrix;
  const auto &f = system.rhs;
  const Eigen::Index n = f.size();
  if (a.rows() != n || a.cols() != n)
  {
    throw std::invalid_argument("matrix and right-hand side sizes differ");
  }
  Vector x = Vector::Zero(n);
  const double f_norm = f.norm();
  if (n == 0 || f_norm == 0.0)
  {
    if (stats)
    {
      *stats = {0, 0.0};
    }
    return x;
  }
  Vector diag = a.diagonal();
  for (Eigen::Index i = 0; i < n; i++)
  {
    if (!(diag[i] > 0.0))
    {
      throw std::invalid_argument("matrix diagonal must be positive");
    }
  }
  const int max_iter =
      options.max_iterations > 0 ? options.max_iterations : static_cast<int>(10 * n);
  const double target = options.tolerance * f_norm;

  Vector r = f;
  Vector z(n);
  symmetric_gauss_seidel(a, diag, r, z);
  Vector p = z;
  Vector q(n);
  double rz = r.dot(z);
  double r_norm = f_norm;
  int it = 0;
  while (r_norm > target)
  {
    if (it == max_iter)
    {
      throw SolverError("conjugate gradients did not converge in " + std::to_string(it) +
                            " iterations; relative residual " +
                            std::to_string(r_norm / f_norm),
                        r_norm / f_norm, it);
    }
    q.noalias() = a * p;
    const double alpha = rz / p.dot(q);
    x += alpha * p;
    r -= alpha * q;
    r_norm = r.norm();
    it++;
    if (r_norm <= target)
    {
      break;
    }
    symmetric_gauss_seidel(a, diag, r, z);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  // The recursive residual can drift from the true one; report the latter.
  const double true_residual = (f - a * x).norm() / f_norm;
  if (stats)
  {
    *stats = {it, true_residual};
  }
  return x;
}

FeFunction solve_galerkin(const FeFunction &kappa, const FeFunction &f,
                          const SolverOptions &options, SolveStats *stats)
{
  const auto &space = kappa.space_ptr();
  const auto system = assemble(*space, kappa, f);
  return FeFunction::from_dofs(space, solve(system, options, stats));
}

void require_nested(const Mesh &coarse, const Mesh &fine)
{
  if (coarse.n0() != fine.n0() || coarse.num_vertices() > fine.num_vertices())
  {
    throw std::invalid_argument("meshes are not nested");
  }
  for (std::size_t v = 0; v < coarse.num_vertices(); v++)
  {
    if (coarse.lattice(static_cast<VertexId>(v)) != fine.lattice(static_cast<VertexId>(v)))
    {
      throw std::invalid_argument("meshes are not nested: vertex " + std::to_string(v) +
                                  " differs");
    }
  }
  for (std::size_t v = coarse.num_vertices(); v < fine.num_vertices(); v++)
  {
    if (fine.vertex_parents(static_cast<VertexId>(v))[0] == kNone)
    {
      throw std::invalid_argument("meshes are not nested: vertex " + std::to_string(v) +
                                  " has no bisection parents");
    }
  }
}

FeFunction prolong(const FeFunction &coarse, FeSpacePtr fine_space)
{
  const auto &fine_mesh = fine_space->mesh();
  require_nested(coarse.space().mesh(), fine_mesh);
  const auto nc = static_cast<Eigen::Index>(coarse.space().num_nodes());
  Vector nodal(static_cast<Eigen::Index>(fine_space->num_nodes()));
  nodal.head(nc) = coarse.nodal();
  for (Eigen::Index v = nc; v < nodal.size(); v++)
  {
    const auto &par = fine_mesh.vertex_parents(static_cast<VertexId>(v));
    nodal[v] = 0.5 * (nodal[par[0]] + nodal[par[1]]);
  }
  return {std::move(fine_space), std::move(nodal)};
}

FeFunction restrict_to(const FeFunction &fine, FeSpacePtr coarse_space)
{
  require_nested(coarse_space->mesh(), fine.space().mesh());
  const auto nc = static_cast<Eigen::Index>(coarse_space->num_nodes());
  return {std::move(coarse_space), fine.nodal().head(nc)};
}

double energy_norm(const FeFunction &u, const FeFunction &kappa)
{
  return std::sqrt(quadratic_form(stiffness_matrix(u.space(), &kappa), u.nodal()));
}

Norms norms(const FeFunction &u, const FeFunction *kappa)
{
  Norms out;
  if (kappa)
  {
    out.energy = energy_norm(u, *kappa);
  }
  out.l2 = std::sqrt(quadratic_form(mass_matrix(u.space()), u.nodal()));
  out.h1_semi = std::sqrt(quadratic_form(stiffness_matrix(u.space()), u.nodal()));
  return out;
}

}  // namespace mlafem

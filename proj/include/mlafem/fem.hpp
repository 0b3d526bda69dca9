#ifndef MLAFEM_FEM_HPP
#define MLAFEM_FEM_HPP

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>
#include <Eigen/Sparse>
#include "mlafem/mesh.hpp"

namespace mlafem
{

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using ScalarField = std::function<double(const Point &)>;

// P1 Lagrange space on the leaves of a mesh with homogeneous Dirichlet conditions on the
// boundary of the unit square. Degrees of freedom are the interior vertices in vertex-id
// order.
class FeSpace
{
public:
  static std::shared_ptr<const FeSpace> create(std::shared_ptr<const Mesh> mesh);

  const Mesh &mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh> &mesh_ptr() const { return mesh_; }
  std::span<const TriangleId> leaves() const { return leaves_; }

  std::size_t num_nodes() const { return node_to_dof_.size(); }
  std::size_t num_dofs() const { return free_nodes_.size(); }
  // Dof index of a vertex, or kNone for boundary vertices.
  int dof(VertexId v) const { return node_to_dof_.at(v); }
  std::span<const VertexId> free_nodes() const { return free_nodes_; }

private:
  explicit FeSpace(std::shared_ptr<const Mesh> mesh);

  std::shared_ptr<const Mesh> mesh_;
  std::vector<TriangleId> leaves_;
  std::vector<int> node_to_dof_;
  std::vector<VertexId> free_nodes_;
};

using FeSpacePtr = std::shared_ptr<const FeSpace>;

// Coefficients of a P1 function over all mesh vertices. Solutions carry zero boundary
// values; data fields such as the permeability and the load use every node.
class FeFunction
{
public:
  FeFunction(FeSpacePtr space, Vector nodal);

  static FeFunction zero(FeSpacePtr space);
  // Expands interior coefficients, setting boundary nodes to zero.
  static FeFunction from_dofs(FeSpacePtr space, const Vector &dofs);

  const FeSpace &space() const { return *space_; }
  const FeSpacePtr &space_ptr() const { return space_; }
  const Vector &nodal() const { return nodal_; }
  Vector &nodal() { return nodal_; }
  double operator[](VertexId v) const { return nodal_[v]; }

  // Interior coefficients in dof order.
  Vector dofs() const;

private:
  FeSpacePtr space_;
  Vector nodal_;
};

struct LinearSystem
{
  SparseMatrix matrix;  // interior rows and columns only
  Vector rhs;
};

struct SolverOptions
{
  double tolerance = 1e-10;  // on ||A u - f|| / ||f||
  int max_iterations = 0;    // 0 selects 10 * number of unknowns
};

struct SolveStats
{
  int iterations = 0;
  double relative_residual = 0.0;
};

class SolverError : public std::runtime_error
{
public:
  SolverError(const std::string &what, double residual, int iterations)
    : std::runtime_error(what), residual_(residual), iterations_(iterations)
  {
  }
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

private:
  double residual_;
  int iterations_;
};

// Nodal interpolation at every vertex, boundary included.
FeFunction interpolate(FeSpacePtr space, const ScalarField &g);

// Gradients of the three barycentric coordinates of a triangle.
std::array<Point, 3> barycentric_gradients(const Mesh &mesh, TriangleId t);

// Full-node matrices, boundary rows included. A null kappa means kappa = 1.
SparseMatrix stiffness_matrix(const FeSpace &space, const FeFunction *kappa = nullptr);
SparseMatrix mass_matrix(const FeSpace &space);

// Galerkin system for -div(kappa grad u) = f with u = 0 on the boundary. kappa_h and f_h
// are P1, so every integral is evaluated in closed form.
LinearSystem assemble(const FeSpace &space, const FeFunction &kappa, const FeFunction &f);

// Conjugate gradients preconditioned with symmetric Gauss-Seidel. Throws SolverError when
// the iteration limit is reached.
Vector solve(const LinearSystem &system, const SolverOptions &options = {},
             SolveStats *stats = nullptr);

// Assembles and solves on the space of kappa.
FeFunction solve_galerkin(const FeFunction &kappa, const FeFunction &f,
                          const SolverOptions &options = {}, SolveStats *stats = nullptr);

// Exact P1 prolongation onto a refinement of the coarse mesh: shared vertices keep their
// value, bisection midpoints take the mean of the bisected edge.
FeFunction prolong(const FeFunction &coarse, FeSpacePtr fine_space);
// Values at the vertices of a coarser mesh of the same hierarchy.
FeFunction restrict_to(const FeFunction &fine, FeSpacePtr coarse_space);

// Throws unless fine refines coarse (shared vertex prefix, bisection parents known).
void require_nested(const Mesh &coarse, const Mesh &fine);

struct Norms
{
  std::optional<double> energy;  // present when a permeability was given
  double l2 = 0.0;
  double h1_semi = 0.0;
};

Norms norms(const FeFunction &u, const FeFunction *kappa = nullptr);
double energy_norm(const FeFunction &u, const FeFunction &kappa);

}  // namespace mlafem

#endif  // MLAFEM_FEM_HPP

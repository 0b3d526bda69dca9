#ifndef MLAFEM_ESTIMATOR_HPP
#define MLAFEM_ESTIMATOR_HPP

#include <memory>
#include <vector>
#include "mlafem/fem.hpp"

namespace mlafem
{

// Squared local indicators eta_T^2 on the leaves of a mesh, in ascending leaf-id order.
struct EstimatorField
{
  std::shared_ptr<const Mesh> mesh;
  std::vector<TriangleId> leaves;
  std::vector<double> eta_sq;
  double total_sq = 0.0;
};

// Flux jump kappa_h (grad u_1 . n_1 + grad u_2 . n_2) along an interior edge. kappa_h is
// continuous and the gradients are constant, so the jump is linear in arclength and is
// stored by its endpoint values.
struct EdgeJump
{
  double at_a = 0.0;  // at edge.a
  double at_b = 0.0;  // at edge.b
  double length = 0.0;

  // Integral of the squared jump over the edge (Simpson's rule, exact for the quadratic).
  double integral_sq() const;
};

// The two sides are the leaves adjacent to the edge, taken in the given order.
EdgeJump jump(const FeFunction &kappa, const FeFunction &u, const Edge &edge,
              TriangleId first, TriangleId second);
// Same, with the adjacent leaves taken in stored order. Boundary edges are rejected.
EdgeJump jump(const FeFunction &kappa, const FeFunction &u, const Edge &edge);

// Residual indicator
//   eta_T^2 = h_T^2 ||f_h + grad kappa_h . grad u_h||^2_T + h_T sum_{e in dT interior} ||[kappa_h grad u_h]||^2_e
// with h_T the longest edge of T. Every interior edge contributes to both adjacent
// triangles; boundary edges contribute nothing.
EstimatorField estimate(const FeFunction &kappa, const FeFunction &f, const FeFunction &u);

}  // namespace mlafem

#endif  // MLAFEM_ESTIMATOR_HPP

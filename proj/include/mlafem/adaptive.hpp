#ifndef MLAFEM_ADAPTIVE_HPP
#define MLAFEM_ADAPTIVE_HPP

#include <cstdint>
#include <memory>
#include <span>
#include <vector>
#include "mlafem/estimator.hpp"
#include "mlafem/fem.hpp"
#include "mlafem/marking.hpp"
#include "mlafem/problems.hpp"

namespace mlafem
{

struct AfemConfig
{
  int n0 = 4;
  int n_steps = 3;  // number of grids N
  MarkingRule marking = MarkingRule::dorfler(0.5);
  SolverOptions solver;
};

// Output of N adaptive steps. Index k of every per-step array refers to grid k + 1.
struct MultilevelSolution
{
  std::vector<FeSpacePtr> spaces;     // nested hierarchy, spaces[k] on mesh k + 1
  std::vector<FeFunction> kappa;      // kappa_h per grid
  std::vector<FeFunction> load;       // f_h per grid
  std::vector<FeFunction> solutions;  // Galerkin solution u_(n) per grid
  // corrections[0] = u_(1); corrections[n - 1] = v_(n) = u_(n) - prolong(u_(n-1)).
  std::vector<FeFunction> corrections;
  // surpluses[n - 1][i - 1] = v_(n)^i, the hierarchical layer of correction n on grid i.
  std::vector<std::vector<FeFunction>> surpluses;
  std::vector<EstimatorField> estimators;  // grids 1 .. N-1
  std::vector<Marking> markings;           // grids 1 .. N-1

  std::size_t num_steps() const { return spaces.size(); }
  // u_(1) + sum_n v_(n) on the finest grid.
  FeFunction telescoped() const;
};

// Solve -> Estimate -> Mark -> Refine for config.n_steps grids starting from the initial
// mesh. Marked triangles are refined twice (refine_triangle).
MultilevelSolution afem_run(const ProblemData &problem, const AfemConfig &config);

// Same loop on a prescribed hierarchy: estimators are recomputed, the markings are taken
// from the run that produced the meshes.
MultilevelSolution afem_run_fixed(const ProblemData &problem,
                                  std::span<const FeSpacePtr> hierarchy,
                                  std::span<const Marking> markings,
                                  const SolverOptions &solver = {});

// Splits a function on grid n into layers v^1 .. v^n: v^1 holds the values at the grid-1
// vertices, v^i the surplus over the grid-(i-1) interpolant at vertices new on grid i
// and zero elsewhere.
std::vector<FeFunction> hierarchical_decompose(const FeFunction &v,
                                               std::span<const FeSpacePtr> hierarchy);
// Inverse of hierarchical_decompose.
FeFunction hierarchical_reconstruct(std::span<const FeFunction> layers,
                                    std::span<const FeSpacePtr> hierarchy);

// Node-aligned image on the (n0 2^level + 1)^2 tensor grid, row-major with rows along y.
struct GridImage
{
  int level = 0;
  int size = 0;  // points per side
  std::vector<double> values;
  std::vector<std::uint8_t> mask;

  static GridImage blank(int n0, int level);
};

struct ImageSet
{
  GridImage kappa;                               // finest uniform grid, pointwise
  GridImage load;                                // finest uniform grid, pointwise
  std::vector<std::vector<GridImage>> surpluses; // [n - 1][i - 1], on grid level i - 1
  std::vector<GridImage> markers;                // M^i: node touches a marked triangle
  std::vector<GridImage> estimators;             // sum of eta_T^2 over incident leaves
};

ImageSet encode_images(const MultilevelSolution &solution, const ProblemData &problem);

// Reads the layers of one correction back from its images (masked pixels only).
std::vector<FeFunction> decode_layers(std::span<const GridImage> images,
                                      std::span<const FeSpacePtr> hierarchy);

// Finest-grid function u_(1) + sum_n v_(n) assembled from per-step surplus images.
FeFunction decode_solution(std::span<const std::vector<GridImage>> surplus_images,
                           std::span<const FeSpacePtr> hierarchy);

}  // namespace mlafem

#endif  // MLAFEM_ADAPTIVE_HPP

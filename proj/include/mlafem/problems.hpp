#ifndef MLAFEM_PROBLEMS_HPP
#define MLAFEM_PROBLEMS_HPP

#include <array>
#include <cstdint>
#include <vector>
#include "mlafem/fem.hpp"

namespace mlafem
{

// Permeability and load of one diffusion problem instance.
struct ProblemData
{
  ScalarField kappa;
  ScalarField f;
};

struct ParameterSample
{
  std::array<double, 2> y{0.0, 0.0};
  std::uint64_t seed = 0;
  std::size_t index = 0;
};

// kappa(x, y) = base + sum_k y_k chi_{D_k}(x) with open disks D_k. The default disks sit
// in the right column of the 2 x 2 cell lattice, D_1 below D_2.
struct CookieProblem
{
  double base = 0.1;
  double radius = 0.15;
  std::array<Point, 2> centers{Point{0.75, 0.25}, Point{0.75, 0.75}};
  double load = 1.0;

  double kappa(const Point &x, const std::array<double, 2> &y) const;
  ProblemData instance(const std::array<double, 2> &y) const;
};

// i.i.d. U([0,1]^2) parameters from a seeded 64-bit Mersenne twister.
std::vector<ParameterSample> sample_parameters(std::size_t n, std::uint64_t seed);

// -Laplace u = f on the unit square with u = sin(pi x) sin(pi y).
struct ManufacturedProblem
{
  static double exact(const Point &x);
  static Point exact_gradient(const Point &x);
  static double load(const Point &x);
  static ProblemData instance();
};

}  // namespace mlafem

#endif  // MLAFEM_PROBLEMS_HPP

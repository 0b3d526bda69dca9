#include "mlafem/problems.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace mlafem
{

double CookieProblem::kappa(const Point &x, const std::array<double, 2> &y) const
{
  double value = base;
  for (std::size_t k = 0; k < centers.size(); k++)
  {
    const double dx = x.x - centers[k].x, dy = x.y - centers[k].y;
    if (dx * dx + dy * dy < radius * radius)
    {
      value += y[k];
    }
  }
  return value;
}

ProblemData CookieProblem::instance(const std::array<double, 2> &y) const
{
  return {[problem = *this, y](const Point &x) { return problem.kappa(x, y); },
          [load = load](const Point &) { return load; }};
}

std::vector<ParameterSample> sample_parameters(std::size_t n, std::uint64_t seed)
{
  if (n == 0)
  {
    throw std::invalid_argument("sample count must be positive");
  }
  std::mt19937_64 rng(seed);
  // 53 random bits mapped to [0, 1); independent of the standard library's distributions.
  const auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::vector<ParameterSample> out(n);
  for (std::size_t i = 0; i < n; i++)
  {
    out[i].y[0] = uniform();
    out[i].y[1] = uniform();
    out[i].seed = seed;
    out[i].index = i;
  }
  return out;
}

double ManufacturedProblem::exact(const Point &x)
{
  using std::numbers::pi;
  return std::sin(pi * x.x) * std::sin(pi * x.y);
}

Point ManufacturedProblem::exact_gradient(const Point &x)
{
  using std::numbers::pi;
  return {pi * std::cos(pi * x.x) * std::sin(pi * x.y),
          pi * std::sin(pi * x.x) * std::cos(pi * x.y)};
}

double ManufacturedProblem::load(const Point &x)
{
  using std::numbers::pi;
  return 2.0 * pi * pi * exact(x);
}

ProblemData ManufacturedProblem::instance()
{
  return {[](const Point &) { return 1.0; }, &ManufacturedProblem::load};
}

}  // namespace mlafem

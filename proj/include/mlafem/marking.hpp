#ifndef MLAFEM_MARKING_HPP
#define MLAFEM_MARKING_HPP

#include <cstdint>
#include <vector>
#include "mlafem/estimator.hpp"

namespace mlafem
{

struct MarkingRule
{
  enum class Kind
  {
    Dorfler,
    Threshold
  };

  Kind kind = Kind::Dorfler;
  double parameter = 0.5;  // theta in (0, 1] for Dorfler, tau > 0 for Threshold

  static MarkingRule dorfler(double theta);
  static MarkingRule threshold(double tau);
};

struct Marking
{
  std::vector<TriangleId> marked;  // ascending triangle ids
  std::vector<std::uint8_t> mask;  // aligned with EstimatorField::leaves
};

// Dorfler: shortest prefix of the indicators sorted descending (ties by ascending id)
// whose sum reaches theta * total. Threshold: every T with eta_T^2 > tau^2.
Marking mark(const EstimatorField &eta, const MarkingRule &rule);

// Index-level variant over a bare vector of squared indicators.
std::vector<std::size_t> mark_indices(const std::vector<double> &eta_sq,
                                      const MarkingRule &rule);

}  // namespace mlafem

#endif  // MLAFEM_MARKING_HPP

#include "mlafem/marking.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace mlafem
{

MarkingRule MarkingRule::dorfler(double theta)
{
  if (!(theta > 0.0 && theta <= 1.0))
  {
    throw std::invalid_argument("Dorfler parameter must lie in (0, 1], got " +
                                std::to_string(theta));
  }
  return {Kind::Dorfler, theta};
}

MarkingRule MarkingRule::threshold(double tau)
{
  if (!(tau > 0.0))
  {
    throw std::invalid_argument("threshold must be positive, got " + std::to_string(tau));
  }
  return {Kind::Threshold, tau};
}

std::vector<std::size_t> mark_indices(const std::vector<double> &eta_sq,
                                      const MarkingRule &rule)
{
  if (eta_sq.empty())
  {
    throw std::invalid_argument("cannot mark an empty estimator");
  }
  // Re-validate, rules may be built by aggregate initialization.
  const auto checked = rule.kind == MarkingRule::Kind::Dorfler
                           ? MarkingRule::dorfler(rule.parameter)
                           : MarkingRule::threshold(rule.parameter);
  std::vector<std::size_t> out;
  if (checked.kind == MarkingRule::Kind::Threshold)
  {
    const double cut = checked.parameter * checked.parameter;
    for (std::size_t i = 0; i < eta_sq.size(); i++)
    {
      if (eta_sq[i] > cut)
      {
        out.push_back(i);
      }
    }
    return out;
  }

  std::vector<std::size_t> order(eta_sq.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return eta_sq[i] > eta_sq[j]; });
  // Sum in sorted order so that theta = 1 is reached exactly at the last positive entry.
  double total = 0.0;
  for (auto i : order)
  {
    total += eta_sq[i];
  }
  const double target = checked.parameter * total;
  double prefix = 0.0;
  for (auto i : order)
  {
    if (prefix >= target)
    {
      break;
    }
    prefix += eta_sq[i];
    out.push_back(i);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Marking mark(const EstimatorField &eta, const MarkingRule &rule)
{
  if (eta.leaves.size() != eta.eta_sq.size())
  {
    throw std::invalid_argument("estimator field is inconsistent");
  }
  Marking out;
  out.mask.assign(eta.leaves.size(), 0);
  for (auto i : mark_indices(eta.eta_sq, rule))
  {
    out.mask[i] = 1;
    out.marked.push_back(eta.leaves[i]);
  }
  return out;
}

}  // namespace mlafem

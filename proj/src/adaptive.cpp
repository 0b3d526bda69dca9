#include "mlafem/adaptive.hpp"

#include <string>

namespace mlafem
{

namespace
{

FeFunction solve_step(const ProblemData &problem, const FeSpacePtr &space,
                      const SolverOptions &solver, std::size_t step, FeFunction &kappa,
                      FeFunction &load)
{
  kappa = interpolate(space, problem.kappa);
  load = interpolate(space, problem.f);
  try
  {
    return solve_galerkin(kappa, load, solver);
  }
  catch (const SolverError &e)
  {
    throw SolverError("AFEM step " + std::to_string(step) + ": " + e.what(), e.residual(),
                      e.iterations());
  }
}

// Appends grid n (1-based) to the solution; estimators are computed on every grid but
// the last.
void add_step(MultilevelSolution &out, const ProblemData &problem, const FeSpacePtr &space,
              const SolverOptions &solver)
{
  const std::size_t n = out.spaces.size() + 1;
  FeFunction kappa = FeFunction::zero(space), load = FeFunction::zero(space);
  FeFunction u = solve_step(problem, space, solver, n, kappa, load);
  out.spaces.push_back(space);
  if (n == 1)
  {
    out.corrections.push_back(u);
  }
  else
  {
    FeFunction v = u;
    v.nodal() -= prolong(out.solutions.back(), space).nodal();
    out.corrections.push_back(std::move(v));
  }
  out.surpluses.push_back(hierarchical_decompose(out.corrections.back(), out.spaces));
  out.kappa.push_back(std::move(kappa));
  out.load.push_back(std::move(load));
  out.solutions.push_back(std::move(u));
}

}  // namespace

FeFunction MultilevelSolution::telescoped() const
{
  FeFunction w = corrections.front();
  for (std::size_t k = 1; k < corrections.size(); k++)
  {
    w = prolong(w, spaces[k]);
    w.nodal() += corrections[k].nodal();
  }
  return w;
}

MultilevelSolution afem_run(const ProblemData &problem, const AfemConfig &config)
{
  if (config.n_steps < 1)
  {
    throw std::invalid_argument("AFEM needs at least one step");
  }
  MultilevelSolution out;
  auto mesh = std::make_shared<const Mesh>(Mesh::initial(config.n0));
  add_step(out, problem, FeSpace::create(mesh), config.solver);
  for (int n = 2; n <= config.n_steps; n++)
  {
    auto eta = estimate(out.kappa.back(), out.load.back(), out.solutions.back());
    auto marking = mark(eta, config.marking);
    Mesh refined = *mesh;
    for (auto t : marking.marked)
    {
      // A marked leaf may already have been bisected as a neighbor of an earlier one.
      refined.refine_to_depth(t, 2);
    }
    mesh = std::make_shared<const Mesh>(std::move(refined));
    out.estimators.push_back(std::move(eta));
    out.markings.push_back(std::move(marking));
    add_step(out, problem, FeSpace::create(mesh), config.solver);
  }
  return out;
}

MultilevelSolution afem_run_fixed(const ProblemData &problem,
                                  std::span<const FeSpacePtr> hierarchy,
                                  std::span<const Marking> markings,
                                  const SolverOptions &solver)
{
  if (hierarchy.empty() || markings.size() + 1 != hierarchy.size())
  {
    throw std::invalid_argument("fixed hierarchy needs one marking per refinement step");
  }
  MultilevelSolution out;
  for (std::size_t k = 0; k < hierarchy.size(); k++)
  {
    if (k > 0)
    {
      out.estimators.push_back(
          estimate(out.kappa.back(), out.load.back(), out.solutions.back()));
      if (markings[k - 1].mask.size() != out.estimators.back().leaves.size())
      {
        throw std::invalid_argument("marking does not match grid " + std::to_string(k));
      }
      out.markings.push_back(markings[k - 1]);
    }
    add_step(out, problem, hierarchy[k], solver);
  }
  return out;
}

std::vector<FeFunction> hierarchical_decompose(const FeFunction &v,
                                               std::span<const FeSpacePtr> hierarchy)
{
  if (hierarchy.empty() || hierarchy.back()->num_nodes() != v.space().num_nodes())
  {
    throw std::invalid_argument("hierarchy must end on the mesh of the function");
  }
  std::vector<FeFunction> layers;
  layers.push_back(restrict_to(v, hierarchy[0]));
  for (std::size_t i = 1; i < hierarchy.size(); i++)
  {
    const auto old_nodes = static_cast<Eigen::Index>(hierarchy[i - 1]->num_nodes());
    FeFunction layer = restrict_to(v, hierarchy[i]);
    layer.nodal() -= prolong(restrict_to(v, hierarchy[i - 1]), hierarchy[i]).nodal();
    layer.nodal().head(old_nodes).setZero();
    layers.push_back(std::move(layer));
  }
  return layers;
}

FeFunction hierarchical_reconstruct(std::span<const FeFunction> layers,
                                    std::span<const FeSpacePtr> hierarchy)
{
  if (layers.empty() || layers.size() != hierarchy.size())
  {
    throw std::invalid_argument("layer count " + std::to_string(layers.size()) +
                                " does not match hierarchy depth " +
                                std::to_string(hierarchy.size()));
  }
  FeFunction w(hierarchy[0], layers[0].nodal());
  for (std::size_t i = 1; i < layers.size(); i++)
  {
    w = prolong(w, hierarchy[i]);
    if (layers[i].nodal().size() != w.nodal().size())
    {
      throw std::invalid_argument("layer " + std::to_string(i + 1) + " has the wrong size");
    }
    w.nodal() += layers[i].nodal();
  }
  return w;
}

GridImage GridImage::blank(int n0, int level)
{
  GridImage img;
  img.level = level;
  img.size = grid_size(n0, level);
  const auto n = static_cast<std::size_t>(img.size) * static_cast<std::size_t>(img.size);
  img.values.assign(n, 0.0);
  img.mask.assign(n, 0);
  return img;
}

namespace
{

// Vertices [first, last) of a grid-level image: surplus and node masks.
GridImage scatter(const FeSpace &space, int level, const Vector &values, std::size_t first,
                  std::size_t last)
{
  const auto &mesh = space.mesh();
  GridImage img = GridImage::blank(mesh.n0(), level);
  const auto index = node_grid_index(mesh, level);
  for (std::size_t v = first; v < last; v++)
  {
    const auto pixel = static_cast<std::size_t>(index[v][0]) * img.size + index[v][1];
    img.values[pixel] = values[static_cast<Eigen::Index>(v)];
    img.mask[pixel] = 1;
  }
  return img;
}

GridImage pointwise(const ScalarField &g, int n0, int level)
{
  GridImage img = GridImage::blank(n0, level);
  const double h = 1.0 / (static_cast<double>(n0) * static_cast<double>(1 << level));
  for (int r = 0; r < img.size; r++)
  {
    for (int c = 0; c < img.size; c++)
    {
      const auto pixel = static_cast<std::size_t>(r) * img.size + c;
      img.values[pixel] = g(Point{c * h, r * h});
      img.mask[pixel] = 1;
    }
  }
  return img;
}

}  // namespace

ImageSet encode_images(const MultilevelSolution &solution, const ProblemData &problem)
{
  const std::size_t steps = solution.num_steps();
  if (steps == 0)
  {
    throw std::invalid_argument("empty multilevel solution");
  }
  const int n0 = solution.spaces[0]->mesh().n0();
  const int finest = static_cast<int>(steps) - 1;
  ImageSet images;
  images.kappa = pointwise(problem.kappa, n0, finest);
  images.load = pointwise(problem.f, n0, finest);

  std::vector<std::size_t> first_new(steps);
  for (std::size_t i = 0; i < steps; i++)
  {
    first_new[i] = i == 0 ? 0 : solution.spaces[i - 1]->num_nodes();
  }
  for (std::size_t n = 0; n < steps; n++)
  {
    std::vector<GridImage> layers;
    for (std::size_t i = 0; i <= n; i++)
    {
      const auto &space = *solution.spaces[i];
      layers.push_back(scatter(space, static_cast<int>(i), solution.surpluses[n][i].nodal(),
                               first_new[i], space.num_nodes()));
    }
    images.surpluses.push_back(std::move(layers));
  }

  for (std::size_t i = 0; i + 1 < steps; i++)
  {
    const auto &space = *solution.spaces[i];
    const auto &mesh = space.mesh();
    const auto &eta = solution.estimators[i];
    const auto &marking = solution.markings[i];
    Vector node_marker = Vector::Zero(static_cast<Eigen::Index>(space.num_nodes()));
    Vector node_eta = Vector::Zero(static_cast<Eigen::Index>(space.num_nodes()));
    for (std::size_t k = 0; k < eta.leaves.size(); k++)
    {
      for (auto v : mesh.triangle(eta.leaves[k]).vertices)
      {
        node_eta[v] += eta.eta_sq[k];
        if (marking.mask[k])
        {
          node_marker[v] = 1.0;
        }
      }
    }
    images.markers.push_back(scatter(space, static_cast<int>(i), node_marker, 0,
                                     space.num_nodes()));
    images.estimators.push_back(
        scatter(space, static_cast<int>(i), node_eta, 0, space.num_nodes()));
  }
  return images;
}

std::vector<FeFunction> decode_layers(std::span<const GridImage> images,
                                      std::span<const FeSpacePtr> hierarchy)
{
  if (images.size() != hierarchy.size())
  {
    throw std::invalid_argument("image count does not match hierarchy depth");
  }
  std::vector<FeFunction> layers;
  for (std::size_t i = 0; i < images.size(); i++)
  {
    const auto &space = hierarchy[i];
    const auto &img = images[i];
    const int n0 = space->mesh().n0();
    if (img.size != grid_size(n0, static_cast<int>(i)) ||
        img.values.size() != static_cast<std::size_t>(img.size) * img.size)
    {
      throw std::invalid_argument("image " + std::to_string(i + 1) + " has the wrong shape");
    }
    const auto index = node_grid_index(space->mesh(), static_cast<int>(i));
    const std::size_t first = i == 0 ? 0 : hierarchy[i - 1]->num_nodes();
    Vector nodal = Vector::Zero(static_cast<Eigen::Index>(space->num_nodes()));
    for (std::size_t v = first; v < space->num_nodes(); v++)
    {
      nodal[static_cast<Eigen::Index>(v)] =
          img.values[static_cast<std::size_t>(index[v][0]) * img.size + index[v][1]];
    }
    layers.emplace_back(space, std::move(nodal));
  }
  return layers;
}

FeFunction decode_solution(std::span<const std::vector<GridImage>> surplus_images,
                           std::span<const FeSpacePtr> hierarchy)
{
  if (surplus_images.empty() || surplus_images.size() != hierarchy.size())
  {
    throw std::invalid_argument("need one image group per grid");
  }
  FeFunction w = FeFunction::zero(hierarchy[0]);
  for (std::size_t n = 0; n < surplus_images.size(); n++)
  {
    const auto sub = hierarchy.first(n + 1);
    const auto v = hierarchical_reconstruct(decode_layers(surplus_images[n], sub), sub);
    w = n == 0 ? v : prolong(w, hierarchy[n]);
    if (n > 0)
    {
      w.nodal() += v.nodal();
    }
  }
  return w;
}

}  // namespace mlafem

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <catch_amalgamated.hpp>
#include "mlafem/pipeline.hpp"
#include "oracles.hpp"

using namespace mlafem;
using Catch::Approx;
namespace fs = std::filesystem;

namespace
{

// Fresh scratch directory, removed on destruction.
struct ScratchDir
{
  fs::path path;

  explicit ScratchDir(const std::string &name)
    : path(fs::temp_directory_path() / ("mlafem_test_" + name))
  {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchDir() { fs::remove_all(path); }
};

std::string bytes_of(const fs::path &p)
{
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

PipelineConfig small_config(int steps, std::size_t n)
{
  PipelineConfig c;
  c.n0 = 4;
  c.n_steps = steps;
  c.n_samples = n;
  c.seed = 7;
  return c;
}

}  // namespace

TEST_CASE("Configuration JSON", "[pipeline]")
{
  auto c = small_config(3, 5);
  c.marking = MarkingRule::threshold(0.02);
  c.per_sample_meshes = true;
  c.y_ref = {0.25, 0.75};
  const auto back = PipelineConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.marking.kind == MarkingRule::Kind::Threshold);
  CHECK(back.per_sample_meshes);

  const auto defaults = PipelineConfig::from_json(nlohmann::json::object());
  CHECK(defaults.n0 == 4);
  CHECK(!defaults.per_sample_meshes);
  CHECK(defaults.marking.parameter == 0.5);

  CHECK_THROWS_AS(PipelineConfig::from_json({{"mode", "sometimes"}}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json({{"marking", "threshold"}}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json({{"theta", 2.0}}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json({{"n_steps", 0}}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json({{"n0", "four"}}), ConfigError);
}

TEST_CASE("Single-step dataset structure", "[pipeline]")
{
  ScratchDir dir("structure");
  const auto manifest = generate_dataset(small_config(1, 2), dir.path);
  REQUIRE(manifest.samples.size() == 2);
  for (const auto &s : manifest.samples)
  {
    CHECK(s.status == "ok");
    CHECK(fs::is_directory(dir.path / s.dir));
    for (const std::string role : {"kappa", "f", "v_1_1", "mask_1", "solution", "reference"})
    {
      REQUIRE(s.files.count(role) == 1);
      CHECK(fs::is_regular_file(dir.path / s.files.at(role).path));
    }
    CHECK(s.files.at("v_1_1").shape == std::vector<std::size_t>{5, 5});
    CHECK(s.files.at("kappa").shape == std::vector<std::size_t>{5, 5});
  }
  CHECK(manifest.samples[0].y != manifest.samples[1].y);
  CHECK(manifest.meshes.size() == 1);
  CHECK(manifest.validate(dir.path).empty());
}

TEST_CASE("Dataset generation is deterministic and resumable", "[pipeline]")
{
  ScratchDir a("det_a"), b("det_b");
  const auto config = small_config(3, 3);
  const auto ma = generate_dataset(config, a.path, 1);
  const auto mb = generate_dataset(config, b.path, 3);
  CHECK(ma.to_json() == mb.to_json());
  CHECK(bytes_of(a.path / "manifest.json") == bytes_of(b.path / "manifest.json"));
  for (const auto &s : ma.samples)
  {
    REQUIRE(s.status == "ok");
    for (const auto &[role, f] : s.files)
    {
      INFO(f.path);
      CHECK(bytes_of(a.path / f.path) == bytes_of(b.path / f.path));
    }
  }
  CHECK(ma.shapes.at("v_3_3") == std::vector<std::size_t>{17, 17});
  CHECK(ma.shapes.at("v_3_2") == std::vector<std::size_t>{9, 9});
  CHECK(ma.shapes.at("marker_2") == std::vector<std::size_t>{9, 9});

  // A complete sample is kept as is: overwrite one tensor with same-size data and rerun.
  const auto target = a.path / ma.samples[1].files.at("v_2_2").path;
  const auto original = bytes_of(target);
  std::vector<double> junk(original.size() / 8, 42.0);
  write_f64(target, junk);
  // A missing file forces that sample to be regenerated.
  const auto removed = a.path / ma.samples[2].files.at("eta_1").path;
  const auto removed_bytes = bytes_of(removed);
  fs::remove(removed);
  const auto again = generate_dataset(config, a.path, 2);
  CHECK(again.to_json() == ma.to_json());
  CHECK(bytes_of(target) != original);
  CHECK(bytes_of(removed) == removed_bytes);
}

TEST_CASE("Manifest round trip and validation", "[pipeline]")
{
  ScratchDir dir("manifest");
  const auto manifest = generate_dataset(small_config(2, 2), dir.path);
  const auto loaded = DatasetManifest::from_json(read_json(dir.path / "manifest.json"));
  CHECK(loaded.to_json() == manifest.to_json());
  CHECK(loaded.validate(dir.path).empty());

  fs::remove(dir.path / manifest.samples[0].files.at("v_2_1").path);
  write_f64(dir.path / manifest.samples[1].files.at("kappa").path, std::vector<double>(3, 0.0));
  auto problems = loaded.validate(dir.path);
  CHECK(problems.size() == 2);

  auto short_manifest = loaded;
  short_manifest.samples.pop_back();
  problems = short_manifest.validate(dir.path);
  CHECK(problems.size() == 2);
}

TEST_CASE("Solver failures are recorded per sample", "[pipeline]")
{
  ScratchDir dir("failures");
  auto config = small_config(2, 2);
  config.per_sample_meshes = true;
  config.solver_max_iterations = 1;
  const auto manifest = generate_dataset(config, dir.path);
  REQUIRE(manifest.samples.size() == 2);
  for (const auto &s : manifest.samples)
  {
    CHECK(s.status == "solver_failed");
    CHECK(!s.error.empty());
  }
  CHECK(fs::is_regular_file(dir.path / "manifest.json"));
}

TEST_CASE("Error metrics on ground truth and zero predictions", "[pipeline]")
{
  ScratchDir data("errors_data"), zero("errors_zero");
  const auto manifest = generate_dataset(small_config(3, 3), data.path);

  const auto truth = compute_dataset_errors(data.path, data.path);
  CHECK(truth.n_samples == 3);
  CHECK(truth.h1.nn == 0.0);
  CHECK(truth.l2.nn == 0.0);
  CHECK(truth.h1.total == truth.h1.discr);
  CHECK(truth.l2.total == truth.l2.discr);
  CHECK(truth.h1.discr > 0.0);
  CHECK(truth.h1.discr < 1.0);

  for (const auto &s : manifest.samples)
  {
    for (const auto &[role, f] : s.files)
    {
      if (role.rfind("v_", 0) == 0)
      {
        fs::create_directories((zero.path / f.path).parent_path());
        write_f64(zero.path / f.path, std::vector<double>(f.shape[0] * f.shape[1], 0.0));
      }
    }
  }
  const auto z = compute_dataset_errors(data.path, zero.path);
  CHECK(z.h1.nn == 1.0);
  CHECK(z.l2.nn == 1.0);
  CHECK(z.h1.total == 1.0);

  const auto j = truth.to_json();
  CHECK(j.at("n_samples") == 3);
  CHECK(j.at("H1_0").at("E_NN") == 0.0);
  CHECK(j.at("L2").contains("E_discr"));

  ScratchDir empty("errors_empty");
  CHECK_THROWS_AS(compute_dataset_errors(data.path, empty.path), IoError);
}

TEST_CASE("Reference solution", "[pipeline]")
{
  const auto problem = CookieProblem{}.instance({0.5, 0.5});
  const auto mesh = Mesh::initial(2);
  const auto space = reference_space(mesh);
  CHECK(space->mesh().num_leaves() == 16 * mesh.num_leaves());
  const auto u = reference_solution(problem, mesh);
  const auto system = assemble(*space, interpolate(space, problem.kappa),
                               interpolate(space, problem.f));
  const auto dense = oracle::dense_solve(system);
  CHECK((u.dofs() - dense).lpNorm<Eigen::Infinity>() <= 1e-8);

  // Galerkin energies grow under refinement: a(u, u) = f(u) and nested spaces.
  const auto coarse = FeSpace::create(std::make_shared<const Mesh>(mesh));
  const auto coarse_kappa = interpolate(coarse, problem.kappa);
  const auto uc = solve_galerkin(coarse_kappa, interpolate(coarse, problem.f));
  CHECK(energy_norm(u, interpolate(space, problem.kappa)) >= energy_norm(uc, coarse_kappa));

  ProblemData zero = problem;
  zero.f = [](const Point &) { return 0.0; };
  CHECK(reference_solution(zero, mesh).nodal().norm() == 0.0);
}

TEST_CASE("Reference numbering survives mesh serialization", "[pipeline]")
{
  const auto sol = afem_run(CookieProblem{}.instance({0.5, 0.5}), small_config(3, 1).afem());
  const auto &mesh = sol.spaces.back()->mesh();
  const auto direct = reference_space(mesh);
  const auto loaded = reference_space(mesh_from_json(mesh_to_json(mesh)));
  REQUIRE(direct->num_nodes() == loaded->num_nodes());
  for (std::size_t v = 0; v < direct->num_nodes(); v++)
  {
    REQUIRE(direct->mesh().lattice(static_cast<VertexId>(v)) ==
            loaded->mesh().lattice(static_cast<VertexId>(v)));
  }
}

TEST_CASE("Convergence study", "[pipeline]")
{
  const auto problem = CookieProblem{}.instance({0.5, 0.5});
  StudyOptions options;
  options.max_dofs = 4000;
  const auto uniform = convergence_study(problem, "uniform", options);
  const auto adaptive = convergence_study(problem, "adaptive", options);
  CHECK(uniform.budget_reached);
  REQUIRE(uniform.rows.size() >= 3);
  for (std::size_t k = 1; k < uniform.rows.size(); k++)
  {
    const double growth = static_cast<double>(uniform.rows[k].dofs) / uniform.rows[k - 1].dofs;
    CHECK(growth > 3.0);
    CHECK(growth < 9.1);
  }
  REQUIRE(adaptive.rows.size() >= 3);
  for (std::size_t k = 1; k < adaptive.rows.size(); k++)
  {
    CHECK(adaptive.rows[k].dofs > adaptive.rows[k - 1].dofs);
    CHECK(adaptive.rows[k].h1_error <= adaptive.rows[k - 1].h1_error);
  }
  const auto csv = study_csv(uniform.rows);
  CHECK(csv.rfind("mode,step,dofs,h1_error,l2_error,eta_sq\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') ==
        static_cast<long>(uniform.rows.size() + 1));
  CHECK_THROWS_AS(convergence_study(problem, "random", options), std::invalid_argument);
}

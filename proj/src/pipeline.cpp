#include "mlafem/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

namespace mlafem
{

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------------------
// Configuration

AfemConfig PipelineConfig::afem() const
{
  return {n0, n_steps, marking, solver()};
}

PipelineConfig PipelineConfig::from_json(const json &j)
{
  PipelineConfig c;
  try
  {
    c.n0 = j.value("n0", c.n0);
    c.n_steps = j.value("n_steps", c.n_steps);
    c.seed = j.value("seed", c.seed);
    c.n_samples = j.value("n_samples", c.n_samples);
    c.solver_tolerance = j.value("solver_tol", c.solver_tolerance);
    c.solver_max_iterations = j.value("solver_max_iter", c.solver_max_iterations);
    c.cookie.base = j.value("base", c.cookie.base);
    c.cookie.radius = j.value("radius", c.cookie.radius);
    c.cookie.load = j.value("load", c.cookie.load);
    if (j.contains("centers"))
    {
      const auto &centers = j.at("centers");
      if (centers.size() != 2)
      {
        throw ConfigError("exactly two disk centers are supported");
      }
      for (std::size_t k = 0; k < 2; k++)
      {
        c.cookie.centers[k] = {centers.at(k).at(0).get<double>(),
                               centers.at(k).at(1).get<double>()};
      }
    }
    if (j.contains("y_ref"))
    {
      c.y_ref = j.at("y_ref").get<std::array<double, 2>>();
    }
    const std::string mode = j.value("mode", std::string("fixed"));
    if (mode != "fixed" && mode != "adaptive")
    {
      throw ConfigError("mode must be \"fixed\" or \"adaptive\", got \"" + mode + "\"");
    }
    c.per_sample_meshes = mode == "adaptive";
    const std::string marking = j.value("marking", std::string("dorfler"));
    if (marking == "dorfler")
    {
      c.marking = MarkingRule::dorfler(j.value("theta", 0.5));
    }
    else if (marking == "threshold")
    {
      if (!j.contains("tau"))
      {
        throw ConfigError("threshold marking needs \"tau\"");
      }
      c.marking = MarkingRule::threshold(j.at("tau").get<double>());
    }
    else
    {
      throw ConfigError("unknown marking \"" + marking + "\"");
    }
  }
  catch (const json::exception &e)
  {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  catch (const ConfigError &)
  {
    throw;
  }
  catch (const std::invalid_argument &e)
  {
    throw ConfigError(e.what());
  }
  if (c.n0 < 1 || c.n_steps < 1 || c.n_samples < 1)
  {
    throw ConfigError("n0, n_steps and n_samples must be positive");
  }
  if (c.solver_max_iterations < 0)
  {
    throw ConfigError("solver_max_iter must not be negative");
  }
  if (!(c.solver_tolerance > 0.0) || !(c.cookie.radius > 0.0) || !(c.cookie.base > 0.0))
  {
    throw ConfigError("solver_tol, radius and base must be positive");
  }
  return c;
}

json PipelineConfig::to_json() const
{
  json j = {{"n0", n0},
            {"n_steps", n_steps},
            {"seed", seed},
            {"n_samples", n_samples},
            {"solver_tol", solver_tolerance},
            {"solver_max_iter", solver_max_iterations},
            {"base", cookie.base},
            {"radius", cookie.radius},
            {"load", cookie.load},
            {"centers",
             {{cookie.centers[0].x, cookie.centers[0].y},
              {cookie.centers[1].x, cookie.centers[1].y}}},
            {"y_ref", y_ref},
            {"mode", per_sample_meshes ? "adaptive" : "fixed"}};
  if (marking.kind == MarkingRule::Kind::Dorfler)
  {
    j["marking"] = "dorfler";
    j["theta"] = marking.parameter;
  }
  else
  {
    j["marking"] = "threshold";
    j["tau"] = marking.parameter;
  }
  return j;
}

// ---------------------------------------------------------------------------------------
// Manifest

namespace
{

std::size_t element_size(const std::string &dtype)
{
  if (dtype == "f64")
  {
    return 8;
  }
  if (dtype == "u8")
  {
    return 1;
  }
  return 0;
}

std::size_t element_count(const std::vector<std::size_t> &shape)
{
  std::size_t n = 1;
  for (auto s : shape)
  {
    n *= s;
  }
  return n;
}

json sample_to_json(const SampleRecord &s)
{
  json files = json::object();
  for (const auto &[role, f] : s.files)
  {
    files[role] = {{"path", f.path}, {"shape", f.shape}, {"dtype", f.dtype}};
  }
  return {{"id", s.id},      {"y", s.y},     {"status", s.status},
          {"error", s.error}, {"dir", s.dir}, {"files", files}};
}

SampleRecord sample_from_json(const json &j)
{
  SampleRecord s;
  s.id = j.at("id").get<std::size_t>();
  s.y = j.at("y").get<std::array<double, 2>>();
  s.status = j.at("status").get<std::string>();
  s.error = j.value("error", std::string());
  s.dir = j.at("dir").get<std::string>();
  for (const auto &[role, f] : j.at("files").items())
  {
    s.files[role] = {f.at("path").get<std::string>(),
                     f.at("shape").get<std::vector<std::size_t>>(),
                     f.at("dtype").get<std::string>()};
  }
  return s;
}

std::vector<std::string> check_files(const fs::path &root, const SampleRecord &s)
{
  std::vector<std::string> problems;
  for (const auto &[role, f] : s.files)
  {
    const fs::path p = root / f.path;
    std::error_code ec;
    if (!fs::is_regular_file(p, ec))
    {
      problems.push_back("sample " + std::to_string(s.id) + ": missing " + f.path);
      continue;
    }
    const std::size_t bytes = element_size(f.dtype);
    if (bytes == 0)
    {
      continue;  // structured files (mesh JSON) carry no shape
    }
    if (fs::file_size(p, ec) != bytes * element_count(f.shape))
    {
      problems.push_back("sample " + std::to_string(s.id) + ": " + f.path +
                         " does not match its declared shape");
    }
  }
  return problems;
}

}  // namespace

json DatasetManifest::to_json() const
{
  json meshes_json = json::array();
  for (const auto &m : meshes)
  {
    meshes_json.push_back({{"path", m.path}, {"hash", m.hash}});
  }
  json samples_json = json::array();
  for (const auto &s : samples)
  {
    samples_json.push_back(sample_to_json(s));
  }
  return {{"version", version},
          {"config", config.to_json()},
          {"meshes", meshes_json},
          {"shapes", shapes},
          {"samples", samples_json}};
}

DatasetManifest DatasetManifest::from_json(const json &j)
{
  DatasetManifest m;
  try
  {
    m.version = j.at("version").get<int>();
    m.config = PipelineConfig::from_json(j.at("config"));
    for (const auto &mesh : j.at("meshes"))
    {
      m.meshes.push_back({mesh.at("path").get<std::string>(),
                          mesh.at("hash").get<std::string>()});
    }
    m.shapes = j.at("shapes").get<std::map<std::string, std::vector<std::size_t>>>();
    for (const auto &s : j.at("samples"))
    {
      m.samples.push_back(sample_from_json(s));
    }
  }
  catch (const json::exception &e)
  {
    throw IoError(std::string("malformed dataset manifest: ") + e.what());
  }
  return m;
}

std::vector<std::string> DatasetManifest::validate(const fs::path &root) const
{
  std::vector<std::string> problems;
  if (samples.size() != config.n_samples)
  {
    problems.push_back("manifest lists " + std::to_string(samples.size()) +
                       " samples, config asks for " + std::to_string(config.n_samples));
  }
  for (const auto &m : meshes)
  {
    std::error_code ec;
    if (!fs::is_regular_file(root / m.path, ec))
    {
      problems.push_back("missing mesh " + m.path);
    }
    else if (fnv1a_hex(read_json(root / m.path).dump()) != m.hash)
    {
      problems.push_back("mesh " + m.path + " does not match its hash");
    }
  }
  for (const auto &s : samples)
  {
    if (s.status != "ok")
    {
      continue;
    }
    auto p = check_files(root, s);
    problems.insert(problems.end(), p.begin(), p.end());
  }
  return problems;
}

// ---------------------------------------------------------------------------------------
// Sample export

namespace
{

std::string step_name(const char *prefix, std::size_t a)
{
  return std::string(prefix) + "_" + std::to_string(a);
}

std::string step_name(const char *prefix, std::size_t a, std::size_t b)
{
  return step_name(prefix, a) + "_" + std::to_string(b);
}

class SampleWriter
{
public:
  SampleWriter(const fs::path &root, std::string dir, SampleRecord &record)
    : root_(root), dir_(std::move(dir)), record_(record)
  {
    fs::create_directories(root_ / dir_);
  }

  void f64(const std::string &role, std::span<const double> values,
           std::vector<std::size_t> shape)
  {
    const std::string rel = dir_ + "/" + role + ".f64";
    write_f64(root_ / rel, values);
    record_.files[role] = {rel, std::move(shape), "f64"};
  }

  void u8(const std::string &role, std::span<const std::uint8_t> values)
  {
    const std::string rel = dir_ + "/" + role + ".u8";
    write_u8(root_ / rel, values);
    record_.files[role] = {rel, {values.size()}, "u8"};
  }

  void image(const std::string &role, const GridImage &img)
  {
    const auto s = static_cast<std::size_t>(img.size);
    f64(role, img.values, {s, s});
  }

  void mask(const std::string &role, const GridImage &img)
  {
    std::vector<double> m(img.mask.begin(), img.mask.end());
    const auto s = static_cast<std::size_t>(img.size);
    f64(role, m, {s, s});
  }

  void json_file(const std::string &role, const json &value)
  {
    const std::string rel = dir_ + "/" + role + ".json";
    write_json(root_ / rel, value);
    record_.files[role] = {rel, {}, "json"};
  }

private:
  fs::path root_;
  std::string dir_;
  SampleRecord &record_;
};

std::span<const double> values_of(const FeFunction &u)
{
  return {u.nodal().data(), static_cast<std::size_t>(u.nodal().size())};
}

}  // namespace

SampleRecord write_sample(const fs::path &root, const std::string &dir,
                          const MultilevelSolution &solution, const ProblemData &problem,
                          const FeFunction &reference, bool with_meshes)
{
  SampleRecord record;
  record.dir = dir;
  SampleWriter out(root, dir, record);
  const auto images = encode_images(solution, problem);
  const std::size_t steps = solution.num_steps();

  out.image("kappa", images.kappa);
  out.image("f", images.load);
  for (std::size_t n = 1; n <= steps; n++)
  {
    for (std::size_t i = 1; i <= n; i++)
    {
      out.image(step_name("v", n, i), images.surpluses[n - 1][i - 1]);
    }
  }
  for (std::size_t i = 1; i <= steps; i++)
  {
    out.mask(step_name("mask", i), images.surpluses[steps - 1][i - 1]);
  }
  for (std::size_t i = 1; i < steps; i++)
  {
    out.image(step_name("marker", i), images.markers[i - 1]);
    out.image(step_name("eta_img", i), images.estimators[i - 1]);
    const auto &eta = solution.estimators[i - 1];
    out.f64(step_name("eta", i), eta.eta_sq, {eta.eta_sq.size()});
    out.u8(step_name("marked", i), solution.markings[i - 1].mask);
  }
  const auto &final_solution = solution.solutions.back();
  out.f64("solution", values_of(final_solution),
          {static_cast<std::size_t>(final_solution.nodal().size())});
  out.f64("reference", values_of(reference),
          {static_cast<std::size_t>(reference.nodal().size())});
  if (with_meshes)
  {
    for (std::size_t n = 1; n <= steps; n++)
    {
      out.json_file(step_name("mesh", n), mesh_to_json(solution.spaces[n - 1]->mesh()));
    }
  }
  return record;
}

FeSpacePtr reference_space(const Mesh &mesh)
{
  Mesh fine = mesh;
  fine.uniform_refine();
  fine.uniform_refine();
  return FeSpace::create(std::make_shared<const Mesh>(std::move(fine)));
}

namespace
{

FeFunction solve_on(const ProblemData &problem, const FeSpacePtr &space,
                    const SolverOptions &solver)
{
  return solve_galerkin(interpolate(space, problem.kappa), interpolate(space, problem.f),
                        solver);
}

std::string sample_dir_name(std::size_t id)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sample_%05zu", id);
  return buf;
}

std::optional<SampleRecord> resumable(const fs::path &root, const std::string &dir,
                                      const ParameterSample &sample)
{
  const fs::path record_path = root / dir / "sample.json";
  std::error_code ec;
  if (!fs::is_regular_file(record_path, ec))
  {
    return std::nullopt;
  }
  try
  {
    auto record = sample_from_json(read_json(record_path));
    if (record.id != sample.index || record.y != sample.y || record.status != "ok" ||
        !check_files(root, record).empty())
    {
      return std::nullopt;
    }
    return record;
  }
  catch (const std::exception &)
  {
    return std::nullopt;
  }
}

std::vector<FeSpacePtr> load_hierarchy(const fs::path &root,
                                       const std::vector<std::string> &paths)
{
  std::vector<FeSpacePtr> spaces;
  for (const auto &p : paths)
  {
    spaces.push_back(
        FeSpace::create(std::make_shared<const Mesh>(mesh_from_json(read_json(root / p)))));
  }
  return spaces;
}

}  // namespace

FeFunction reference_solution(const ProblemData &problem, const Mesh &final_mesh,
                              const SolverOptions &solver)
{
  return solve_on(problem, reference_space(final_mesh), solver);
}

DatasetManifest generate_dataset(const PipelineConfig &config, const fs::path &out_dir,
                                 int threads)
{
  fs::create_directories(out_dir);
  DatasetManifest manifest;
  manifest.config = config;

  std::vector<FeSpacePtr> hierarchy;
  std::vector<Marking> markings;
  FeSpacePtr fixed_reference;
  if (!config.per_sample_meshes)
  {
    const auto ref = afem_run(config.cookie.instance(config.y_ref), config.afem());
    hierarchy = ref.spaces;
    markings = ref.markings;
    fs::create_directories(out_dir / "meshes");
    for (std::size_t n = 1; n <= hierarchy.size(); n++)
    {
      const std::string rel = "meshes/" + step_name("mesh", n) + ".json";
      const json mesh_json = mesh_to_json(hierarchy[n - 1]->mesh());
      write_json(out_dir / rel, mesh_json);
      manifest.meshes.push_back({rel, fnv1a_hex(mesh_json.dump())});
      if (n < hierarchy.size())
      {
        write_u8(out_dir / ("meshes/" + step_name("marked", n) + ".u8"),
                 markings[n - 1].mask);
      }
    }
    fixed_reference = reference_space(hierarchy.back()->mesh());
  }

  const auto params = sample_parameters(config.n_samples, config.seed);
  std::vector<SampleRecord> records(params.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  const auto work = [&] {
    for (std::size_t i = next++; i < params.size(); i = next++)
    {
      const auto &p = params[i];
      const std::string dir = sample_dir_name(p.index);
      try
      {
        if (auto done = resumable(out_dir, dir, p))
        {
          records[i] = std::move(*done);
          continue;
        }
        SampleRecord record;
        const auto problem = config.cookie.instance(p.y);
        try
        {
          if (config.per_sample_meshes)
          {
            const auto sol = afem_run(problem, config.afem());
            const auto reference = reference_solution(
                problem, sol.spaces.back()->mesh(), config.solver());
            record = write_sample(out_dir, dir, sol, problem, reference, true);
          }
          else
          {
            const auto sol = afem_run_fixed(problem, hierarchy, markings, config.solver());
            const auto reference = solve_on(problem, fixed_reference, config.solver());
            record = write_sample(out_dir, dir, sol, problem, reference, false);
          }
        }
        catch (const SolverError &e)
        {
          record = {};
          record.dir = dir;
          record.status = "solver_failed";
          record.error = e.what();
        }
        record.id = p.index;
        record.y = p.y;
        fs::create_directories(out_dir / dir);
        write_json(out_dir / dir / "sample.json", sample_to_json(record));
        records[i] = std::move(record);
      }
      catch (...)
      {
        std::lock_guard lock(failure_mutex);
        if (!failure)
        {
          failure = std::current_exception();
        }
        next = params.size();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < threads; t++)
    {
      pool.emplace_back(work);
    }
    work();
  }
  if (failure)
  {
    std::rethrow_exception(failure);
  }

  manifest.samples = std::move(records);
  for (const auto &s : manifest.samples)
  {
    if (s.status != "ok")
    {
      continue;
    }
    for (const auto &[role, f] : s.files)
    {
      if (f.shape.size() == 2)
      {
        manifest.shapes[role] = f.shape;
      }
    }
    break;
  }
  write_json(out_dir / "manifest.json", manifest.to_json());
  return manifest;
}

// ---------------------------------------------------------------------------------------
// Error metrics

json ErrorReport::to_json() const
{
  const auto triple = [](const ErrorTriple &t) {
    return json{{"E_NN", t.nn}, {"E_total", t.total}, {"E_discr", t.discr}};
  };
  return {{"n_samples", n_samples}, {"H1_0", triple(h1)}, {"L2", triple(l2)}};
}

namespace
{

struct NormMatrices
{
  SparseMatrix stiffness;
  SparseMatrix mass;
};

class NormCache
{
public:
  const NormMatrices &get(const FeSpacePtr &space)
  {
    auto it = cache_.find(space.get());
    if (it == cache_.end())
    {
      it = cache_.emplace(space.get(), NormMatrices{stiffness_matrix(*space), mass_matrix(*space)})
               .first;
      keep_.push_back(space);
    }
    return it->second;
  }

private:
  std::map<const FeSpace *, NormMatrices> cache_;
  std::vector<FeSpacePtr> keep_;
};

double seminorm(const SparseMatrix &m, const Vector &v)
{
  return std::sqrt(std::max(0.0, v.dot(m * v)));
}

}  // namespace

ErrorReport compute_errors(std::span<const ErrorSample> samples)
{
  if (samples.empty())
  {
    throw std::invalid_argument("no samples to evaluate");
  }
  NormCache cache;
  ErrorReport report;
  report.n_samples = samples.size();
  for (const auto &s : samples)
  {
    if (s.prediction.nodal().size() != s.galerkin.nodal().size())
    {
      throw std::invalid_argument("prediction and Galerkin solution have different sizes");
    }
    require_nested(s.galerkin.space().mesh(), s.reference.space().mesh());
    const auto &coarse = cache.get(s.galerkin.space_ptr());
    const auto &fine = cache.get(s.reference.space_ptr());

    const Vector diff = s.prediction.nodal() - s.galerkin.nodal();
    const double g_h1 = seminorm(coarse.stiffness, s.galerkin.nodal());
    const double g_l2 = seminorm(coarse.mass, s.galerkin.nodal());
    const double r_h1 = seminorm(fine.stiffness, s.reference.nodal());
    const double r_l2 = seminorm(fine.mass, s.reference.nodal());
    if (g_h1 == 0.0 || g_l2 == 0.0 || r_h1 == 0.0 || r_l2 == 0.0)
    {
      throw std::invalid_argument("relative errors are undefined for a zero solution");
    }
    report.h1.nn += seminorm(coarse.stiffness, diff) / g_h1;
    report.l2.nn += seminorm(coarse.mass, diff) / g_l2;

    const Vector total = prolong(s.prediction, s.reference.space_ptr()).nodal() -
                         s.reference.nodal();
    const Vector discr =
        prolong(s.galerkin, s.reference.space_ptr()).nodal() - s.reference.nodal();
    report.h1.total += seminorm(fine.stiffness, total) / r_h1;
    report.l2.total += seminorm(fine.mass, total) / r_l2;
    report.h1.discr += seminorm(fine.stiffness, discr) / r_h1;
    report.l2.discr += seminorm(fine.mass, discr) / r_l2;
  }
  const auto n = static_cast<double>(samples.size());
  for (auto *t : {&report.h1, &report.l2})
  {
    t->nn /= n;
    t->total /= n;
    t->discr /= n;
  }
  return report;
}

namespace
{

std::vector<std::vector<GridImage>> read_surplus_images(const fs::path &root,
                                                        const SampleRecord &record,
                                                        std::size_t steps, int n0)
{
  std::vector<std::vector<GridImage>> images(steps);
  for (std::size_t n = 1; n <= steps; n++)
  {
    for (std::size_t i = 1; i <= n; i++)
    {
      const std::string role = step_name("v", n, i);
      auto it = record.files.find(role);
      if (it == record.files.end())
      {
        throw IoError("sample " + std::to_string(record.id) + " lacks " + role);
      }
      GridImage img = GridImage::blank(n0, static_cast<int>(i - 1));
      img.values = read_f64(root / it->second.path);
      if (img.values.size() != static_cast<std::size_t>(img.size) * img.size)
      {
        throw IoError((root / it->second.path).string() + " has the wrong shape");
      }
      images[n - 1].push_back(std::move(img));
    }
  }
  return images;
}

}  // namespace

ErrorReport compute_dataset_errors(const fs::path &dataset_dir, const fs::path &prediction_dir)
{
  const auto manifest = DatasetManifest::from_json(read_json(dataset_dir / "manifest.json"));
  const auto &config = manifest.config;
  const auto steps = static_cast<std::size_t>(config.n_steps);

  std::vector<FeSpacePtr> fixed_hierarchy;
  FeSpacePtr fixed_reference;
  if (!config.per_sample_meshes)
  {
    std::vector<std::string> paths;
    for (const auto &m : manifest.meshes)
    {
      paths.push_back(m.path);
    }
    fixed_hierarchy = load_hierarchy(dataset_dir, paths);
    if (fixed_hierarchy.size() != steps)
    {
      throw IoError("dataset lists " + std::to_string(fixed_hierarchy.size()) +
                    " meshes for " + std::to_string(steps) + " steps");
    }
    fixed_reference = reference_space(fixed_hierarchy.back()->mesh());
  }

  std::vector<ErrorSample> samples;
  for (const auto &record : manifest.samples)
  {
    if (record.status != "ok")
    {
      continue;
    }
    auto hierarchy = fixed_hierarchy;
    auto ref_space = fixed_reference;
    if (config.per_sample_meshes)
    {
      std::vector<std::string> paths;
      for (std::size_t n = 1; n <= steps; n++)
      {
        paths.push_back(record.files.at(step_name("mesh", n)).path);
      }
      hierarchy = load_hierarchy(dataset_dir, paths);
      ref_space = reference_space(hierarchy.back()->mesh());
    }
    const auto truth_images = read_surplus_images(dataset_dir, record, steps, config.n0);
    const auto pred_images = read_surplus_images(prediction_dir, record, steps, config.n0);
    auto galerkin = decode_solution(truth_images, hierarchy);
    auto prediction = decode_solution(pred_images, hierarchy);
    auto ref_values = read_f64(dataset_dir / record.files.at("reference").path);
    if (ref_values.size() != ref_space->num_nodes())
    {
      throw IoError("reference of sample " + std::to_string(record.id) +
                    " does not match the refined mesh");
    }
    FeFunction reference(ref_space,
                         Eigen::Map<const Vector>(ref_values.data(),
                                                  static_cast<Eigen::Index>(ref_values.size())));
    samples.push_back({std::move(prediction), std::move(galerkin), std::move(reference)});
  }
  return compute_errors(samples);
}

// ---------------------------------------------------------------------------------------
// Convergence study

StudyResult convergence_study(const ProblemData &problem, const std::string &mode,
                              const StudyOptions &options)
{
  if (mode != "uniform" && mode != "adaptive")
  {
    throw std::invalid_argument("study mode must be uniform or adaptive, got " + mode);
  }
  StudyResult result;
  Mesh mesh = Mesh::initial(options.n0);
  for (int step = 1; step <= options.max_steps; step++)
  {
    auto space = FeSpace::create(std::make_shared<const Mesh>(mesh));
    if (space->num_dofs() > options.max_dofs)
    {
      result.budget_reached = true;
      break;
    }
    const auto kappa = interpolate(space, problem.kappa);
    const auto load = interpolate(space, problem.f);
    const auto u = solve_galerkin(kappa, load, options.solver);
    const auto eta = estimate(kappa, load, u);

    const auto ref_space = reference_space(mesh);
    const auto u_ref = solve_on(problem, ref_space, options.solver);
    const Vector err = prolong(u, ref_space).nodal() - u_ref.nodal();
    const auto k = stiffness_matrix(*ref_space);
    const auto m = mass_matrix(*ref_space);
    StudyRow row;
    row.mode = mode;
    row.step = step;
    row.dofs = space->num_dofs();
    row.h1_error = seminorm(k, err) / seminorm(k, u_ref.nodal());
    row.l2_error = seminorm(m, err) / seminorm(m, u_ref.nodal());
    row.eta_sq = eta.total_sq;
    result.rows.push_back(row);

    if (mode == "uniform")
    {
      mesh.uniform_refine();
    }
    else
    {
      for (auto t : mark(eta, options.marking).marked)
      {
        mesh.refine_to_depth(t, 2);
      }
    }
  }
  return result;
}

std::string study_csv(std::span<const StudyRow> rows)
{
  std::string out = "mode,step,dofs,h1_error,l2_error,eta_sq\n";
  char buf[256];
  for (const auto &r : rows)
  {
    std::snprintf(buf, sizeof(buf), "%s,%d,%zu,%.17g,%.17g,%.17g\n", r.mode.c_str(), r.step,
                  r.dofs, r.h1_error, r.l2_error, r.eta_sq);
    out += buf;
  }
  return out;
}

}  // namespace mlafem

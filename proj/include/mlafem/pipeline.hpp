#ifndef MLAFEM_PIPELINE_HPP
#define MLAFEM_PIPELINE_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>
#include <json.hpp>
#include "mlafem/adaptive.hpp"
#include "mlafem/io.hpp"
#include "mlafem/problems.hpp"

namespace mlafem
{

class ConfigError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

struct PipelineConfig
{
  int n0 = 4;
  int n_steps = 3;
  MarkingRule marking = MarkingRule::dorfler(0.5);
  double solver_tolerance = 1e-10;
  int solver_max_iterations = 0;  // 0 selects 10 * number of unknowns
  std::uint64_t seed = 0;
  std::size_t n_samples = 1;
  CookieProblem cookie;
  // Fixed mode: every sample reuses the hierarchy of one run at y_ref.
  bool per_sample_meshes = false;
  std::array<double, 2> y_ref{0.5, 0.5};

  AfemConfig afem() const;
  SolverOptions solver() const { return {solver_tolerance, solver_max_iterations}; }

  static PipelineConfig from_json(const nlohmann::json &json);
  nlohmann::json to_json() const;
};

struct TensorFile
{
  std::string path;  // relative to the dataset root
  std::vector<std::size_t> shape;
  std::string dtype = "f64";
};

struct SampleRecord
{
  std::size_t id = 0;
  std::array<double, 2> y{0.0, 0.0};
  std::string status = "ok";  // "ok" or "solver_failed"
  std::string error;
  std::string dir;
  std::map<std::string, TensorFile> files;
};

struct MeshRef
{
  std::string path;
  std::string hash;
};

struct DatasetManifest
{
  int version = 1;
  PipelineConfig config;
  std::vector<MeshRef> meshes;  // fixed mode only
  std::map<std::string, std::vector<std::size_t>> shapes;
  std::vector<SampleRecord> samples;

  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json &json);
  // Problems found on disk: missing files, size mismatches, sample count.
  std::vector<std::string> validate(const std::filesystem::path &root) const;
};

// Writes one AFEM result (images, estimators, markers, final and reference coefficients)
// under root / dir. Mesh files are written too when with_meshes is set.
SampleRecord write_sample(const std::filesystem::path &root, const std::string &dir,
                          const MultilevelSolution &solution, const ProblemData &problem,
                          const FeFunction &reference, bool with_meshes);

// Galerkin solution on the twice uniformly refined mesh.
FeSpacePtr reference_space(const Mesh &mesh);
FeFunction reference_solution(const ProblemData &problem, const Mesh &final_mesh,
                              const SolverOptions &solver = {});

DatasetManifest generate_dataset(const PipelineConfig &config,
                                 const std::filesystem::path &out_dir, int threads = 1);

struct ErrorTriple
{
  double nn = 0.0;
  double total = 0.0;
  double discr = 0.0;
};

struct ErrorReport
{
  std::size_t n_samples = 0;
  ErrorTriple h1;  // H^1_0 seminorm
  ErrorTriple l2;

  nlohmann::json to_json() const;
};

// One test parameter: network output and Galerkin solution on the same grid, and the
// reference solution on a refinement of it.
struct ErrorSample
{
  FeFunction prediction;
  FeFunction galerkin;
  FeFunction reference;
};

// Mean relative errors: E_NN compares prediction and Galerkin solution on their grid,
// E_total and E_discr compare the prolongations of prediction and Galerkin solution
// against the reference.
ErrorReport compute_errors(std::span<const ErrorSample> samples);

// Reads predictions laid out like the dataset (v_<n>_<i>.f64 per sample directory).
ErrorReport compute_dataset_errors(const std::filesystem::path &dataset_dir,
                                   const std::filesystem::path &prediction_dir);

struct StudyRow
{
  std::string mode;  // "uniform" or "adaptive"
  int step = 0;
  std::size_t dofs = 0;
  double h1_error = 0.0;  // relative, against the twice refined reference
  double l2_error = 0.0;
  double eta_sq = 0.0;
};

struct StudyOptions
{
  int n0 = 4;
  std::size_t max_dofs = 100000;
  int max_steps = 40;
  MarkingRule marking = MarkingRule::dorfler(0.5);
  SolverOptions solver;
};

struct StudyResult
{
  std::vector<StudyRow> rows;
  bool budget_reached = false;  // stopped because the next grid exceeds max_dofs
};

StudyResult convergence_study(const ProblemData &problem, const std::string &mode,
                              const StudyOptions &options);
std::string study_csv(std::span<const StudyRow> rows);

}  // namespace mlafem

#endif  // MLAFEM_PIPELINE_HPP

// Command line front end: adaptive solves, dataset generation, convergence studies and
// surrogate error metrics.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <CLI11.hpp>
#include "mlafem/pipeline.hpp"

namespace fs = std::filesystem;
using namespace mlafem;
using nlohmann::json;

namespace
{

enum ExitCode
{
  kSuccess = 0,
  kConfigError = 1,
  kSolverFailure = 2,
  kIoError = 3
};

PipelineConfig load_config(const std::string &path)
{
  if (path.empty())
  {
    return {};
  }
  json j;
  try
  {
    j = read_json(path);
  }
  catch (const IoError &e)
  {
    throw ConfigError(e.what());
  }
  return PipelineConfig::from_json(j);
}

std::array<double, 2> parse_y(const std::string &text)
{
  std::array<double, 2> y{};
  char comma = 0;
  std::istringstream in(text);
  if (!(in >> y[0] >> comma >> y[1]) || comma != ',' || !(in >> std::ws).eof())
  {
    throw ConfigError("--y expects two comma separated numbers, got \"" + text + "\"");
  }
  for (double v : y)
  {
    if (!(v >= 0.0 && v <= 1.0))
    {
      throw ConfigError("parameters must lie in [0, 1]");
    }
  }
  return y;
}

int run_solve(const std::string &config_path, const std::string &y_text, const fs::path &out)
{
  auto config = load_config(config_path);
  const auto y = y_text.empty() ? config.y_ref : parse_y(y_text);
  const auto problem = config.cookie.instance(y);
  const auto sol = afem_run(problem, config.afem());
  const auto reference =
      reference_solution(problem, sol.spaces.back()->mesh(), config.solver());
  fs::create_directories(out);
  auto record = write_sample(out, ".", sol, problem, reference, true);
  record.y = y;

  ErrorSample sample{sol.solutions.back(), sol.solutions.back(), reference};
  const auto errors = compute_errors(std::span(&sample, 1));
  json steps = json::array();
  for (std::size_t k = 0; k < sol.num_steps(); k++)
  {
    json step = {{"step", k + 1},
                 {"dofs", sol.spaces[k]->num_dofs()},
                 {"triangles", sol.spaces[k]->mesh().num_leaves()}};
    if (k < sol.estimators.size())
    {
      step["eta_sq"] = sol.estimators[k].total_sq;
      step["marked"] = sol.markings[k].marked.size();
    }
    steps.push_back(step);
  }
  write_json(out / "report.json", {{"config", config.to_json()},
                                   {"y", y},
                                   {"steps", steps},
                                   {"relative_error_H1_0", errors.h1.discr},
                                   {"relative_error_L2", errors.l2.discr}});
  std::printf("solved %zu steps, final dofs %zu, relative H1_0 error %.4e\n", sol.num_steps(),
              sol.spaces.back()->num_dofs(), errors.h1.discr);
  return kSuccess;
}

int run_dataset(const std::string &config_path, std::size_t n, std::uint64_t seed,
                bool seed_given, int threads, const fs::path &out)
{
  auto config = load_config(config_path);
  if (n > 0)
  {
    config.n_samples = n;
  }
  if (seed_given)
  {
    config.seed = seed;
  }
  const auto manifest = generate_dataset(config, out, threads);
  std::size_t failed = 0;
  for (const auto &s : manifest.samples)
  {
    failed += s.status != "ok";
  }
  std::printf("wrote %zu samples to %s (%zu solver failures)\n", manifest.samples.size(),
              out.string().c_str(), failed);
  return kSuccess;
}

int run_study(const std::string &config_path, const std::string &y_text,
              const std::string &mode, std::size_t max_dofs, const fs::path &csv)
{
  auto config = load_config(config_path);
  const auto y = y_text.empty() ? config.y_ref : parse_y(y_text);
  if (mode != "both" && mode != "uniform" && mode != "adaptive")
  {
    throw ConfigError("--mode must be uniform, adaptive or both");
  }
  StudyOptions options;
  options.n0 = config.n0;
  options.max_dofs = max_dofs;
  options.marking = config.marking;
  options.solver = config.solver();
  std::vector<StudyRow> rows;
  for (const std::string m : {"uniform", "adaptive"})
  {
    if (mode != "both" && mode != m)
    {
      continue;
    }
    auto result = convergence_study(config.cookie.instance(y), m, options);
    if (result.budget_reached)
    {
      std::printf("%s: stopped at the dof budget of %zu after %zu steps\n", m.c_str(),
                  max_dofs, result.rows.size());
    }
    rows.insert(rows.end(), result.rows.begin(), result.rows.end());
  }
  std::ofstream out(csv);
  if (!out)
  {
    throw IoError("cannot open " + csv.string());
  }
  out << study_csv(rows);
  return kSuccess;
}

int run_errors(const fs::path &dataset, const fs::path &pred, const fs::path &report_path)
{
  const auto report = compute_dataset_errors(dataset, pred);
  write_json(report_path, report.to_json());
  std::printf("E_NN(H1_0) %.6e  E_total(H1_0) %.6e  E_discr(H1_0) %.6e\n", report.h1.nn,
              report.h1.total, report.h1.discr);
  std::printf("E_NN(L2)   %.6e  E_total(L2)   %.6e  E_discr(L2)   %.6e\n", report.l2.nn,
              report.l2.total, report.l2.discr);
  return kSuccess;
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Adaptive multilevel finite elements for the parametric Darcy problem"};
  app.require_subcommand(1);

  std::string config_path, y_text, out_dir;
  auto *solve = app.add_subcommand("solve", "one adaptive run, writes images and a report");
  solve->add_option("--config", config_path, "problem configuration JSON");
  solve->add_option("--y", y_text, "parameter pair, e.g. 0.5,0.5");
  solve->add_option("--out", out_dir, "output directory")->required();

  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  int threads = 1;
  auto *dataset = app.add_subcommand("dataset", "generate a training dataset");
  dataset->add_option("--config", config_path, "problem configuration JSON");
  dataset->add_option("--n", n_samples, "number of samples (overrides the config)");
  auto *seed_opt = dataset->add_option("--seed", seed, "sampling seed (overrides the config)");
  dataset->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  dataset->add_option("--out", out_dir, "dataset directory")->required();

  std::string mode = "both", csv_path;
  std::size_t max_dofs = 100000;
  auto *study = app.add_subcommand("study", "uniform vs adaptive convergence data");
  study->add_option("--config", config_path, "problem configuration JSON");
  study->add_option("--y", y_text, "parameter pair (defaults to y_ref of the config)");
  study->add_option("--mode", mode, "uniform, adaptive or both");
  study->add_option("--max-dofs", max_dofs, "dof budget per series");
  study->add_option("--csv", csv_path, "output CSV")->required();

  std::string dataset_dir, pred_dir, report_path;
  auto *errors = app.add_subcommand("errors", "E_NN, E_total and E_discr of predictions");
  errors->add_option("--dataset", dataset_dir, "dataset directory")->required();
  errors->add_option("--pred", pred_dir, "prediction directory")->required();
  errors->add_option("--report", report_path, "report JSON")->required();

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError &e)
  {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kConfigError;
  }

  try
  {
    if (*solve)
    {
      return run_solve(config_path, y_text, out_dir);
    }
    if (*dataset)
    {
      return run_dataset(config_path, n_samples, seed, seed_opt->count() > 0, threads, out_dir);
    }
    if (*study)
    {
      return run_study(config_path, y_text, mode, max_dofs, csv_path);
    }
    return run_errors(dataset_dir, pred_dir, report_path);
  }
  catch (const SolverError &e)
  {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolverFailure;
  }
  catch (const IoError &e)
  {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoError;
  }
  catch (const fs::filesystem_error &e)
  {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoError;
  }
  catch (const std::invalid_argument &e)
  {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  }
}

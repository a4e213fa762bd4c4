#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mirrorstep/geometry.hpp"
#include "mirrorstep/problems.hpp"
#include "mirrorstep/solver.hpp"
#include "mirrorstep/stepsize.hpp"

namespace mirrorstep {

enum class SchemeKind { SelfTuned, Harmonic, OverT };

// Stepsize scheme as written in a config: `selftuned`, `overt`,
// `harmonic:b=<abs>` or `harmonic:bfrac=<fraction of T>`.
struct SchemeSpec {
  SchemeKind kind = SchemeKind::SelfTuned;
  std::optional<double> b;
  std::optional<double> b_frac;

  static SchemeSpec parse(std::string_view text);
  double resolved_b(std::uint64_t T) const;
  // File-name label, e.g. `harmonic-b1000`.
  std::string label(std::uint64_t T) const;
};

struct ExperimentConfig {
  std::string problem = "quadratic";  // quadratic | svm
  std::optional<std::string> dataset_path;
  std::string dataset_format = "auto";  // auto | libsvm | skin
  std::size_t subset_per_class = 0;     // 0 keeps every row
  std::size_t synthetic_rows = 10000;
  std::uint64_t data_seed = 2024;
  double lambda = 0.01;
  std::uint64_t T = 10000;
  std::vector<std::string> schemes{"selftuned"};
  std::vector<double> eta0_list;
  std::vector<std::uint64_t> seeds{1};
  std::size_t blocks = 1;
  std::optional<std::vector<double>> probs;
  std::size_t block_size = 2;  // quadratic only
  double sigma = 1.0;          // quadratic only
  double curvature = 1.0;      // quadratic only
  double radius = 1.0;         // quadratic only
  std::string mode = "subgradient";
  std::uint64_t record_every = 100;
  std::string output_dir = "mirrorstep_out";

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_file(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  // `--key value` override of a top-level field. Values are read as JSON when
  // possible; list fields also accept comma-separated text.
  void apply_override(std::string_view key, std::string_view value);
  void validate() const;
  SolverMode solver_mode() const;
};

// One (scheme, eta0, seed) cell of the experiment grid.
struct CellSpec {
  SchemeSpec scheme;
  std::string scheme_text;
  double eta0 = 0.0;
  std::uint64_t seed = 0;
  StepsizePolicy policy = StepsizePolicy::over_t(1.0);
  bool extrapolated = false;
  std::string file_name;
};

// Shortest decimal that round-trips, used in file names.
std::string compact_double(double v);

class Experiment {
 public:
  explicit Experiment(ExperimentConfig config);

  const ExperimentConfig& config() const noexcept { return config_; }
  const Problem& problem() const noexcept { return *problem_; }
  const Geometry& geometry() const noexcept { return *geometry_; }
  double mu_F() const noexcept { return problem_->strong_convexity(); }
  // Initial stepsizes used when eta0_list is empty (quadratic only): the
  // problem-derived self-tuned value.
  std::vector<double> resolved_eta0s() const;

  std::vector<CellSpec> cells() const;
  Trace run_cell(const CellSpec& cell) const;
  // Runs every cell on up to `threads` workers; output follows cells() order.
  std::vector<Trace> run_all(unsigned threads) const;

  std::optional<NonsmoothParams> nonsmooth_params() const;
  std::optional<SmoothParams> smooth_params() const;

 private:
  StepsizePolicy make_policy(const SchemeSpec& s, double eta0, bool& extrapolated) const;

  ExperimentConfig config_;
  std::shared_ptr<const Problem> problem_;
  std::shared_ptr<const Geometry> geometry_;
};

// MIRRORSTEP_THREADS if set, else hardware concurrency.
unsigned worker_threads_from_env();

struct RunOutput {
  std::vector<std::filesystem::path> files;
  std::filesystem::path manifest;
};

// Writes one CSV per cell plus manifest.json into config.output_dir.
RunOutput cmd_run(const ExperimentConfig& config, unsigned threads);

struct CompareOutput {
  std::filesystem::path series_csv;
  std::filesystem::path constants_csv;
  std::size_t series = 0;
};

// Reads the traces listed in the run manifest and writes compare.csv
// (`scheme,eta0,seed,t,obj_running_mean`) and constants.csv. With `generate`
// the traces are produced first if the manifest is missing.
CompareOutput cmd_compare(const ExperimentConfig& config, unsigned threads, bool generate);

Trace read_trace_csv(const std::filesystem::path& path);

}  // namespace mirrorstep

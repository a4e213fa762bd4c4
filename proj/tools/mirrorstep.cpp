#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mirrorstep/error.hpp"
#include "mirrorstep/experiment.hpp"
#include "mirrorstep/verify.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvariant = 1;
constexpr int kUsage = 2;
constexpr int kIo = 3;

// Leftover `--key value` / `--key=value` pairs become config overrides.
void apply_overrides(mirrorstep::ExperimentConfig& cfg, const std::vector<std::string>& extras) {
  for (std::size_t k = 0; k < extras.size(); ++k) {
    const std::string& arg = extras[k];
    if (arg.rfind("--", 0) != 0) throw mirrorstep::ValidationError("unexpected argument '" + arg + "'");
    std::string key = arg.substr(2);
    std::string value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.resize(eq);
    } else {
      if (k + 1 >= extras.size()) throw mirrorstep::ValidationError("missing value for --" + key);
      value = extras[++k];
    }
    cfg.apply_override(key, value);
  }
}

mirrorstep::ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& extras) {
  mirrorstep::ExperimentConfig cfg;
  if (!path.empty()) cfg = mirrorstep::ExperimentConfig::from_file(path);
  apply_overrides(cfg, extras);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomized block stochastic mirror descent with self-tuned stepsizes"};
  app.require_subcommand(1);

  std::string config_path;
  bool generate = false;
  auto* run = app.add_subcommand("run", "run the experiment grid and write one trace CSV per cell");
  run->add_option("-c,--config", config_path, "JSON config file");
  run->allow_extras();

  std::string suite = "all";
  std::string report_path;
  bool inject_fault = false;
  unsigned workers = 0;
  auto* verify = app.add_subcommand("verify", "run invariant suites and print a JSON report");
  verify->add_option("suite", suite, "sequence | geometry | bounds | all");
  verify->add_option("-o,--output", report_path, "also write the report to this file");
  verify->add_option("--workers", workers, "threads for the brute-force scan (default: MIRRORSTEP_THREADS)");
  verify->add_flag("--inject-theta-fault", inject_fault, "evaluate the closed form with a wrong theta");

  auto* compare = app.add_subcommand("compare", "summarize running-mean objectives and constants");
  compare->add_option("-c,--config", config_path, "JSON config file");
  compare->add_flag("--generate", generate, "run missing traces first");
  compare->allow_extras();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    const unsigned threads = mirrorstep::worker_threads_from_env();
    if (*run) {
      const auto cfg = load_config(config_path, run->remaining());
      const auto out = mirrorstep::cmd_run(cfg, threads);
      std::cout << "wrote " << out.files.size() << " traces and " << out.manifest.string() << "\n";
    } else if (*compare) {
      const auto cfg = load_config(config_path, compare->remaining());
      const auto out = mirrorstep::cmd_compare(cfg, threads, generate);
      std::cout << "wrote " << out.series_csv.string() << " (" << out.series << " series) and "
                << out.constants_csv.string() << "\n";
    } else if (*verify) {
      mirrorstep::VerifyOptions opts;
      opts.inject_theta_fault = inject_fault;
      opts.workers = workers > 0 ? workers : threads;
      const auto report = mirrorstep::run_verify(mirrorstep::parse_verify_suite(suite), opts);
      const std::string json = report.to_json();
      std::cout << json << "\n";
      if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out || !(out << json << "\n")) throw mirrorstep::IoError("cannot write " + report_path);
      }
      if (!report.passed()) {
        for (const auto& name : report.failed_names()) std::cerr << "FAILED " << name << "\n";
        return kInvariant;
      }
    }
  } catch (const mirrorstep::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const mirrorstep::BudgetError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const mirrorstep::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const mirrorstep::ParseError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvariant;
  }
  return kOk;
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"
#include "mirrorstep/error.hpp"
#include "mirrorstep/experiment.hpp"

using namespace mirrorstep;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "mirrorstep_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args, const fs::path& stderr_path = "/dev/null") {
  const std::string cmd = std::string(MIRRORSTEP_CLI) + " " + args + " >/dev/null 2>" + stderr_path.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ExperimentConfig small_quadratic(const fs::path& dir) {
  ExperimentConfig c;
  c.problem = "quadratic";
  c.T = 300;
  c.record_every = 50;
  c.output_dir = dir.string();
  return c;
}

}  // namespace

TEST_CASE("scheme grammar") {
  CHECK(SchemeSpec::parse("selftuned").kind == SchemeKind::SelfTuned);
  CHECK(SchemeSpec::parse("overt").label(100) == "overt");
  CHECK(SchemeSpec::parse("harmonic:b=1000").label(10000) == "harmonic-b1000");
  CHECK(SchemeSpec::parse("harmonic:bfrac=0.2").label(10000) == "harmonic-b2000");
  CHECK(SchemeSpec::parse("harmonic:bfrac=0.1").resolved_b(10000) == 1000.0);
  CHECK_THROWS_AS(SchemeSpec::parse("harmonic"), ValidationError);
  CHECK_THROWS_AS(SchemeSpec::parse("harmonic:b=-1"), ValidationError);
  CHECK_THROWS_AS(SchemeSpec::parse("adagrad"), ValidationError);
  CHECK(compact_double(0.9) == "0.9");
  CHECK(compact_double(100.0) == "100");
}

TEST_CASE("config parsing and overrides") {
  const auto c = ExperimentConfig::from_json(json::parse(R"({"problem":"svm","lambda":0.01,"T":500,
      "schemes":["selftuned","overt"],"eta0_list":[1,2],"seeds":[7],"record_every":10})"));
  CHECK(c.problem == "svm");
  CHECK(c.eta0_list == std::vector<double>{1.0, 2.0});
  CHECK_THROWS_AS(ExperimentConfig::from_json(json::parse(R"({"colour":1})")), ValidationError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json::parse(R"({"T":"many"})")), ValidationError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json::parse(R"({"schemes":["selftuned","selftuned"]})")),
                  ValidationError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json::parse(R"({"problem":"svm","mode":"gradient"})")),
                  ValidationError);

  ExperimentConfig o;
  o.apply_override("T", "2000");
  o.apply_override("seeds", "1,2,3");
  o.apply_override("schemes", "selftuned,harmonic:b=10");
  o.apply_override("eta0_list", "[0.5, 0.25]");
  o.apply_override("output_dir", "123");
  CHECK(o.T == 2000);
  CHECK(o.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(o.schemes.size() == 2);
  CHECK(o.eta0_list.size() == 2);
  CHECK(o.output_dir == "123");
  CHECK_THROWS_AS(o.apply_override("nope", "1"), ValidationError);
  CHECK_THROWS_AS(o.apply_override("schemes", "bogus"), ValidationError);
}

TEST_CASE("one scheme one seed gives one trace plus manifest") {
  const fs::path dir = scratch("single");
  const auto out = cmd_run(small_quadratic(dir), 2);
  CHECK(out.files.size() == 1);
  std::size_t entries = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    (void)e;
    ++entries;
  }
  CHECK(entries == 2);
  CHECK(fs::exists(out.manifest));
  CHECK(slurp(out.files[0]).rfind("t,eta,objective,sq_dist,lyap\n", 0) == 0);
}

TEST_CASE("svm stepsize caps follow the mirror map constant") {
  const fs::path dir = scratch("caps");
  ExperimentConfig c;
  c.problem = "svm";
  c.synthetic_rows = 200;
  c.lambda = 0.001;
  c.T = 100;
  c.record_every = 50;
  c.eta0_list = {0.9, 100.0, 250.0};
  c.output_dir = dir.string();
  CHECK(cmd_run(c, 2).files.size() == 3);
  const Experiment e(c);
  CHECK(e.cells()[2].policy.eta0() == 250.0);
  CHECK(e.cells()[2].policy.half_theta() == 0.001);
  c.eta0_list = {501.0};
  CHECK_THROWS_AS(Experiment(c).cells(), ValidationError);
  c.eta0_list = {500.0};
  CHECK_NOTHROW(Experiment(c).cells());
}

TEST_CASE("harmonic baselines resolve a from the shared initial stepsize") {
  const fs::path dir = scratch("harmonic");
  ExperimentConfig c;
  c.problem = "svm";
  c.synthetic_rows = 200;
  c.lambda = 0.01;
  c.T = 10000;
  c.record_every = 5000;
  c.schemes = {"harmonic:bfrac=0.1", "harmonic:bfrac=0.2"};
  c.eta0_list = {0.9};
  c.output_dir = dir.string();
  cmd_run(c, 2);
  CHECK(fs::exists(dir / "harmonic-b1000_0.9_1.csv"));
  CHECK(fs::exists(dir / "harmonic-b2000_0.9_1.csv"));
  const json m = json::parse(slurp(dir / "manifest.json"));
  CHECK(m["files"][0]["policy"]["a"].get<double>() == doctest::Approx(900.0));
  CHECK(m["files"][0]["policy"]["b"].get<double>() == 1000.0);
  CHECK(m["files"][1]["policy"]["a"].get<double>() == doctest::Approx(1800.0));
}

TEST_CASE("manifest lists exactly the emitted files") {
  const fs::path dir = scratch("manifest");
  ExperimentConfig c = small_quadratic(dir);
  c.blocks = 2;
  c.schemes = {"selftuned", "overt", "harmonic:b=50"};
  c.eta0_list = {0.1, 0.2};
  c.seeds = {1, 2};
  const auto out = cmd_run(c, 3);
  const json m = json::parse(slurp(out.manifest));
  std::set<std::string> listed;
  for (const auto& f : m["files"]) {
    listed.insert(f["file"].get<std::string>());
    CHECK(fs::exists(dir / f["file"].get<std::string>()));
    CHECK(f.contains("policy"));
  }
  std::set<std::string> on_disk;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".csv") on_disk.insert(e.path().filename().string());
  CHECK(listed == on_disk);
  CHECK(listed.size() == 12);
  CHECK(m["files"][0]["block_extrapolation"].get<bool>());
  CHECK(m["config"]["T"] == 300);
}

TEST_CASE("outputs are byte identical across runs and thread counts") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  ExperimentConfig c = small_quadratic(a);
  c.schemes = {"selftuned", "overt"};
  c.seeds = {1, 2, 3};
  c.eta0_list = {0.3};
  cmd_run(c, 1);
  c.output_dir = b.string();
  cmd_run(c, 4);
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
  }
}

TEST_CASE("compare cardinality and constants") {
  const fs::path dir = scratch("compare");
  ExperimentConfig c;
  c.problem = "svm";
  c.synthetic_rows = 300;
  c.lambda = 0.01;
  c.T = 200;
  c.record_every = 20;
  c.schemes = {"selftuned", "harmonic:b=20"};
  c.eta0_list = {0.9, 10.0, 25.0};
  c.seeds = {1, 2, 3, 4, 5};
  c.output_dir = dir.string();
  const auto out = cmd_compare(c, 4, true);
  CHECK(out.series == 30);

  std::ifstream in(out.series_csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "scheme,eta0,seed,t,obj_running_mean");
  std::set<std::string> series;
  while (std::getline(in, line)) series.insert(line.substr(0, line.rfind(',', line.rfind(',') - 1)));
  CHECK(series.size() == 30);

  const std::string constants = slurp(out.constants_csv);
  CHECK(constants.rfind("name,scheme,eta0,gamma,value\n", 0) == 0);
  // gamma = a = eta0 * b; ratio = gamma^2 mu^2 / (2 mu gamma - 1), undefined
  // (empty) when gamma <= 1 / (2 mu) = 50.
  std::istringstream rows(constants);
  std::size_t harmonic_rows = 0;
  while (std::getline(rows, line)) {
    if (line.rfind("harmonic_ratio,", 0) != 0) continue;
    ++harmonic_rows;
    std::istringstream cols(line);
    std::string name, scheme, eta, gamma, value;
    std::getline(cols, name, ',');
    std::getline(cols, scheme, ',');
    std::getline(cols, eta, ',');
    std::getline(cols, gamma, ',');
    std::getline(cols, value, ',');
    const double g = std::stod(gamma);
    CHECK(g == doctest::Approx(std::stod(eta) * 20.0));
    if (g <= 50.0) {
      CHECK(value.empty());
    } else {
      CHECK(std::stod(value) == doctest::Approx(g * g * 1e-4 / (0.02 * g - 1.0)).epsilon(1e-12));
    }
  }
  CHECK(harmonic_rows == 3);
  CHECK(constants.find("harmonic_ratio,harmonic-b20,25,500,2.77777777777777") != std::string::npos);
  CHECK(constants.find("sbmd_ratio,,,,0.25") != std::string::npos);
}

TEST_CASE("compare without traces lists what it expected") {
  const fs::path dir = scratch("missing");
  ExperimentConfig c = small_quadratic(dir);
  c.seeds = {1, 2};
  try {
    cmd_compare(c, 1, false);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("selftuned_") != std::string::npos);
    CHECK(msg.find("_2.csv") != std::string::npos);
  }
}

TEST_CASE("cli exit codes") {
  const fs::path err = scratch("stderr.txt");
  CHECK(run_cli("verify all") == 0);
  CHECK(run_cli("verify sequence --inject-theta-fault", err) == 1);
  CHECK(slurp(err).find("closed_form_chain") != std::string::npos);
  CHECK(run_cli("verify nonsense") == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("run --schemes bogus --output_dir " + scratch("bad").string()) == 2);
  CHECK(run_cli("run --problem svm --dataset_path /nonexistent/data.svm --output_dir " + scratch("io").string()) == 3);
  CHECK(run_cli("compare --output_dir " + scratch("none").string()) == 3);
  CHECK(run_cli("run --T 100 --record_every 10 --output_dir " + scratch("ok").string()) == 0);
}

TEST_CASE("cli reads a config file and writes a report") {
  const fs::path dir = scratch("cfg");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"problem":"quadratic","T":100,"record_every":10,"seeds":[1,2]})";
  CHECK(run_cli("run -c " + (dir / "c.json").string() + " --output_dir " + (dir / "out").string()) == 0);
  CHECK(fs::exists(dir / "out" / "manifest.json"));
  CHECK(run_cli("verify bounds -o " + (dir / "report.json").string()) == 0);
  const json r = json::parse(slurp(dir / "report.json"));
  CHECK(r["passed"].get<bool>());
}

#include "mirrorstep/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "mirrorstep/bounds.hpp"
#include "mirrorstep/error.hpp"

namespace mirrorstep {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

double parse_number(std::string_view text, std::string_view what) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
    throw ValidationError("invalid " + std::string(what) + ": '" + std::string(text) + "'");
  }
  return v;
}

template <class T>
T field(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config field '") + key + "': " + e.what());
  }
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "problem", "dataset_path", "dataset_format", "subset_per_class", "synthetic_rows", "data_seed",
      "lambda",  "T",            "schemes",        "eta0_list",        "seeds",          "blocks",
      "probs",   "block_size",   "sigma",          "curvature",        "radius",         "mode",
      "record_every", "output_dir"};
  return keys;
}

bool is_list_key(std::string_view key) {
  return key == "schemes" || key == "eta0_list" || key == "seeds" || key == "probs";
}

bool is_string_key(std::string_view key) {
  return key == "problem" || key == "dataset_path" || key == "dataset_format" || key == "mode" ||
         key == "output_dir";
}

json parse_scalar(std::string_view text) {
  json v = json::parse(text, nullptr, false);
  if (v.is_discarded()) return json(std::string(text));
  return v;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::shared_ptr<const Dataset> load_dataset(const ExperimentConfig& cfg) {
  Dataset data;
  if (cfg.dataset_path) {
    const fs::path path(*cfg.dataset_path);
    if (!fs::exists(path)) throw IoError("dataset not found: " + path.string());
    std::string format = cfg.dataset_format;
    if (format == "auto") {
      const std::string name = lower(path.filename().string());
      format = (name.find("skin") != std::string::npos || path.extension() == ".tsv") ? "skin" : "libsvm";
    }
    data = format == "skin" ? load_skin_tsv(path) : load_libsvm(path);
  } else {
    data = synthetic_svm_fixture(cfg.synthetic_rows, cfg.data_seed);
  }
  if (cfg.subset_per_class > 0) data = balanced_subset(data, cfg.subset_per_class, cfg.data_seed);
  if (data.empty()) throw ValidationError("dataset has no rows");
  return std::make_shared<const Dataset>(std::move(data));
}

Vec layout_probs(const ExperimentConfig& cfg) {
  if (cfg.probs) return *cfg.probs;
  return Vec(cfg.blocks, 1.0 / static_cast<double>(cfg.blocks));
}

}  // namespace

// --- schemes ---------------------------------------------------------------

SchemeSpec SchemeSpec::parse(std::string_view text) {
  SchemeSpec s;
  if (text == "selftuned") {
    s.kind = SchemeKind::SelfTuned;
  } else if (text == "overt") {
    s.kind = SchemeKind::OverT;
  } else if (starts_with(text, "harmonic:b=")) {
    s.kind = SchemeKind::Harmonic;
    s.b = parse_number(text.substr(11), "harmonic b");
    if (!(*s.b > 0.0)) throw ValidationError("harmonic b must be positive");
  } else if (starts_with(text, "harmonic:bfrac=")) {
    s.kind = SchemeKind::Harmonic;
    s.b_frac = parse_number(text.substr(15), "harmonic bfrac");
    if (!(*s.b_frac > 0.0)) throw ValidationError("harmonic bfrac must be positive");
  } else {
    throw ValidationError("unknown scheme '" + std::string(text) +
                          "' (expected selftuned, overt, harmonic:b=N or harmonic:bfrac=F)");
  }
  return s;
}

double SchemeSpec::resolved_b(std::uint64_t T) const {
  if (b) return *b;
  if (b_frac) return *b_frac * static_cast<double>(T);
  throw ValidationError("scheme has no b");
}

std::string SchemeSpec::label(std::uint64_t T) const {
  switch (kind) {
    case SchemeKind::SelfTuned: return "selftuned";
    case SchemeKind::OverT: return "overt";
    case SchemeKind::Harmonic: return "harmonic-b" + compact_double(resolved_b(T));
  }
  return "unknown";
}

std::string compact_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw ValidationError("cannot format number");
  return std::string(buf, ptr);
}

// --- config ----------------------------------------------------------------

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known_keys().contains(key)) throw ValidationError("unknown config field '" + key + "'");
  }
  ExperimentConfig c;
  c.problem = field(j, "problem", c.problem);
  if (j.contains("dataset_path") && !j.at("dataset_path").is_null()) {
    c.dataset_path = field<std::string>(j, "dataset_path", "");
  }
  c.dataset_format = field(j, "dataset_format", c.dataset_format);
  c.subset_per_class = field(j, "subset_per_class", c.subset_per_class);
  c.synthetic_rows = field(j, "synthetic_rows", c.synthetic_rows);
  c.data_seed = field(j, "data_seed", c.data_seed);
  c.lambda = field(j, "lambda", c.lambda);
  c.T = field(j, "T", c.T);
  c.schemes = field(j, "schemes", c.schemes);
  c.eta0_list = field(j, "eta0_list", c.eta0_list);
  c.seeds = field(j, "seeds", c.seeds);
  c.blocks = field(j, "blocks", c.blocks);
  if (j.contains("probs") && !j.at("probs").is_null()) c.probs = field<Vec>(j, "probs", {});
  c.block_size = field(j, "block_size", c.block_size);
  c.sigma = field(j, "sigma", c.sigma);
  c.curvature = field(j, "curvature", c.curvature);
  c.radius = field(j, "radius", c.radius);
  c.mode = field(j, "mode", c.mode);
  c.record_every = field(j, "record_every", c.record_every);
  c.output_dir = field(j, "output_dir", c.output_dir);
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ValidationError("config is not valid JSON: " + path.string());
  return from_json(j);
}

json ExperimentConfig::to_json() const {
  json j;
  j["problem"] = problem;
  j["dataset_path"] = dataset_path ? json(*dataset_path) : json(nullptr);
  j["dataset_format"] = dataset_format;
  j["subset_per_class"] = subset_per_class;
  j["synthetic_rows"] = synthetic_rows;
  j["data_seed"] = data_seed;
  j["lambda"] = lambda;
  j["T"] = T;
  j["schemes"] = schemes;
  j["eta0_list"] = eta0_list;
  j["seeds"] = seeds;
  j["blocks"] = blocks;
  j["probs"] = probs ? json(*probs) : json(nullptr);
  j["block_size"] = block_size;
  j["sigma"] = sigma;
  j["curvature"] = curvature;
  j["radius"] = radius;
  j["mode"] = mode;
  j["record_every"] = record_every;
  j["output_dir"] = output_dir;
  return j;
}

void ExperimentConfig::apply_override(std::string_view key, std::string_view value) {
  const std::string k(key);
  if (!known_keys().contains(k)) throw ValidationError("unknown config field '" + k + "'");
  json v;
  if (is_string_key(key)) {
    v = std::string(value);
  } else {
    v = parse_scalar(value);
    if (is_list_key(key) && !v.is_array()) {
      json arr = json::array();
      if (v.is_string()) {
        std::string_view rest = value;
        while (!rest.empty()) {
          const auto comma = rest.find(',');
          const auto item = rest.substr(0, comma);
          if (!item.empty()) arr.push_back(key == "schemes" ? json(std::string(item)) : parse_scalar(item));
          if (comma == std::string_view::npos) break;
          rest = rest.substr(comma + 1);
        }
      } else {
        arr.push_back(v);
      }
      v = std::move(arr);
    }
  }
  json j = to_json();
  j[k] = std::move(v);
  *this = from_json(j);
}

void ExperimentConfig::validate() const {
  if (problem != "quadratic" && problem != "svm") throw ValidationError("problem must be quadratic or svm");
  if (dataset_format != "auto" && dataset_format != "libsvm" && dataset_format != "skin") {
    throw ValidationError("dataset_format must be auto, libsvm or skin");
  }
  if (mode != "subgradient" && mode != "gradient") throw ValidationError("mode must be subgradient or gradient");
  if (problem == "svm" && mode == "gradient") throw ValidationError("the SVM objective is nonsmooth; use subgradient");
  if (problem == "svm" && !(lambda > 0.0)) throw ValidationError("lambda must be positive");
  if (T == 0) throw ValidationError("T must be positive");
  if (record_every == 0 || record_every > T) throw ValidationError("record_every must lie in [1, T]");
  if (schemes.empty()) throw ValidationError("schemes must not be empty");
  if (seeds.empty()) throw ValidationError("seeds must not be empty");
  if (blocks == 0) throw ValidationError("blocks must be positive");
  if (probs && probs->size() != blocks) throw ValidationError("probs needs one entry per block");
  for (double e : eta0_list) {
    if (!(e > 0.0) || !std::isfinite(e)) throw ValidationError("eta0_list entries must be positive");
  }
  if (problem == "quadratic") {
    if (block_size == 0) throw ValidationError("block_size must be positive");
    if (!(radius > 0.0)) throw ValidationError("radius must be positive");
    if (!(curvature > 0.0)) throw ValidationError("curvature must be positive");
    if (!(sigma >= 0.0)) throw ValidationError("sigma must be nonnegative");
  }
  if (problem == "svm" && !dataset_path && synthetic_rows == 0) throw ValidationError("synthetic_rows must be positive");

  std::set<std::string> labels;
  for (const auto& s : schemes) {
    if (!labels.insert(SchemeSpec::parse(s).label(T)).second) {
      throw ValidationError("schemes '" + s + "' duplicates another scheme's output name");
    }
  }
  std::set<std::string> etas;
  for (double e : eta0_list) {
    if (!etas.insert(compact_double(e)).second) throw ValidationError("duplicate eta0 " + compact_double(e));
  }
  std::set<std::uint64_t> seen;
  for (auto s : seeds) {
    if (!seen.insert(s).second) throw ValidationError("duplicate seed " + std::to_string(s));
  }
}

SolverMode ExperimentConfig::solver_mode() const {
  return mode == "gradient" ? SolverMode::Gradient : SolverMode::Subgradient;
}

// --- experiment ------------------------------------------------------------

Experiment::Experiment(ExperimentConfig config) : config_(std::move(config)) {
  config_.validate();
  const std::size_t l = config_.blocks;
  if (config_.problem == "quadratic") {
    const std::size_t n = config_.block_size;
    auto layout = std::make_shared<const BlockLayout>(std::vector<std::size_t>(l, n), layout_probs(config_),
                                                      Vec(l, 1.0), Vec(l, 1.0), Vec(l, config_.radius));
    // Optimum at half the radius in every block, alternating signs.
    const double c = 0.5 * config_.radius / std::sqrt(static_cast<double>(n));
    Vec center(l * n);
    for (std::size_t k = 0; k < center.size(); ++k) center[k] = (k % 2 == 0) ? c : -c;
    problem_ = std::make_shared<QuadraticProblem>(layout, Vec(l * n, config_.curvature), std::move(center),
                                                  config_.sigma);
    geometry_ = std::make_shared<const Geometry>(Geometry::euclidean_balls(layout));
  } else {
    auto data = load_dataset(config_);
    const std::size_t d = data->dim();
    if (l > d) throw ValidationError("more blocks than features");
    std::vector<std::size_t> sizes(l, d / l);
    for (std::size_t i = 0; i < d % l; ++i) ++sizes[i];
    auto layout = std::make_shared<const BlockLayout>(std::move(sizes), layout_probs(config_), Vec(l, 1.0),
                                                      Vec(l, 1.0), Vec(l, SvmProblem::default_radius(config_.lambda)));
    problem_ = std::make_shared<SvmProblem>(std::move(data), config_.lambda, layout);
    geometry_ = std::make_shared<const Geometry>(Geometry::euclidean_balls(layout));
  }
}

std::optional<NonsmoothParams> Experiment::nonsmooth_params() const {
  const auto* quad = dynamic_cast<const QuadraticProblem*>(problem_.get());
  if (!quad) return std::nullopt;
  const BlockLayout& lay = quad->layout();
  NonsmoothParams p{quad->strong_convexity(), quad->layout_ptr(), {}};
  for (std::size_t i = 0; i < lay.num_blocks(); ++i) {
    p.C.push_back(admissible_subgradient_bound(quad->subgradient_bound(i), p.mu_F, lay.radius(i), lay.mu_omega(i),
                                               lay.L_omega(i)));
  }
  return p;
}

std::optional<SmoothParams> Experiment::smooth_params() const {
  const auto* quad = dynamic_cast<const QuadraticProblem*>(problem_.get());
  if (!quad) return std::nullopt;
  return SmoothParams{quad->strong_convexity(), quad->lipschitz_gradient(), quad->layout_ptr(), quad->noise_bounds()};
}

std::vector<double> Experiment::resolved_eta0s() const {
  if (!config_.eta0_list.empty()) return config_.eta0_list;
  const double L = problem_->layout().L_max();
  if (config_.problem == "svm") return {L / (10.0 * mu_F()), L / (4.0 * mu_F())};
  const StepsizePolicy p = config_.solver_mode() == SolverMode::Gradient ? init_smooth(*smooth_params())
                                                                          : init_nonsmooth(*nonsmooth_params());
  return {p.eta0()};
}

StepsizePolicy Experiment::make_policy(const SchemeSpec& s, double eta0, bool& extrapolated) const {
  extrapolated = false;
  switch (s.kind) {
    case SchemeKind::SelfTuned: {
      if (config_.eta0_list.empty() && config_.problem == "quadratic") {
        return config_.solver_mode() == SolverMode::Gradient ? init_smooth(*smooth_params())
                                                             : init_nonsmooth(*nonsmooth_params());
      }
      const BlockLayout& lay = problem_->layout();
      extrapolated = lay.num_blocks() > 1;
      return unifying_policy(eta0, mu_F(), lay, extrapolated);
    }
    case SchemeKind::Harmonic: {
      const double b = s.resolved_b(config_.T);
      return StepsizePolicy::harmonic(eta0 * b, b);
    }
    case SchemeKind::OverT: return StepsizePolicy::over_t(eta0);
  }
  throw ValidationError("unknown scheme kind");
}

std::vector<CellSpec> Experiment::cells() const {
  const std::vector<double> etas = resolved_eta0s();
  std::vector<CellSpec> out;
  for (const auto& text : config_.schemes) {
    const SchemeSpec spec = SchemeSpec::parse(text);
    for (double eta0 : etas) {
      bool extrapolated = false;
      const StepsizePolicy policy = make_policy(spec, eta0, extrapolated);
      for (auto seed : config_.seeds) {
        CellSpec c;
        c.scheme = spec;
        c.scheme_text = text;
        c.eta0 = eta0;
        c.seed = seed;
        c.policy = policy;
        c.extrapolated = extrapolated;
        c.file_name = spec.label(config_.T) + "_" + compact_double(eta0) + "_" + std::to_string(seed) + ".csv";
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

Trace Experiment::run_cell(const CellSpec& cell) const {
  SolverConfig sc;
  sc.mode = config_.solver_mode();
  sc.policy = cell.policy;
  sc.iterations = config_.T;
  sc.seed = cell.seed;
  sc.record_every = config_.record_every;
  return run(*problem_, *geometry_, sc, Point::zeros(problem_->layout_ptr()));
}

std::vector<Trace> Experiment::run_all(unsigned threads) const {
  const auto cells_ = cells();
  std::vector<Trace> out(cells_.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < cells_.size(); k = next++) {
      try {
        out[k] = run_cell(cells_[k]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cells_.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

unsigned worker_threads_from_env() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MIRRORSTEP_THREADS")) {
    unsigned v = 0;
    const std::string_view s(env);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc{} && ptr == s.data() + s.size() && v > 0) return v;
  }
  return hw;
}

// --- commands ---------------------------------------------------------------

namespace {

json policy_json(const StepsizePolicy& p) {
  json j;
  switch (p.kind()) {
    case PolicyKind::SelfTuned:
      j["kind"] = "selftuned";
      j["eta0"] = p.eta0();
      j["half_theta"] = p.half_theta();
      break;
    case PolicyKind::Harmonic:
      j["kind"] = "harmonic";
      j["a"] = p.a();
      j["b"] = p.b();
      j["eta0"] = p.eta0();
      break;
    case PolicyKind::OverT:
      j["kind"] = "overt";
      j["eta0"] = p.eta0();
      break;
  }
  j["describe"] = p.describe();
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::optional<double> parse_field(std::string_view s, const fs::path& path, std::size_t line) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw IoError(path.string() + ": line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

RunOutput cmd_run(const ExperimentConfig& config, unsigned threads) {
  const Experiment exp(config);
  const auto cells = exp.cells();
  const fs::path dir(config.output_dir);
  ensure_dir(dir);

  // Each worker writes its own file as soon as the cell finishes.
  std::vector<fs::path> files(cells.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      try {
        const Trace trace = exp.run_cell(cells[k]);
        std::ostringstream csv;
        write_trace_csv(csv, trace);
        files[k] = dir / cells[k].file_name;
        write_text(files[k], csv.str());
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cells.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  json manifest;
  manifest["config"] = config.to_json();
  manifest["mu_F"] = exp.mu_F();
  manifest["dim"] = exp.problem().layout().dim();
  json entries = json::array();
  for (const auto& c : cells) {
    json e;
    e["file"] = c.file_name;
    e["scheme"] = c.scheme.label(config.T);
    e["scheme_spec"] = c.scheme_text;
    e["eta0"] = c.eta0;
    e["seed"] = c.seed;
    e["policy"] = policy_json(c.policy);
    e["block_extrapolation"] = c.extrapolated;
    entries.push_back(std::move(e));
  }
  manifest["files"] = std::move(entries);

  RunOutput out;
  out.files = std::move(files);
  out.manifest = dir / "manifest.json";
  write_text(out.manifest, manifest.dump(2) + "\n");
  return out;
}

Trace read_trace_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "t,eta,objective,sq_dist,lyap") {
    throw IoError(path.string() + ": unexpected trace header");
  }
  Trace trace;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string_view> cols;
    std::string_view rest = line;
    for (;;) {
      const auto comma = rest.find(',');
      cols.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (cols.size() != 5) throw IoError(path.string() + ": line " + std::to_string(lineno) + ": expected 5 fields");
    TraceRow row;
    const auto t = parse_field(cols[0], path, lineno);
    const auto eta = parse_field(cols[1], path, lineno);
    if (!t || !eta) throw IoError(path.string() + ": line " + std::to_string(lineno) + ": missing t or eta");
    row.t = static_cast<std::uint64_t>(*t);
    row.eta = *eta;
    row.objective = parse_field(cols[2], path, lineno);
    row.sq_dist = parse_field(cols[3], path, lineno);
    row.lyap = parse_field(cols[4], path, lineno);
    trace.rows.push_back(row);
  }
  return trace;
}

CompareOutput cmd_compare(const ExperimentConfig& config, unsigned threads, bool generate) {
  const Experiment exp(config);
  const auto cells = exp.cells();
  const fs::path dir(config.output_dir);

  std::vector<std::string> missing;
  for (const auto& c : cells) {
    if (!fs::exists(dir / c.file_name)) missing.push_back(c.file_name);
  }
  if (!missing.empty()) {
    if (generate) {
      cmd_run(config, threads);
    } else {
      std::string msg = "missing traces in " + dir.string() + " (run first or pass --generate):";
      for (const auto& m : missing) msg += "\n  " + m;
      throw IoError(msg);
    }
  }

  std::ostringstream series;
  series << "scheme,eta0,seed,t,obj_running_mean\n";
  // (scheme, eta0) -> final running means across seeds
  std::map<std::pair<std::string, std::string>, std::vector<double>> finals;
  std::vector<std::pair<std::string, std::string>> order;
  for (const auto& c : cells) {
    const Trace trace = read_trace_csv(dir / c.file_name);
    const auto means = trace.objective_running_mean();
    const std::string scheme = c.scheme.label(config.T);
    const std::string eta = format_double(c.eta0);
    std::optional<double> last;
    for (std::size_t r = 0; r < trace.rows.size(); ++r) {
      if (!means[r]) continue;
      series << scheme << ',' << eta << ',' << c.seed << ',' << trace.rows[r].t << ',' << format_double(*means[r])
             << '\n';
      last = means[r];
    }
    const auto key = std::make_pair(scheme, eta);
    if (!finals.contains(key)) order.push_back(key);
    if (last) finals[key].push_back(*last);
  }

  std::ostringstream summary;
  summary << "scheme,eta0,seeds,final_mean,final_std_error\n";
  for (const auto& key : order) {
    const auto& v = finals[key];
    if (v.empty()) continue;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double se = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()))
                                   : 0.0;
    summary << key.first << ',' << key.second << ',' << v.size() << ',' << format_double(mean) << ','
            << format_double(se) << '\n';
  }

  // gamma of a harmonic-type scheme is read off as eta_t ~ gamma / t.
  std::ostringstream constants;
  constants << "name,scheme,eta0,gamma,value\n";
  const double mu_F = exp.mu_F();
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& c : cells) {
    if (c.scheme.kind == SchemeKind::SelfTuned) continue;
    const std::string scheme = c.scheme.label(config.T);
    const std::string eta = format_double(c.eta0);
    if (!seen.insert({scheme, eta}).second) continue;
    const double gamma = c.policy.kind() == PolicyKind::Harmonic ? c.policy.a() : c.policy.eta0();
    constants << "harmonic_ratio," << scheme << ',' << eta << ',' << format_double(gamma) << ',';
    if (2.0 * mu_F * gamma > 1.0) constants << format_double(harmonic_ratio(gamma, mu_F));
    constants << '\n';
  }
  const BlockLayout& lay = exp.problem().layout();
  const Vec unit_C(lay.num_blocks(), 1.0);
  const auto sbmd = sbmd_comparison(mu_F, lay.mu_omega(0), lay.L_omega(0), lay.num_blocks(), unit_C);
  constants << "sbmd_ratio,,,," << format_double(sbmd.ratio) << '\n';
  if (config.problem == "quadratic") {
    if (config.solver_mode() == SolverMode::Subgradient) {
      constants << "msd_bound_nonsmooth,,,," << format_double(msd_bound_nonsmooth(*exp.nonsmooth_params()).constant_factor)
                << '\n';
    } else {
      constants << "msd_bound_smooth,,,," << format_double(msd_bound_smooth(*exp.smooth_params()).constant_factor)
                << '\n';
    }
  }

  CompareOutput out;
  out.series_csv = dir / "compare.csv";
  out.constants_csv = dir / "constants.csv";
  write_text(out.series_csv, series.str());
  write_text(dir / "final.csv", summary.str());
  write_text(out.constants_csv, constants.str());
  out.series = cells.size();
  return out;
}

}  // namespace mirrorstep

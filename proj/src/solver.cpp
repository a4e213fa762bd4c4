#include "mirrorstep/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <thread>

#include "mirrorstep/error.hpp"

namespace mirrorstep {

void SolverConfig::validate() const {
  if (iterations == 0) throw ValidationError("solver: iterations must be at least 1");
  if (record_every == 0 || record_every > iterations) {
    throw ValidationError("solver: record_every must lie in [1, iterations]");
  }
}

SolverState::SolverState(Point beta0, std::uint64_t seed)
    : beta(std::move(beta0)), block_rng(seed, kBlockStream), noise_rng(seed, kNoiseStream) {}

std::vector<std::optional<double>> Trace::objective_running_mean() const {
  std::vector<std::optional<double>> out;
  out.reserve(rows.size());
  double sum = 0.0;
  std::size_t count = 0;
  for (const TraceRow& r : rows) {
    if (r.t >= 1 && r.objective) {
      sum += *r.objective;
      ++count;
    }
    out.push_back(count ? std::optional<double>(sum / static_cast<double>(count)) : std::nullopt);
  }
  return out;
}

std::size_t sample_block(SolverState& state, const BlockLayout& layout) {
  if (layout.num_blocks() == 1) return 0;
  const double u = state.block_rng.uniform();
  const Vec& cdf = layout.cumulative_probs();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), layout.num_blocks() - 1);
}

void apply_block_update(Point& beta, const Geometry& geometry, std::size_t block, double eta, std::span<const double> g) {
  Vec v(g.begin(), g.end());
  for (double& vj : v) vj *= eta;
  const Vec next = prox_map(geometry.dgf(block), geometry.set(block), beta.block(block), v);
  if (!geometry.set(block).contains(next)) {
    throw InvariantViolation("prox step left the feasible set of block " + std::to_string(block + 1));
  }
  std::copy(next.begin(), next.end(), beta.block(block).begin());
}

double rbsmd_step(SolverState& state, const Problem& problem, StepsizePolicy& policy, const Geometry& geometry,
                  SolverMode mode) {
  if (mode == SolverMode::Gradient && !problem.differentiable()) {
    throw ValidationError("gradient mode needs a differentiable problem");
  }
  const std::size_t block = sample_block(state, geometry.layout());
  const double eta = policy.next();
  const OracleSample sample = problem.oracle(state.beta, block, state.noise_rng);
  if (sample.block != block || sample.g_block.size() != geometry.layout().block_size(block)) {
    throw InvariantViolation("oracle returned a block that was not requested");
  }
  for (double gj : sample.g_block) {
    if (!std::isfinite(gj)) throw InvariantViolation("oracle returned a non-finite gradient entry");
  }
  apply_block_update(state.beta, geometry, block, eta, sample.g_block);
  ++state.t;
  return eta;
}

double lyapunov_error(const Point& beta, const Point& target, const Geometry& geometry) {
  const BlockLayout& lay = geometry.layout();
  if (!(beta.layout() == lay) || !(target.layout() == lay)) {
    throw ValidationError("lyapunov_error: points and geometry use different layouts");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < lay.num_blocks(); ++i) {
    s += bregman_div(geometry.dgf(i), beta.block(i), target.block(i)) / lay.prob(i);
  }
  return s;
}

namespace {

TraceRow make_row(const Problem& problem, const Geometry& geometry, const SolverState& state, double eta,
                  const std::optional<Point>& target) {
  TraceRow row;
  row.t = state.t;
  row.eta = eta;
  row.objective = problem.objective(state.beta);
  if (target) {
    row.sq_dist = squared_distance(state.beta, *target);
    row.lyap = lyapunov_error(state.beta, *target, geometry);
  }
  return row;
}

}  // namespace

Trace run(const Problem& problem, const Geometry& geometry, const SolverConfig& config, const Point& beta0,
          const std::optional<Point>& target) {
  config.validate();
  if (!(problem.layout() == geometry.layout())) throw ValidationError("run: problem and geometry layouts differ");
  if (!geometry.contains(beta0)) throw ValidationError("run: beta0 is not feasible");
  const std::optional<Point> star = target ? target : problem.optimum();

  StepsizePolicy policy = config.policy;
  SolverState state(beta0, config.seed);
  Trace trace;
  trace.rows.reserve(config.iterations / config.record_every + 2);
  trace.rows.push_back(make_row(problem, geometry, state, policy.peek(), star));
  while (state.t < config.iterations) {
    rbsmd_step(state, problem, policy, geometry, config.mode);
    if (state.t % config.record_every == 0 || state.t == config.iterations) {
      trace.rows.push_back(make_row(problem, geometry, state, policy.peek(), star));
    }
  }
  return trace;
}

std::vector<Trace> run_replications(const Problem& problem, const Geometry& geometry, const SolverConfig& config,
                                    const Point& beta0, std::span<const std::uint64_t> seeds, unsigned threads,
                                    const std::optional<Point>& target) {
  config.validate();
  std::vector<Trace> out(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < seeds.size(); k = next++) {
      try {
        SolverConfig cfg = config;
        cfg.seed = seeds[k];
        out[k] = run(problem, geometry, cfg, beta0, target);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(seeds.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << "t,eta,objective,sq_dist,lyap\n";
  auto opt = [&](const std::optional<double>& v) {
    if (v) out << format_double(*v);
  };
  for (const TraceRow& r : trace.rows) {
    out << r.t << ',' << format_double(r.eta) << ',';
    opt(r.objective);
    out << ',';
    opt(r.sq_dist);
    out << ',';
    opt(r.lyap);
    out << '\n';
  }
}

MetricSummary summarize(std::span<const Trace> traces, TraceMetric metric) {
  if (traces.empty()) throw ValidationError("summarize: no traces");
  const std::size_t rows = traces.front().rows.size();
  for (const Trace& tr : traces) {
    if (tr.rows.size() != rows) throw ValidationError("summarize: traces have different row counts");
  }
  MetricSummary s;
  const double n = static_cast<double>(traces.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const std::uint64_t t = traces.front().rows[r].t;
    double sum = 0.0, sum_sq = 0.0;
    for (const Trace& tr : traces) {
      const TraceRow& row = tr.rows[r];
      if (row.t != t) throw ValidationError("summarize: traces record different iterations");
      const std::optional<double>& v =
          metric == TraceMetric::SqDist ? row.sq_dist : metric == TraceMetric::Lyap ? row.lyap : row.objective;
      if (!v) throw ValidationError("summarize: metric missing from a trace row");
      sum += *v;
      sum_sq += *v * *v;
    }
    const double mean = sum / n;
    const double var = traces.size() > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
    s.t.push_back(t);
    s.mean.push_back(mean);
    s.std_error.push_back(std::sqrt(var / n));
  }
  return s;
}

}  // namespace mirrorstep

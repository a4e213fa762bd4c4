#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "mirrorstep/geometry.hpp"
#include "mirrorstep/problems.hpp"
#include "mirrorstep/rng.hpp"
#include "mirrorstep/stepsize.hpp"

namespace mirrorstep {

enum class SolverMode { Subgradient, Gradient };

struct SolverConfig {
  SolverMode mode = SolverMode::Subgradient;
  StepsizePolicy policy = StepsizePolicy::over_t(1.0);
  std::uint64_t iterations = 0;
  std::uint64_t seed = 0;
  std::uint64_t record_every = 1;

  void validate() const;
};

// Iterate plus the two independent random streams: one for the block index
// i_t, one for the oracle noise xi_t.
struct SolverState {
  SolverState(Point beta0, std::uint64_t seed);

  Point beta;
  std::uint64_t t = 0;
  CounterRng block_rng;
  CounterRng noise_rng;
};

struct TraceRow {
  std::uint64_t t = 0;
  double eta = 0.0;
  std::optional<double> objective;
  std::optional<double> sq_dist;
  std::optional<double> lyap;
};

struct Trace {
  std::vector<TraceRow> rows;

  // Running mean of the recorded objective values over rows with t >= 1.
  std::vector<std::optional<double>> objective_running_mean() const;
};

// Draws i with probability p_i from the block-sampling stream only.
std::size_t sample_block(SolverState& state, const BlockLayout& layout);

// Replaces block `block` of beta by P(beta^block, eta * g). Other blocks are
// untouched. Throws InvariantViolation if the result is infeasible.
void apply_block_update(Point& beta, const Geometry& geometry, std::size_t block, double eta, std::span<const double> g);

// One RB-SSMD / RB-GSMD iteration. Returns the stepsize that was used.
double rbsmd_step(SolverState& state, const Problem& problem, StepsizePolicy& policy, const Geometry& geometry,
                  SolverMode mode = SolverMode::Subgradient);

// sum_i p_i^{-1} D_i(beta^i, target^i)
double lyapunov_error(const Point& beta, const Point& target, const Geometry& geometry);

// Runs config.iterations steps from beta0 and records t = 0, every
// record_every-th iterate, and the final iterate. Distances to the optimum are
// recorded when `target` (or the problem's known optimum) is available.
Trace run(const Problem& problem, const Geometry& geometry, const SolverConfig& config, const Point& beta0,
          const std::optional<Point>& target = std::nullopt);

// Independent replications, one per seed, each with a fresh copy of
// config.policy. Output order follows `seeds` regardless of `threads`.
std::vector<Trace> run_replications(const Problem& problem, const Geometry& geometry, const SolverConfig& config,
                                    const Point& beta0, std::span<const std::uint64_t> seeds, unsigned threads = 1,
                                    const std::optional<Point>& target = std::nullopt);

// CSV with header `t,eta,objective,sq_dist,lyap`; missing metrics are empty
// fields and floats carry 17 significant digits.
void write_trace_csv(std::ostream& out, const Trace& trace);
std::string format_double(double v);

// Mean and standard error across replications of one metric at each recorded
// row. All traces must share the same row times.
struct MetricSummary {
  std::vector<std::uint64_t> t;
  std::vector<double> mean;
  std::vector<double> std_error;
};

enum class TraceMetric { SqDist, Lyap, Objective };
MetricSummary summarize(std::span<const Trace> traces, TraceMetric metric);

}  // namespace mirrorstep

#include "mirrorstep/sequence_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "mirrorstep/error.hpp"

namespace mirrorstep {

void ErrorRecursion::validate() const {
  if (!(theta > 0.0) || !std::isfinite(theta)) throw ValidationError("theta must be positive");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ValidationError("delta must be positive");
  if (!(e0 >= 0.0) || !std::isfinite(e0)) throw ValidationError("e0 must be nonnegative");
}

double error_seq_eval(const ErrorRecursion& rec, std::span<const double> etas) {
  rec.validate();
  const double cap = 1.0 / rec.theta;
  double e = rec.e0;
  for (std::size_t j = 0; j < etas.size(); ++j) {
    const double eta = etas[j];
    if (!(eta > 0.0) || eta > cap) {
      throw ValidationError("stepsize " + std::to_string(j) + " is outside (0, 1/theta]");
    }
    e = (1.0 - rec.theta * eta) * e + rec.delta * eta * eta;
  }
  return e;
}

std::vector<double> selftuned_seq(const ErrorRecursion& rec, std::size_t t) {
  rec.validate();
  if (!rec.admissible()) throw ValidationError("e0 exceeds 2 delta / theta^2");
  const double eta0 = rec.initial_stepsize();
  if (!(eta0 > 0.0)) throw ValidationError("e0 = 0 gives a zero initial stepsize");
  std::vector<double> out;
  out.reserve(t);
  const double half = 0.5 * rec.theta;
  double eta = eta0;
  for (std::size_t j = 0; j < t; ++j) {
    out.push_back(eta);
    eta *= 1.0 - half * eta;
  }
  return out;
}

std::vector<double> stepsize_grid(double theta, double grid_step) {
  if (!(theta > 0.0)) throw ValidationError("theta must be positive");
  if (!(grid_step > 0.0)) throw ValidationError("grid step must be positive");
  const double cap = 1.0 / theta;
  std::vector<double> grid;
  for (std::size_t k = 1;; ++k) {
    const double v = static_cast<double>(k) * grid_step;
    // Points within rounding of the cap collapse onto it.
    if (v >= cap * (1.0 - 1e-12)) break;
    grid.push_back(v);
  }
  grid.push_back(cap);
  return grid;
}

namespace {

struct Partial {
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_idx;
  double min_slack = std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
};

// Depth-first sweep in lexicographic order; strict improvement keeps the
// first (smallest) minimiser.
void sweep(const ErrorRecursion& rec, const std::vector<double>& grid, std::size_t t, double target_value,
           double target_last, std::vector<std::size_t>& idx, std::size_t depth, double e, Partial& acc) {
  const double eta_prev = grid[idx[depth - 1]];
  const double e_next = (1.0 - rec.theta * eta_prev) * e + rec.delta * eta_prev * eta_prev;
  if (depth == t) {
    ++acc.evaluations;
    if (e_next < acc.best) {
      acc.best = e_next;
      acc.best_idx = idx;
    }
    const double d = eta_prev - target_last;
    acc.min_slack = std::min(acc.min_slack, e_next - target_value - rec.delta * d * d);
    return;
  }
  for (std::size_t k = 0; k < grid.size(); ++k) {
    idx[depth] = k;
    sweep(rec, grid, t, target_value, target_last, idx, depth + 1, e_next, acc);
  }
}

}  // namespace

BruteForceResult brute_force_min(const ErrorRecursion& rec, std::size_t t, double grid_step, unsigned workers) {
  rec.validate();
  if (t == 0) throw ValidationError("brute_force_min needs t >= 1");
  if (t > kBruteForceMaxLength) {
    throw BudgetError("brute_force_min: t = " + std::to_string(t) + " exceeds the exhaustive budget of " +
                      std::to_string(kBruteForceMaxLength));
  }
  const std::vector<double> grid = stepsize_grid(rec.theta, grid_step);
  const double total = std::pow(static_cast<double>(grid.size()), static_cast<double>(t));
  if (total > 2e9) throw BudgetError("brute_force_min: grid too fine for t = " + std::to_string(t));

  const std::vector<double> star = selftuned_seq(rec, t);
  const double star_value = error_seq_eval(rec, star);
  const double star_last = star.back();

  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(grid.size())));
  std::vector<Partial> parts(workers);
  auto run_slice = [&](unsigned w) {
    const std::size_t lo = grid.size() * w / workers;
    const std::size_t hi = grid.size() * (w + 1) / workers;
    std::vector<std::size_t> idx(t, 0);
    for (std::size_t k = lo; k < hi; ++k) {
      idx[0] = k;
      sweep(rec, grid, t, star_value, star_last, idx, 1, rec.e0, parts[w]);
    }
  };
  if (workers == 1) {
    run_slice(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run_slice, w);
    for (auto& th : pool) th.join();
  }

  // Slices are ordered by first index, so a strict comparison preserves the
  // lexicographic tie-break.
  Partial merged;
  for (const Partial& p : parts) {
    merged.evaluations += p.evaluations;
    merged.min_slack = std::min(merged.min_slack, p.min_slack);
    if (p.best < merged.best) {
      merged.best = p.best;
      merged.best_idx = p.best_idx;
    }
  }

  BruteForceResult out;
  out.best_value = merged.best;
  for (std::size_t k : merged.best_idx) out.best_etas.push_back(grid[k]);
  out.selftuned_value = star_value;
  out.min_gap_slack = merged.min_slack;
  out.grid_points = grid.size();
  out.evaluations = merged.evaluations;
  return out;
}

}  // namespace mirrorstep

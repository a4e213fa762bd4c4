#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mirrorstep {

// Scalar error recursion e_{t+1} = (1 - theta eta_t) e_t + delta eta_t^2.
struct ErrorRecursion {
  double theta = 0.0;
  double delta = 0.0;
  double e0 = 0.0;

  void validate() const;
  bool admissible() const noexcept { return e0 <= 2.0 * delta / (theta * theta); }
  // eta_0^* = theta e0 / (2 delta)
  double initial_stepsize() const noexcept { return theta * e0 / (2.0 * delta); }
};

// Folds the recursion over `etas`; every eta must lie in (0, 1/theta].
double error_seq_eval(const ErrorRecursion& rec, std::span<const double> etas);

// (eta_0^*, ..., eta_{t-1}^*), the stepsizes that minimise e_t.
std::vector<double> selftuned_seq(const ErrorRecursion& rec, std::size_t t);

struct BruteForceResult {
  std::vector<double> best_etas;
  double best_value = 0.0;
  // e_t at the self-tuned sequence, for reference.
  double selftuned_value = 0.0;
  // min over the grid of e_t(eta) - e_t(eta^*) - delta (eta_{t-1} - eta^*_{t-1})^2;
  // nonnegative (up to rounding) when the optimality gap bound holds.
  double min_gap_slack = 0.0;
  std::size_t grid_points = 0;
  std::size_t evaluations = 0;
};

inline constexpr std::size_t kBruteForceMaxLength = 4;

// Exhaustive minimisation of e_t over the grid {k h : k = 1..} ∪ {1/theta} in
// (0, 1/theta]^t. Ties resolve to the lexicographically smallest sequence.
// `workers` slices the first coordinate; the result does not depend on it.
BruteForceResult brute_force_min(const ErrorRecursion& rec, std::size_t t, double grid_step, unsigned workers = 1);

// Grid used by brute_force_min.
std::vector<double> stepsize_grid(double theta, double grid_step);

}  // namespace mirrorstep

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>

#include "mirrorstep/stepsize.hpp"

namespace mirrorstep {

// A rate bound constant_factor / t, optionally paired with a probability
// threshold T(eps, rho).
struct BoundReport {
  double constant_factor = 0.0;
  std::optional<double> threshold_T;

  double at(double t) const { return constant_factor / t; }
  std::function<double(double)> bound_at_t() const {
    return [c = constant_factor](double t) { return c / t; };
  }
};

// E||beta_t - beta^*||^2 <= factor / t for the self-tuned subgradient method.
BoundReport msd_bound_nonsmooth(const NonsmoothParams& params);

// Same for the self-tuned gradient method.
BoundReport msd_bound_smooth(const SmoothParams& params);

// Iteration count after which L(beta_j, beta^*) <= eps for all later j with
// probability at least 1 - rho.
double prob_threshold(const NonsmoothParams& params, double eps, double rho);
double prob_threshold(const SmoothParams& params, double eps, double rho);

// Harmonic (gamma / t) over self-tuned constant factor for one Euclidean
// block: gamma^2 mu_F^2 / (2 mu_F gamma - 1). Requires gamma > 1/(2 mu_F).
double harmonic_ratio(double gamma, double mu_F);

struct SbmdComparison {
  double ours = 0.0;
  double theirs = 0.0;
  double ratio = 0.0;
};

// Self-tuned block method versus the averaged stochastic block mirror descent
// bound, both with identical per-block constants.
SbmdComparison sbmd_comparison(double mu_F, double mu_omega, double L_omega, std::size_t num_blocks,
                               std::span<const double> C);

}  // namespace mirrorstep

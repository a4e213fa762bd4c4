#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "mirrorstep/geometry.hpp"

namespace mirrorstep {

// Constants of a nonsmooth strongly convex problem: modulus mu_F and per-block
// bounds C_i on the conditional second moment of the stochastic subgradient.
struct NonsmoothParams {
  double mu_F = 0.0;
  std::shared_ptr<const BlockLayout> layout;
  Vec C;

  void validate() const;
  // C_i^2 L_i >= 8 M_i^2 mu_i mu_F^2 on every block; names the first block
  // that fails.
  void check_admissible() const;
  // sum_i C_i^2 / mu_i
  double weighted_C_sum() const;
};

// Constants of a smooth problem: mu_F <= L_F and per-block noise bounds nu_i.
struct SmoothParams {
  double mu_F = 0.0;
  double L_F = 0.0;
  std::shared_ptr<const BlockLayout> layout;
  Vec nu;

  void validate() const;
  // 8 L_F^2 p_max mu_min^-2 sum p_i^-1 L_i M_i^2 + sum 2 nu_i^2 / mu_i, the
  // quantity that replaces sum C_i^2/mu_i in the smooth analysis.
  double effective_C_sum() const;
};

// Smallest C satisfying the self-tuned admissibility condition given an
// estimated second-moment bound: max(C, sqrt(8 M^2 mu_omega mu_F^2 / L_omega)).
double admissible_subgradient_bound(double C, double mu_F, double M, double mu_omega, double L_omega);

enum class PolicyKind { SelfTuned, Harmonic, OverT };

// Stateful stepsize generator. `next()` returns eta_t for the current
// iteration t (starting at t = 0) and advances. Copying a policy clones its
// state.
class StepsizePolicy {
 public:
  // eta_{t+1} = eta_t (1 - half_theta eta_t), requires 0 < eta0 <= 1/(2 half_theta).
  static StepsizePolicy self_tuned(double eta0, double half_theta);
  // eta_t = a / (t + b)
  static StepsizePolicy harmonic(double a, double b);
  // eta_0 at t = 0, then eta0 / t.
  static StepsizePolicy over_t(double eta0);

  double next();
  double peek() const noexcept { return current_; }
  std::uint64_t iteration() const noexcept { return t_; }
  void reset();

  PolicyKind kind() const noexcept { return kind_; }
  double eta0() const noexcept { return eta0_; }
  double half_theta() const noexcept { return half_theta_; }
  double theta() const noexcept { return 2.0 * half_theta_; }
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }

  std::string describe() const;

 private:
  StepsizePolicy() = default;
  double value_at(std::uint64_t t) const;

  PolicyKind kind_ = PolicyKind::SelfTuned;
  double eta0_ = 0.0;
  double half_theta_ = 0.0;
  double a_ = 0.0;
  double b_ = 0.0;
  double current_ = 0.0;
  std::uint64_t t_ = 0;
};

// Self-tuned rule for the randomized block subgradient method.
StepsizePolicy init_nonsmooth(const NonsmoothParams& params);

// Self-tuned rule for the randomized block gradient method.
StepsizePolicy init_smooth(const SmoothParams& params);

// Unifying rule for one block: any eta0 in (0, L_omega/(2 mu_F)] with
// half_theta = mu_F / L_omega.
StepsizePolicy unifying_policy(double eta0, double mu_F, double L_omega);

// Block version. For l > 1 the recursion factor p_min mu_F / L_max is an
// extrapolation of the single-block result and must be requested explicitly.
StepsizePolicy unifying_policy(double eta0, double mu_F, const BlockLayout& layout, bool allow_block_extrapolation);

}  // namespace mirrorstep

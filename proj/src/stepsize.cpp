#include "mirrorstep/stepsize.hpp"

#include <cmath>
#include <cstdio>

#include "mirrorstep/error.hpp"

namespace mirrorstep {

namespace {

void require_positive(double x, const char* name) {
  if (!(x > 0.0) || !std::isfinite(x)) throw ValidationError(std::string(name) + " must be positive and finite");
}

void require_layout(const std::shared_ptr<const BlockLayout>& layout, std::size_t n, const char* name) {
  if (!layout) throw ValidationError("stepsize parameters need a block layout");
  if (n != layout->num_blocks()) {
    throw ValidationError(std::string(name) + " needs one entry per block (" + std::to_string(layout->num_blocks()) +
                          ")");
  }
}

}  // namespace

void NonsmoothParams::validate() const {
  require_positive(mu_F, "mu_F");
  require_layout(layout, C.size(), "C");
  for (std::size_t i = 0; i < C.size(); ++i) {
    if (!(C[i] > 0.0) || !std::isfinite(C[i])) {
      throw ValidationError("C of block " + std::to_string(i + 1) + " must be positive");
    }
  }
}

void NonsmoothParams::check_admissible() const {
  validate();
  for (std::size_t i = 0; i < C.size(); ++i) {
    const double lhs = C[i] * C[i] * layout->L_omega(i);
    const double M = layout->radius(i);
    const double rhs = 8.0 * M * M * layout->mu_omega(i) * mu_F * mu_F;
    if (lhs < rhs) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "block %zu: C_i^2 L_omega = %.6g is below 8 M^2 mu_omega mu_F^2 = %.6g", i + 1, lhs,
                    rhs);
      throw ValidationError(buf);
    }
  }
}

double NonsmoothParams::weighted_C_sum() const {
  double s = 0.0;
  for (std::size_t i = 0; i < C.size(); ++i) s += C[i] * C[i] / layout->mu_omega(i);
  return s;
}

void SmoothParams::validate() const {
  require_positive(mu_F, "mu_F");
  require_positive(L_F, "L_F");
  if (L_F < mu_F) throw ValidationError("need mu_F <= L_F");
  require_layout(layout, nu.size(), "nu");
  for (std::size_t i = 0; i < nu.size(); ++i) {
    if (!(nu[i] > 0.0) || !std::isfinite(nu[i])) {
      throw ValidationError("nu of block " + std::to_string(i + 1) + " must be positive");
    }
  }
}

double SmoothParams::effective_C_sum() const {
  const double mu_min = layout->mu_min();
  double noise = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i) noise += 2.0 * nu[i] * nu[i] / layout->mu_omega(i);
  return 8.0 * L_F * L_F * layout->p_max() / (mu_min * mu_min) * layout->weighted_radius_sum() + noise;
}

double admissible_subgradient_bound(double C, double mu_F, double M, double mu_omega, double L_omega) {
  return std::max(C, std::sqrt(8.0 * M * M * mu_omega * mu_F * mu_F / L_omega));
}

// ------------------------------------------------------------- StepsizePolicy

StepsizePolicy StepsizePolicy::self_tuned(double eta0, double half_theta) {
  require_positive(eta0, "eta0");
  require_positive(half_theta, "half_theta");
  if (eta0 * 2.0 * half_theta > 1.0 + 1e-12) {
    throw ValidationError("self-tuned eta0 must not exceed 1/(2 half_theta)");
  }
  StepsizePolicy p;
  p.kind_ = PolicyKind::SelfTuned;
  p.eta0_ = eta0;
  p.half_theta_ = half_theta;
  p.current_ = eta0;
  return p;
}

StepsizePolicy StepsizePolicy::harmonic(double a, double b) {
  require_positive(a, "harmonic a");
  require_positive(b, "harmonic b");
  StepsizePolicy p;
  p.kind_ = PolicyKind::Harmonic;
  p.a_ = a;
  p.b_ = b;
  p.eta0_ = a / b;
  p.current_ = p.eta0_;
  return p;
}

StepsizePolicy StepsizePolicy::over_t(double eta0) {
  require_positive(eta0, "eta0");
  StepsizePolicy p;
  p.kind_ = PolicyKind::OverT;
  p.eta0_ = eta0;
  p.current_ = eta0;
  return p;
}

double StepsizePolicy::value_at(std::uint64_t t) const {
  switch (kind_) {
    case PolicyKind::Harmonic:
      return a_ / (static_cast<double>(t) + b_);
    case PolicyKind::OverT:
      return t == 0 ? eta0_ : eta0_ / static_cast<double>(t);
    case PolicyKind::SelfTuned:
      break;
  }
  return current_ * (1.0 - half_theta_ * current_);
}

double StepsizePolicy::next() {
  const double out = current_;
  ++t_;
  current_ = kind_ == PolicyKind::SelfTuned ? out * (1.0 - half_theta_ * out) : value_at(t_);
  return out;
}

void StepsizePolicy::reset() {
  t_ = 0;
  current_ = eta0_;
}

std::string StepsizePolicy::describe() const {
  char buf[128];
  switch (kind_) {
    case PolicyKind::SelfTuned:
      std::snprintf(buf, sizeof buf, "selftuned(eta0=%.17g, half_theta=%.17g)", eta0_, half_theta_);
      break;
    case PolicyKind::Harmonic:
      std::snprintf(buf, sizeof buf, "harmonic(a=%.17g, b=%.17g)", a_, b_);
      break;
    case PolicyKind::OverT:
      std::snprintf(buf, sizeof buf, "overt(eta0=%.17g)", eta0_);
      break;
  }
  return buf;
}

// ------------------------------------------------------------- initializations

StepsizePolicy init_nonsmooth(const NonsmoothParams& params) {
  params.check_admissible();
  const BlockLayout& lay = *params.layout;
  const double eta0 =
      4.0 * params.mu_F * lay.p_min() * lay.weighted_radius_sum() / (lay.L_max() * params.weighted_C_sum());
  const double half_theta = lay.p_min() * params.mu_F / lay.L_max();
  if (!(2.0 * half_theta * eta0 < 1.0)) {
    throw InvariantViolation("init_nonsmooth: theta * eta0 must be below 1");
  }
  return StepsizePolicy::self_tuned(eta0, half_theta);
}

StepsizePolicy init_smooth(const SmoothParams& params) {
  params.validate();
  const BlockLayout& lay = *params.layout;
  const double eta0 =
      4.0 * params.mu_F * lay.p_min() * lay.weighted_radius_sum() / (lay.L_max() * params.effective_C_sum());
  const double half_theta = lay.p_min() * params.mu_F / lay.L_max();
  if (!(2.0 * half_theta * eta0 < 1.0)) {
    throw InvariantViolation("init_smooth: theta * eta0 must be below 1");
  }
  return StepsizePolicy::self_tuned(eta0, half_theta);
}

StepsizePolicy unifying_policy(double eta0, double mu_F, double L_omega) {
  require_positive(eta0, "eta0");
  require_positive(mu_F, "mu_F");
  require_positive(L_omega, "L_omega");
  const double cap = L_omega / (2.0 * mu_F);
  if (eta0 > cap) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "unifying rule: eta0 = %.6g exceeds L_omega/(2 mu_F) = %.6g", eta0, cap);
    throw ValidationError(buf);
  }
  return StepsizePolicy::self_tuned(eta0, mu_F / L_omega);
}

StepsizePolicy unifying_policy(double eta0, double mu_F, const BlockLayout& layout, bool allow_block_extrapolation) {
  if (layout.num_blocks() == 1) return unifying_policy(eta0, mu_F, layout.L_omega(0));
  if (!allow_block_extrapolation) {
    throw ValidationError("unifying rule is only established for a single block; pass allow_block_extrapolation");
  }
  require_positive(eta0, "eta0");
  require_positive(mu_F, "mu_F");
  const double half_theta = layout.p_min() * mu_F / layout.L_max();
  if (2.0 * half_theta * eta0 > 1.0 + 1e-12) {
    throw ValidationError("unifying rule: eta0 exceeds L_max/(2 p_min mu_F)");
  }
  return StepsizePolicy::self_tuned(eta0, half_theta);
}

}  // namespace mirrorstep

#include "mirrorstep/bounds.hpp"

#include <cmath>
#include <string>

#include "mirrorstep/error.hpp"

namespace mirrorstep {

namespace {

// (L_max / (p_min mu_F))^2
double contraction_scale(const BlockLayout& lay, double mu_F) {
  const double r = lay.L_max() / (lay.p_min() * mu_F);
  return r * r;
}

void require_eps_rho(double eps, double rho) {
  if (!(eps > 0.0) || !(rho > 0.0)) throw ValidationError("eps and rho must be positive");
}

}  // namespace

BoundReport msd_bound_nonsmooth(const NonsmoothParams& params) {
  params.validate();
  const BlockLayout& lay = *params.layout;
  BoundReport r;
  r.constant_factor = lay.p_max() / lay.mu_min() * params.weighted_C_sum() * contraction_scale(lay, params.mu_F);
  return r;
}

BoundReport msd_bound_smooth(const SmoothParams& params) {
  // The noise-free limit nu -> 0 is meaningful for this bound, so zero nu is
  // accepted here even though SmoothParams requires nu > 0 elsewhere.
  if (!params.layout || params.nu.size() != params.layout->num_blocks()) {
    throw ValidationError("msd_bound_smooth: need one nu per block");
  }
  if (!(params.mu_F > 0.0) || !(params.L_F >= params.mu_F)) throw ValidationError("need 0 < mu_F <= L_F");
  const BlockLayout& lay = *params.layout;
  double noise = 0.0;
  for (std::size_t i = 0; i < params.nu.size(); ++i) {
    if (!(params.nu[i] >= 0.0)) throw ValidationError("nu must be nonnegative");
    noise += params.nu[i] * params.nu[i] / lay.mu_omega(i);
  }
  const double mu_min = lay.mu_min();
  const double drift = 4.0 * params.L_F * params.L_F * lay.p_max() / (mu_min * mu_min) * lay.weighted_radius_sum();
  BoundReport r;
  r.constant_factor = 2.0 * contraction_scale(lay, params.mu_F) * (drift + noise);
  return r;
}

double prob_threshold(const NonsmoothParams& params, double eps, double rho) {
  params.validate();
  require_eps_rho(eps, rho);
  return 1.5 * contraction_scale(*params.layout, params.mu_F) * params.weighted_C_sum() / (eps * rho);
}

double prob_threshold(const SmoothParams& params, double eps, double rho) {
  params.validate();
  require_eps_rho(eps, rho);
  return 1.5 / (eps * rho) * contraction_scale(*params.layout, params.mu_F) * params.effective_C_sum();
}

double harmonic_ratio(double gamma, double mu_F) {
  if (!(mu_F > 0.0)) throw ValidationError("harmonic_ratio: mu_F must be positive");
  const double denom = 2.0 * mu_F * gamma - 1.0;
  if (!(denom > 0.0)) throw ValidationError("harmonic_ratio: gamma must exceed 1/(2 mu_F)");
  return gamma * gamma * mu_F * mu_F / denom;
}

SbmdComparison sbmd_comparison(double mu_F, double mu_omega, double L_omega, std::size_t num_blocks,
                               std::span<const double> C) {
  if (!(mu_F > 0.0) || !(mu_omega > 0.0) || !(L_omega >= mu_omega)) {
    throw ValidationError("sbmd_comparison: need positive constants with mu_omega <= L_omega");
  }
  if (num_blocks == 0 || C.size() != num_blocks) throw ValidationError("sbmd_comparison: need one C per block");
  double c_sq = 0.0;
  for (double c : C) c_sq += c * c;
  const double l = static_cast<double>(num_blocks);
  SbmdComparison out;
  out.theirs = 4.0 * l * L_omega / (mu_F * mu_F * mu_omega) * c_sq;
  out.ours = l * L_omega * L_omega / (mu_omega * mu_omega * mu_F * mu_F) * c_sq;
  out.ratio = L_omega / (4.0 * mu_omega);
  return out;
}

}  // namespace mirrorstep

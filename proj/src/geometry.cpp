#include "mirrorstep/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mirrorstep/error.hpp"

namespace mirrorstep {

namespace {

double dot(ConstBlock a, ConstBlock b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

double l2_sq(ConstBlock a) { return dot(a, a); }

void require_same_size(ConstBlock a, ConstBlock b, const char* what) {
  if (a.size() != b.size()) {
    throw ValidationError(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  }
}

void require_entropy_domain(ConstBlock x) {
  for (double xj : x) {
    if (!(xj > 0.0)) throw DomainError("negative entropy is only defined for strictly positive points");
  }
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

// ---------------------------------------------------------------- BlockLayout

BlockLayout::BlockLayout(std::vector<std::size_t> block_sizes, Vec probs, Vec mu_omega, Vec L_omega, Vec radii)
    : sizes_(std::move(block_sizes)),
      probs_(std::move(probs)),
      mu_(std::move(mu_omega)),
      L_(std::move(L_omega)),
      radii_(std::move(radii)) {
  const std::size_t l = sizes_.size();
  if (l == 0) throw ValidationError("layout needs at least one block");
  if (probs_.size() != l || mu_.size() != l || L_.size() != l || radii_.size() != l) {
    throw ValidationError("layout: per-block vectors must all have " + std::to_string(l) + " entries");
  }
  offsets_.assign(l + 1, 0);
  for (std::size_t i = 0; i < l; ++i) {
    const std::string blk = "block " + std::to_string(i + 1);
    if (sizes_[i] == 0) throw ValidationError(blk + ": size must be positive");
    if (!(probs_[i] > 0.0) || probs_[i] > 1.0) throw ValidationError(blk + ": probability must lie in (0, 1]");
    if (!(mu_[i] > 0.0)) throw ValidationError(blk + ": mu_omega must be positive");
    if (!(L_[i] >= mu_[i]) || !std::isfinite(L_[i])) throw ValidationError(blk + ": need mu_omega <= L_omega");
    if (!(radii_[i] > 0.0) || !std::isfinite(radii_[i])) throw ValidationError(blk + ": radius must be positive");
    offsets_[i + 1] = offsets_[i] + sizes_[i];
  }
  const double total = std::accumulate(probs_.begin(), probs_.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) throw ValidationError("layout: probabilities must sum to 1");

  cdf_.resize(l);
  std::partial_sum(probs_.begin(), probs_.end(), cdf_.begin());
  cdf_.back() = 1.0;

  p_min_ = *std::min_element(probs_.begin(), probs_.end());
  p_max_ = *std::max_element(probs_.begin(), probs_.end());
  L_max_ = *std::max_element(L_.begin(), L_.end());
  mu_min_ = *std::min_element(mu_.begin(), mu_.end());
}

BlockLayout BlockLayout::uniform(std::size_t num_blocks, std::size_t block_size, double radius, double mu_omega,
                                 double L_omega) {
  if (num_blocks == 0) throw ValidationError("layout needs at least one block");
  return BlockLayout(std::vector<std::size_t>(num_blocks, block_size),
                     Vec(num_blocks, 1.0 / static_cast<double>(num_blocks)), Vec(num_blocks, mu_omega),
                     Vec(num_blocks, L_omega), Vec(num_blocks, radius));
}

double BlockLayout::weighted_radius_sum() const {
  double s = 0.0;
  for (std::size_t i = 0; i < num_blocks(); ++i) s += L_[i] * radii_[i] * radii_[i] / probs_[i];
  return s;
}

// ---------------------------------------------------------------------- Point

Point::Point(std::shared_ptr<const BlockLayout> layout, Vec values) : layout_(std::move(layout)), values_(std::move(values)) {
  if (!layout_) throw ValidationError("point needs a layout");
  if (values_.size() != layout_->dim()) {
    throw ValidationError("point dimension " + std::to_string(values_.size()) + " does not match layout dimension " +
                          std::to_string(layout_->dim()));
  }
}

Point Point::zeros(std::shared_ptr<const BlockLayout> layout) {
  const std::size_t n = layout->dim();
  return Point(std::move(layout), Vec(n, 0.0));
}

ConstBlock Point::block(std::size_t i) const {
  return ConstBlock(values_).subspan(layout_->offset(i), layout_->block_size(i));
}

MutBlock Point::block(std::size_t i) { return MutBlock(values_).subspan(layout_->offset(i), layout_->block_size(i)); }

double squared_distance(const Point& a, const Point& b) {
  if (a.dim() != b.dim()) throw ValidationError("squared_distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < a.dim(); ++j) {
    const double d = a.values()[j] - b.values()[j];
    s += d * d;
  }
  return s;
}

// ---------------------------------------------------------- DistanceGenerator

double DistanceGenerator::value(ConstBlock x) const {
  if (kind_ == DgfKind::Euclidean) return 0.5 * l2_sq(x);
  require_entropy_domain(x);
  double s = 0.0;
  for (double xj : x) s += xj * std::log(xj);
  return s;
}

Vec DistanceGenerator::gradient(ConstBlock x) const {
  Vec g(x.begin(), x.end());
  if (kind_ == DgfKind::Euclidean) return g;
  require_entropy_domain(x);
  for (double& gj : g) gj = 1.0 + std::log(std::max(gj, kEntropyFloor));
  return g;
}

double DistanceGenerator::smoothness(double floor) const {
  if (kind_ == DgfKind::Euclidean) return 1.0;
  if (!(floor > 0.0)) throw ValidationError("entropy smoothness needs a positive coordinate floor");
  return 1.0 / floor;
}

double DistanceGenerator::norm_sq(ConstBlock v) const {
  if (kind_ == DgfKind::Euclidean) return l2_sq(v);
  double s = 0.0;
  for (double vj : v) s += std::abs(vj);
  return s * s;
}

double DistanceGenerator::dual_norm_sq(ConstBlock v) const {
  if (kind_ == DgfKind::Euclidean) return l2_sq(v);
  double m = 0.0;
  for (double vj : v) m = std::max(m, std::abs(vj));
  return m * m;
}

// --------------------------------------------------------------- FeasibleBlock

FeasibleBlock FeasibleBlock::box(Vec lower, Vec upper) {
  if (lower.size() != upper.size() || lower.empty()) throw ValidationError("box: bounds must have equal, nonzero size");
  for (std::size_t j = 0; j < lower.size(); ++j) {
    if (!std::isfinite(lower[j]) || !std::isfinite(upper[j]) || lower[j] > upper[j]) {
      throw ValidationError("box: need finite lower <= upper at coordinate " + std::to_string(j));
    }
  }
  return FeasibleBlock(BoxSet{std::move(lower), std::move(upper)});
}

FeasibleBlock FeasibleBlock::box(std::size_t dim, double lower, double upper) {
  return box(Vec(dim, lower), Vec(dim, upper));
}

FeasibleBlock FeasibleBlock::ball(double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ValidationError("ball: radius must be positive and finite");
  return FeasibleBlock(BallSet{radius});
}

FeasibleBlock FeasibleBlock::simplex() { return FeasibleBlock(SimplexSet{}); }

bool FeasibleBlock::contains(ConstBlock x, double tol) const {
  return std::visit(overloaded{
                        [&](const BoxSet& b) {
                          if (x.size() != b.lower.size()) return false;
                          for (std::size_t j = 0; j < x.size(); ++j) {
                            if (x[j] < b.lower[j] - tol || x[j] > b.upper[j] + tol) return false;
                          }
                          return true;
                        },
                        [&](const BallSet& b) { return std::sqrt(l2_sq(x)) <= b.radius + tol; },
                        [&](const SimplexSet&) {
                          double s = 0.0;
                          for (double xj : x) {
                            if (xj < -tol) return false;
                            s += xj;
                          }
                          return std::abs(s - 1.0) <= tol * std::max<double>(1.0, static_cast<double>(x.size()));
                        },
                    },
                    shape_);
}

double FeasibleBlock::max_norm(std::size_t dim) const {
  return std::visit(overloaded{
                        [&](const BoxSet& b) {
                          double s = 0.0;
                          for (std::size_t j = 0; j < b.lower.size(); ++j) {
                            const double m = std::max(std::abs(b.lower[j]), std::abs(b.upper[j]));
                            s += m * m;
                          }
                          return std::sqrt(s);
                        },
                        [&](const BallSet& b) { return b.radius; },
                        [&](const SimplexSet&) { return dim == 0 ? 0.0 : 1.0; },
                    },
                    shape_);
}

Vec FeasibleBlock::project(ConstBlock x) const {
  Vec z(x.begin(), x.end());
  std::visit(overloaded{
                 [&](const BoxSet& b) {
                   if (z.size() != b.lower.size()) throw ValidationError("box projection: dimension mismatch");
                   for (std::size_t j = 0; j < z.size(); ++j) z[j] = std::clamp(z[j], b.lower[j], b.upper[j]);
                 },
                 [&](const BallSet& b) {
                   const double nrm = std::sqrt(l2_sq(z));
                   if (nrm > b.radius) {
                     for (double& zj : z) zj *= b.radius / nrm;
                   }
                 },
                 [&](const SimplexSet&) {
                   // Sort-based projection: find the threshold tau with
                   // sum max(x_j - tau, 0) = 1.
                   Vec s = z;
                   std::sort(s.begin(), s.end(), std::greater<>());
                   double cum = 0.0, tau = 0.0;
                   for (std::size_t k = 0; k < s.size(); ++k) {
                     cum += s[k];
                     const double cand = (cum - 1.0) / static_cast<double>(k + 1);
                     if (s[k] - cand > 0.0) tau = cand;
                   }
                   for (double& zj : z) zj = std::max(zj - tau, 0.0);
                 },
             },
             shape_);
  return z;
}

// ------------------------------------------------------------------ operations

double bregman_div(const DistanceGenerator& dgf, ConstBlock b1, ConstBlock b2) {
  require_same_size(b1, b2, "bregman_div");
  if (dgf.kind() == DgfKind::Euclidean) {
    double s = 0.0;
    for (std::size_t j = 0; j < b1.size(); ++j) {
      const double d = b2[j] - b1[j];
      s += d * d;
    }
    return 0.5 * s;
  }
  require_entropy_domain(b1);
  require_entropy_domain(b2);
  // Generalised KL divergence: sum b2 log(b2/b1) - b2 + b1.
  double s = 0.0;
  for (std::size_t j = 0; j < b1.size(); ++j) s += b2[j] * std::log(b2[j] / b1[j]) - b2[j] + b1[j];
  return std::max(s, 0.0);
}

Vec bregman_partial_grad(const DistanceGenerator& dgf, ConstBlock b1, ConstBlock b2) {
  require_same_size(b1, b2, "bregman_partial_grad");
  Vec g2 = dgf.gradient(b2);
  const Vec g1 = dgf.gradient(b1);
  for (std::size_t j = 0; j < g2.size(); ++j) g2[j] -= g1[j];
  return g2;
}

Vec prox_map(const DistanceGenerator& dgf, const FeasibleBlock& set, ConstBlock b1, ConstBlock v) {
  require_same_size(b1, v, "prox_map");
  for (double vj : v) {
    if (!std::isfinite(vj)) throw ValidationError("prox_map: dual vector must be finite");
  }
  if (!set.contains(b1)) throw ValidationError("prox_map: starting point is not in the feasible set");

  if (dgf.kind() == DgfKind::Euclidean) {
    Vec step(b1.begin(), b1.end());
    for (std::size_t j = 0; j < step.size(); ++j) step[j] -= v[j];
    return set.project(step);
  }

  if (!std::holds_alternative<SimplexSet>(set.shape())) {
    throw ValidationError("prox_map: the entropy map is only supported on the simplex");
  }
  // Exponentiated-gradient step z_j ~ b1_j exp(-v_j), normalised in log space.
  Vec logw(b1.size());
  for (std::size_t j = 0; j < b1.size(); ++j) logw[j] = std::log(std::max(b1[j], kEntropyFloor)) - v[j];
  const double mx = *std::max_element(logw.begin(), logw.end());
  double total = 0.0;
  for (double& w : logw) {
    w = std::exp(w - mx);
    total += w;
  }
  double renorm = 0.0;
  for (double& w : logw) {
    w = std::max(w / total, kEntropyFloor);
    renorm += w;
  }
  for (double& w : logw) w /= renorm;
  return logw;
}

double dual_norm_sq(const DistanceGenerator& dgf, ConstBlock v) { return dgf.dual_norm_sq(v); }

// -------------------------------------------------------------------- Geometry

Geometry::Geometry(std::shared_ptr<const BlockLayout> layout, std::vector<DistanceGenerator> dgfs,
                   std::vector<FeasibleBlock> sets)
    : layout_(std::move(layout)), dgfs_(std::move(dgfs)), sets_(std::move(sets)) {
  if (!layout_) throw ValidationError("geometry needs a layout");
  const std::size_t l = layout_->num_blocks();
  if (dgfs_.size() != l || sets_.size() != l) {
    throw ValidationError("geometry: need one mirror map and one feasible set per block");
  }
  for (std::size_t i = 0; i < l; ++i) {
    const double reach = sets_[i].max_norm(layout_->block_size(i));
    if (reach > layout_->radius(i) * (1.0 + 1e-12)) {
      throw ValidationError("geometry: feasible set of block " + std::to_string(i + 1) + " exceeds radius M_i");
    }
    if (dgfs_[i].kind() == DgfKind::NegativeEntropy && !std::holds_alternative<SimplexSet>(sets_[i].shape())) {
      throw ValidationError("geometry: block " + std::to_string(i + 1) + " pairs the entropy map with a non-simplex set");
    }
    if (const auto* box = std::get_if<BoxSet>(&sets_[i].shape()); box && box->lower.size() != layout_->block_size(i)) {
      throw ValidationError("geometry: box of block " + std::to_string(i + 1) + " has the wrong dimension");
    }
  }
}

Geometry Geometry::euclidean_balls(std::shared_ptr<const BlockLayout> layout) {
  const std::size_t l = layout->num_blocks();
  std::vector<FeasibleBlock> sets;
  sets.reserve(l);
  for (std::size_t i = 0; i < l; ++i) sets.push_back(FeasibleBlock::ball(layout->radius(i)));
  return Geometry(std::move(layout), std::vector<DistanceGenerator>(l, DistanceGenerator::euclidean()), std::move(sets));
}

bool Geometry::contains(const Point& p, double tol) const {
  for (std::size_t i = 0; i < layout_->num_blocks(); ++i) {
    if (!sets_[i].contains(p.block(i), tol)) return false;
  }
  return true;
}

}  // namespace mirrorstep

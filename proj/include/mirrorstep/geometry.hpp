#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <variant>
#include <vector>

namespace mirrorstep {

using Vec = std::vector<double>;
using ConstBlock = std::span<const double>;
using MutBlock = std::span<double>;

// Partition of R^n into l blocks together with the sampling distribution and
// the per-block mirror-map constants (strong convexity mu, smoothness L) and
// norm radii M of the feasible sets.
class BlockLayout {
 public:
  BlockLayout(std::vector<std::size_t> block_sizes, Vec probs, Vec mu_omega, Vec L_omega, Vec radii);

  // l blocks of equal size, uniform probabilities, identical constants.
  static BlockLayout uniform(std::size_t num_blocks, std::size_t block_size, double radius,
                             double mu_omega = 1.0, double L_omega = 1.0);

  std::size_t num_blocks() const noexcept { return sizes_.size(); }
  std::size_t dim() const noexcept { return offsets_.back(); }
  std::size_t block_size(std::size_t i) const { return sizes_.at(i); }
  std::size_t offset(std::size_t i) const { return offsets_.at(i); }

  double prob(std::size_t i) const { return probs_.at(i); }
  double mu_omega(std::size_t i) const { return mu_.at(i); }
  double L_omega(std::size_t i) const { return L_.at(i); }
  double radius(std::size_t i) const { return radii_.at(i); }

  const Vec& probs() const noexcept { return probs_; }
  const Vec& mu_omegas() const noexcept { return mu_; }
  const Vec& L_omegas() const noexcept { return L_; }
  const Vec& radii() const noexcept { return radii_; }
  const Vec& cumulative_probs() const noexcept { return cdf_; }

  double p_min() const noexcept { return p_min_; }
  double p_max() const noexcept { return p_max_; }
  double L_max() const noexcept { return L_max_; }
  double mu_min() const noexcept { return mu_min_; }

  // sum_i p_i^{-1} L_i M_i^2, shared by both self-tuned initializations.
  double weighted_radius_sum() const;

  bool operator==(const BlockLayout&) const = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  Vec probs_;
  Vec mu_;
  Vec L_;
  Vec radii_;
  Vec cdf_;
  double p_min_ = 0, p_max_ = 0, L_max_ = 0, mu_min_ = 0;
};

// A point of R^n viewed through a block layout.
class Point {
 public:
  Point(std::shared_ptr<const BlockLayout> layout, Vec values);
  static Point zeros(std::shared_ptr<const BlockLayout> layout);

  const BlockLayout& layout() const noexcept { return *layout_; }
  const std::shared_ptr<const BlockLayout>& layout_ptr() const noexcept { return layout_; }

  ConstBlock block(std::size_t i) const;
  MutBlock block(std::size_t i);

  const Vec& values() const noexcept { return values_; }
  Vec& values() noexcept { return values_; }
  std::size_t dim() const noexcept { return values_.size(); }

 private:
  std::shared_ptr<const BlockLayout> layout_;
  Vec values_;
};

double squared_distance(const Point& a, const Point& b);

// Iterates are clamped to this floor before log/gradient evaluation of the
// entropy map.
inline constexpr double kEntropyFloor = 1e-12;

enum class DgfKind { Euclidean, NegativeEntropy };

// Distance-generating function of one block. Euclidean is 1/2||x||_2^2 with
// the l2 norm; NegativeEntropy is sum x log x with the l1 norm (linf dual).
class DistanceGenerator {
 public:
  constexpr DistanceGenerator() = default;
  constexpr explicit DistanceGenerator(DgfKind kind) : kind_(kind) {}

  static constexpr DistanceGenerator euclidean() { return DistanceGenerator(DgfKind::Euclidean); }
  static constexpr DistanceGenerator entropy() { return DistanceGenerator(DgfKind::NegativeEntropy); }

  DgfKind kind() const noexcept { return kind_; }

  double value(ConstBlock x) const;
  Vec gradient(ConstBlock x) const;

  // Strong convexity modulus w.r.t. the block norm (1 for both maps; for
  // entropy this is Pinsker's inequality on the simplex).
  double strong_convexity() const noexcept { return 1.0; }
  // Gradient Lipschitz constant over points whose coordinates are all at
  // least `floor`. Euclidean ignores the floor.
  double smoothness(double floor = kEntropyFloor) const;

  double norm_sq(ConstBlock v) const;
  double dual_norm_sq(ConstBlock v) const;

  bool operator==(const DistanceGenerator&) const = default;

 private:
  DgfKind kind_ = DgfKind::Euclidean;
};

struct BoxSet {
  Vec lower;
  Vec upper;
};

// Origin-centred Euclidean ball.
struct BallSet {
  double radius = 1.0;
};

// Probability simplex {x >= 0, sum x = 1}.
struct SimplexSet {};

class FeasibleBlock {
 public:
  using Shape = std::variant<BoxSet, BallSet, SimplexSet>;

  static FeasibleBlock box(Vec lower, Vec upper);
  static FeasibleBlock box(std::size_t dim, double lower, double upper);
  static FeasibleBlock ball(double radius);
  static FeasibleBlock simplex();

  const Shape& shape() const noexcept { return shape_; }

  bool contains(ConstBlock x, double tol = 1e-9) const;
  // Largest l2 norm of any admitted point of dimension `dim`.
  double max_norm(std::size_t dim) const;
  // Euclidean projection onto the set.
  Vec project(ConstBlock x) const;

 private:
  explicit FeasibleBlock(Shape s) : shape_(std::move(s)) {}
  Shape shape_;
};

double bregman_div(const DistanceGenerator& dgf, ConstBlock b1, ConstBlock b2);

// Gradient of D(b1, .) evaluated at b2.
Vec bregman_partial_grad(const DistanceGenerator& dgf, ConstBlock b1, ConstBlock b2);

// argmin_{z in set} <v, z> + D(b1, z). Supported pairs: Euclidean with any
// set, NegativeEntropy with the simplex. Throws ValidationError if b1 is not
// in the set or the pair has no closed form.
Vec prox_map(const DistanceGenerator& dgf, const FeasibleBlock& set, ConstBlock b1, ConstBlock v);

double dual_norm_sq(const DistanceGenerator& dgf, ConstBlock v);

// Per-block mirror maps and feasible sets over a layout.
class Geometry {
 public:
  Geometry(std::shared_ptr<const BlockLayout> layout, std::vector<DistanceGenerator> dgfs,
           std::vector<FeasibleBlock> sets);

  // Euclidean map and origin ball of radius M_i on every block.
  static Geometry euclidean_balls(std::shared_ptr<const BlockLayout> layout);

  const BlockLayout& layout() const noexcept { return *layout_; }
  const std::shared_ptr<const BlockLayout>& layout_ptr() const noexcept { return layout_; }
  const DistanceGenerator& dgf(std::size_t i) const { return dgfs_.at(i); }
  const FeasibleBlock& set(std::size_t i) const { return sets_.at(i); }

  bool contains(const Point& p, double tol = 1e-9) const;

 private:
  std::shared_ptr<const BlockLayout> layout_;
  std::vector<DistanceGenerator> dgfs_;
  std::vector<FeasibleBlock> sets_;
};

}  // namespace mirrorstep

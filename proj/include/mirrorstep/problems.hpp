#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mirrorstep/geometry.hpp"
#include "mirrorstep/rng.hpp"

namespace mirrorstep {

// One oracle answer: the sampled block (0-based), the stochastic
// (sub)gradient restricted to it, and, when the problem can compute it, the
// noise z = g - grad F on that block.
struct OracleSample {
  std::size_t block = 0;
  Vec g_block;
  std::optional<Vec> z_block;
};

// A stochastic problem min E f(beta, xi) over a block layout.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual const std::shared_ptr<const BlockLayout>& layout_ptr() const noexcept = 0;
  const BlockLayout& layout() const { return *layout_ptr(); }

  // Draws xi from `noise` and returns block `block` of a (sub)gradient of
  // f(., xi) at beta.
  virtual OracleSample oracle(const Point& beta, std::size_t block, CounterRng& noise) const = 0;

  virtual std::optional<double> objective(const Point&) const { return std::nullopt; }
  virtual std::optional<Point> optimum() const { return std::nullopt; }
  virtual bool differentiable() const noexcept = 0;
  virtual double strong_convexity() const noexcept = 0;
};

// f(beta, xi) = 1/2 sum_j a_j (beta_j - xi_j)^2 with xi_j = c_j + sigma N(0,1).
// F is a-weighted squared distance to c plus a constant, so beta^* = c.
class QuadraticProblem final : public Problem {
 public:
  QuadraticProblem(std::shared_ptr<const BlockLayout> layout, Vec diag, Vec center, double sigma);

  const std::shared_ptr<const BlockLayout>& layout_ptr() const noexcept override { return layout_; }
  OracleSample oracle(const Point& beta, std::size_t block, CounterRng& noise) const override;
  std::optional<double> objective(const Point& beta) const override;
  std::optional<Point> optimum() const override;
  bool differentiable() const noexcept override { return true; }
  double strong_convexity() const noexcept override { return mu_F_; }

  double lipschitz_gradient() const noexcept { return L_F_; }
  double sigma() const noexcept { return sigma_; }
  const Vec& diag() const noexcept { return diag_; }
  const Vec& center() const noexcept { return center_; }

  Vec full_gradient(const Point& beta) const;

  // sup over the radius-M_i ball of E||g_i||^2, square-rooted:
  // max_j a_j * sqrt((M_i + ||c^i||)^2 + n_i sigma^2).
  double subgradient_bound(std::size_t block) const;
  // sqrt(E||z_i||^2) = sigma * ||a^i||.
  double noise_bound(std::size_t block) const;
  Vec subgradient_bounds() const;
  Vec noise_bounds() const;

 private:
  std::shared_ptr<const BlockLayout> layout_;
  Vec diag_;
  Vec center_;
  double sigma_;
  double mu_F_;
  double L_F_;
};

// Equivalent free-function form of QuadraticProblem::oracle.
OracleSample quadratic_oracle(const QuadraticProblem& problem, const Point& beta, std::size_t block,
                              CounterRng& noise);

// Sparse labelled rows in CSR layout.
class Dataset {
 public:
  using Entry = std::pair<std::uint32_t, double>;

  void add_row(std::span<const Entry> entries, double label);

  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  std::size_t dim() const noexcept { return dim_; }
  void set_dim(std::size_t d);

  double label(std::size_t i) const { return labels_.at(i); }
  const Vec& labels() const noexcept { return labels_; }
  std::span<const std::uint32_t> row_cols(std::size_t i) const;
  std::span<const double> row_vals(std::size_t i) const;

  double dot(std::size_t i, std::span<const double> beta) const;
  double row_norm_sq(std::size_t i) const;

  Dataset subset(std::span<const std::size_t> rows) const;

 private:
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::uint32_t> cols_;
  Vec vals_;
  Vec labels_;
  std::size_t dim_ = 0;
};

using LabelMap = std::map<double, double>;

// `label idx:val idx:val ...`, 1-based indices. Labels pass through
// `label_map` first; remaining positive labels become +1, others -1.
Dataset load_libsvm(const std::filesystem::path& path, const LabelMap& label_map = {});

// Whitespace-separated `B G R label` rows with labels in {1, 2}; features are
// divided by 255, label 1 (skin) maps to +1 and 2 to -1.
Dataset load_skin_tsv(const std::filesystem::path& path);

// `per_class` rows of each label drawn without replacement, in file order.
Dataset balanced_subset(const Dataset& data, std::size_t per_class, std::uint64_t seed);

// Three-feature, class-balanced fixture in [0,1]^3 that stands in for the
// Skin data when the real file is unavailable.
Dataset synthetic_svm_fixture(std::size_t rows, std::uint64_t seed);

// F(beta) = (1/m) sum max(0, 1 - y_i <beta, x_i>) + (lambda/2) ||beta||^2.
class SvmProblem final : public Problem {
 public:
  SvmProblem(std::shared_ptr<const Dataset> data, double lambda, std::shared_ptr<const BlockLayout> layout);
  // Single-block layout with a Euclidean ball of radius sqrt(2/lambda).
  SvmProblem(std::shared_ptr<const Dataset> data, double lambda);

  const std::shared_ptr<const BlockLayout>& layout_ptr() const noexcept override { return layout_; }
  OracleSample oracle(const Point& beta, std::size_t block, CounterRng& noise) const override;
  std::optional<double> objective(const Point& beta) const override;
  bool differentiable() const noexcept override { return false; }
  double strong_convexity() const noexcept override { return lambda_; }

  double lambda() const noexcept { return lambda_; }
  const Dataset& data() const noexcept { return *data_; }

  // Stochastic subgradient for a given sample index.
  Vec sample_subgradient(const Point& beta, std::size_t sample, std::size_t block) const;
  // (1/m) sum of per-sample subgradients; an element of dF(beta).
  Vec full_subgradient(const Point& beta) const;

  // sqrt(2/lambda): F(beta^*) <= F(0) = 1 bounds ||beta^*||.
  static double default_radius(double lambda);

 private:
  std::shared_ptr<const Dataset> data_;
  double lambda_;
  std::shared_ptr<const BlockLayout> layout_;
};

double svm_objective(const SvmProblem& problem, const Point& beta);
OracleSample svm_stoch_subgradient(const SvmProblem& problem, const Point& beta, std::size_t block,
                                   CounterRng& noise);

}  // namespace mirrorstep

#include "mirrorstep/problems.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <string_view>

#include "mirrorstep/error.hpp"

namespace mirrorstep {

// ------------------------------------------------------------ QuadraticProblem

QuadraticProblem::QuadraticProblem(std::shared_ptr<const BlockLayout> layout, Vec diag, Vec center, double sigma)
    : layout_(std::move(layout)), diag_(std::move(diag)), center_(std::move(center)), sigma_(sigma) {
  if (!layout_) throw ValidationError("quadratic problem needs a layout");
  const std::size_t n = layout_->dim();
  if (diag_.size() != n || center_.size() != n) {
    throw ValidationError("quadratic problem: diag and center must have dimension " + std::to_string(n));
  }
  if (!(sigma_ >= 0.0) || !std::isfinite(sigma_)) throw ValidationError("quadratic problem: sigma must be >= 0");
  for (double a : diag_) {
    if (!(a > 0.0) || !std::isfinite(a)) throw ValidationError("quadratic problem: diagonal entries must be positive");
  }
  for (std::size_t i = 0; i < layout_->num_blocks(); ++i) {
    double s = 0.0;
    for (std::size_t j = layout_->offset(i); j < layout_->offset(i + 1); ++j) s += center_[j] * center_[j];
    if (!(std::sqrt(s) < layout_->radius(i))) {
      throw ValidationError("quadratic problem: optimum must lie strictly inside block " + std::to_string(i + 1));
    }
  }
  mu_F_ = *std::min_element(diag_.begin(), diag_.end());
  L_F_ = *std::max_element(diag_.begin(), diag_.end());
}

OracleSample QuadraticProblem::oracle(const Point& beta, std::size_t block, CounterRng& noise) const {
  const std::size_t off = layout_->offset(block);
  const std::size_t len = layout_->block_size(block);
  OracleSample out{block, Vec(len), Vec(len)};
  for (std::size_t k = 0; k < len; ++k) {
    const std::size_t j = off + k;
    const double eps = sigma_ > 0.0 ? sigma_ * noise.normal() : 0.0;
    out.g_block[k] = diag_[j] * (beta.values()[j] - center_[j] - eps);
    (*out.z_block)[k] = -diag_[j] * eps;
  }
  return out;
}

std::optional<double> QuadraticProblem::objective(const Point& beta) const {
  double s = 0.0;
  for (std::size_t j = 0; j < diag_.size(); ++j) {
    const double d = beta.values()[j] - center_[j];
    s += diag_[j] * (d * d + sigma_ * sigma_);
  }
  return 0.5 * s;
}

std::optional<Point> QuadraticProblem::optimum() const { return Point(layout_, center_); }

Vec QuadraticProblem::full_gradient(const Point& beta) const {
  Vec g(diag_.size());
  for (std::size_t j = 0; j < g.size(); ++j) g[j] = diag_[j] * (beta.values()[j] - center_[j]);
  return g;
}

double QuadraticProblem::subgradient_bound(std::size_t block) const {
  double a_max = 0.0, c_sq = 0.0;
  for (std::size_t j = layout_->offset(block); j < layout_->offset(block + 1); ++j) {
    a_max = std::max(a_max, diag_[j]);
    c_sq += center_[j] * center_[j];
  }
  const double reach = layout_->radius(block) + std::sqrt(c_sq);
  const double n_i = static_cast<double>(layout_->block_size(block));
  return a_max * std::sqrt(reach * reach + n_i * sigma_ * sigma_);
}

double QuadraticProblem::noise_bound(std::size_t block) const {
  double s = 0.0;
  for (std::size_t j = layout_->offset(block); j < layout_->offset(block + 1); ++j) s += diag_[j] * diag_[j];
  return sigma_ * std::sqrt(s);
}

Vec QuadraticProblem::subgradient_bounds() const {
  Vec out(layout_->num_blocks());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = subgradient_bound(i);
  return out;
}

Vec QuadraticProblem::noise_bounds() const {
  Vec out(layout_->num_blocks());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = noise_bound(i);
  return out;
}

OracleSample quadratic_oracle(const QuadraticProblem& problem, const Point& beta, std::size_t block,
                              CounterRng& noise) {
  return problem.oracle(beta, block, noise);
}

// --------------------------------------------------------------------- Dataset

void Dataset::add_row(std::span<const Entry> entries, double label) {
  if (label != 1.0 && label != -1.0) throw ValidationError("dataset labels must be +1 or -1");
  for (const auto& [col, val] : entries) {
    if (!std::isfinite(val)) throw ValidationError("dataset feature values must be finite");
    cols_.push_back(col);
    vals_.push_back(val);
    dim_ = std::max<std::size_t>(dim_, static_cast<std::size_t>(col) + 1);
  }
  row_ptr_.push_back(cols_.size());
  labels_.push_back(label);
}

void Dataset::set_dim(std::size_t d) {
  for (std::uint32_t c : cols_) {
    if (c >= d) throw ValidationError("dataset: feature index exceeds the requested dimension");
  }
  dim_ = d;
}

std::span<const std::uint32_t> Dataset::row_cols(std::size_t i) const {
  return std::span<const std::uint32_t>(cols_).subspan(row_ptr_.at(i), row_ptr_.at(i + 1) - row_ptr_[i]);
}

std::span<const double> Dataset::row_vals(std::size_t i) const {
  return std::span<const double>(vals_).subspan(row_ptr_.at(i), row_ptr_.at(i + 1) - row_ptr_[i]);
}

double Dataset::dot(std::size_t i, std::span<const double> beta) const {
  double s = 0.0;
  for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += vals_[k] * beta[cols_[k]];
  return s;
}

double Dataset::row_norm_sq(std::size_t i) const {
  double s = 0.0;
  for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += vals_[k] * vals_[k];
  return s;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  std::vector<Entry> entries;
  for (std::size_t r : rows) {
    entries.clear();
    for (std::size_t k = row_ptr_.at(r); k < row_ptr_.at(r + 1); ++k) entries.emplace_back(cols_[k], vals_[k]);
    out.add_row(entries, labels_[r]);
  }
  out.dim_ = dim_;
  return out;
}

// --------------------------------------------------------------------- loaders

namespace {

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && std::isfinite(out);
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

}  // namespace

Dataset load_libsvm(const std::filesystem::path& path, const LabelMap& label_map) {
  std::ifstream in = open_or_throw(path);
  Dataset data;
  std::string line;
  std::vector<Dataset::Entry> entries;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tokens = split_ws(line);
    if (tokens.empty() || tokens.front().front() == '#') continue;
    double raw = 0.0;
    if (!parse_double(tokens[0], raw)) throw ParseError("bad label '" + std::string(tokens[0]) + "'", lineno);
    double label = raw;
    if (auto it = label_map.find(raw); it != label_map.end()) label = it->second;
    label = label > 0.0 ? 1.0 : -1.0;

    entries.clear();
    for (std::size_t k = 1; k < tokens.size(); ++k) {
      const std::string_view tok = tokens[k];
      const std::size_t colon = tok.find(':');
      if (colon == std::string_view::npos) throw ParseError("expected idx:val, got '" + std::string(tok) + "'", lineno);
      std::uint64_t idx = 0;
      const auto [p, ec] = std::from_chars(tok.data(), tok.data() + colon, idx);
      if (ec != std::errc() || p != tok.data() + colon) {
        throw ParseError("bad feature index in '" + std::string(tok) + "'", lineno);
      }
      if (idx == 0) throw ParseError("feature indices are 1-based; found index 0", lineno);
      if (idx > 0xffffffffULL) throw ParseError("feature index too large", lineno);
      double val = 0.0;
      if (!parse_double(tok.substr(colon + 1), val)) {
        throw ParseError("bad feature value in '" + std::string(tok) + "'", lineno);
      }
      entries.emplace_back(static_cast<std::uint32_t>(idx - 1), val);
    }
    data.add_row(entries, label);
  }
  if (in.bad()) throw IoError("read failure on " + path.string());
  return data;
}

Dataset load_skin_tsv(const std::filesystem::path& path) {
  std::ifstream in = open_or_throw(path);
  Dataset data;
  std::string line;
  std::size_t lineno = 0;
  Dataset::Entry row[3];
  while (std::getline(in, line)) {
    ++lineno;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 4) throw ParseError("expected 4 fields (B G R label)", lineno);
    for (std::uint32_t k = 0; k < 3; ++k) {
      double v = 0.0;
      if (!parse_double(tokens[k], v)) throw ParseError("bad feature '" + std::string(tokens[k]) + "'", lineno);
      row[k] = {k, v / 255.0};
    }
    double lab = 0.0;
    if (!parse_double(tokens[3], lab) || (lab != 1.0 && lab != 2.0)) {
      throw ParseError("label must be 1 or 2, got '" + std::string(tokens[3]) + "'", lineno);
    }
    data.add_row(row, lab == 1.0 ? 1.0 : -1.0);
  }
  if (in.bad()) throw IoError("read failure on " + path.string());
  data.set_dim(3);
  return data;
}

Dataset balanced_subset(const Dataset& data, std::size_t per_class, std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < data.size(); ++i) (data.label(i) > 0 ? pos : neg).push_back(i);
  if (pos.size() < per_class || neg.size() < per_class) {
    throw ValidationError("balanced_subset: not enough rows of each class");
  }
  CounterRng rng(seed, 0);
  auto pick = [&](std::vector<std::size_t>& pool) {
    // partial Fisher-Yates
    for (std::size_t k = 0; k < per_class; ++k) {
      const std::size_t r = k + rng.index(pool.size() - k);
      std::swap(pool[k], pool[r]);
    }
    pool.resize(per_class);
  };
  pick(pos);
  pick(neg);
  std::vector<std::size_t> rows = pos;
  rows.insert(rows.end(), neg.begin(), neg.end());
  std::sort(rows.begin(), rows.end());
  return data.subset(rows);
}

Dataset synthetic_svm_fixture(std::size_t rows, std::uint64_t seed) {
  CounterRng rng(seed, 0);
  Dataset data;
  // Skin pixels are brighter in red than in blue; the two clouds overlap so
  // the hinge loss stays active on a fraction of the samples.
  const double skin_mean[3] = {0.45, 0.60, 0.85};
  const double other_mean[3] = {0.50, 0.45, 0.40};
  Dataset::Entry row[3];
  for (std::size_t i = 0; i < rows; ++i) {
    const bool skin = (i % 2) == 0;
    const double* mean = skin ? skin_mean : other_mean;
    for (std::uint32_t k = 0; k < 3; ++k) row[k] = {k, std::clamp(mean[k] + 0.15 * rng.normal(), 0.0, 1.0)};
    data.add_row(row, skin ? 1.0 : -1.0);
  }
  data.set_dim(3);
  return data;
}

// ------------------------------------------------------------------ SvmProblem

double SvmProblem::default_radius(double lambda) {
  if (!(lambda > 0.0)) throw ValidationError("lambda must be positive");
  return std::sqrt(2.0 / lambda);
}

SvmProblem::SvmProblem(std::shared_ptr<const Dataset> data, double lambda, std::shared_ptr<const BlockLayout> layout)
    : data_(std::move(data)), lambda_(lambda), layout_(std::move(layout)) {
  if (!data_) throw ValidationError("svm problem needs a dataset");
  if (!(lambda_ > 0.0) || !std::isfinite(lambda_)) throw ValidationError("lambda must be positive");
  if (!layout_) throw ValidationError("svm problem needs a layout");
  if (layout_->dim() != data_->dim()) {
    throw ValidationError("svm problem: layout dimension " + std::to_string(layout_->dim()) +
                          " does not match dataset dimension " + std::to_string(data_->dim()));
  }
}

SvmProblem::SvmProblem(std::shared_ptr<const Dataset> data, double lambda)
    : SvmProblem(data, lambda,
                 std::make_shared<const BlockLayout>(std::vector<std::size_t>{data ? data->dim() : 0}, Vec{1.0},
                                                     Vec{1.0}, Vec{1.0}, Vec{default_radius(lambda)})) {}

Vec SvmProblem::sample_subgradient(const Point& beta, std::size_t sample, std::size_t block) const {
  if (beta.dim() != data_->dim()) throw ValidationError("svm subgradient: dimension mismatch");
  const std::size_t off = layout_->offset(block);
  const std::size_t end = layout_->offset(block + 1);
  Vec g(beta.block(block).begin(), beta.block(block).end());
  for (double& gj : g) gj *= lambda_;
  const double y = data_->label(sample);
  // Strict inequality: at margin exactly 1 the hinge contributes 0.
  if (y * data_->dot(sample, beta.values()) < 1.0) {
    const auto cols = data_->row_cols(sample);
    const auto vals = data_->row_vals(sample);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (cols[k] >= off && cols[k] < end) g[cols[k] - off] -= y * vals[k];
    }
  }
  return g;
}

OracleSample SvmProblem::oracle(const Point& beta, std::size_t block, CounterRng& noise) const {
  if (data_->empty()) throw ValidationError("svm oracle: dataset is empty");
  const std::size_t i = noise.index(data_->size());
  return OracleSample{block, sample_subgradient(beta, i, block), std::nullopt};
}

std::optional<double> SvmProblem::objective(const Point& beta) const {
  if (beta.dim() != data_->dim()) throw ValidationError("svm objective: dimension mismatch");
  if (data_->empty()) throw ValidationError("svm objective: dataset is empty");
  double hinge = 0.0;
  for (std::size_t i = 0; i < data_->size(); ++i) {
    hinge += std::max(0.0, 1.0 - data_->label(i) * data_->dot(i, beta.values()));
  }
  double sq = 0.0;
  for (double b : beta.values()) sq += b * b;
  return hinge / static_cast<double>(data_->size()) + 0.5 * lambda_ * sq;
}

Vec SvmProblem::full_subgradient(const Point& beta) const {
  if (data_->empty()) throw ValidationError("svm subgradient: dataset is empty");
  Vec g(beta.dim(), 0.0);
  for (std::size_t i = 0; i < data_->size(); ++i) {
    const double y = data_->label(i);
    if (y * data_->dot(i, beta.values()) < 1.0) {
      const auto cols = data_->row_cols(i);
      const auto vals = data_->row_vals(i);
      for (std::size_t k = 0; k < cols.size(); ++k) g[cols[k]] -= y * vals[k];
    }
  }
  const double inv_m = 1.0 / static_cast<double>(data_->size());
  for (std::size_t j = 0; j < g.size(); ++j) g[j] = g[j] * inv_m + lambda_ * beta.values()[j];
  return g;
}

double svm_objective(const SvmProblem& problem, const Point& beta) { return *problem.objective(beta); }

OracleSample svm_stoch_subgradient(const SvmProblem& problem, const Point& beta, std::size_t block,
                                   CounterRng& noise) {
  return problem.oracle(beta, block, noise);
}

}  // namespace mirrorstep

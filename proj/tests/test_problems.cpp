#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "mirrorstep/error.hpp"
#include "mirrorstep/problems.hpp"

using namespace mirrorstep;
namespace fs = std::filesystem;

namespace {

std::shared_ptr<const BlockLayout> layout1(std::size_t n, double M) {
  return std::make_shared<const BlockLayout>(BlockLayout::uniform(1, n, M));
}

fs::path temp_file(const std::string& name, const std::string& content) {
  const fs::path dir = fs::temp_directory_path() / "mirrorstep_tests";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream(p) << content;
  return p;
}

std::shared_ptr<const Dataset> one_sample(std::vector<Dataset::Entry> row, double y) {
  auto d = std::make_shared<Dataset>();
  d->add_row(row, y);
  d->set_dim(2);
  return d;
}

// Oracle for the SVM objective, dense and written out directly.
double svm_direct(const std::vector<Vec>& X, const Vec& y, double lambda, const Vec& b) {
  double loss = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    double m = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) m += X[i][j] * b[j];
    loss += std::max(0.0, 1.0 - y[i] * m);
  }
  for (double v : b) sq += v * v;
  return loss / static_cast<double>(X.size()) + 0.5 * lambda * sq;
}

}  // namespace

TEST_CASE("quadratic oracle examples") {
  const QuadraticProblem noiseless(layout1(1, 5.0), {1.0}, {0.0}, 0.0);
  CounterRng rng(1, kNoiseStream);
  const OracleSample s = noiseless.oracle(Point(layout1(1, 5.0), {2.0}), 0, rng);
  CHECK(s.block == 0);
  CHECK(s.g_block == Vec{2.0});

  // xi is deterministic at the centre when sigma = 0.
  const QuadraticProblem scaled(layout1(1, 5.0), {2.0}, {0.5}, 0.0);
  CHECK(quadratic_oracle(scaled, Point(layout1(1, 5.0), {1.0}), 0, rng).g_block == Vec{1.0});

  const QuadraticProblem noisy(layout1(1, 5.0), {1.0}, {0.0}, 1.0);
  double sum = 0.0;
  const int n = 10000;
  for (int k = 0; k < n; ++k) sum += noisy.oracle(Point(layout1(1, 5.0), {0.0}), 0, rng).g_block[0];
  CHECK(std::abs(sum / n) <= 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("quadratic oracle reports the noise") {
  auto lay = std::make_shared<const BlockLayout>(BlockLayout::uniform(2, 2, 2.0));
  const QuadraticProblem q(lay, {1.0, 2.0, 3.0, 4.0}, {0.1, -0.2, 0.3, 0.0}, 0.7);
  const Point beta(lay, {0.5, 0.5, -0.5, 1.0});
  const Vec full = q.full_gradient(beta);
  CounterRng rng(3, kNoiseStream);
  const OracleSample s = q.oracle(beta, 1, rng);
  REQUIRE(s.z_block);
  for (std::size_t j = 0; j < 2; ++j) CHECK(s.g_block[j] - full[2 + j] == doctest::Approx((*s.z_block)[j]));
}

TEST_CASE("quadratic gradient is unbiased per block") {
  auto lay = std::make_shared<const BlockLayout>(BlockLayout::uniform(2, 2, 2.0));
  const QuadraticProblem q(lay, {1.0, 2.0, 3.0, 4.0}, {0.1, -0.2, 0.3, 0.0}, 1.5);
  const Point beta(lay, {0.5, 0.5, -0.5, 1.0});
  const Vec full = q.full_gradient(beta);
  CounterRng rng(4, kNoiseStream);
  const int n = 10000;
  for (std::size_t blk = 0; blk < 2; ++blk) {
    Vec mean(2, 0.0);
    for (int k = 0; k < n; ++k) {
      const auto s = q.oracle(beta, blk, rng);
      for (std::size_t j = 0; j < 2; ++j) mean[j] += s.g_block[j] / n;
    }
    for (std::size_t j = 0; j < 2; ++j) {
      const double sd = q.diag()[2 * blk + j] * 1.5;
      CHECK(std::abs(mean[j] - full[2 * blk + j]) <= 4.0 * sd / std::sqrt(static_cast<double>(n)));
    }
  }
}

TEST_CASE("quadratic growth around the optimum") {
  auto lay = std::make_shared<const BlockLayout>(BlockLayout::uniform(2, 2, 2.0));
  const QuadraticProblem q(lay, {1.0, 2.0, 3.0, 0.5}, {0.1, -0.2, 0.3, 0.0}, 0.3);
  CHECK(q.strong_convexity() == 0.5);
  CHECK(q.lipschitz_gradient() == 3.0);
  const Point star = *q.optimum();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const Point b(lay, {u(rng), u(rng), u(rng), u(rng)});
    CHECK(*q.objective(b) - *q.objective(star) >= 0.5 * q.strong_convexity() * squared_distance(b, star));
  }
}

TEST_CASE("quadratic rejects a centre outside the radius") {
  CHECK_THROWS_AS(QuadraticProblem(layout1(2, 1.0), {1.0, 1.0}, {1.0, 0.5}, 1.0), ValidationError);
  CHECK_THROWS_AS(QuadraticProblem(layout1(1, 1.0), {0.0}, {0.0}, 1.0), ValidationError);
}

TEST_CASE("svm objective examples") {
  auto lay = layout1(2, 100.0);
  const SvmProblem at_zero(one_sample({{0, 1.0}}, 1.0), 0.1, lay);
  CHECK(svm_objective(at_zero, Point(lay, {0.0, 0.0})) == 1.0);

  const SvmProblem margin(one_sample({{0, 1.0}}, 1.0), 1e-12, lay);
  CHECK(svm_objective(margin, Point(lay, {2.0, 0.0})) == doctest::Approx(0.0).epsilon(1e-10));

  const SvmProblem hand(one_sample({{0, 1.0}}, 1.0), 0.1, lay);
  CHECK(svm_objective(hand, Point(lay, {0.5, 0.0})) == doctest::Approx(0.5125).epsilon(1e-15));

  CHECK_THROWS_AS(svm_objective(hand, Point(layout1(3, 1.0), {0, 0, 0})), ValidationError);
}

TEST_CASE("svm lambda must be positive") {
  CHECK_THROWS_AS(SvmProblem(one_sample({{0, 1.0}}, 1.0), 0.0, layout1(2, 1.0)), ValidationError);
}

TEST_CASE("svm stochastic subgradient examples") {
  auto lay = layout1(2, 100.0);
  const SvmProblem p(one_sample({{0, 1.0}}, 1.0), 0.1, lay);
  CHECK(p.sample_subgradient(Point(lay, {0.0, 0.0}), 0, 0) == Vec{-1.0, 0.0});
  // margin 2: only the ridge term
  const Vec inactive = p.sample_subgradient(Point(lay, {2.0, 1.0}), 0, 0);
  CHECK(inactive[0] == doctest::Approx(0.2));
  CHECK(inactive[1] == doctest::Approx(0.1));
  // margin exactly 1 counts as inactive
  const Vec kink = p.sample_subgradient(Point(lay, {1.0, 0.0}), 0, 0);
  CHECK(kink[0] == doctest::Approx(0.1));
  CHECK(kink[1] == 0.0);

  CounterRng rng(9, kNoiseStream);
  const OracleSample s = svm_stoch_subgradient(p, Point(lay, {0.0, 0.0}), 0, rng);
  CHECK(s.g_block == Vec{-1.0, 0.0});

  auto empty = std::make_shared<Dataset>();
  empty->set_dim(2);
  const SvmProblem hollow(empty, 0.1, lay);
  CHECK_THROWS_AS(svm_stoch_subgradient(hollow, Point(lay, {0.0, 0.0}), 0, rng), ValidationError);
}

TEST_CASE("svm subgradient is unbiased by enumeration") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto data = std::make_shared<Dataset>();
  const std::size_t m = 60, d = 4;
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<Dataset::Entry> row;
    for (std::uint32_t j = 0; j < d; ++j)
      if (u(rng) > -0.5) row.push_back({j, u(rng)});
    data->add_row(row, i % 3 == 0 ? -1.0 : 1.0);
  }
  data->set_dim(d);
  auto lay = std::make_shared<const BlockLayout>(std::vector<std::size_t>{2, 2}, Vec{0.5, 0.5}, Vec{1, 1}, Vec{1, 1},
                                                 Vec{10, 10});
  const SvmProblem p(data, 0.05, lay);
  for (int trial = 0; trial < 20; ++trial) {
    const Point b(lay, {u(rng), u(rng), u(rng), u(rng)});
    const Vec full = p.full_subgradient(b);
    for (std::size_t blk = 0; blk < 2; ++blk) {
      Vec mean(2, 0.0);
      for (std::size_t i = 0; i < m; ++i) {
        const Vec g = p.sample_subgradient(b, i, blk);
        for (std::size_t j = 0; j < 2; ++j) mean[j] += g[j];
      }
      for (std::size_t j = 0; j < 2; ++j) CHECK(mean[j] / m == doctest::Approx(full[2 * blk + j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("svm objective is lambda strongly convex") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto data = std::make_shared<Dataset>();
  std::vector<Vec> X;
  Vec y;
  for (std::size_t i = 0; i < 40; ++i) {
    Vec x{u(rng), u(rng), u(rng)};
    X.push_back(x);
    y.push_back(i % 2 ? 1.0 : -1.0);
    data->add_row(std::vector<Dataset::Entry>{{0, x[0]}, {1, x[1]}, {2, x[2]}}, y.back());
  }
  const double lambda = 0.3;
  const SvmProblem p(data, lambda);
  auto lay = p.layout_ptr();
  for (int k = 0; k < 300; ++k) {
    const Point b1(lay, {u(rng), u(rng), u(rng)}), b2(lay, {u(rng), u(rng), u(rng)});
    const Vec g = p.full_subgradient(b2);
    double inner = 0.0;
    for (std::size_t j = 0; j < 3; ++j) inner += g[j] * (b1.values()[j] - b2.values()[j]);
    const double f1 = *p.objective(b1), f2 = *p.objective(b2);
    CHECK(f1 >= f2 + inner + 0.5 * lambda * squared_distance(b1, b2) - 1e-9);
    CHECK(f1 == doctest::Approx(svm_direct(X, y, lambda, b1.values())).epsilon(1e-13));
  }
  CHECK(SvmProblem::default_radius(0.5) == doctest::Approx(2.0));
}

TEST_CASE("libsvm loader") {
  const Dataset one = load_libsvm(temp_file("one.svm", "+1 3:0.5\n"));
  REQUIRE(one.size() == 1);
  CHECK(one.dim() == 3);
  CHECK(one.label(0) == 1.0);
  CHECK(one.row_cols(0)[0] == 2);
  CHECK(one.row_vals(0)[0] == 0.5);

  const Dataset empty = load_libsvm(temp_file("empty.svm", ""));
  CHECK(empty.empty());
  CHECK_THROWS_AS(SvmProblem(std::make_shared<const Dataset>(empty), 0.1), ValidationError);  // zero dimension

  const Dataset mapped = load_libsvm(temp_file("map.svm", "2 1:1.0\n1 2:1\n"), {{2.0, -1.0}});
  CHECK(mapped.label(0) == -1.0);
  CHECK(mapped.label(1) == 1.0);

  const Dataset zeros = load_libsvm(temp_file("zero.svm", "0 1:1\n-1 1:2\n# comment\n+1 2:3 4:1e-2\n"));
  CHECK(zeros.labels() == Vec{-1.0, -1.0, 1.0});
  CHECK(zeros.dim() == 4);
}

TEST_CASE("libsvm loader errors carry the line") {
  try {
    load_libsvm(temp_file("bad.svm", "+1 1:1\n+1 0:1\n"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(load_libsvm(temp_file("bad2.svm", "+1 1:x\n")), ParseError);
  CHECK_THROWS_AS(load_libsvm(temp_file("bad3.svm", "abc 1:1\n")), ParseError);
  CHECK_THROWS_AS(load_libsvm("/nonexistent/file.svm"), IoError);
}

TEST_CASE("skin loader") {
  const Dataset d = load_skin_tsv(temp_file("skin.txt", "255\t0\t0\t1\n0 51 255 2\n"));
  REQUIRE(d.size() == 2);
  CHECK(d.label(0) == 1.0);
  CHECK(d.label(1) == -1.0);
  CHECK(d.dot(0, Vec{1, 0, 0}) == 1.0);
  CHECK(d.dot(1, Vec{0, 1, 0}) == doctest::Approx(0.2));
  CHECK(d.dim() == 3);
  try {
    load_skin_tsv(temp_file("skin_bad.txt", "1 2 3 1\n1 2 3 3\n"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(load_skin_tsv(temp_file("skin_short.txt", "1 2 1\n")), ParseError);
}

TEST_CASE("balanced subset and fixture") {
  const Dataset fx = synthetic_svm_fixture(1000, 7);
  CHECK(fx.size() == 1000);
  CHECK(fx.dim() == 3);
  const Dataset sub = balanced_subset(fx, 100, 3);
  CHECK(sub.size() == 200);
  std::size_t pos = 0;
  for (double l : sub.labels()) pos += l > 0;
  CHECK(pos == 100);
  const Dataset again = balanced_subset(fx, 100, 3);
  CHECK(again.labels() == sub.labels());
  CHECK(synthetic_svm_fixture(1000, 7).labels() == fx.labels());
  CHECK_THROWS_AS(balanced_subset(fx, 600, 3), ValidationError);
}

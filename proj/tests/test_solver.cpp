#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "mirrorstep/error.hpp"
#include "mirrorstep/solver.hpp"

using namespace mirrorstep;

namespace {

// A problem whose oracle always returns a fixed block vector.
class ConstantOracle final : public Problem {
 public:
  ConstantOracle(std::shared_ptr<const BlockLayout> lay, Vec g) : lay_(std::move(lay)), g_(std::move(g)) {}
  const std::shared_ptr<const BlockLayout>& layout_ptr() const noexcept override { return lay_; }
  OracleSample oracle(const Point&, std::size_t block, CounterRng&) const override {
    const auto off = lay_->offset(block);
    return {block, Vec(g_.begin() + static_cast<long>(off), g_.begin() + static_cast<long>(off + lay_->block_size(block))),
            std::nullopt};
  }
  bool differentiable() const noexcept override { return false; }
  double strong_convexity() const noexcept override { return 1.0; }

 private:
  std::shared_ptr<const BlockLayout> lay_;
  Vec g_;
};

std::shared_ptr<const BlockLayout> uniform(std::size_t l, std::size_t n, double M) {
  return std::make_shared<const BlockLayout>(BlockLayout::uniform(l, n, M));
}

struct QuadFixture {
  std::shared_ptr<const BlockLayout> lay = uniform(4, 2, 1.0);
  QuadraticProblem q{lay, Vec(8, 1.0), {0.35, -0.35, 0.35, -0.35, 0.35, -0.35, 0.35, -0.35}, 1.0};
  Geometry geo = Geometry::euclidean_balls(lay);
};

}  // namespace

TEST_CASE("sample_block examples") {
  auto one = uniform(1, 1, 1.0);
  SolverState s(Point::zeros(one), 1);
  for (int k = 0; k < 100; ++k) CHECK(sample_block(s, *one) == 0);

  auto two = uniform(2, 1, 1.0);
  SolverState t(Point::zeros(two), 2);
  const int n = 100000;
  int first = 0;
  for (int k = 0; k < n; ++k) first += sample_block(t, *two) == 0;
  const double freq = static_cast<double>(first) / n;
  CHECK(freq >= 0.494);
  CHECK(freq <= 0.506);

  CHECK_THROWS_AS(BlockLayout({1, 1}, {1.0, 0.0}, {1, 1}, {1, 1}, {1, 1}), ValidationError);
}

TEST_CASE("sample_block follows unequal probabilities") {
  auto lay = std::make_shared<const BlockLayout>(std::vector<std::size_t>{1, 1, 1}, Vec{0.2, 0.3, 0.5}, Vec(3, 1.0),
                                                 Vec(3, 1.0), Vec(3, 1.0));
  SolverState s(Point::zeros(lay), 3);
  const int n = 100000;
  std::vector<int> counts(3, 0);
  for (int k = 0; k < n; ++k) ++counts[sample_block(s, *lay)];
  for (std::size_t i = 0; i < 3; ++i) {
    const double p = lay->prob(i);
    CHECK(std::abs(counts[i] / static_cast<double>(n) - p) <= 4.0 * std::sqrt(p * (1 - p) / n));
  }
}

TEST_CASE("block sampling uses only its own stream") {
  auto lay = uniform(3, 1, 1.0);
  SolverState a(Point::zeros(lay), 9), b(Point::zeros(lay), 9);
  for (int k = 0; k < 10; ++k) b.noise_rng.normal();
  for (int k = 0; k < 50; ++k) CHECK(sample_block(a, *lay) == sample_block(b, *lay));
  CHECK(a.noise_rng.position() == 0);
}

TEST_CASE("rbsmd step examples") {
  auto lay = uniform(1, 1, 100.0);
  const Geometry geo(lay, {DistanceGenerator::euclidean()}, {FeasibleBlock::box(1, -100.0, 100.0)});
  const ConstantOracle oracle(lay, {-2.0});
  SolverState s(Point::zeros(lay), 1);
  StepsizePolicy policy = StepsizePolicy::over_t(0.5);
  CHECK(rbsmd_step(s, oracle, policy, geo) == 0.5);
  CHECK(s.beta.values()[0] == 1.0);
  CHECK(s.t == 1);

  Point beta(lay, {0.3});
  apply_block_update(beta, geo, 0, 0.0, Vec{5.0});
  CHECK(beta.values()[0] == 0.3);
}

TEST_CASE("non-sampled blocks are frozen") {
  QuadFixture f;
  SolverState s(Point(f.lay, {0.1, 0.2, -0.1, 0.3, 0.0, 0.4, 0.2, -0.2}), 5);
  StepsizePolicy policy = StepsizePolicy::self_tuned(0.5, 0.25);
  for (int k = 0; k < 200; ++k) {
    const Vec before = s.beta.values();
    SolverState probe = s;
    const std::size_t blk = sample_block(probe, *f.lay);
    rbsmd_step(s, f.q, policy, f.geo);
    for (std::size_t i = 0; i < 4; ++i) {
      if (i == blk) continue;
      for (std::size_t j = 0; j < 2; ++j) CHECK(s.beta.values()[2 * i + j] == before[2 * i + j]);
    }
  }
}

TEST_CASE("gradient mode needs a differentiable problem") {
  auto lay = uniform(1, 1, 1.0);
  const ConstantOracle oracle(lay, {1.0});
  SolverState s(Point::zeros(lay), 1);
  StepsizePolicy policy = StepsizePolicy::over_t(0.1);
  CHECK_THROWS_AS(rbsmd_step(s, oracle, policy, Geometry::euclidean_balls(lay), SolverMode::Gradient),
                  ValidationError);
}

TEST_CASE("infeasible update is an invariant violation") {
  auto lay = uniform(1, 2, 1.0);
  // A geometry whose set is the simplex, but a Euclidean prox on it stays
  // feasible; force infeasibility by handing a non-finite vector.
  const Geometry geo = Geometry::euclidean_balls(lay);
  Point beta = Point::zeros(lay);
  CHECK_THROWS(apply_block_update(beta, geo, 0, 1.0, Vec{std::nan(""), 0.0}));
}

TEST_CASE("lyapunov error examples") {
  auto lay = uniform(2, 1, 2.0);
  const Geometry geo = Geometry::euclidean_balls(lay);
  const Point beta(lay, {1.0, 1.0}), zero = Point::zeros(lay);
  CHECK(lyapunov_error(beta, zero, geo) == 2.0);
  CHECK(lyapunov_error(beta, beta, geo) == 0.0);

  auto one = uniform(1, 2, 2.0);
  const Geometry g1 = Geometry::euclidean_balls(one);
  const Point a(one, {0.3, -0.4}), b(one, {1.0, 0.2});
  CHECK(lyapunov_error(a, b, g1) == bregman_div(DistanceGenerator::euclidean(), a.values(), b.values()));
  CHECK_THROWS_AS(lyapunov_error(a, beta, g1), ValidationError);
}

TEST_CASE("run validation and determinism") {
  QuadFixture f;
  SolverConfig cfg;
  cfg.policy = StepsizePolicy::self_tuned(0.5, 0.25);
  cfg.iterations = 0;
  CHECK_THROWS_AS(run(f.q, f.geo, cfg, Point::zeros(f.lay)), ValidationError);

  cfg.iterations = 1000;
  cfg.record_every = 100;
  cfg.seed = 42;
  const Trace a = run(f.q, f.geo, cfg, Point::zeros(f.lay));
  const Trace b = run(f.q, f.geo, cfg, Point::zeros(f.lay));
  std::ostringstream sa, sb;
  write_trace_csv(sa, a);
  write_trace_csv(sb, b);
  CHECK(sa.str() == sb.str());
  CHECK(a.rows.size() == 11);
  CHECK(a.rows.front().t == 0);
  CHECK(a.rows.back().t == 1000);
  for (std::size_t r = 1; r < a.rows.size(); ++r) CHECK(a.rows[r].t > a.rows[r - 1].t);

  cfg.seed = 43;
  std::ostringstream sc;
  write_trace_csv(sc, run(f.q, f.geo, cfg, Point::zeros(f.lay)));
  CHECK(sc.str() != sa.str());

  cfg.record_every = 2000;
  CHECK_THROWS_AS(run(f.q, f.geo, cfg, Point::zeros(f.lay)), ValidationError);
}

TEST_CASE("final iterate is recorded when T is not a multiple") {
  QuadFixture f;
  SolverConfig cfg;
  cfg.policy = StepsizePolicy::self_tuned(0.5, 0.25);
  cfg.iterations = 250;
  cfg.record_every = 100;
  const Trace t = run(f.q, f.geo, cfg, Point::zeros(f.lay));
  REQUIRE(t.rows.size() == 4);
  CHECK(t.rows.back().t == 250);
}

TEST_CASE("replications match single runs regardless of threads") {
  QuadFixture f;
  SolverConfig cfg;
  cfg.policy = StepsizePolicy::self_tuned(0.5, 0.25);
  cfg.iterations = 500;
  cfg.record_every = 50;
  const std::vector<std::uint64_t> seeds{3, 1, 4, 1, 5};
  const auto serial = run_replications(f.q, f.geo, cfg, Point::zeros(f.lay), seeds, 1);
  const auto parallel = run_replications(f.q, f.geo, cfg, Point::zeros(f.lay), seeds, 4);
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    cfg.seed = seeds[k];
    const Trace one = run(f.q, f.geo, cfg, Point::zeros(f.lay));
    std::ostringstream a, b, c;
    write_trace_csv(a, serial[k]);
    write_trace_csv(b, parallel[k]);
    write_trace_csv(c, one);
    CHECK(a.str() == c.str());
    CHECK(b.str() == c.str());
  }
}

TEST_CASE("trace csv format") {
  Trace t;
  t.rows.push_back({0, 0.5, 1.0, std::nullopt, 0.25});
  t.rows.push_back({10, 0.1, std::nullopt, std::nullopt, std::nullopt});
  std::ostringstream out;
  write_trace_csv(out, t);
  CHECK(out.str() == "t,eta,objective,sq_dist,lyap\n0,0.5,1,,0.25\n10,0.10000000000000001,,,\n");
  CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("objective running mean skips t = 0") {
  Trace t;
  t.rows.push_back({0, 1.0, 100.0, {}, {}});
  t.rows.push_back({1, 1.0, 2.0, {}, {}});
  t.rows.push_back({2, 1.0, 4.0, {}, {}});
  const auto m = t.objective_running_mean();
  CHECK(!m[0]);
  CHECK(*m[1] == 2.0);
  CHECK(*m[2] == 3.0);
}

TEST_CASE("summaries across traces") {
  Trace a, b;
  a.rows.push_back({0, 1.0, {}, 1.0, {}});
  b.rows.push_back({0, 1.0, {}, 3.0, {}});
  const std::vector<Trace> ts{a, b};
  const MetricSummary s = summarize(ts, TraceMetric::SqDist);
  CHECK(s.mean == Vec{2.0});
  CHECK(s.std_error[0] == doctest::Approx(1.0));
}

TEST_CASE("quadratic run converges") {
  QuadFixture f;
  SolverConfig cfg;
  cfg.policy = StepsizePolicy::self_tuned(0.5, 0.25);
  cfg.iterations = 20000;
  cfg.record_every = 20000;
  const Trace t = run(f.q, f.geo, cfg, Point::zeros(f.lay));
  CHECK(*t.rows.front().sq_dist > 0.4);
  CHECK(*t.rows.back().sq_dist < 0.05);
  CHECK(*t.rows.back().lyap == doctest::Approx(4.0 * 0.5 * *t.rows.back().sq_dist));
}

#include "mirrorstep/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>

#include "json.hpp"
#include "mirrorstep/bounds.hpp"
#include "mirrorstep/error.hpp"
#include "mirrorstep/geometry.hpp"
#include "mirrorstep/rng.hpp"
#include "mirrorstep/sequence_lab.hpp"
#include "mirrorstep/stepsize.hpp"

namespace mirrorstep {

VerifySuite parse_verify_suite(std::string_view name) {
  if (name == "sequence") return VerifySuite::Sequence;
  if (name == "geometry") return VerifySuite::Geometry;
  if (name == "bounds") return VerifySuite::Bounds;
  if (name == "all") return VerifySuite::All;
  throw ValidationError("unknown verify suite '" + std::string(name) + "' (expected sequence|geometry|bounds|all)");
}

std::string_view suite_name(VerifySuite suite) {
  switch (suite) {
    case VerifySuite::Sequence:
      return "sequence";
    case VerifySuite::Geometry:
      return "geometry";
    case VerifySuite::Bounds:
      return "bounds";
    case VerifySuite::All:
      break;
  }
  return "all";
}

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::vector<std::string> VerifyReport::failed_names() const {
  std::vector<std::string> out;
  for (const auto& c : checks) {
    if (!c.passed) out.push_back(c.suite + "/" + c.name);
  }
  return out;
}

std::string VerifyReport::to_json() const {
  nlohmann::json j;
  j["passed"] = passed();
  j["failed"] = failed_names();
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    j["checks"].push_back({{"suite", c.suite}, {"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  return j.dump(2);
}

namespace {

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

class Recorder {
 public:
  Recorder(VerifyReport& report, std::string suite) : report_(report), suite_(std::move(suite)) {}

  // Runs `body`; an exception counts as a failure carrying its message.
  void check(const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
    CheckResult r{suite_, name, false, {}};
    try {
      auto [ok, detail] = body();
      r.passed = ok;
      r.detail = std::move(detail);
    } catch (const std::exception& e) {
      r.detail = std::string("exception: ") + e.what();
    }
    report_.checks.push_back(std::move(r));
  }

 private:
  VerifyReport& report_;
  std::string suite_;
};

// ------------------------------------------------------------------ sequence

void sequence_suite(VerifyReport& report, const VerifyOptions& opt) {
  Recorder rec(report, "sequence");
  const ErrorRecursion base{2.0, 1.0, 0.5};

  rec.check("closed_form_chain", [&] {
    constexpr std::size_t kT = 10000;
    const auto etas = selftuned_seq(base, kT + 1);
    const double theta = opt.inject_theta_fault ? 1.0 / base.theta : base.theta;
    double e = base.e0, worst = 0.0;
    for (std::size_t t = 0; t <= kT; ++t) {
      const double predicted = 2.0 * base.delta / theta * etas[t];
      worst = std::max(worst, std::abs(e - predicted) / predicted);
      e = (1.0 - base.theta * etas[t]) * e + base.delta * etas[t] * etas[t];
    }
    const double e3 = error_seq_eval(base, std::span(etas).first(3));
    const bool ok = worst <= 1e-12 && e3 == 0.15234375;
    return std::pair{ok, fmt("max relative error %.3g over t<=1e4; e_3 = %.17g", worst, e3)};
  });

  constexpr std::size_t kLong = 1000000;
  const auto long_seq = selftuned_seq(base, kLong + 1);

  rec.check("stepsize_decay_bound", [&] {
    std::size_t bad = 0;
    for (std::size_t t = 1; t <= kLong; ++t) {
      if (!(long_seq[t] < 2.0 / (base.theta * static_cast<double>(t)))) ++bad;
    }
    return std::pair{bad == 0, fmt("%.0f violations of eta_t < 2/(theta t) for t<=1e6", static_cast<double>(bad))};
  });

  rec.check("error_decay_bound", [&] {
    std::size_t bad = 0;
    double e = base.e0;
    for (std::size_t t = 1; t <= kLong; ++t) {
      const double eta = long_seq[t - 1];
      e = (1.0 - base.theta * eta) * e + base.delta * eta * eta;
      if (!(e <= 4.0 * base.delta / (base.theta * base.theta * static_cast<double>(t)))) ++bad;
    }
    return std::pair{bad == 0, fmt("%.0f violations of e_t <= 4 delta/(theta^2 t)", static_cast<double>(bad))};
  });

  rec.check("stepsize_sums", [&] {
    double sum = 0.0, tail_sq = 0.0;
    for (std::size_t t = 0; t < kLong; ++t) {
      sum += long_seq[t];
      if (t > 1000) tail_sq += long_seq[t] * long_seq[t];
    }
    const double tail_cap = 4.0 / (base.theta * base.theta) * 1e-3;
    return std::pair{sum > 10.0 && tail_sq < tail_cap,
                     fmt("sum eta = %.6g (> 10), tail sum eta^2 = %.6g (< %.3g)", sum, tail_sq, tail_cap)};
  });

  rec.check("monotone_damping", [&] {
    bool monotone = true;
    for (std::size_t t = 1; t < long_seq.size(); ++t) monotone = monotone && long_seq[t] <= long_seq[t - 1];
    const double last = long_seq[kLong];
    return std::pair{monotone && last < 2e-6, fmt("non-increasing: %.0f; eta at 1e6 = %.6g", monotone, last)};
  });

  rec.check("brute_force_optimality", [&] {
    bool ok = true;
    std::string detail;
    for (std::size_t t = 1; t <= 3; ++t) {
      const auto r = brute_force_min(base, t, 5e-3, opt.workers);
      const bool no_better = r.best_value >= r.selftuned_value - 1e-9;
      const bool gap = r.min_gap_slack >= -1e-9;
      ok = ok && no_better && gap;
      detail += fmt("t=%.0f: best %.10g vs selftuned ", static_cast<double>(t), r.best_value) +
                fmt("%.10g, min gap slack %.3g; ", r.selftuned_value, r.min_gap_slack);
    }
    return std::pair{ok, detail};
  });
}

// ------------------------------------------------------------------ geometry

// Golden-section minimiser of a unimodal function on [lo, hi].
double golden_min(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int k = 0; k < iters && b - a > 1e-14; ++k) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

Vec random_simplex_point(CounterRng& rng, std::size_t n, double floor) {
  Vec x(n);
  double s = 0.0;
  for (double& xj : x) {
    xj = -std::log(1.0 - rng.uniform());
    s += xj;
  }
  // Mix with the uniform point so every coordinate is at least `floor`.
  const double w = 1.0 - floor * static_cast<double>(n);
  for (double& xj : x) xj = w * xj / s + floor;
  return x;
}

void geometry_suite(VerifyReport& report) {
  Recorder rec(report, "geometry");
  const auto euc = DistanceGenerator::euclidean();
  const auto ent = DistanceGenerator::entropy();

  rec.check("bregman_sandwich", [&] {
    CounterRng rng(7, 0);
    double worst = 0.0;
    bool ok = true;
    for (int k = 0; k < 2000; ++k) {
      Vec a(4), b(4);
      for (std::size_t j = 0; j < 4; ++j) {
        a[j] = 4.0 * rng.uniform() - 2.0;
        b[j] = 4.0 * rng.uniform() - 2.0;
      }
      Vec d(4);
      for (std::size_t j = 0; j < 4; ++j) d[j] = b[j] - a[j];
      const double D = bregman_div(euc, a, b), nsq = euc.norm_sq(d);
      const double lo = 0.5 * euc.strong_convexity() * nsq, hi = 0.5 * euc.smoothness() * nsq;
      ok = ok && D >= lo * (1 - 1e-10) && D <= hi * (1 + 1e-10);
    }
    constexpr double kFloor = 0.01;
    for (int k = 0; k < 2000; ++k) {
      const Vec a = random_simplex_point(rng, 5, kFloor), b = random_simplex_point(rng, 5, kFloor);
      Vec d(5);
      for (std::size_t j = 0; j < 5; ++j) d[j] = b[j] - a[j];
      const double D = bregman_div(ent, a, b), nsq = ent.norm_sq(d);
      const double lo = 0.5 * ent.strong_convexity() * nsq, hi = 0.5 * ent.smoothness(kFloor) * nsq;
      if (!(D >= lo * (1 - 1e-10) && D <= hi * (1 + 1e-10))) ok = false;
      worst = std::max(worst, lo / std::max(D, 1e-300));
    }
    return std::pair{ok, fmt("entropy: max lower/D ratio %.6g", worst)};
  });

  rec.check("three_point_identity", [&] {
    CounterRng rng(11, 0);
    double worst = 0.0;
    for (int k = 0; k < 2000; ++k) {
      const bool use_entropy = k % 2 == 1;
      const auto& dgf = use_entropy ? ent : euc;
      Vec b1, b2, b3;
      if (use_entropy) {
        b1 = random_simplex_point(rng, 4, 1e-3);
        b2 = random_simplex_point(rng, 4, 1e-3);
        b3 = random_simplex_point(rng, 4, 1e-3);
      } else {
        for (Vec* v : {&b1, &b2, &b3}) {
          v->resize(4);
          for (double& x : *v) x = 6.0 * rng.uniform() - 3.0;
        }
      }
      const Vec g3 = dgf.gradient(b3), g1 = dgf.gradient(b1);
      double inner = 0.0;
      for (std::size_t j = 0; j < 4; ++j) inner += (g3[j] - g1[j]) * (b2[j] - b3[j]);
      const double lhs = bregman_div(dgf, b1, b2) - bregman_div(dgf, b3, b2);
      const double rhs = bregman_div(dgf, b1, b3) + inner;
      const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
      worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
    return std::pair{worst <= 1e-10, fmt("max scaled residual %.3g", worst)};
  });

  rec.check("prox_vs_grid_minimizer", [&] {
    double worst = 0.0;
    // 1-D Euclidean box
    {
      const auto box = FeasibleBlock::box(1, -1.0, 2.0);
      const Vec b1{0.3};
      for (double v : {-3.0, -0.5, 0.2, 1.1, 4.0}) {
        const Vec p = prox_map(euc, box, b1, Vec{v});
        const double z = golden_min([&](double x) { return v * x + 0.5 * (x - b1[0]) * (x - b1[0]); }, -1.0, 2.0);
        worst = std::max(worst, std::abs(p[0] - z));
      }
    }
    // 2-D Euclidean ball: nested golden-section over the disk.
    {
      const double r = 1.5;
      const auto ball = FeasibleBlock::ball(r);
      const Vec b1{0.4, -0.2};
      for (const Vec& v : {Vec{-3.0, -4.0}, Vec{0.1, 0.2}, Vec{2.5, -0.7}}) {
        auto obj = [&](double x, double y) {
          return v[0] * x + v[1] * y + 0.5 * ((x - b1[0]) * (x - b1[0]) + (y - b1[1]) * (y - b1[1]));
        };
        auto inner_y = [&](double x) {
          const double h = std::sqrt(std::max(0.0, r * r - x * x));
          return golden_min([&](double y) { return obj(x, y); }, -h, h);
        };
        const double x = golden_min([&](double xx) { return obj(xx, inner_y(xx)); }, -r, r);
        const double y = inner_y(x);
        const Vec p = prox_map(euc, ball, b1, v);
        worst = std::max({worst, std::abs(p[0] - x), std::abs(p[1] - y)});
      }
    }
    // 2-D entropy on the simplex: one free coordinate.
    {
      const auto simplex = FeasibleBlock::simplex();
      const Vec b1{0.3, 0.7};
      for (const Vec& v : {Vec{std::log(2.0), 0.0}, Vec{-1.0, 0.5}, Vec{0.2, 0.2}}) {
        auto obj = [&](double s) {
          const Vec z{s, 1.0 - s};
          return v[0] * z[0] + v[1] * z[1] + bregman_div(ent, b1, z);
        };
        const double s = golden_min(obj, 1e-12, 1.0 - 1e-12);
        const Vec p = prox_map(ent, simplex, b1, v);
        worst = std::max(worst, std::abs(p[0] - s));
      }
    }
    return std::pair{worst <= 1e-6, fmt("max deviation from grid minimiser %.3g", worst)};
  });

  rec.check("partial_grad_vs_finite_difference", [&] {
    CounterRng rng(13, 0);
    constexpr double h = 1e-5;
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
      const bool use_entropy = k % 2 == 1;
      const auto& dgf = use_entropy ? ent : euc;
      Vec b1(3), b2(3);
      for (std::size_t j = 0; j < 3; ++j) {
        b1[j] = use_entropy ? 0.05 + rng.uniform() : 4.0 * rng.uniform() - 2.0;
        b2[j] = use_entropy ? 0.05 + rng.uniform() : 4.0 * rng.uniform() - 2.0;
      }
      const Vec g = bregman_partial_grad(dgf, b1, b2);
      for (std::size_t j = 0; j < 3; ++j) {
        Vec up = b2, dn = b2;
        up[j] += h;
        dn[j] -= h;
        const double fd = (bregman_div(dgf, b1, up) - bregman_div(dgf, b1, dn)) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - g[j]));
      }
    }
    return std::pair{worst <= 1e-6, fmt("max |fd - grad| = %.3g", worst)};
  });

  rec.check("prox_first_order_condition", [&] {
    CounterRng rng(17, 0);
    double worst = 0.0;
    const auto ball = FeasibleBlock::ball(1.0);
    const auto simplex = FeasibleBlock::simplex();
    for (int k = 0; k < 300; ++k) {
      const bool use_entropy = k % 2 == 1;
      const auto& dgf = use_entropy ? ent : euc;
      const auto& set = use_entropy ? simplex : ball;
      Vec b1 = use_entropy ? random_simplex_point(rng, 3, 0.01) : Vec{0.3 * rng.uniform(), -0.2, 0.1};
      Vec v(3);
      for (double& x : v) x = 6.0 * rng.uniform() - 3.0;
      const Vec zs = prox_map(dgf, set, b1, v);
      const Vec gz = dgf.gradient(zs), gb = dgf.gradient(b1);
      for (int s = 0; s < 20; ++s) {
        Vec z = use_entropy ? random_simplex_point(rng, 3, 0.0) : set.project(Vec{2 * rng.uniform() - 1, 2 * rng.uniform() - 1, 2 * rng.uniform() - 1});
        double r = 0.0;
        for (std::size_t j = 0; j < 3; ++j) r += (v[j] + gz[j] - gb[j]) * (z[j] - zs[j]);
        worst = std::min(worst, r);
      }
    }
    return std::pair{worst >= -1e-9, fmt("most negative residual %.3g", worst)};
  });
}

// -------------------------------------------------------------------- bounds

void bounds_suite(VerifyReport& report) {
  Recorder rec(report, "bounds");

  rec.check("harmonic_ratio_identity", [&] {
    double worst = 0.0;
    bool nonneg = true;
    for (double mu : {0.01, 0.5, 1.0, 2.0}) {
      for (int k = 1; k <= 400; ++k) {
        const double gamma = 1.0 / (2.0 * mu) * (1.0 + 0.01 * k);
        const double r = harmonic_ratio(gamma, mu);
        const double expect = (gamma * mu - 1.0) * (gamma * mu - 1.0) / (2.0 * mu * gamma - 1.0);
        worst = std::max(worst, std::abs((r - 1.0) - expect) / std::max(1.0, expect));
        nonneg = nonneg && r - 1.0 >= -1e-15;
      }
    }
    const bool eq = harmonic_ratio(1.0 / 2.0, 2.0) == 1.0 && harmonic_ratio(1.0, 1.0) == 1.0;
    return std::pair{worst <= 1e-12 && nonneg && eq, fmt("max residual %.3g", worst)};
  });

  rec.check("sbmd_ratio", [&] {
    const Vec C{1.0, 2.0};
    const auto a = sbmd_comparison(1.0, 1.0, 1.0, 2, C);
    const auto b = sbmd_comparison(0.3, 1.0, 4.0, 2, C);
    const bool ok = a.ratio == 0.25 && std::abs(a.ours / a.theirs - 0.25) < 1e-15 && b.ratio == 1.0;
    return std::pair{ok, fmt("ratio at L=mu: %.17g, at L=4mu: %.17g", a.ratio, b.ratio)};
  });

  rec.check("selftuned_initial_contraction", [&] {
    CounterRng rng(19, 0);
    double worst = 0.0;
    for (int k = 0; k < 500; ++k) {
      const std::size_t l = 1 + rng.index(4);
      Vec probs(l), mu(l), L(l), M(l), C(l), nu(l);
      double total = 0.0;
      for (std::size_t i = 0; i < l; ++i) {
        probs[i] = 0.2 + rng.uniform();
        total += probs[i];
        mu[i] = 0.5 + rng.uniform();
        L[i] = mu[i] * (1.0 + 3.0 * rng.uniform());
        M[i] = 0.5 + 2.0 * rng.uniform();
        nu[i] = 0.1 + rng.uniform();
      }
      for (double& p : probs) p /= total;
      auto lay = std::make_shared<const BlockLayout>(std::vector<std::size_t>(l, 2), probs, mu, L, M);
      const double mu_F = 0.1 + rng.uniform();
      for (std::size_t i = 0; i < l; ++i) {
        C[i] = admissible_subgradient_bound(0.1, mu_F, M[i], mu[i], L[i]) * (1.0 + rng.uniform());
      }
      const auto ns = init_nonsmooth(NonsmoothParams{mu_F, lay, C});
      const auto sm = init_smooth(SmoothParams{mu_F, mu_F * (1.0 + 2.0 * rng.uniform()), lay, nu});
      worst = std::max({worst, ns.theta() * ns.eta0(), sm.theta() * sm.eta0()});
    }
    return std::pair{worst < 1.0, fmt("max theta * eta0 = %.6g", worst)};
  });

  rec.check("bound_examples", [&] {
    auto one = std::make_shared<const BlockLayout>(BlockLayout::uniform(1, 1, 1.0));
    const double ns = msd_bound_nonsmooth(NonsmoothParams{1.0, one, Vec{3.0}}).constant_factor;
    const double sm = msd_bound_smooth(SmoothParams{1.0, 1.0, one, Vec{1.0}}).constant_factor;
    const double tn = prob_threshold(NonsmoothParams{1.0, one, Vec{1.0}}, 0.1, 0.1);
    const double ts = prob_threshold(SmoothParams{1.0, 1.0, one, Vec{1.0}}, 0.1, 0.1);
    const bool ok = std::abs(ns - 9.0) < 1e-12 && std::abs(sm - 10.0) < 1e-12 && std::abs(tn - 150.0) < 1e-9 &&
                    std::abs(ts - 1500.0) < 1e-9;
    return std::pair{ok, fmt("msd factors %.17g / %.17g; ", ns, sm) + fmt("thresholds %.17g / %.17g", tn, ts)};
  });
}

}  // namespace

VerifyReport run_verify(VerifySuite suite, const VerifyOptions& options) {
  VerifyReport report;
  if (suite == VerifySuite::Sequence || suite == VerifySuite::All) sequence_suite(report, options);
  if (suite == VerifySuite::Geometry || suite == VerifySuite::All) geometry_suite(report);
  if (suite == VerifySuite::Bounds || suite == VerifySuite::All) bounds_suite(report);
  return report;
}

}  // namespace mirrorstep

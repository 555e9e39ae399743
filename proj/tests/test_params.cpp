#include "mixkry/errors.hpp"
#include "mixkry/experiment.hpp"
#include "mixkry/params.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <array>
#include <cmath>

using namespace mixkry;

namespace {

MixGKState run_steps(const oracle::Problem& p, Index k) {
  MixGKState s = mixgk_init(oracle::operators_of(p), p.b);
  for (Index i = 0; i < k && s.can_step(); ++i) s.step();
  return s;
}

struct Scalar {
  double res2;
  double trace;
};

// k = 1, gamma = 1: y = a beta / (a^2 + b^2 + lam^2)
Scalar scalar_case(const MixGKState& s, double lam) {
  const double a = s.alpha(1);
  const double b = s.beta(2);
  const double beta = s.beta1();
  const double d = a * a + b * b;
  const double y = a * beta / (d + lam * lam);
  const double r0 = a * y - beta;
  const double r1 = b * y;
  return {r0 * r0 + r1 * r1, d / (d + lam * lam)};
}

}  // namespace

TEST_CASE("rule limits at large lambda") {
  const auto p = oracle::random_problem(16, 12, 5, 200);
  const MixGKState s = run_steps(p, 3);
  const ProjectedSystem sys = build_projected(s, 0.5);
  const double b2 = s.beta1() * s.beta1();
  CHECK(upre_objective(sys, 1e9, 0.3) == doctest::Approx(b2 / 7.0 - 0.3).epsilon(1e-9));
  CHECK(gcv_objective(sys, 1e9) == doctest::Approx(b2 / 49.0).epsilon(1e-9));
  CHECK(wgcv_objective(sys, 1e9, 0.4) == doctest::Approx(b2 / 49.0).epsilon(1e-9));
}

TEST_CASE("rules in the scalar case") {
  const auto p = oracle::random_problem(10, 8, 0, 201);
  const MixGKState s = run_steps(p, 1);
  const ProjectedSystem sys = build_projected(s, 1.0);
  const double lam = 0.45;
  const Scalar t = scalar_case(s, lam);
  CHECK(upre_objective(sys, lam, 0.2) ==
        doctest::Approx(t.res2 / 3.0 + 2.0 * 0.2 * t.trace / 3.0 - 0.2).epsilon(1e-12));
  CHECK(gcv_objective(sys, lam) ==
        doctest::Approx(t.res2 / ((3.0 - t.trace) * (3.0 - t.trace))).epsilon(1e-12));
  CHECK(wgcv_objective(sys, lam, 1.0) == doctest::Approx(gcv_objective(sys, lam)).epsilon(1e-15));
  CHECK(default_wgcv_omega(1, 10) == doctest::Approx(0.3));
  CHECK_THROWS_AS(upre_objective(sys, 0.0, 0.2), ParameterDomainError);
}

TEST_CASE("gcv argmin is invariant to scaling the data") {
  const auto p = oracle::random_problem(20, 15, 5, 202);
  oracle::Problem q = p;
  q.b *= 7.5;
  const MixGKState s = run_steps(p, 6);
  const MixGKState t = run_steps(q, 6);
  SelectionConfig cfg;
  cfg.method = SelectionMethod::Gcv;
  const RuleEvaluator ep(s, oracle::prior_of(p), cfg);
  const RuleEvaluator eq(t, oracle::prior_of(q), cfg);
  std::array<double, 3> best_p{1e300, 0, 0};
  std::array<double, 3> best_q{1e300, 0, 0};
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) {
      const double g = 0.05 + 0.95 * i / 19.0;
      const double l = std::pow(10.0, -3.0 + 5.0 * j / 19.0);
      const double fp = ep(g, l);
      const double fq = eq(g, l);
      CHECK(fq == doctest::Approx(fp * 7.5 * 7.5).epsilon(1e-8));
      if (fp < best_p[0]) best_p = {fp, g, l};
      if (fq < best_q[0]) best_q = {fq, g, l};
    }
  CHECK(best_p[1] == best_q[1]);
  CHECK(best_p[2] == best_q[2]);
}

TEST_CASE("wgcv relation to the full GCV at full dimension") {
  const auto p = oracle::random_problem(20, 15, 5, 203);
  const MixGKState s = run_steps(p, 15);
  REQUIRE(s.k() == 15);
  const double m = 20.0;
  const double rows = 31.0;
  for (double g : {0.2, 0.8})
    for (double lam : {0.05, 0.5, 3.0}) {
      const ProjectedSystem sys = build_projected(s, g);
      const double w = wgcv_objective(sys, lam, rows / m);
      // 2k+1 - omega tr = ((2k+1)/m)(m - tr)
      CHECK(w * (rows / m) * (rows / m) == doctest::Approx(oracle::full_gcv(p, g, lam)).epsilon(1e-8));
      const double u = upre_objective(sys, lam, 0.5);
      CHECK((u + 0.5) * rows / m - 0.5 ==
            doctest::Approx(oracle::full_upre(p, g, lam, 0.5)).epsilon(1e-8));
    }
}

TEST_CASE("rule evaluator agrees with the ProjectedSystem path") {
  const auto p = oracle::random_problem(24, 18, 5, 204);
  const MixGKState s = run_steps(p, 7);
  const PriorSpec prior = oracle::prior_of(p);
  for (auto method : {SelectionMethod::Upre, SelectionMethod::Gcv, SelectionMethod::Wgcv}) {
    SelectionConfig cfg;
    cfg.method = method;
    cfg.sigma2 = 0.4;
    const RuleEvaluator ev(s, prior, cfg);
    for (double g : {0.1, 0.5, 1.0})
      for (double lam : {0.01, 0.3, 4.0}) {
        const ProjectedSystem sys = build_projected(s, g);
        double ref = 0.0;
        if (method == SelectionMethod::Upre) ref = upre_objective(sys, lam, 0.4);
        if (method == SelectionMethod::Gcv) ref = gcv_objective(sys, lam);
        if (method == SelectionMethod::Wgcv) ref = wgcv_objective(sys, lam, ev.omega());
        CHECK(ev(g, lam) == doctest::Approx(ref).epsilon(1e-9));
        CHECK((ev.solve(g, lam) - solve_projected(sys, lam)).norm() <=
              1e-9 * solve_projected(sys, lam).norm());
      }
  }
  CHECK(RuleEvaluator(s, prior, SelectionConfig{}).omega() == doctest::Approx(15.0 / 24.0));
}

TEST_CASE("optimal objective") {
  const auto p = oracle::random_problem(16, 12, 5, 205);
  const MixGKState s = run_steps(p, 4);
  const PriorSpec prior = oracle::prior_of(p);
  CHECK(optimal_objective(s, prior, 0.5, 1e12, p.mu) <= 1e-16);

  std::mt19937_64 rng(3);
  const Vector truth = oracle::random_vector(12, rng);
  const ProjectedSystem sys = build_projected(s, 1.0);
  const Vector x = recover_iterate(s, prior, 1.0, solve_projected(sys, 0.7));
  CHECK(optimal_objective(s, prior, 1.0, 0.7, truth) ==
        doctest::Approx((x - truth).squaredNorm()).epsilon(1e-10));
  SelectionConfig cfg;
  cfg.method = SelectionMethod::Optimal;
  CHECK_THROWS_AS(RuleEvaluator(s, prior, cfg), ConfigError);
  CHECK(evaluate_rule(s, prior, cfg, 0.4, 0.7, &truth) ==
        doctest::Approx(optimal_objective(s, prior, 0.4, 0.7, truth)).epsilon(1e-10));
}

TEST_CASE("one-parameter searches match a fine grid") {
  const auto p = oracle::random_problem(30, 20, 5, 206);
  const MixGKState s = run_steps(p, 8);
  const PriorSpec prior = oracle::prior_of(p);
  std::mt19937_64 rng(4);
  const Vector truth = oracle::random_vector(20, rng) * 0.1;
  const double cell = 16.0 / 999.0;
  for (auto method : {SelectionMethod::Optimal, SelectionMethod::Upre}) {
    SelectionConfig cfg;
    cfg.method = method;
    cfg.sigma2 = 1.0;
    cfg.fixed_gamma = 1.0;
    const SelectionResult r = select_params(s, prior, cfg, &truth);
    CHECK(r.gamma == 1.0);
    double best = 1e300;
    double best_log = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double ll = -8.0 + i * cell;
      const double f = evaluate_rule(s, prior, cfg, 1.0, std::pow(10.0, ll), &truth);
      if (f < best) {
        best = f;
        best_log = ll;
      }
    }
    CHECK(std::abs(std::log10(r.lambda) - best_log) <= cell);
    CHECK(r.objective <= best * (1.0 + 1e-9));
  }
}

TEST_CASE("search on flat and failing objectives") {
  SelectionConfig cfg;
  const SelectionResult r = search_parameters([](double, double) { return 2.0; }, cfg);
  CHECK(r.gamma == cfg.gamma_min);
  CHECK(r.lambda == doctest::Approx(std::pow(10.0, cfg.log_lambda_min)));
  CHECK_FALSE(r.converged);
  CHECK_THROWS_AS(search_parameters([](double, double) { return std::nan(""); }, cfg),
                  SearchFailure);

  // smooth bowl inside the box
  const auto bowl = [](double g, double l) {
    const double a = g - 0.37;
    const double b = std::log10(l) - 0.8;
    return a * a + 0.5 * b * b + 1.0;
  };
  const SelectionResult q = search_parameters(bowl, cfg);
  CHECK(q.gamma == doctest::Approx(0.37).epsilon(1e-3));
  CHECK(std::log10(q.lambda) == doctest::Approx(0.8).epsilon(1e-3));
  CHECK(q.converged);

  SelectionConfig threaded = cfg;
  threaded.threads = 4;
  const SelectionResult t = search_parameters(bowl, threaded);
  CHECK(t.gamma == q.gamma);
  CHECK(t.lambda == q.lambda);
}

TEST_CASE("selection method names") {
  CHECK(parse_selection_method("wgcv") == SelectionMethod::Wgcv);
  CHECK(parse_selection_method("opt") == SelectionMethod::Optimal);
  CHECK(to_string(SelectionMethod::Upre) == "upre");
  CHECK_THROWS_AS(parse_selection_method("lcurve"), ConfigError);
}

TEST_CASE("stopping_check") {
  StoppingPolicy policy;
  policy.max_iter = 50;
  std::vector<RunRecord> h;
  for (int k = 1; k <= 5; ++k) {
    RunRecord r;
    r.k = k;
    r.objective = 10.0 / k;
    r.rel_residual = 0.5;
    h.push_back(r);
  }
  CHECK(stopping_check(h, policy) == StopDecision::Continue);

  StoppingPolicy flat;
  flat.flat_tol = 1e-6;
  flat.window = 2;
  std::vector<RunRecord> f(2);
  f[0].k = 1;
  f[0].objective = 5.0;
  f[0].rel_residual = 0.5;
  f[1].k = 2;
  f[1].objective = 5.0 * (1.0 - 1e-9);
  f[1].rel_residual = 0.5;
  CHECK(stopping_check(f, flat) == StopDecision::ObjectiveFlat);

  std::vector<RunRecord> res(1);
  res[0].k = 1;
  res[0].rel_residual = 1e-7;
  CHECK(stopping_check(res, policy) == StopDecision::Residual);

  h.back().objective = 100.0;
  CHECK(stopping_check(h, policy) == StopDecision::Continue);
  h.push_back(h.back());
  h.back().k = 6;
  h.back().objective = 200.0;
  CHECK(stopping_check(h, policy) == StopDecision::ObjectiveFlat);

  policy.max_iter = 5;
  h.resize(5);
  h.back().objective = 1.0;
  CHECK(stopping_check(h, policy) == StopDecision::MaxIterations);
  StoppingPolicy bad;
  bad.window = 1;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("monitor values") {
  CHECK(monitor_value(SelectionMethod::Upre, 4.0, 2.0, 10, 0.5) ==
        doctest::Approx((4.0 + 2.0) / 10.0 - 0.5));
  CHECK(monitor_value(SelectionMethod::Gcv, 4.0, 2.0, 10) == doctest::Approx(40.0 / 64.0));
  CHECK_THROWS(monitor_value(SelectionMethod::Optimal, 1.0, 1.0, 10));
}

TEST_CASE("optimal selection on the spherical desk problem matches a 60 x 60 grid") {
  Config cfg = Config::parse("problem.preset = spherical\nseed = 2\n");
  const Experiment exp = prepare_experiment(cfg);
  const Vector b = exp.d - exp.A * exp.prior.mean;
  MixGKOperators ops{exp.A, exp.noise.r_inv, exp.noise.l_r, exp.prior.q1, exp.prior.q2};
  MixGKState s = mixgk_init(ops, b);
  for (int i = 0; i < 10; ++i) s.step();
  SelectionConfig sel;
  sel.method = SelectionMethod::Optimal;
  const SelectionResult r = select_params(s, exp.prior, sel, &*exp.s_true);
  double best = 1e300;
  for (int i = 0; i < 60; ++i)
    for (int j = 0; j < 60; ++j) {
      const double g = sel.gamma_min + (1.0 - sel.gamma_min) * i / 59.0;
      const double l = std::pow(10.0, -8.0 + 16.0 * j / 59.0);
      best = std::min(best, evaluate_rule(s, exp.prior, sel, g, l, &*exp.s_true));
    }
  CHECK(r.objective <= best * (1.0 + 1e-3));
}

// Acceptance checks 1-8. Prints one PASS/FAIL line per criterion.
//
//   mixkry_acceptance [--out DIR] [--expected-fail N]... [--only N]...
//
// Exit status is 0 when every criterion passes or is listed with
// --expected-fail.
#include "mixkry/experiment.hpp"
#include "mixkry/learn.hpp"
#include "mixkry/params.hpp"
#include "mixkry/projected.hpp"
#include "oracles.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

using namespace mixkry;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

MixGKState run_to(const oracle::Problem& p, Index k, MixGKOptions opt = {}) {
  MixGKState s = mixgk_init(oracle::operators_of(p), p.b, opt);
  while (s.k() < k && s.can_step()) s.step();
  return s;
}

double rel(const Matrix& a, const Matrix& b) {
  const double scale = std::max(b.norm(), 1e-300);
  return (a - b).norm() / scale;
}

Outcome finite_termination() {
  const auto t0 = Clock::now();
  const std::pair<double, double> pairs[] = {{1.0, 0.1}, {0.5, 1.0}, {0.15, 5.0}};
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = oracle::random_problem(25, 20, 5, seed);
    const MixGKState s = run_to(p, 20);
    const PriorSpec prior = oracle::prior_of(p);
    for (const auto& [g, lam] : pairs) {
      const ProjectedSystem sys = build_projected(s, g);
      const Vector sk = recover_iterate(s, prior, g, solve_projected(sys, lam));
      const Vector map = solve_map_dense(p.A, p.r_inv(), p.Q(g), p.b, p.mu, lam);
      worst = std::max(worst, (sk - map).norm() / map.norm());
    }
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-8 && t < 1.0,
          "max rel diff " + fmt("%.2e", worst) + " (tol 1e-8), " + fmt("%.3f", t) + " s"};
}

Outcome recurrence_suite() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const auto p = oracle::random_problem(40, 30, 5, seed);
    MixGKState s = mixgk_init(oracle::operators_of(p), p.b);
    const Matrix L = p.l_r();
    const Matrix Rinv = p.r_inv();
    for (Index k = 1; k <= 15 && s.can_step(); ++k) {
      s.step();
      const Matrix U = s.U();
      const Matrix V = s.V();
      const Matrix B = s.B();
      const Matrix AQ1V = p.A * p.Q1 * V;
      worst = std::max(worst, rel(U * B, AQ1V));
      Matrix rhs = V * B.transpose();
      rhs.col(k) += s.alpha(k + 1) * s.next_v();
      worst = std::max(worst, rel(rhs, p.A.transpose() * Rinv * U));
      worst = std::max(worst, (U.transpose() * Rinv * U - Matrix::Identity(k + 1, k + 1)).norm());
      worst = std::max(worst, (V.transpose() * p.Q1 * V - Matrix::Identity(k, k)).norm());

      const Matrix Ut = L * U;
      const Matrix laq2v = L * p.A * p.Q2 * V;
      const Matrix proj = laq2v - Ut * (Ut.transpose() * laq2v);
      const auto& qr = s.qr();
      worst = std::max(worst, (qr.Y * qr.R - proj).norm() / std::max(laq2v.norm(), 1e-300));
      worst = std::max(worst, (qr.Y.transpose() * qr.Y - Matrix::Identity(qr.rank(), qr.rank())).norm());
      worst = std::max(worst, (qr.Y.transpose() * Ut).norm());

      const PriorSpec prior = oracle::prior_of(p);
      for (double g : {0.3, 0.9}) {
        const ProjectedSystem sys = build_projected(s, g);
        const Matrix laqv = L * p.A * p.Q(g) * V;
        const Matrix DtD = sys.D.transpose() * sys.D;
        worst = std::max(worst, rel(DtD, laqv.transpose() * laqv));
        const Vector y = solve_projected(sys, 0.7);
        const double proj_norm = projected_residual(sys, y).norm();
        const double full_norm = (laqv * y - L * p.b).norm();
        worst = std::max(worst, std::abs(proj_norm - full_norm) / full_norm);
      }
    }
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-9 && t < 5.0,
          "max violation " + fmt("%.2e", worst) + " (tol 1e-9), 20 seeds, " + fmt("%.3f", t) + " s"};
}

Outcome qr_update() {
  const auto t0 = Clock::now();
  const auto p = oracle::random_problem(200, 150, 150, 7);
  MixGKOptions inc;
  MixGKOptions rec;
  rec.incremental_qr = false;
  MixGKState a = mixgk_init(oracle::operators_of(p), p.b, inc);
  MixGKState b = mixgk_init(oracle::operators_of(p), p.b, rec);
  double worst = 0.0;
  std::vector<double> fa;
  std::vector<double> fb;
  for (Index k = 1; k <= 50; ++k) {
    a.step();
    b.step();
    worst = std::max(worst, oracle::max_principal_angle(a.qr().Y, b.qr().Y));
    fa.push_back(static_cast<double>(a.last_qr_flops()));
    fb.push_back(static_cast<double>(b.last_qr_flops()));
  }
  // growth exponent between k = 25 and k = 50
  const double ea = std::log2(fa[49] / fa[24]);
  const double eb = std::log2(fb[49] / fb[24]);
  const bool ok = worst <= 1e-8 && ea < 1.3 && eb > 1.7 && fa[49] < fb[49] &&
                  a.qr().rank() == 50 && a.recompute_count() == 0;
  return {ok, "max angle " + fmt("%.2e", worst) + " rad, flop growth exponent update " +
                  fmt("%.2f", ea) + " vs recompute " + fmt("%.2f", eb) + ", " +
                  fmt("%.2f", seconds_since(t0)) + " s"};
}

Outcome rule_convergence() {
  // data from a prior draw plus noise of covariance R, so sigma^2 = 1 after whitening
  auto p = oracle::random_problem(20, 15, 5, 4);
  std::mt19937_64 rng(44);
  const Matrix L1 = p.Q(0.5).llt().matrixL();
  const Vector truth = L1 * oracle::random_vector(15, rng);
  p.b = p.A * truth + p.r_var.cwiseSqrt().cwiseProduct(oracle::random_vector(20, rng));
  const MixGKState s = run_to(p, 15);
  if (s.k() != 15) return {false, "process stopped at k = " + std::to_string(s.k())};
  const double sigma2 = 1.0;
  const double omega = 31.0 / 20.0;
  std::vector<double> gs;
  std::vector<double> ls;
  for (int i = 0; i < 40; ++i) {
    gs.push_back(0.01 + 0.99 * i / 39.0);
    ls.push_back(std::pow(10.0, -4.0 + 6.0 * i / 39.0));
  }
  std::pair<int, int> up{-1, -1}, uf{-1, -1}, wp{-1, -1}, gf{-1, -1};
  double bup = 1e300, buf = 1e300, bwp = 1e300, bgf = 1e300;
  for (int i = 0; i < 40; ++i) {
    const ProjectedSystem sys = build_projected(s, gs[i]);
    for (int j = 0; j < 40; ++j) {
      const double v1 = upre_objective(sys, ls[j], sigma2);
      const double v2 = oracle::full_upre(p, gs[i], ls[j], sigma2);
      const double v3 = wgcv_objective(sys, ls[j], omega);
      const double v4 = oracle::full_gcv(p, gs[i], ls[j]);
      if (v1 < bup) { bup = v1; up = {i, j}; }
      if (v2 < buf) { buf = v2; uf = {i, j}; }
      if (v3 < bwp) { bwp = v3; wp = {i, j}; }
      if (v4 < bgf) { bgf = v4; gf = {i, j}; }
    }
  }
  std::ostringstream d;
  d << "UPRE argmin proj (" << up.first << "," << up.second << ") full (" << uf.first << ","
    << uf.second << "); WGCV (" << wp.first << "," << wp.second << ") vs GCV (" << gf.first << ","
    << gf.second << ") on 40x40, UPRE at gamma " << fmt("%.3f", gs[up.first]) << " lambda "
    << fmt("%.3g", ls[up.second]);
  return {up == uf && wp == gf, d.str()};
}

Outcome hutchinson() {
  const Grid grid = Grid::unit_square(4, 2);
  std::mt19937_64 rng(5);
  const SampleFactor S = sample_covariance(oracle::random_matrix(8, 6, rng));
  const Matrix Q = kernel_matrix(KernelSpec{KernelFamily::Matern, 0.4, 1.5}, grid);
  const double exact = (Q - S.S * S.S.transpose()).squaredNorm();
  const HutchinsonEstimate est = hutchinson_estimate(make_symmetric_operator(std::make_shared<const Matrix>(Q)), S,
                                                     rademacher_probes(8, 200, 11));
  const double z = std::abs(est.mean - exact) / est.std_error;
  const Matrix Qi = S.S * S.S.transpose() + Matrix::Identity(8, 8);
  const double exact_i = hutchinson_objective(Qi, S, rademacher_probes(8, 37, 3));
  const bool ok = z <= 3.0 && std::abs(exact_i - 8.0) <= 1e-12;
  return {ok, "|mean - ||Q-Qhat||_F^2| = " + fmt("%.2f", z) + " SE; identity case " +
                  fmt("%.15g", exact_i) + " (expect 8)"};
}

double final_error(const VariantResult& v) { return *v.result.records.back().rel_error; }

const VariantResult& find(const std::vector<VariantResult>& vs, const std::string& name) {
  for (const auto& v : vs)
    if (v.name == name) return v;
  throw std::runtime_error("missing variant " + name);
}

Outcome spherical(const fs::path& out) {
  const auto t0 = Clock::now();
  const std::string base = "problem.preset = spherical\nseed = 0\n";
  const auto w = compare_methods(Config::parse(base + "select.method = wgcv\ncompare.variants = mix,identity\n"),
                                 out / "wgcv");
  const auto o = compare_methods(Config::parse(base + "select.method = optimal\ncompare.variants = mix\n"),
                                 out / "optimal");
  const double t = seconds_since(t0);
  const auto& mix = find(w, "mix").result;
  const double ew = final_error(find(w, "mix"));
  const double eo = final_error(find(o, "mix"));
  const double ei = final_error(find(w, "identity"));
  const bool stopped = mix.reason == StopReason::ObjectiveFlat || mix.reason == StopReason::Residual;
  const bool ok = stopped && mix.records.size() <= 100 && ew <= 1.1 * eo && ew < ei && eo < ei && t < 60.0;
  std::ostringstream d;
  d << "wgcv stop " << to_string(mix.reason) << " at k=" << mix.records.size() << ", err "
    << fmt("%.4f", ew) << " vs optimal " << fmt("%.4f", eo) << " (ratio " << fmt("%.3f", ew / eo)
    << ", limit 1.10), identity " << fmt("%.4f", ei) << ", " << fmt("%.1f", t) << " s";
  return {ok, d.str()};
}

Outcome crosswell(const fs::path& out) {
  const auto t0 = Clock::now();
  const auto r = compare_methods(
      Config::parse("problem.preset = crosswell\nseed = 0\nselect.method = wgcv\n"
                    "compare.variants = mix,q1-only,q2-only\n"),
      out / "wgcv");
  const double t = seconds_since(t0);
  const double em = final_error(find(r, "mix"));
  const double e1 = final_error(find(r, "q1-only"));
  const double e2 = final_error(find(r, "q2-only"));
  const bool ok = em <= std::min(e1, e2) + 0.02 && t < 120.0;
  return {ok, "mix " + fmt("%.4f", em) + ", matern " + fmt("%.4f", e1) + ", rq " + fmt("%.4f", e2) +
                  ", " + fmt("%.1f", t) + " s"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism(const fs::path& first, const fs::path& second) {
  if (!fs::exists(first / "c6")) spherical(first / "c6");
  if (!fs::exists(first / "c7")) crosswell(first / "c7");
  spherical(second / "c6");
  crosswell(second / "c7");
  int compared = 0;
  int differing = 0;
  for (const auto& entry : fs::recursive_directory_iterator(first)) {
    if (entry.path().extension() != ".csv") continue;
    const fs::path other = second / fs::relative(entry.path(), first);
    ++compared;
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) ++differing;
  }
  return {compared > 0 && differing == 0,
          std::to_string(compared) + " CSV files compared, " + std::to_string(differing) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixkry acceptance checks"};
  std::string out = (fs::temp_directory_path() / "mixkry_acceptance").string();
  std::vector<int> expected;
  std::vector<int> only;
  app.add_option("--out", out, "artifact directory");
  app.add_option("--expected-fail", expected, "criteria allowed to fail");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const fs::path root(out);
  fs::remove_all(root);
  fs::create_directories(root);
  const std::set<int> allowed(expected.begin(), expected.end());
  const std::set<int> chosen(only.begin(), only.end());

  const std::vector<std::pair<int, std::function<Outcome()>>> checks{
      {1, finite_termination},
      {2, recurrence_suite},
      {3, qr_update},
      {4, rule_convergence},
      {5, hutchinson},
      {6, [&] { return spherical(root / "run1" / "c6"); }},
      {7, [&] { return crosswell(root / "run1" / "c7"); }},
      {8, [&] { return determinism(root / "run1", root / "run2"); }},
  };
  int unexpected = 0;
  for (const auto& [id, fn] : checks) {
    if (!chosen.empty() && !chosen.count(id)) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const bool tolerated = !o.pass && allowed.count(id);
    if (!o.pass && !tolerated) ++unexpected;
    std::printf("criterion %d: %s  %s%s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                tolerated ? "  [known failure]" : "");
    std::fflush(stdout);
  }
  return unexpected == 0 ? 0 : 1;
}

#include "mixkry/errors.hpp"
#include "mixkry/experiment.hpp"
#include "mixkry/hybrid.hpp"
#include "mixkry/learn.hpp"
#include "mixkry/projected.hpp"
#include "mixkry/testproblems.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace mixkry;

namespace {

LinearOperator dense_or_zero(const Matrix& q) {
  if (q.size() == 0 || q.isZero(0.0)) return make_zero_operator(q.rows(), q.cols());
  return make_symmetric_operator(std::make_shared<const Matrix>(q));
}

PriorSpec make_prior(const Matrix& q1, const Matrix& q2, const std::optional<Vector>& mean,
                     std::optional<double> fixed_gamma) {
  PriorSpec prior;
  prior.q1 = make_symmetric_operator(std::make_shared<const Matrix>(q1));
  prior.q2 = q2.size() ? dense_or_zero(q2) : make_zero_operator(q1.rows(), q1.cols());
  prior.mean = mean ? *mean : Vector::Zero(q1.rows());
  prior.fixed_gamma = fixed_gamma;
  return prior;
}

// Keeps the operators' backing matrices alive together with the state.
struct PyMixGK {
  PyMixGK(const Matrix& a, const Vector& noise_var, const Matrix& q1, const Matrix& q2,
          const Vector& b, bool incremental_qr)
      : prior(make_prior(q1, q2, std::nullopt, std::nullopt)),
        state(make_state(a, noise_var, b, incremental_qr)) {}

  MixGKState make_state(const Matrix& a, const Vector& noise_var, const Vector& b,
                        bool incremental_qr) {
    const NoiseWhitener w = noise_whitener(noise_var);
    MixGKOptions opt;
    opt.incremental_qr = incremental_qr;
    return MixGKState({make_dense_operator(a), w.r_inv, w.l_r, prior.q1, prior.q2}, b, opt);
  }

  PriorSpec prior;
  MixGKState state;
};

std::string status_name(MixGKStatus s) {
  switch (s) {
    case MixGKStatus::Active: return "active";
    case MixGKStatus::ImmediateBreakdown: return "immediate-breakdown";
    case MixGKStatus::BetaBreakdown: return "beta-breakdown";
    case MixGKStatus::AlphaBreakdown: return "alpha-breakdown";
  }
  return "unknown";
}

py::dict records_dict(const HybridResult& r) {
  std::vector<Index> k;
  std::vector<double> lambda, gamma, objective, rel_residual, rel_error;
  for (const auto& rec : r.records) {
    k.push_back(rec.k);
    lambda.push_back(rec.lambda);
    gamma.push_back(rec.gamma);
    objective.push_back(rec.objective);
    rel_residual.push_back(rec.rel_residual);
    rel_error.push_back(rec.rel_error.value_or(std::nan("")));
  }
  py::dict d;
  d["k"] = k;
  d["lambda"] = lambda;
  d["gamma"] = gamma;
  d["objective"] = objective;
  d["rel_residual"] = rel_residual;
  d["rel_error"] = rel_error;
  d["solution"] = r.solution;
  d["best_k"] = r.best_k;
  d["stop_reason"] = std::string(to_string(r.reason));
  d["initial_error"] = r.initial_error;
  return d;
}

}  // namespace

PYBIND11_MODULE(_mixkry, m) {
  m.doc() = "Hybrid Krylov solvers with mixed Gaussian priors";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ArgumentError>(m, "ArgumentError", base.ptr());
  py::register_exception<ParameterDomainError>(m, "ParameterDomainError", base.ptr());
  py::register_exception<BreakdownError>(m, "BreakdownError", base.ptr());
  py::register_exception<SearchFailure>(m, "SearchFailure", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  m.def(
      "kernel_eval",
      [](const std::string& family, double ell, double nu, double gamma_exp, double r) {
        return kernel_eval(KernelSpec{parse_kernel_family(family), ell, nu, gamma_exp}, r);
      },
      py::arg("family"), py::arg("ell"), py::arg("nu") = 0.5, py::arg("gamma_exp") = 1.0,
      py::arg("r"));

  m.def(
      "kernel_matrix",
      [](const std::string& family, Index size, double ell, double nu, double gamma_exp) {
        return kernel_matrix(KernelSpec{parse_kernel_family(family), ell, nu, gamma_exp},
                             Grid::unit_square(size));
      },
      py::arg("family"), py::arg("size"), py::arg("ell"), py::arg("nu") = 0.5,
      py::arg("gamma_exp") = 1.0, "Kernel matrix on a size x size grid over the unit square.");

  m.def(
      "sample_covariance",
      [](const Matrix& columns) {
        const SampleFactor f = sample_covariance(columns);
        return py::make_tuple(f.S, f.mean);
      },
      py::arg("columns"), "Returns (S, mean) with Q_hat = S S^T; samples are columns.");

  m.def(
      "hutchinson_objective",
      [](const Matrix& q, const Matrix& columns, const Matrix& probes) {
        return hutchinson_objective(q, sample_covariance(columns), probes);
      },
      py::arg("Q"), py::arg("columns"), py::arg("probes"));

  m.def("rademacher_probes", &rademacher_probes, py::arg("n"), py::arg("count"), py::arg("seed"));

  m.def(
      "learn_matern",
      [](const Matrix& columns, Index size, Index probes, std::uint64_t seed) {
        LearnConfig cfg;
        cfg.probes = probes;
        cfg.seed = seed;
        const FitResult f = learn_matern(sample_covariance(columns), Grid::unit_square(size), cfg);
        py::dict d;
        d["nu"] = f.nu;
        d["ell"] = f.ell;
        d["objective"] = f.objective;
        d["scale"] = f.scale;
        d["evaluations"] = f.evaluations;
        d["converged"] = f.converged;
        return d;
      },
      py::arg("columns"), py::arg("size"), py::arg("probes") = 20, py::arg("seed") = 0);

  m.def("rblw_gamma", [](const Matrix& columns) { return rblw_gamma(sample_covariance(columns)); },
        py::arg("columns"));

  m.def(
      "spherical_tomo",
      [](Index size, Index angles, Index circles, std::uint64_t seed) {
        const TomoProblem p = spherical_tomo(size, angles, circles, seed);
        return py::make_tuple(Eigen::SparseMatrix<double>(*p.matrix), p.s_true, p.b_clean);
      },
      py::arg("size") = 32, py::arg("angles") = 16, py::arg("circles") = 24, py::arg("seed") = 0,
      "Returns (A, s_true, b_clean) with A as scipy.sparse.");

  m.def(
      "crosswell_tomo",
      [](Index size, Index sources, Index receivers, std::uint64_t seed) {
        const TomoProblem p = crosswell_tomo(size, sources, receivers, seed);
        return py::make_tuple(Eigen::SparseMatrix<double>(*p.matrix), p.s_true, p.b_clean);
      },
      py::arg("size") = 64, py::arg("sources") = 10, py::arg("receivers") = 20,
      py::arg("seed") = 0);

  m.def(
      "training_images",
      [](Index count, Index size, std::uint64_t seed) {
        const TrainingSet set = gen_training_images(count, size, seed);
        Matrix cols(size * size, count);
        for (Index j = 0; j < count; ++j) cols.col(j) = set.images[static_cast<std::size_t>(j)];
        return cols;
      },
      py::arg("count"), py::arg("size"), py::arg("seed") = 0);

  m.def(
      "add_noise",
      [](const Vector& b, double level, std::uint64_t seed) {
        const NoisyData n = add_noise(b, level, seed);
        return py::make_tuple(n.d, n.sigma);
      },
      py::arg("b"), py::arg("level"), py::arg("seed") = 0);

  m.def("solve_map_dense", &solve_map_dense, py::arg("A"), py::arg("Rinv"), py::arg("Q"),
        py::arg("b"), py::arg("mu"), py::arg("lam"));

  py::class_<PyMixGK>(m, "MixGK")
      .def(py::init<const Matrix&, const Vector&, const Matrix&, const Matrix&, const Vector&, bool>(),
           py::arg("A"), py::arg("noise_var"), py::arg("Q1"), py::arg("Q2"), py::arg("b"),
           py::arg("incremental_qr") = true)
      .def("step", [](PyMixGK& s) { s.state.step(); })
      .def_property_readonly("k", [](const PyMixGK& s) { return s.state.k(); })
      .def_property_readonly("can_step", [](const PyMixGK& s) { return s.state.can_step(); })
      .def_property_readonly("status", [](const PyMixGK& s) { return status_name(s.state.status()); })
      .def_property_readonly("beta1", [](const PyMixGK& s) { return s.state.beta1(); })
      .def_property_readonly("B", [](const PyMixGK& s) { return s.state.B(); })
      .def_property_readonly("U", [](const PyMixGK& s) { return Matrix(s.state.U()); })
      .def_property_readonly("V", [](const PyMixGK& s) { return Matrix(s.state.V()); })
      .def_property_readonly("C", [](const PyMixGK& s) { return Matrix(s.state.C()); })
      .def_property_readonly("Y", [](const PyMixGK& s) { return s.state.qr().Y; })
      .def_property_readonly("R", [](const PyMixGK& s) { return s.state.qr().R; })
      .def_property_readonly("last_qr_flops", [](const PyMixGK& s) { return s.state.last_qr_flops(); })
      .def(
          "solve",
          [](const PyMixGK& s, double gamma, double lam) {
            const ProjectedSystem sys = build_projected(s.state, gamma);
            return recover_iterate(s.state, s.prior, gamma, solve_projected(sys, lam));
          },
          py::arg("gamma"), py::arg("lam"), "Iterate s_k for the given (gamma, lambda).")
      .def(
          "objective",
          [](const PyMixGK& s, const std::string& method, double gamma, double lam,
             std::optional<double> sigma2) {
            SelectionConfig cfg;
            cfg.method = parse_selection_method(method);
            cfg.sigma2 = sigma2;
            return evaluate_rule(s.state, s.prior, cfg, gamma, lam);
          },
          py::arg("method"), py::arg("gamma"), py::arg("lam"), py::arg("sigma2") = py::none())
      .def(
          "select",
          [](const PyMixGK& s, const std::string& method, std::optional<double> sigma2) {
            SelectionConfig cfg;
            cfg.method = parse_selection_method(method);
            cfg.sigma2 = sigma2;
            const SelectionResult r = select_params(s.state, s.prior, cfg);
            return py::make_tuple(r.gamma, r.lambda, r.objective);
          },
          py::arg("method") = "wgcv", py::arg("sigma2") = py::none());

  m.def(
      "run_hybrid",
      [](const Matrix& a, const Vector& noise_var, const Matrix& q1, const Matrix& q2,
         const Vector& d, std::optional<Vector> mean, const std::string& method,
         std::optional<double> sigma2, Index max_iter, std::optional<double> fixed_gamma,
         std::optional<Vector> s_true) {
        const PriorSpec prior = make_prior(q1, q2, mean, fixed_gamma);
        HybridConfig cfg;
        cfg.select.method = parse_selection_method(method);
        cfg.select.sigma2 = sigma2;
        cfg.stop.max_iter = max_iter;
        const HybridResult r = run_hybrid(make_dense_operator(a), noise_whitener(noise_var), prior, d,
                                          cfg, s_true ? &*s_true : nullptr);
        return records_dict(r);
      },
      py::arg("A"), py::arg("noise_var"), py::arg("Q1"), py::arg("Q2"), py::arg("d"),
      py::arg("mean") = py::none(), py::arg("method") = "wgcv", py::arg("sigma2") = py::none(),
      py::arg("max_iter") = 100, py::arg("fixed_gamma") = py::none(), py::arg("s_true") = py::none());

  m.def(
      "run_experiment",
      [](const std::string& config_text, const std::filesystem::path& out,
         const std::filesystem::path& base_dir) {
        const RunArtifacts a = run_experiment(Config::parse(config_text, base_dir), out);
        return records_dict(a.result);
      },
      py::arg("config"), py::arg("out"), py::arg("base_dir") = ".",
      "Runs one experiment from config text and writes its artifacts to `out`.");

  m.def(
      "compare_methods",
      [](const std::string& config_text, const std::filesystem::path& out,
         const std::filesystem::path& base_dir) {
        py::dict d;
        for (const auto& v : compare_methods(Config::parse(config_text, base_dir), out)) {
          d[py::str(v.name)] = records_dict(v.result);
        }
        return d;
      },
      py::arg("config"), py::arg("out"), py::arg("base_dir") = ".");
}

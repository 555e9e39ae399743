#include "mixkry/experiment.hpp"

#include "mixkry/errors.hpp"
#include "mixkry/matrix_market.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace mixkry {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

// Problem data shared by run, compare, fit and gen.
struct ProblemData {
  std::string preset;
  std::uint64_t seed = 0;
  Index size = 0;
  std::shared_ptr<const SparseMatrix> matrix;
  Vector b_clean;
  Vector d;
  std::optional<Vector> s_true;
  std::optional<Grid> grid;
  std::optional<Matrix> sample_columns;
  double sigma = 1.0;
  bool whitened = false;
  std::string description;
};

std::optional<Grid> square_grid(Index n) {
  const auto side = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(n))));
  if (side * side != n) return std::nullopt;
  return Grid::unit_square(side);
}

Matrix columns_of(const std::vector<Vector>& images) {
  Matrix out(images.front().size(), static_cast<Index>(images.size()));
  for (std::size_t j = 0; j < images.size(); ++j) out.col(static_cast<Index>(j)) = images[j];
  return out;
}

ProblemData load_problem(const Config& cfg) {
  ProblemData p;
  p.preset = cfg.get("problem.preset", "spherical");
  p.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  if (p.preset == "spherical" || p.preset == "crosswell") {
    const bool sph = p.preset == "spherical";
    p.size = cfg.get_int("problem.size", sph ? 32 : 64);
    TomoProblem tp =
        sph ? spherical_tomo(p.size, cfg.get_int("problem.angles", 16),
                             cfg.get_int("problem.circles", 24), p.seed)
            : crosswell_tomo(p.size, cfg.get_int("problem.sources", 10),
                             cfg.get_int("problem.receivers", 20), p.seed);
    p.matrix = tp.matrix;
    p.b_clean = tp.b_clean;
    p.s_true = tp.s_true;
    p.grid = tp.grid;
    p.description = tp.meta;
    const double level = cfg.get_double("noise.level", sph ? 0.03 : 0.01);
    const NoisyData noisy = add_noise(tp.b_clean, level, p.seed + 2);
    p.d = noisy.d;
    p.sigma = noisy.sigma;
    p.whitened = true;
    if (sph) {
      const Index count = cfg.get_int("problem.training", 49);
      p.sample_columns = columns_of(gen_training_images(count, p.size, p.seed + 1).images);
    }
  } else if (p.preset == "file") {
    const auto mpath = cfg.get_path("problem.matrix");
    const auto dpath = cfg.get_path("problem.data");
    if (!mpath) throw ConfigError("problem.preset=file requires problem.matrix");
    if (!dpath) throw ConfigError("problem.preset=file requires problem.data");
    p.matrix = std::make_shared<const SparseMatrix>(mm::read_sparse(*mpath));
    p.d = mm::read_vector(*dpath);
    if (p.d.size() != p.matrix->rows()) {
      throw ConfigError("problem.data length does not match problem.matrix rows");
    }
    if (const auto t = cfg.get_path("problem.truth")) {
      p.s_true = mm::read_vector(*t);
      if (p.s_true->size() != p.matrix->cols()) {
        throw ConfigError("problem.truth length does not match problem.matrix columns");
      }
    }
    p.grid = square_grid(p.matrix->cols());
    p.size = p.grid ? p.grid->nx : 0;
    if (const auto s = cfg.get_double("noise.sigma")) {
      if (!(*s > 0.0)) throw ConfigError("noise.sigma must be positive");
      p.sigma = *s;
      p.whitened = true;
    }
    p.description = "file " + mpath->filename().string();
  } else {
    throw ConfigError("unknown problem.preset '" + p.preset + "'");
  }
  if (const auto s = cfg.get_path("problem.samples")) {
    p.sample_columns = mm::read_samples(*s);
  }
  if (p.sample_columns && p.sample_columns->rows() != p.matrix->cols()) {
    throw ConfigError("problem.samples length does not match the unknowns");
  }
  return p;
}

KernelSpec kernel_from(const Config& cfg, const std::string& prefix,
                       const std::string& family, double ell, double nu) {
  KernelSpec spec;
  spec.family = parse_kernel_family(family);
  spec.ell = cfg.get_double(prefix + ".ell", ell);
  spec.nu = cfg.get_double(prefix + ".nu", nu);
  spec.gamma_exp = cfg.get_double(prefix + ".gamma_exp", 1.0);
  spec.validate();
  return spec;
}

void write_params_csv(const fs::path& path, const HybridResult& res) {
  auto out = open_out(path);
  out << "k,gamma,lambda,objective,method,evaluations,converged\n";
  for (std::size_t i = 0; i < res.selections.size(); ++i) {
    const auto& s = res.selections[i];
    out << res.records[i].k << ',' << format_double(s.gamma) << ','
        << format_double(s.lambda) << ',' << format_double(s.objective) << ','
        << to_string(s.method) << ',' << s.evaluations << ','
        << (s.converged ? 1 : 0) << '\n';
  }
}

std::string record_row(const RunRecord& r, bool timing) {
  std::string row = std::to_string(r.k) + ',' + format_double(r.lambda) + ',' +
                    format_double(r.gamma) + ',' + format_double(r.objective) +
                    ',' + format_double(r.rel_residual) + ',';
  if (r.rel_error) row += format_double(*r.rel_error);
  row += ',';
  if (timing) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", r.ms);
    row += buf;
  } else {
    row += '0';
  }
  return row;
}

}  // namespace

const std::vector<std::string>& Config::known_keys() {
  static const std::vector<std::string> keys = {
      "seed",
      "problem.preset", "problem.size", "problem.angles", "problem.circles",
      "problem.sources", "problem.receivers", "problem.training",
      "problem.matrix", "problem.data", "problem.truth", "problem.samples",
      "noise.level", "noise.sigma",
      "prior.mean", "prior.gamma",
      "prior.q1.kernel", "prior.q1.ell", "prior.q1.nu", "prior.q1.gamma_exp",
      "prior.q2.source", "prior.q2.kernel", "prior.q2.ell", "prior.q2.nu",
      "prior.q2.gamma_exp",
      "select.method", "select.sigma2", "select.omega", "select.gamma_min",
      "select.grid_gamma", "select.grid_lambda", "select.log_lambda_min",
      "select.log_lambda_max", "select.max_evaluations", "select.threads",
      "stop.max_iter", "stop.flat_tol", "stop.residual_tol", "stop.window",
      "mixgk.reorthogonalize", "mixgk.incremental_qr",
      "fit.probes", "fit.sweep", "fit.max_evaluations",
      "compare.variants",
      "output.timing",
  };
  return keys;
}

Config Config::parse(const std::string& text, const fs::path& base_dir) {
  Config cfg;
  cfg.base_dir_ = base_dir;
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (cfg.has(key)) {
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    cfg.set(key, trim(line.substr(eq + 1)));
  }
  return cfg;
}

Config Config::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

void Config::set(const std::string& key, const std::string& value) {
  const auto& keys = known_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
    throw ConfigError("unknown config key '" + key + "'");
  }
  values_[key] = value;
}

std::optional<std::string> Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

std::optional<double> Config::get_double(const std::string& key) const {
  const auto v = get(key);
  if (!v) return std::nullopt;
  try {
    std::size_t used = 0;
    const double x = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument(key);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + *v + "'");
  }
}

double Config::get_double(const std::string& key, double fallback) const {
  return get_double(key).value_or(fallback);
}

Index Config::get_int(const std::string& key, Index fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const long long x = std::stoll(*v, &used);
    if (used != v->size()) throw std::invalid_argument(key);
    return static_cast<Index>(x);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects an integer, got '" + *v + "'");
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  throw ConfigError("config key '" + key + "' expects a boolean, got '" + *v + "'");
}

std::optional<fs::path> Config::get_path(const std::string& key) const {
  const auto v = get(key);
  if (!v) return std::nullopt;
  fs::path p(*v);
  return p.is_absolute() ? p : base_dir_ / p;
}

Experiment prepare_experiment(const Config& cfg) {
  ProblemData p = load_problem(cfg);
  Experiment exp;
  exp.preset = p.preset;
  exp.seed = p.seed;
  exp.size = p.size;
  exp.matrix = p.matrix;
  exp.A = make_sparse_operator(p.matrix);
  exp.d = p.d;
  exp.s_true = p.s_true;
  exp.sigma = p.sigma;
  exp.whitened = p.whitened;
  exp.description = p.description;
  const Index n = p.matrix->cols();
  const Index m = p.matrix->rows();
  exp.noise = noise_whitener(m, p.sigma * p.sigma);
  if (p.sample_columns) exp.samples = sample_covariance(*p.sample_columns);
  if (p.grid) exp.grid = *p.grid;
  const bool sph = p.preset == "spherical";
  const bool cross = p.preset == "crosswell";

  auto require_grid = [&](const std::string& key) {
    if (!p.grid) throw ConfigError(key + " needs a square image (n = size^2)");
  };
  auto require_samples = [&](const std::string& key) {
    if (!exp.samples) throw ConfigError(key + " needs training samples (problem.samples)");
  };

  PriorSpec& prior = exp.prior;
  const std::string mean = cfg.get("prior.mean", exp.samples ? "sample" : "zero");
  if (mean == "sample") {
    require_samples("prior.mean=sample");
    prior.mean = exp.samples->mean;
  } else if (mean == "zero") {
    prior.mean = Vector::Zero(n);
  } else {
    throw ConfigError("prior.mean must be 'sample' or 'zero'");
  }

  const std::string q1 =
      cfg.get("prior.q1.kernel", sph ? "learned" : (cross ? "matern" : "identity"));
  if (q1 == "identity") {
    prior.q1 = make_identity_operator(n);
  } else if (q1 == "sample") {
    require_samples("prior.q1.kernel=sample");
    prior.q1 = exp.samples->as_operator();
  } else if (q1 == "learned") {
    require_samples("prior.q1.kernel=learned");
    require_grid("prior.q1.kernel=learned");
    LearnConfig lc;
    lc.probes = cfg.get_int("fit.probes", 20);
    lc.seed = p.seed + 3;
    lc.max_evaluations = cfg.get_int("fit.max_evaluations", 200);
    exp.learned = learn_matern(*exp.samples, exp.grid, lc);
    KernelSpec spec{KernelFamily::Matern, exp.learned->ell, exp.learned->nu};
    // The fit compares the kernel with Q_hat / tau; scale it back.
    prior.q1 = make_symmetric_operator(std::make_shared<const Matrix>(
        exp.learned->scale * kernel_matrix(spec, exp.grid)));
  } else {
    require_grid("prior.q1.kernel");
    prior.q1 = build_kernel_operator(kernel_from(cfg, "prior.q1", q1, 0.25, 0.5), exp.grid);
  }

  const std::string q2 =
      cfg.get("prior.q2.source", exp.samples ? "sample" : (cross ? "kernel" : "none"));
  if (q2 == "sample") {
    require_samples("prior.q2.source=sample");
    prior.q2 = exp.samples->as_operator();
  } else if (q2 == "kernel") {
    require_grid("prior.q2.source=kernel");
    prior.q2 = build_kernel_operator(
        kernel_from(cfg, "prior.q2", cfg.get("prior.q2.kernel", "rq"), 0.1, 2.0), exp.grid);
  } else if (q2 == "none") {
    prior.q2 = make_zero_operator(n, n);
  } else {
    throw ConfigError("prior.q2.source must be 'sample', 'kernel' or 'none'");
  }
  prior.fixed_gamma = cfg.get_double("prior.gamma");
  prior.validate();

  HybridConfig& h = exp.hybrid;
  SelectionConfig& s = h.select;
  s.method = parse_selection_method(cfg.get("select.method", "wgcv"));
  const std::string sigma2 = cfg.get("select.sigma2", "auto");
  if (sigma2 == "auto") {
    // Whitened data have unit noise variance.
    if (p.whitened) s.sigma2 = 1.0;
  } else {
    s.sigma2 = cfg.get_double("select.sigma2");
  }
  if (s.method == SelectionMethod::Upre && !s.sigma2) {
    throw ConfigError("select.method=upre needs select.sigma2 or noise.sigma");
  }
  s.omega = cfg.get_double("select.omega");
  s.gamma_min = cfg.get_double("select.gamma_min", s.gamma_min);
  s.grid_gamma = cfg.get_int("select.grid_gamma", s.grid_gamma);
  s.grid_lambda = cfg.get_int("select.grid_lambda", s.grid_lambda);
  s.log_lambda_min = cfg.get_double("select.log_lambda_min", s.log_lambda_min);
  s.log_lambda_max = cfg.get_double("select.log_lambda_max", s.log_lambda_max);
  s.max_evaluations = cfg.get_int("select.max_evaluations", s.max_evaluations);
  s.threads = static_cast<int>(cfg.get_int(
      "select.threads", std::max<Index>(1, std::thread::hardware_concurrency())));
  if (s.method == SelectionMethod::Optimal && !exp.s_true) {
    throw ConfigError("select.method=optimal needs the true solution (problem.truth)");
  }
  h.stop.max_iter = cfg.get_int("stop.max_iter", h.stop.max_iter);
  h.stop.flat_tol = cfg.get_double("stop.flat_tol", h.stop.flat_tol);
  h.stop.residual_tol = cfg.get_double("stop.residual_tol", h.stop.residual_tol);
  h.stop.window = cfg.get_int("stop.window", h.stop.window);
  h.stop.validate();
  h.mixgk.reorthogonalize = cfg.get_bool("mixgk.reorthogonalize", true);
  h.mixgk.incremental_qr = cfg.get_bool("mixgk.incremental_qr", true);
  h.timing = cfg.get_bool("output.timing", false);
  return exp;
}

PriorSpec variant_prior(const Experiment& exp, const std::string& variant) {
  const Index n = exp.prior.dim();
  PriorSpec p;
  p.mean = exp.prior.mean;
  p.q2 = make_zero_operator(n, n);
  p.fixed_gamma = 1.0;
  if (variant == "mix") return exp.prior;
  if (variant == "q1-only") {
    p.q1 = exp.prior.q1;
  } else if (variant == "q2-only") {
    if (exp.prior.q2.is_zero()) throw ConfigError("variant q2-only needs a nonzero Q2");
    p.q1 = exp.prior.q2;
  } else if (variant == "identity") {
    p.q1 = make_identity_operator(n);
  } else if (variant == "q2-plus-identity-rblw") {
    if (!exp.samples) {
      throw ConfigError("variant q2-plus-identity-rblw needs training samples");
    }
    const double g = rblw_gamma(*exp.samples);
    const double tau = exp.samples->trace() / static_cast<double>(n);
    p.q1 = make_combination(g * tau, make_identity_operator(n), 1.0 - g,
                            exp.samples->as_operator());
  } else {
    throw ConfigError("unknown comparison variant '" + variant + "'");
  }
  return p;
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_run_csv(const fs::path& path, const std::vector<RunRecord>& records,
                   bool timing) {
  auto out = open_out(path);
  out << "k,lambda,gamma,objective,rel_residual,rel_error,ms\n";
  for (const auto& r : records) out << record_row(r, timing) << '\n';
}

RunArtifacts run_experiment(const Config& config, const fs::path& out_dir) {
  const Experiment exp = prepare_experiment(config);
  fs::create_directories(out_dir);
  RunArtifacts art;
  art.result = run_hybrid(exp.A, exp.noise, exp.prior, exp.d, exp.hybrid,
                          exp.s_true ? &*exp.s_true : nullptr);
  const HybridResult& res = art.result;
  art.run_csv = out_dir / "run.csv";
  art.params_csv = out_dir / "params.csv";
  art.summary = out_dir / "summary.txt";
  write_run_csv(art.run_csv, res.records, exp.hybrid.timing);
  write_params_csv(art.params_csv, res);
  std::pair<double, double> scale{0.0, 0.0};
  if (exp.size > 0) {
    art.recon_pgm = out_dir / "recon.pgm";
    scale = write_pgm(art.recon_pgm, res.solution, exp.size, exp.size);
  }

  auto out = open_out(art.summary);
  out << "problem=" << exp.description << '\n'
      << "method=" << to_string(exp.hybrid.select.method) << '\n'
      << "iterations=" << res.records.size() << '\n'
      << "best_k=" << res.best_k << '\n'
      << "stop_reason=" << to_string(res.reason) << '\n'
      << "final_gamma=" << format_double(res.records.back().gamma) << '\n'
      << "final_lambda=" << format_double(res.records.back().lambda) << '\n'
      << "noise_sigma=" << format_double(exp.sigma) << '\n';
  if (exp.learned) {
    out << "learned_nu=" << format_double(exp.learned->nu) << '\n'
        << "learned_ell=" << format_double(exp.learned->ell) << '\n';
  }
  if (res.initial_error) out << "initial_rel_error=" << format_double(*res.initial_error) << '\n';
  if (exp.s_true) {
    out << "final_rel_error="
        << format_double((res.solution - *exp.s_true).norm() / exp.s_true->norm()) << '\n';
  }
  if (!art.recon_pgm.empty()) {
    out << "recon_min=" << format_double(scale.first) << '\n'
        << "recon_max=" << format_double(scale.second) << '\n';
  }
  for (const auto& line : res.diagnostics) out << "diagnostic=" << line << '\n';
  return art;
}

std::vector<VariantResult> compare_methods(const Config& config, const fs::path& out_dir) {
  const Experiment exp = prepare_experiment(config);
  std::vector<std::string> variants;
  if (const auto v = config.get("compare.variants")) {
    variants = split_list(*v);
  } else {
    variants = {"mix", "q1-only"};
    if (!exp.prior.q2.is_zero()) variants.push_back("q2-only");
    if (exp.samples) variants.push_back("q2-plus-identity-rblw");
    variants.push_back("identity");
  }
  if (variants.empty()) throw ConfigError("compare.variants is empty");
  std::vector<VariantResult> results;
  for (const auto& name : variants) {
    const PriorSpec prior = variant_prior(exp, name);
    results.push_back({name, run_hybrid(exp.A, exp.noise, prior, exp.d, exp.hybrid,
                                        exp.s_true ? &*exp.s_true : nullptr)});
  }
  fs::create_directories(out_dir);
  auto csv = open_out(out_dir / "compare.csv");
  csv << "variant,k,lambda,gamma,objective,rel_residual,rel_error,ms\n";
  for (const auto& v : results) {
    for (const auto& r : v.result.records) {
      csv << v.name << ',' << record_row(r, exp.hybrid.timing) << '\n';
    }
  }
  auto sum = open_out(out_dir / "summary.txt");
  sum << "problem=" << exp.description << '\n'
      << "method=" << to_string(exp.hybrid.select.method) << '\n';
  for (const auto& v : results) {
    sum << v.name << ".iterations=" << v.result.records.size() << '\n'
        << v.name << ".best_k=" << v.result.best_k << '\n'
        << v.name << ".stop_reason=" << to_string(v.result.reason) << '\n';
    if (exp.s_true) {
      sum << v.name << ".final_rel_error="
          << format_double((v.result.solution - *exp.s_true).norm() / exp.s_true->norm())
          << '\n';
    }
  }
  return results;
}

FitReport fit_prior(const Config& config, const fs::path& out_dir) {
  const ProblemData p = load_problem(config);
  if (!p.sample_columns) {
    throw ConfigError("fit needs training samples: set problem.samples");
  }
  if (!p.grid) throw ConfigError("fit needs a square image (n = size^2)");
  const SampleFactor S = sample_covariance(*p.sample_columns);
  LearnConfig lc;
  lc.probes = config.get_int("fit.probes", 20);
  lc.seed = p.seed + 3;
  lc.max_evaluations = config.get_int("fit.max_evaluations", 200);

  FitReport report;
  report.fit = learn_matern(S, *p.grid, lc);
  const KernelSpec spec{KernelFamily::Matern, report.fit.ell, report.fit.nu};
  const LinearOperator Q = build_kernel_operator(spec, *p.grid);

  std::vector<Index> sweep;
  for (const auto& item : split_list(config.get("fit.sweep", "5,10,20,40,80"))) {
    try {
      sweep.push_back(static_cast<Index>(std::stoll(item)));
    } catch (const std::exception&) {
      throw ConfigError("fit.sweep expects a comma-separated list of integers");
    }
    if (sweep.back() < 1) throw ConfigError("fit.sweep entries must be positive");
  }
  const Index max_m = sweep.empty() ? 1 : *std::max_element(sweep.begin(), sweep.end());
  const Matrix probes = rademacher_probes(S.dim(), max_m, lc.seed);
  for (const Index M : sweep) {
    LearnConfig c = lc;
    c.probes = M;
    const FitResult f = learn_matern(S, *p.grid, c);
    const HutchinsonEstimate est = hutchinson_estimate(Q, S, probes.leftCols(M));
    report.sweep.push_back({static_cast<double>(M), f.nu, f.ell, f.objective, est.std_error});
  }

  fs::create_directories(out_dir);
  auto out = open_out(out_dir / "fit.txt");
  out << "nu=" << format_double(report.fit.nu) << '\n'
      << "ell=" << format_double(report.fit.ell) << '\n'
      << "objective=" << format_double(report.fit.objective) << '\n'
      << "probes=" << report.fit.probes << '\n'
      << "seed=" << report.fit.seed << '\n'
      << "evaluations=" << report.fit.evaluations << '\n'
      << "converged=" << (report.fit.converged ? 1 : 0) << '\n';
  auto csv = open_out(out_dir / "fit_sweep.csv");
  csv << "M,nu,ell,objective,std_error\n";
  for (const auto& row : report.sweep) {
    csv << static_cast<Index>(row[0]) << ',' << format_double(row[1]) << ','
        << format_double(row[2]) << ',' << format_double(row[3]) << ','
        << format_double(row[4]) << '\n';
  }
  return report;
}

void generate_preset(const std::string& preset, const fs::path& out_dir,
                     std::uint64_t seed) {
  if (preset != "spherical" && preset != "crosswell") {
    throw ConfigError("unknown preset '" + preset + "' (spherical or crosswell)");
  }
  Config cfg;
  cfg.set("problem.preset", preset);
  cfg.set("seed", std::to_string(seed));
  const ProblemData p = load_problem(cfg);
  fs::create_directories(out_dir);
  mm::write_sparse(out_dir / "A.mtx", *p.matrix);
  mm::write_vector(out_dir / "s_true.mtx", *p.s_true);
  mm::write_vector(out_dir / "b_clean.mtx", p.b_clean);
  mm::write_vector(out_dir / "d.mtx", p.d);
  write_pgm(out_dir / "truth.pgm", *p.s_true, p.size, p.size);
  if (p.sample_columns) mm::write_dense(out_dir / "samples.mtx", *p.sample_columns);

  auto out = open_out(out_dir / "config.txt");
  out << "# " << p.description << '\n'
      << "problem.preset = file\n"
      << "problem.matrix = A.mtx\n"
      << "problem.data = d.mtx\n"
      << "problem.truth = s_true.mtx\n";
  if (p.sample_columns) out << "problem.samples = samples.mtx\n";
  out << "noise.sigma = " << format_double(p.sigma) << '\n'
      << "seed = " << seed << '\n';
  if (preset == "spherical") {
    out << "prior.mean = sample\n"
        << "prior.q1.kernel = learned\n"
        << "prior.q2.source = sample\n";
  } else {
    out << "prior.mean = zero\n"
        << "prior.q1.kernel = matern\n"
        << "prior.q1.nu = 0.5\n"
        << "prior.q1.ell = 0.25\n"
        << "prior.q2.source = kernel\n"
        << "prior.q2.kernel = rq\n"
        << "prior.q2.nu = 2\n"
        << "prior.q2.ell = 0.1\n";
  }
  out << "select.method = wgcv\n";
}

int exit_code_for(const std::exception& error) {
  if (dynamic_cast<const ConfigError*>(&error) ||
      dynamic_cast<const ParameterDomainError*>(&error) ||
      dynamic_cast<const IoError*>(&error)) {
    return 2;
  }
  if (dynamic_cast<const BreakdownError*>(&error)) return 3;
  if (dynamic_cast<const SearchFailure*>(&error)) return 4;
  return 1;
}

}  // namespace mixkry

#pragma once

#include "mixkry/hybrid.hpp"
#include "mixkry/learn.hpp"
#include "mixkry/testproblems.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mixkry {

/// Flat key=value configuration. Lines are `section.key = value`; `#`
/// starts a comment. Unknown and repeated keys are rejected.
class Config {
 public:
  static Config parse(const std::string& text,
                      const std::filesystem::path& base_dir = ".");
  static Config load(const std::filesystem::path& path);

  /// Sets or replaces a key (used for command-line overrides).
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get(const std::string& key, const std::string& fallback) const;
  std::optional<std::string> get(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::optional<double> get_double(const std::string& key) const;
  Index get_int(const std::string& key, Index fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Resolves a path value relative to the config file's directory.
  std::optional<std::filesystem::path> get_path(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  static const std::vector<std::string>& known_keys();

 private:
  std::map<std::string, std::string> values_;
  std::filesystem::path base_dir_ = ".";
};

/// Everything a run needs, built from a Config.
struct Experiment {
  std::string preset;
  std::uint64_t seed = 0;
  Index size = 0;
  LinearOperator A;
  std::shared_ptr<const SparseMatrix> matrix;
  Vector d;
  std::optional<Vector> s_true;
  Grid grid;
  NoiseWhitener noise;
  /// Per-component noise standard deviation used for whitening; 1 when the
  /// data are used unwhitened.
  double sigma = 1.0;
  bool whitened = false;
  std::optional<SampleFactor> samples;
  PriorSpec prior;
  std::optional<FitResult> learned;
  HybridConfig hybrid;
  std::string description;
};

Experiment prepare_experiment(const Config& config);

struct RunArtifacts {
  HybridResult result;
  std::filesystem::path run_csv;
  std::filesystem::path params_csv;
  std::filesystem::path recon_pgm;
  std::filesystem::path summary;
};

/// Runs one hybrid reconstruction and writes run.csv, params.csv,
/// recon.pgm and summary.txt into `out_dir`.
RunArtifacts run_experiment(const Config& config,
                            const std::filesystem::path& out_dir);

struct VariantResult {
  std::string name;
  HybridResult result;
};

/// Runs every variant in compare.variants on the same data and writes
/// compare.csv (run.csv columns prefixed by the variant) and summary.txt.
/// Variants: mix, q1-only, q2-only, q2-plus-identity-rblw, identity.
std::vector<VariantResult> compare_methods(const Config& config,
                                           const std::filesystem::path& out_dir);

/// Prior for one comparison variant of an experiment.
PriorSpec variant_prior(const Experiment& exp, const std::string& variant);

struct FitReport {
  FitResult fit;
  /// One row per probe count: M, nu, ell, objective, std_error.
  std::vector<std::array<double, 5>> sweep;
};

/// Learns Matern parameters from the training samples; writes fit.txt and
/// fit_sweep.csv.
FitReport fit_prior(const Config& config, const std::filesystem::path& out_dir);

/// Writes a preset problem (A, truth, clean and noisy data, training
/// samples when the preset has them) plus a config that reruns it from the
/// files.
void generate_preset(const std::string& preset, const std::filesystem::path& out_dir,
                     std::uint64_t seed = 0);

/// Formats a double with round-trip precision.
std::string format_double(double value);

void write_run_csv(const std::filesystem::path& path,
                   const std::vector<RunRecord>& records, bool timing);

/// Process exit status for an exception escaping a CLI command: 2 for
/// configuration problems, 3 for breakdown, 4 for selection failure, 1
/// otherwise.
int exit_code_for(const std::exception& error);

}  // namespace mixkry

// mixkry command-line driver: run, compare, fit, gen.

#include "mixkry/errors.hpp"
#include "mixkry/experiment.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace mixkry;

namespace {

Config load_with_overrides(const std::string& path,
                           const std::vector<std::string>& overrides) {
  Config cfg = Config::load(path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

void print_file(const fs::path& path) {
  std::ifstream in(path);
  std::cout << in.rdbuf();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed Golub-Kahan hybrid reconstructions"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::string> overrides;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "key=value configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--set", overrides, "override a config entry (key=value)");
  };
  auto* run = app.add_subcommand("run", "one reconstruction with the configured prior");
  add_common(run);
  auto* compare = app.add_subcommand("compare", "reconstructions for several prior variants");
  add_common(compare);
  auto* fit = app.add_subcommand("fit", "learn Matern parameters from training samples");
  add_common(fit);

  std::string preset;
  std::uint64_t seed = 0;
  auto* gen = app.add_subcommand("gen", "write a preset problem to MatrixMarket files");
  gen->add_option("preset", preset, "spherical or crosswell")->required();
  gen->add_option("--out", out_dir, "output directory")->required();
  gen->add_option("--seed", seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      const auto art = run_experiment(load_with_overrides(config_path, overrides), out_dir);
      print_file(art.summary);
    } else if (*compare) {
      compare_methods(load_with_overrides(config_path, overrides), out_dir);
      print_file(fs::path(out_dir) / "summary.txt");
    } else if (*fit) {
      fit_prior(load_with_overrides(config_path, overrides), out_dir);
      print_file(fs::path(out_dir) / "fit.txt");
    } else if (*gen) {
      generate_preset(preset, out_dir, seed);
      std::cout << "wrote " << preset << " problem to " << out_dir << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "mixkry: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 0;
}

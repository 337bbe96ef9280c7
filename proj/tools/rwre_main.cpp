#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rwre/error.hpp"
#include "rwre/experiments.hpp"

namespace {

// Exit codes: 0 success, 1 runtime failure, 2 config error.
constexpr int kOk = 0;
constexpr int kRuntimeFailure = 1;
constexpr int kConfigError = 2;

void emit_error(const std::string& code, const std::string& message) {
  nlohmann::json err = {{"error", code}, {"message", message}};
  std::cerr << err.dump() << "\n";
}

int run_kind(rwre::ExperimentKind kind, const std::string& config_path, long long seed,
             bool seed_set, int workers, bool workers_set, const std::string& out,
             bool out_set) {
  std::string text;
  {
    std::ifstream in(config_path, std::ios::binary);
    if (!in.good()) {
      emit_error("ConfigInvalid", "cannot read config file " + config_path);
      return kConfigError;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  rwre::ExperimentConfig cfg;
  try {
    cfg = rwre::parse_experiment_config(kind, text);
  } catch (const rwre::Error& e) {
    emit_error(rwre::errc_name(e.code()), e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    emit_error("ConfigInvalid", e.what());
    return kConfigError;
  }
  if (seed_set) cfg.seed = static_cast<std::uint64_t>(seed);
  if (workers_set) cfg.workers = workers;
  if (out_set) cfg.out_dir = out;
  try {
    rwre::RunResult result = rwre::run_experiment(cfg);
    std::cout << result.summary_json << "\n";
    return kOk;
  } catch (const rwre::Error& e) {
    if (e.code() == rwre::Errc::ConfigInvalid) {
      emit_error(rwre::errc_name(e.code()), e.what());
      return kConfigError;
    }
    emit_error(rwre::errc_name(e.code()), e.what());
    return kRuntimeFailure;
  } catch (const std::exception& e) {
    emit_error("RuntimeFailure", e.what());
    return kRuntimeFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rwre: quenched random-walk-in-random-environment laboratory"};
  app.require_subcommand(1);

  struct SubArgs {
    std::string config;
    long long seed = 0;
    int workers = 1;
    std::string out;
    bool seed_set = false, workers_set = false, out_set = false;
    CLI::App* cmd = nullptr;
    rwre::ExperimentKind kind;
  };

  const std::pair<const char*, const char*> kinds[] = {
      {"env-dump", "dump site kernels over a lattice window"},
      {"walk", "simulate quenched trajectories in a region"},
      {"solve", "exact absorption solve: right-exit field and exit law"},
      {"t-gamma", "empirical ballisticity condition over an L grid"},
      {"criterion", "effective criterion at one box specification"},
      {"criterion-search", "effective criterion minimized over grids"},
      {"bands", "band decomposition of the rho moment"},
      {"ladder", "scale ladder levels"},
      {"census", "good/bad block census over the cone window"},
      {"tails", "atypical quenched exit tails over environments"},
      {"floor", "exit-point lower-bound table on the block face"},
      {"direction", "asymptotic direction estimate and gap"},
      {"fluctuation", "transversal fluctuation event frequency"},
      {"intersections", "two-walk intersection census"},
      {"llt", "exact lattice convolution local-limit statistics"},
      {"exit-kernel", "annealed exit-kernel smoothness scaling"},
  };

  std::vector<SubArgs> subs(std::size(kinds));
  for (std::size_t i = 0; i < std::size(kinds); ++i) {
    SubArgs& s = subs[i];
    s.kind = rwre::experiment_kind_from(kinds[i].first);
    s.cmd = app.add_subcommand(kinds[i].first, kinds[i].second);
    s.cmd->add_option("--config", s.config, "experiment config JSON")->required();
    s.cmd->add_option("--seed", s.seed, "master seed override")
        ->each([&s](const std::string&) { s.seed_set = true; });
    s.cmd->add_option("--workers", s.workers, "worker thread count")
        ->each([&s](const std::string&) { s.workers_set = true; });
    s.cmd->add_option("--out", s.out, "output directory")
        ->each([&s](const std::string&) { s.out_set = true; });
  }

  CLI11_PARSE(app, argc, argv);

  for (const SubArgs& s : subs) {
    if (s.cmd->parsed()) {
      return run_kind(s.kind, s.config, s.seed, s.seed_set, s.workers, s.workers_set, s.out,
                      s.out_set);
    }
  }
  emit_error("ConfigInvalid", "no subcommand given");
  return kConfigError;
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace rwre {

// Experiment kinds, one per CLI subcommand.
enum class ExperimentKind {
  EnvDump,
  Walk,
  Solve,
  TGamma,
  Criterion,
  CriterionSearch,
  Bands,
  Ladder,
  Census,
  Tails,
  Floor,
  Direction,
  Fluctuation,
  Intersections,
  Llt,
  ExitKernel,
};

const char* experiment_kind_name(ExperimentKind k);
ExperimentKind experiment_kind_from(const std::string& name);  // ConfigInvalid

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Solve;
  std::string raw_json;      // canonical config text (hash input)
  std::uint64_t seed = 1;
  int workers = 1;
  std::filesystem::path out_dir = ".";
};

// Parses and fully validates the JSON config text; unknown keys anywhere are
// rejected with ConfigInvalid before any work starts.
ExperimentConfig parse_experiment_config(ExperimentKind kind, const std::string& json_text);

struct RunResult {
  std::vector<std::string> artifacts;  // file names written under out_dir
  std::string summary_json;            // also written as <kind>_summary.json
};

// Runs the experiment and writes its artifacts (CSV + JSON + manifest.json)
// atomically; identical configs produce bitwise-identical artifacts
// regardless of the worker count.
RunResult run_experiment(const ExperimentConfig& config);

}  // namespace rwre

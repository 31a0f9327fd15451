#pragma once

// Batch experiments driven by a JSON experiment plan.
//
// Modes:
//   compare      every method over a grid of seed-set sizes and repetitions
//   alpha_sweep  GBIM over exploit ratios, recording per-round curves
//   scalability  GBIM on synthetic graphs of growing user count
//
// Outputs (all CSV, comma separated, header row, '\n' line ends):
//   results.csv  schema 1: method,n,m,k,alpha,rep,seed,seed_set,influence,
//                search_evaluations,evaluations,status,error
//   curves.csv   schema 1: method,n,m,k,alpha,rep,round,loss,best_so_far,evaluations
//   timings.csv  schema 1: method,n,m,k,alpha,rep,wall_seconds,mean_round_seconds
//   manifest.json  schema versions, mode, master seed, and row counts
//
// results.csv and curves.csv depend only on the plan and the master seed.
// Wall-clock measurements are confined to timings.csv.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gbim/optimizer.hpp"

namespace gbim {

inline constexpr int kResultsSchemaVersion = 1;
inline constexpr int kCurvesSchemaVersion = 1;
inline constexpr int kTimingsSchemaVersion = 1;

enum class ExperimentMode { compare, alpha_sweep, scalability };

struct DatasetSource {
  std::optional<std::filesystem::path> bundle;
  std::optional<SyntheticParams> synthetic;
};

struct MethodEntry {
  std::string name;  // gbim | maxdegree | greedy | random
  nlohmann::json config = nlohmann::json::object();
};

struct ExperimentPlan {
  ExperimentMode mode = ExperimentMode::compare;
  DatasetSource dataset;
  DiffusionConfig diffusion;
  std::vector<MethodEntry> methods;
  std::vector<std::size_t> seed_sizes{5};
  std::size_t repetitions = 1;
  std::vector<double> alphas{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<std::size_t> user_counts;  // scalability mode
  std::size_t evaluation_simulations = 0;  // 0: diffusion.simulations
  std::filesystem::path output = "results";
  std::uint64_t seed = 0;

  void validate() const;
};

ExperimentPlan parse_experiment_plan(const nlohmann::json& doc,
                                     const std::filesystem::path& base_dir = {});
ExperimentPlan load_experiment_plan(const std::filesystem::path& path);

// Applies recognized keys of `doc` on top of `config`; unknown keys are errors.
void apply_gbim_overrides(GbimConfig& config, const nlohmann::json& doc);
void apply_diffusion_overrides(DiffusionConfig& config, const nlohmann::json& doc);

Dataset materialize_dataset(const DatasetSource& source);

struct MethodRun {
  SeedSet seeds;
  std::size_t search_evaluations = 0;
  std::vector<RoundRecord> history;  // GBIM only
  double wall_seconds = 0.0;
  double mean_round_seconds = 0.0;  // 0 with fewer than two rounds
  bool aborted = false;             // GBIM stopped early; seeds are the best so far
  std::string error;
};

// Runs one method on one dataset. `seed` drives every random choice of the run.
MethodRun run_method(const std::string& method, const nlohmann::json& method_config,
                     const Dataset& data, const DiffusionConfig& diffusion, std::size_t k,
                     std::uint64_t seed);

struct BenchmarkSummary {
  std::size_t result_rows = 0;
  std::size_t curve_rows = 0;
  std::size_t failed_rows = 0;
};

BenchmarkSummary run_benchmark(const ExperimentPlan& plan, std::size_t jobs);

std::string csv_escape(const std::string& field);

}  // namespace gbim

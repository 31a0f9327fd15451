#pragma once

// The optimization loop: evaluate a random initial design with the diffusion
// model, then repeatedly (1) train the surrogate and fit the BLR head on its
// basis vectors, (2) sample unobserved candidates and score them by expected
// improvement, (3) evaluate the best-scoring candidates with the diffusion
// model and add them to the observations. The best observed seed set wins.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gbim/acquisition.hpp"
#include "gbim/diffusion.hpp"
#include "gbim/surrogate.hpp"

namespace gbim {

class ObservationSet {
 public:
  // Returns false (and changes nothing) if the seed set is already observed.
  bool add(const SeedSet& seeds, double value);

  bool contains(const SeedSet& seeds) const { return index_.count(seeds) > 0; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  const std::vector<std::pair<SeedSet, double>>& entries() const noexcept { return entries_; }
  const ObservedSets& index() const noexcept { return index_; }

  // Argmax; ties keep the earliest observation.
  const SeedSet& best_seeds() const;
  double best_value() const;

 private:
  std::vector<std::pair<SeedSet, double>> entries_;
  ObservedSets index_;
  std::size_t best_ = 0;
};

struct BlrConfig {
  double weight_variance = 1.0;
  std::optional<double> noise_variance;  // default: residual variance of the surrogate fit
};

struct GbimConfig {
  std::size_t budget = 5;               // k
  std::size_t initial_design = 1000;
  std::size_t rounds = 30;
  std::size_t patience = 10;
  std::size_t candidates_per_round = 2000;
  double select_fraction = 0.01;
  double pool_fraction = 0.05;
  double exploit_ratio = 0.75;          // alpha
  std::size_t first_round_epochs = 0;   // 0: same as train.epochs
  bool full_retrain = false;            // reinitialize the surrogate every round
  DiffusionConfig diffusion;
  SurrogateConfig surrogate;
  TrainConfig train;
  BlrConfig blr;
  SamplerLimits sampler;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RoundRecord {
  std::size_t round = 0;
  double loss = 0.0;            // final epoch MAE of the surrogate
  double best_so_far = 0.0;
  std::size_t evaluations = 0;  // cumulative diffusion-model evaluations
  std::size_t candidates = 0;
  std::size_t selected = 0;
  double ei_max = 0.0;
  double ei_mean = 0.0;
  double noise_variance = 0.0;
};

struct GbimResult {
  SeedSet best;
  double best_value = 0.0;
  std::vector<RoundRecord> history;
  std::size_t evaluations = 0;
  std::size_t initial_evaluations = 0;
  bool aborted = false;
  std::string error;
  ObservationSet observations;
};

using RoundCallback = std::function<void(const RoundRecord&)>;

// Uniform random valid seed set of exactly `budget` pairs.
SeedSet random_seed_set(const Universe& universe, Rng& rng);

ObservationSet initial_design(const GbimConfig& config, const Dataset& data);

// Diffusion evaluation number `index` of a run; each one has its own stream.
double evaluate_seed_set(const SeedSet& seeds, const Dataset& data, const GbimConfig& config,
                         std::size_t index);

GbimResult run_gbim(const GbimConfig& config, const Dataset& data,
                    const RoundCallback& on_round = {});

}  // namespace gbim

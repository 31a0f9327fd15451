#include "gbim/optimizer.hpp"

#include <algorithm>
#include <numeric>

#include "gbim/blr.hpp"
#include "gbim/error.hpp"

namespace gbim {

namespace {

// Stream tags under the master seed.
constexpr std::uint64_t kDesignStream = 0xD5;
constexpr std::uint64_t kEvalStream = 0xE7;
constexpr std::uint64_t kSurrogateStream = 0x5A;
constexpr std::uint64_t kTrainStream = 0x7C;
constexpr std::uint64_t kSampleStream = 0x3B;

std::vector<UserId> distinct_indices(std::size_t bound, std::size_t count, Rng& rng) {
  std::vector<UserId> out;
  out.reserve(count);
  if (2 * count > bound) {
    std::vector<UserId> all(bound);
    std::iota(all.begin(), all.end(), UserId{0});
    for (std::size_t i = 0; i < count; ++i) {
      std::swap(all[i], all[i + uniform_index(rng, bound - i)]);
      out.push_back(all[i]);
    }
    return out;
  }
  while (out.size() < count) {
    const auto v = static_cast<UserId>(uniform_index(rng, bound));
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}

}  // namespace

bool ObservationSet::add(const SeedSet& seeds, double value) {
  if (!index_.insert(seeds).second) return false;
  entries_.emplace_back(seeds, value);
  if (entries_.size() == 1 || value > entries_[best_].second) best_ = entries_.size() - 1;
  return true;
}

const SeedSet& ObservationSet::best_seeds() const {
  if (entries_.empty()) throw ValidationError("no observations");
  return entries_[best_].first;
}

double ObservationSet::best_value() const {
  if (entries_.empty()) throw ValidationError("no observations");
  return entries_[best_].second;
}

void GbimConfig::validate() const {
  if (budget == 0) throw ValidationError("seed budget k must be at least 1");
  if (initial_design == 0) throw ValidationError("initial design size must be positive");
  if (candidates_per_round == 0) throw ValidationError("candidate batch size must be positive");
  if (!(select_fraction > 0.0 && select_fraction <= 1.0)) {
    throw ValidationError("selection fraction must lie in (0, 1]");
  }
  if (!(pool_fraction > 0.0 && pool_fraction <= 1.0)) {
    throw ValidationError("pool fraction must lie in (0, 1]");
  }
  if (!(exploit_ratio >= 0.0 && exploit_ratio <= 1.0)) {
    throw ValidationError("exploit ratio must lie in [0, 1]");
  }
  if (!(blr.weight_variance > 0.0)) throw ValidationError("BLR weight variance must be positive");
  if (blr.noise_variance && !(*blr.noise_variance > 0.0)) {
    throw ValidationError("BLR noise variance must be positive");
  }
  diffusion.validate();
  surrogate.validate();
  train.validate();
}

SeedSet random_seed_set(const Universe& universe, Rng& rng) {
  universe.validate();
  const auto users = distinct_indices(universe.users, universe.budget, rng);
  const auto items = distinct_indices(universe.items, universe.budget, rng);
  std::vector<SeedPair> pairs;
  pairs.reserve(universe.budget);
  for (std::size_t i = 0; i < universe.budget; ++i) pairs.push_back({users[i], items[i]});
  return SeedSet(std::move(pairs));
}

double evaluate_seed_set(const SeedSet& seeds, const Dataset& data, const GbimConfig& config,
                         std::size_t index) {
  DiffusionConfig dc = config.diffusion;
  dc.seed = derive_seed(config.seed, kEvalStream ^ config.diffusion.seed, index);
  return estimate_influence(seeds, data, dc);
}

ObservationSet initial_design(const GbimConfig& config, const Dataset& data) {
  config.validate();
  data.validate();
  const Universe universe{data.num_users(), data.num_items(), config.budget};
  universe.validate();
  Rng rng = make_rng(config.seed, kDesignStream);
  std::vector<SeedSet> design;
  ObservedSets seen;
  const std::size_t max_attempts = config.initial_design * 50;
  for (std::size_t attempt = 0; attempt < max_attempts && design.size() < config.initial_design;
       ++attempt) {
    SeedSet s = random_seed_set(universe, rng);
    if (seen.insert(s).second) design.push_back(std::move(s));
  }
  ObservationSet obs;
  for (std::size_t i = 0; i < design.size(); ++i) {
    obs.add(design[i], evaluate_seed_set(design[i], data, config, i));
  }
  return obs;
}

GbimResult run_gbim(const GbimConfig& config, const Dataset& data, const RoundCallback& on_round) {
  config.validate();
  data.validate();
  const Universe universe{data.num_users(), data.num_items(), config.budget};
  universe.validate();

  GbimResult result;
  result.observations = initial_design(config, data);
  auto& obs = result.observations;
  result.initial_evaluations = obs.size();
  std::size_t evaluations = obs.size();

  SurrogateParams params = init_surrogate(data.social, data.num_items(), config.surrogate,
                                          derive_seed(config.seed, kSurrogateStream));
  std::size_t stale = 0;
  try {
    for (std::size_t round = 1; round <= config.rounds; ++round) {
      RoundRecord record;
      record.round = round;

      // (1) Fit the surrogate and the BLR head on every observation so far.
      if (config.full_retrain && round > 1) {
        params = init_surrogate(data.social, data.num_items(), config.surrogate,
                                derive_seed(config.seed, kSurrogateStream, round));
      }
      std::vector<TrainingExample> examples;
      examples.reserve(obs.size());
      for (const auto& [s, y] : obs.entries()) examples.push_back({s, y});
      TrainConfig tc = config.train;
      tc.seed = derive_seed(config.seed, kTrainStream, round);
      if (round == 1 && config.first_round_epochs > 0) tc.epochs = config.first_round_epochs;
      const TrainReport report = train(params, examples, tc);
      record.loss = report.final_loss;

      const AttentionContext ctx = build_attention_context(params);
      std::vector<SeedSet> observed_sets;
      observed_sets.reserve(obs.size());
      for (const auto& e : obs.entries()) observed_sets.push_back(e.first);
      const BatchPrediction fitted = predict_batch(observed_sets, params, ctx);

      // The head works on standardized targets; EI rankings are unchanged by
      // the affine map.
      const double offset = params.target_offset;
      const double scale = params.target_scale;
      Eigen::VectorXd targets(static_cast<Eigen::Index>(obs.size()));
      std::vector<double> residuals(obs.size());
      for (std::size_t i = 0; i < obs.size(); ++i) {
        targets(static_cast<Eigen::Index>(i)) = (obs.entries()[i].second - offset) / scale;
        residuals[i] = (obs.entries()[i].second - fitted.values[i]) / scale;
      }
      const double noise = config.blr.noise_variance.value_or(residual_noise_variance(residuals));
      record.noise_variance = noise;
      const BlrPosterior head =
          BlrPosterior::fit(fitted.bases.transpose(), targets, config.blr.weight_variance, noise);
      const double best = (obs.best_value() - offset) / scale;

      // (2) Sample unobserved candidates and score them.
      const PairPool pool =
          PairPool::from_observations(obs.entries(), config.pool_fraction, config.exploit_ratio);
      Rng rng = make_rng(config.seed, derive_seed(kSampleStream, round));
      CandidateBatch batch = sample_candidates(pool, universe, config.candidates_per_round,
                                               obs.index(), rng, config.sampler);
      record.candidates = batch.candidates.size();
      if (batch.candidates.empty()) {
        record.best_so_far = obs.best_value();
        record.evaluations = evaluations;
        result.history.push_back(record);
        if (on_round) on_round(record);
        break;
      }
      const BatchPrediction scored = predict_batch(batch.candidates, params, ctx);
      const auto posterior = head.predict_columns(scored.bases);
      batch.scores.resize(batch.candidates.size());
      double ei_sum = 0.0;
      for (std::size_t i = 0; i < posterior.size(); ++i) {
        batch.scores[i] = expected_improvement(posterior[i].mean, std::sqrt(posterior[i].variance), best);
        ei_sum += batch.scores[i];
        record.ei_max = i == 0 ? batch.scores[i] : std::max(record.ei_max, batch.scores[i]);
      }
      record.ei_mean = ei_sum / static_cast<double>(posterior.size());

      // (3) Evaluate the selection with the diffusion model.
      const double before = obs.best_value();
      for (const auto& s : select_top(batch, config.select_fraction)) {
        if (obs.contains(s)) continue;
        obs.add(s, evaluate_seed_set(s, data, config, evaluations));
        ++evaluations;
        ++record.selected;
      }
      record.best_so_far = obs.best_value();
      record.evaluations = evaluations;
      result.history.push_back(record);
      if (on_round) on_round(record);

      stale = obs.best_value() > before ? 0 : stale + 1;
      if (config.patience > 0 && stale >= config.patience) break;
    }
  } catch (const std::exception& e) {
    result.aborted = true;
    result.error = e.what();
  }
  result.best = obs.best_seeds();
  result.best_value = obs.best_value();
  result.evaluations = evaluations;
  return result;
}

}  // namespace gbim

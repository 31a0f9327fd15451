#pragma once

// Expected improvement and explore-exploit candidate generation.

#include <cstddef>
#include <span>
#include <unordered_set>
#include <utility>
#include <vector>

#include "gbim/diffusion.hpp"
#include "gbim/rng.hpp"

namespace gbim {

// sigma * [g C(g) + N(g)], g = (mu - best) / sigma. At sigma = 0 this is
// max(0, mu - best).
double expected_improvement(double mean, double sigma, double best);

double normal_cdf(double x);
double normal_pdf(double x);

// (user, item) pairs harvested from the highest-influence observations,
// drawn in proportion to how often they occur there.
class PairPool {
 public:
  PairPool() = default;
  explicit PairPool(double exploit_ratio);

  // Pairs of the top `top_fraction` of `observations` by value (at least one set).
  static PairPool from_observations(std::span<const std::pair<SeedSet, double>> observations,
                                    double top_fraction, double exploit_ratio);

  void add(const SeedPair& pair, std::size_t count = 1);

  double exploit_ratio() const noexcept { return alpha_; }
  bool empty() const noexcept { return pairs_.empty(); }
  std::size_t size() const noexcept { return pairs_.size(); }

  // Sorted by pair; frequencies are >= 1.
  const std::vector<std::pair<SeedPair, std::size_t>>& entries() const noexcept { return pairs_; }

  SeedPair draw(Rng& rng) const;

 private:
  double alpha_ = 0.75;
  std::vector<std::pair<SeedPair, std::size_t>> pairs_;
  std::vector<std::size_t> cumulative_;
};

struct Universe {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t budget = 0;  // k

  void validate() const;
};

using ObservedSets = std::unordered_set<SeedSet, SeedSetHash>;

struct CandidateBatch {
  std::vector<SeedSet> candidates;
  std::vector<double> scores;  // filled by the caller, parallel to candidates
  bool exhausted = false;      // retry budget ran out before `count` candidates
};

struct SamplerLimits {
  std::size_t pair_retries = 1000;       // redraws per pair before the candidate is abandoned
  std::size_t candidate_retries = 50;    // total attempts = count * candidate_retries
};

// Each candidate takes k pairs; every pair comes from the pool with
// probability alpha and is uniform over all n * m pairs otherwise. Pairs that
// reuse a user or item are redrawn; candidates already observed or already in
// the batch are discarded.
CandidateBatch sample_candidates(const PairPool& pool, const Universe& universe, std::size_t count,
                                 const ObservedSets& observed, Rng& rng,
                                 const SamplerLimits& limits = {});

// ceil(fraction * |batch|) best-scoring candidates, ties broken by the
// lexicographic order of the sorted pairs.
std::vector<SeedSet> select_top(const CandidateBatch& batch, double fraction);

std::size_t top_count(std::size_t batch_size, double fraction);

}  // namespace gbim

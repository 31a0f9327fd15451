#include "gbim/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <limits>
#include <numeric>

#include "gbim/error.hpp"

namespace gbim {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double expected_improvement(double mean, double sigma, double best) {
  if (!(sigma > 0.0)) return std::max(0.0, mean - best);
  const double gamma = (mean - best) / sigma;
  return sigma * (gamma * normal_cdf(gamma) + normal_pdf(gamma));
}

PairPool::PairPool(double exploit_ratio) : alpha_(exploit_ratio) {
  if (!(alpha_ >= 0.0 && alpha_ <= 1.0)) throw ValidationError("exploit ratio must lie in [0, 1]");
}

PairPool PairPool::from_observations(std::span<const std::pair<SeedSet, double>> observations,
                                     double top_fraction, double exploit_ratio) {
  if (!(top_fraction > 0.0 && top_fraction <= 1.0)) {
    throw ValidationError("pool fraction must lie in (0, 1]");
  }
  PairPool pool(exploit_ratio);
  if (observations.empty()) return pool;
  std::vector<std::size_t> order(observations.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (observations[a].second != observations[b].second) {
      return observations[a].second > observations[b].second;
    }
    return observations[a].first < observations[b].first;
  });
  const std::size_t top = top_count(observations.size(), top_fraction);
  std::map<SeedPair, std::size_t> counts;
  for (std::size_t i = 0; i < top; ++i) {
    for (const auto& p : observations[order[i]].first.pairs()) ++counts[p];
  }
  for (const auto& [pair, count] : counts) pool.add(pair, count);
  return pool;
}

void PairPool::add(const SeedPair& pair, std::size_t count) {
  if (count == 0) return;
  auto it = std::lower_bound(pairs_.begin(), pairs_.end(), pair,
                             [](const auto& entry, const SeedPair& p) { return entry.first < p; });
  if (it != pairs_.end() && it->first == pair) {
    it->second += count;
  } else {
    pairs_.insert(it, {pair, count});
  }
  cumulative_.clear();
  std::size_t running = 0;
  for (const auto& e : pairs_) cumulative_.push_back(running += e.second);
}

SeedPair PairPool::draw(Rng& rng) const {
  if (pairs_.empty()) throw ValidationError("cannot draw from an empty pair pool");
  const std::size_t ticket = uniform_index(rng, cumulative_.back());
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), ticket);
  return pairs_[static_cast<std::size_t>(it - cumulative_.begin())].first;
}

void Universe::validate() const {
  if (budget == 0) throw ValidationError("seed budget k must be at least 1");
  if (budget > std::min(users, items)) {
    throw ValidationError("seed budget k = " + std::to_string(budget) + " exceeds min(n, m) = " +
                          std::to_string(std::min(users, items)));
  }
}

CandidateBatch sample_candidates(const PairPool& pool, const Universe& universe, std::size_t count,
                                 const ObservedSets& observed, Rng& rng,
                                 const SamplerLimits& limits) {
  universe.validate();
  if (count == 0) throw ValidationError("candidate count must be at least 1");
  CandidateBatch batch;
  ObservedSets in_batch;
  const std::size_t max_attempts = count * std::max<std::size_t>(1, limits.candidate_retries);
  std::vector<SeedPair> pairs;
  for (std::size_t attempt = 0; attempt < max_attempts && batch.candidates.size() < count;
       ++attempt) {
    pairs.clear();
    bool complete = true;
    for (std::size_t slot = 0; slot < universe.budget && complete; ++slot) {
      complete = false;
      for (std::size_t retry = 0; retry < limits.pair_retries; ++retry) {
        SeedPair pair{};
        if (!pool.empty() && uniform01(rng) < pool.exploit_ratio()) {
          pair = pool.draw(rng);
        } else {
          pair.user = static_cast<UserId>(uniform_index(rng, universe.users));
          pair.item = static_cast<ItemId>(uniform_index(rng, universe.items));
        }
        const bool clash = std::any_of(pairs.begin(), pairs.end(), [&](const SeedPair& p) {
          return p.user == pair.user || p.item == pair.item;
        });
        if (!clash) {
          pairs.push_back(pair);
          complete = true;
          break;
        }
      }
    }
    if (!complete) continue;
    SeedSet candidate(pairs);
    if (observed.count(candidate) || in_batch.count(candidate)) continue;
    in_batch.insert(candidate);
    batch.candidates.push_back(std::move(candidate));
  }
  batch.exhausted = batch.candidates.size() < count;
  return batch;
}

std::size_t top_count(std::size_t batch_size, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ValidationError("fraction must lie in (0, 1]");
  const double exact = fraction * static_cast<double>(batch_size);
  const double nearest = std::round(exact);
  // 0.01 * 2000 is 20.000000000000004 in binary floating point.
  const double count = std::abs(exact - nearest) <= 1e-9 * std::max(1.0, exact) ? nearest
                                                                                 : std::ceil(exact);
  return std::clamp<std::size_t>(static_cast<std::size_t>(count), 1, batch_size);
}

std::vector<SeedSet> select_top(const CandidateBatch& batch, double fraction) {
  if (batch.candidates.empty()) throw ValidationError("cannot select from an empty batch");
  if (batch.scores.size() != batch.candidates.size()) {
    throw ValidationError("candidate batch has no score for every candidate");
  }
  const std::size_t take = top_count(batch.candidates.size(), fraction);
  std::vector<std::size_t> order(batch.candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto score = [&](std::size_t i) {
    const double s = batch.scores[i];
    return std::isnan(s) ? -std::numeric_limits<double>::infinity() : s;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (score(a) != score(b)) return score(a) > score(b);
                      return batch.candidates[a] < batch.candidates[b];
                    });
  std::vector<SeedSet> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(batch.candidates[order[i]]);
  return out;
}

}  // namespace gbim

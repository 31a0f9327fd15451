#include "gbim/baselines.hpp"

#include <algorithm>
#include <queue>
#include <tuple>

#include "gbim/error.hpp"
#include "gbim/optimizer.hpp"

namespace gbim {

SeedSet max_degree(const Dataset& data, std::size_t k) {
  data.validate();
  const std::size_t n = data.num_users();
  const std::size_t m = data.num_items();
  if (k > std::min(n, m)) throw ValidationError("k exceeds min(n, m)");
  std::vector<bool> user_used(n, false);
  std::vector<bool> item_used(m, false);
  std::vector<SeedPair> chosen;
  for (std::size_t step = 0; step < k; ++step) {
    // Best free item: highest degree, then smallest id. With a user of
    // out-degree zero every product ties at zero and the smallest free item wins.
    std::size_t best_item = m;
    std::size_t first_free_item = m;
    for (std::size_t v = 0; v < m; ++v) {
      if (item_used[v]) continue;
      if (first_free_item == m) first_free_item = v;
      if (best_item == m || data.items.degree(static_cast<ItemId>(v)) >
                                data.items.degree(static_cast<ItemId>(best_item))) {
        best_item = v;
      }
    }
    std::size_t best_user = n;
    std::size_t best_product = 0;
    std::size_t best_user_item = m;
    for (std::size_t u = 0; u < n; ++u) {
      if (user_used[u]) continue;
      const std::size_t deg = data.social.out_degree(static_cast<UserId>(u));
      const std::size_t item = deg > 0 ? best_item : first_free_item;
      const std::size_t product = deg * data.items.degree(static_cast<ItemId>(item));
      if (best_user == n || product > best_product) {
        best_user = u;
        best_product = product;
        best_user_item = item;
      }
    }
    // A zero best product means every remaining pair ties; the smallest
    // (user, item) is the first free user with the first free item.
    if (best_product == 0) best_user_item = first_free_item;
    user_used[best_user] = true;
    item_used[best_user_item] = true;
    chosen.push_back({static_cast<UserId>(best_user), static_cast<ItemId>(best_user_item)});
  }
  return SeedSet(std::move(chosen), k);
}

std::size_t full_greedy_evaluations(std::size_t n, std::size_t m, std::size_t k) {
  std::size_t total = 0;
  for (std::size_t s = 0; s < k && s < n && s < m; ++s) total += (n - s) * (m - s);
  return total;
}

GreedyResult lazy_greedy(const Dataset& data, std::size_t k, const SeedEvaluator& evaluate) {
  data.validate();
  const std::size_t n = data.num_users();
  const std::size_t m = data.num_items();
  if (k == 0) throw ValidationError("k must be at least 1");
  if (k > std::min(n, m)) throw ValidationError("k exceeds min(n, m)");

  struct Entry {
    double gain;
    SeedPair pair;
    std::size_t round;  // selection round in which `gain` was computed
  };
  auto worse = [](const Entry& a, const Entry& b) {
    if (a.gain != b.gain) return a.gain < b.gain;
    return b.pair < a.pair;  // smaller pair on top among equal gains
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> heap(worse);

  GreedyResult result;
  const double base = 0.0;  // the empty seed set activates nobody
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < m; ++v) {
      const SeedPair p{static_cast<UserId>(u), static_cast<ItemId>(v)};
      const double value = evaluate(SeedSet({p}));
      ++result.evaluations;
      heap.push({value - base, p, 0});
    }
  }

  SeedSet current;
  double current_value = base;
  for (std::size_t round = 0; round < k && !heap.empty();) {
    Entry top = heap.top();
    heap.pop();
    if (current.uses_user(top.pair.user) || current.uses_item(top.pair.item)) continue;
    if (top.round == round) {
      current = current.with(top.pair);
      current_value += top.gain;
      ++round;
      continue;
    }
    const double value = evaluate(current.with(top.pair));
    ++result.evaluations;
    top.gain = value - current_value;
    top.round = round;
    heap.push(top);
  }
  result.seeds = SeedSet(current.pairs(), k);
  result.value = current_value;
  return result;
}

GreedyResult lazy_greedy(const Dataset& data, const DiffusionConfig& config, std::size_t k) {
  return lazy_greedy(data, k, [&](const SeedSet& s) { return estimate_influence(s, data, config); });
}

SeedSet random_baseline(const Universe& universe, Rng& rng) {
  return random_seed_set(universe, rng);
}

}  // namespace gbim

// Exact expected influence by enumeration over live-edge worlds.
//
// Every random event of the multiplex model is an independent coin: an IC edge
// (u -> i on layer j) that is live with probability w * p_{i,j}, or an
// association (u, j -> k) that fires with probability beta * p_{u,k}. For a
// fixed assignment of coins the final activation set is the closure of the
// seeds under live edges (and the deterministic LT rule), so the expectation is
// a finite weighted sum. Coins are flipped lazily while computing the closure,
// and the decision tree is walked depth first by replaying a decision prefix.

#include <unordered_map>

#include "gbim/diffusion.hpp"
#include "gbim/error.hpp"

namespace gbim {

namespace {

constexpr double kThresholdSlack = 1e-12;

bool is_random(double p) { return p > 0.0 && p < 1.0; }

class WorldWalker {
 public:
  WorldWalker(const Dataset& data, const DiffusionConfig& config)
      : data_(data),
        config_(config),
        n_(data.num_users()),
        m_(data.num_items()),
        ic_events_(static_cast<std::uint64_t>(data.social.num_edges()) * m_) {}

  double expectation(const SeedSet& seeds) {
    double expected = 0.0;
    path_.clear();
    position_.clear();
    for (;;) {
      const std::size_t total = closure(seeds);
      double weight = 1.0;
      for (const auto& c : path_) weight *= c.value ? c.p_true : 1.0 - c.p_true;
      expected += weight * static_cast<double>(total);
      // Backtrack to the deepest coin still at its first branch.
      while (!path_.empty() && path_.back().value) {
        position_.erase(path_.back().event);
        path_.pop_back();
      }
      if (path_.empty()) break;
      path_.back().value = true;
    }
    return expected;
  }

 private:
  struct Choice {
    std::uint64_t event;
    double p_true;
    bool value;
  };

  bool coin(std::uint64_t event, double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    if (auto it = position_.find(event); it != position_.end()) return path_[it->second].value;
    position_.emplace(event, path_.size());
    path_.push_back({event, p, false});
    return false;
  }

  std::size_t closure(const SeedSet& seeds) {
    active_.assign(n_ * m_, 0);
    pressure_.assign(config_.model == DiffusionModel::linear_threshold ? n_ * m_ : 0, 0.0);
    std::vector<SeedPair> queue;
    std::size_t count = 0;
    auto activate = [&](UserId u, ItemId v) {
      auto& a = active_[static_cast<std::size_t>(u) * m_ + v];
      if (a) return;
      a = 1;
      ++count;
      queue.push_back({u, v});
    };
    for (const auto& p : seeds.pairs()) activate(p.user, p.item);

    for (std::size_t head = 0; head < queue.size(); ++head) {
      const auto [u, j] = queue[head];
      if (config_.beta > 0.0) {
        const auto neighbors = data_.items.neighbors(j);
        for (std::size_t pos = 0; pos < neighbors.size(); ++pos) {
          const ItemId k = neighbors[pos];
          if (active_[static_cast<std::size_t>(u) * m_ + k]) continue;
          const std::uint64_t event =
              ic_events_ + (static_cast<std::uint64_t>(u) * m_ + j) * m_ + k;
          if (coin(event, config_.beta * data_.prefs(u, k))) activate(u, k);
        }
      }
      const auto out = data_.social.out_neighbors(u);
      const std::size_t first_edge =
          static_cast<std::size_t>(out.data() - data_.social.out_neighbors(0).data());
      for (std::size_t pos = 0; pos < out.size(); ++pos) {
        const UserId i = out[pos].node;
        const std::size_t cell = static_cast<std::size_t>(i) * m_ + j;
        if (active_[cell]) continue;
        if (config_.model == DiffusionModel::independent_cascade) {
          const std::uint64_t event = static_cast<std::uint64_t>(first_edge + pos) * m_ + j;
          if (coin(event, out[pos].weight * data_.prefs(i, j))) activate(i, j);
        } else {
          pressure_[cell] += out[pos].weight;
          if (pressure_[cell] + kThresholdSlack >= 1.0 - data_.prefs(i, j)) activate(i, j);
        }
      }
    }
    return count;
  }

  const Dataset& data_;
  const DiffusionConfig& config_;
  std::size_t n_;
  std::size_t m_;
  std::uint64_t ic_events_;
  std::vector<std::uint8_t> active_;
  std::vector<double> pressure_;
  std::vector<Choice> path_;
  std::unordered_map<std::uint64_t, std::size_t> position_;
};

}  // namespace

std::size_t count_random_events(const Dataset& data, const DiffusionConfig& config) {
  std::size_t events = 0;
  const std::size_t m = data.num_items();
  if (config.model == DiffusionModel::independent_cascade) {
    for (const auto& e : data.social.edges()) {
      for (std::size_t j = 0; j < m; ++j) {
        if (is_random(e.weight * data.prefs(e.dst, static_cast<ItemId>(j)))) ++events;
      }
    }
  }
  if (config.beta > 0.0) {
    for (std::size_t u = 0; u < data.num_users(); ++u) {
      for (std::size_t j = 0; j < m; ++j) {
        for (ItemId k : data.items.neighbors(static_cast<ItemId>(j))) {
          if (is_random(config.beta * data.prefs(static_cast<UserId>(u), k))) ++events;
        }
      }
    }
  }
  return events;
}

double exact_influence(const SeedSet& seeds, const Dataset& data, const DiffusionConfig& config) {
  config.validate();
  data.validate();
  seeds.check_bounds(data.num_users(), data.num_items());
  const std::size_t events = count_random_events(data, config);
  if (events > kExactOracleEventLimit) {
    throw OracleInfeasible("exact oracle infeasible: " + std::to_string(events) +
                           " random events exceed the limit of " +
                           std::to_string(kExactOracleEventLimit));
  }
  WorldWalker walker(data, config);
  return walker.expectation(seeds);
}

}  // namespace gbim

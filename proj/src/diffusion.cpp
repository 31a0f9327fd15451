#include "gbim/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gbim/error.hpp"
#include "gbim/parallel.hpp"

namespace gbim {

namespace {

// Sums of reciprocal in-degree weights may land one ulp under 1.
constexpr double kThresholdSlack = 1e-12;

}  // namespace

SeedSet::SeedSet(std::vector<SeedPair> pairs, std::optional<std::size_t> budget)
    : pairs_(std::move(pairs)), budget_(budget) {
  std::sort(pairs_.begin(), pairs_.end());
  if (budget_ && pairs_.size() > *budget_) {
    throw ValidationError("seed set has " + std::to_string(pairs_.size()) +
                          " pairs but the budget is " + std::to_string(*budget_));
  }
  std::vector<UserId> users;
  std::vector<ItemId> items;
  for (const auto& p : pairs_) {
    users.push_back(p.user);
    items.push_back(p.item);
  }
  std::sort(users.begin(), users.end());
  std::sort(items.begin(), items.end());
  if (std::adjacent_find(users.begin(), users.end()) != users.end()) {
    throw ValidationError("seed set selects a user more than once");
  }
  if (std::adjacent_find(items.begin(), items.end()) != items.end()) {
    throw ValidationError("seed set selects an item more than once");
  }
}

bool SeedSet::uses_user(UserId u) const {
  return std::any_of(pairs_.begin(), pairs_.end(), [u](const SeedPair& p) { return p.user == u; });
}

bool SeedSet::uses_item(ItemId v) const {
  return std::any_of(pairs_.begin(), pairs_.end(), [v](const SeedPair& p) { return p.item == v; });
}

SeedSet SeedSet::with(SeedPair pair) const {
  auto pairs = pairs_;
  pairs.push_back(pair);
  return SeedSet(std::move(pairs));
}

void SeedSet::check_bounds(std::size_t n, std::size_t m) const {
  for (const auto& p : pairs_) {
    if (p.user >= n || p.item >= m) {
      throw ValidationError("seed pair (" + std::to_string(p.user) + ", " + std::to_string(p.item) +
                            ") is outside a " + std::to_string(n) + " x " + std::to_string(m) +
                            " multiplex");
    }
  }
}

std::string SeedSet::to_string() const {
  std::string out;
  for (const auto& p : pairs_) {
    if (!out.empty()) out += ' ';
    out += std::to_string(p.user) + ':' + std::to_string(p.item);
  }
  return out;
}

SeedSet SeedSet::parse(const std::string& text) {
  std::istringstream in(text);
  std::string token;
  std::vector<SeedPair> pairs;
  while (in >> token) {
    const auto colon = token.find(':');
    if (colon == std::string::npos) throw ValidationError("bad seed pair '" + token + "'");
    try {
      pairs.push_back({static_cast<UserId>(std::stoul(token.substr(0, colon))),
                       static_cast<ItemId>(std::stoul(token.substr(colon + 1)))});
    } catch (const std::logic_error&) {
      throw ValidationError("bad seed pair '" + token + "'");
    }
  }
  return SeedSet(std::move(pairs));
}

std::size_t SeedSetHash::operator()(const SeedSet& s) const noexcept {
  std::uint64_t h = 0x84222325cbf29ce4ULL;
  for (const auto& p : s.pairs()) {
    h = splitmix64(h ^ ((static_cast<std::uint64_t>(p.user) << 32) | p.item));
  }
  return static_cast<std::size_t>(h);
}

std::string to_string(DiffusionModel model) {
  return model == DiffusionModel::linear_threshold ? "lt" : "ic";
}

DiffusionModel parse_diffusion_model(const std::string& name) {
  if (name == "lt" || name == "LT" || name == "multi-lt") return DiffusionModel::linear_threshold;
  if (name == "ic" || name == "IC" || name == "multi-ic") return DiffusionModel::independent_cascade;
  throw ValidationError("unknown diffusion model '" + name + "' (expected lt or ic)");
}

void DiffusionConfig::validate() const {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ValidationError("beta must lie in [0, 1]");
  if (simulations < 1) throw ValidationError("at least one simulation is required");
}

MultiplexState::MultiplexState(std::size_t n, std::size_t m) : m_(m), active_(n * m, 0) {}

bool MultiplexState::activate(UserId u, ItemId v) {
  auto& cell = active_[index(u, v)];
  if (cell) return false;
  cell = 1;
  touched_.push_back({u, v});
  return true;
}

void MultiplexState::reset() {
  for (const auto& p : touched_) active_[index(p.user, p.item)] = 0;
  touched_.clear();
}

namespace {

class Cascade {
 public:
  Cascade(const Dataset& data, const DiffusionConfig& config, Rng& rng, MultiplexState& state)
      : data_(data), config_(config), rng_(rng), state_(state) {}

  DiffusionOutcome run(const SeedSet& seeds) {
    state_.reset();
    frontier_.clear();
    for (const auto& p : seeds.pairs()) {
      if (state_.activate(p.user, p.item)) frontier_.push_back(p);
    }
    while (!frontier_.empty()) {
      if (config_.beta > 0.0) associate();
      if (config_.model == DiffusionModel::independent_cascade) {
        spread_ic();
      } else {
        spread_lt();
      }
      frontier_.swap(next_);
    }
    DiffusionOutcome out;
    out.sigma.assign(data_.num_items(), 0);
    for (const auto& p : state_.activation_order()) ++out.sigma[p.item];
    out.total = state_.num_active();
    clear_pressure();
    return out;
  }

 private:
  // Newly associated pairs join the frontier, so the loop also follows the
  // chain of associations for the same user along the item graph.
  void associate() {
    for (std::size_t idx = 0; idx < frontier_.size(); ++idx) {
      const auto [u, j] = frontier_[idx];
      for (ItemId k : data_.items.neighbors(j)) {
        if (state_.active(u, k)) continue;
        if (bernoulli(rng_, config_.beta * data_.prefs(u, k)) && state_.activate(u, k)) {
          frontier_.push_back({u, k});
        }
      }
    }
  }

  void spread_ic() {
    next_.clear();
    for (const auto& [u, j] : frontier_) {
      for (const auto& nb : data_.social.out_neighbors(u)) {
        if (state_.active(nb.node, j)) continue;
        if (bernoulli(rng_, nb.weight * data_.prefs(nb.node, j)) && state_.activate(nb.node, j)) {
          next_.push_back({nb.node, j});
        }
      }
    }
  }

  // Synchronous round: pressure comes only from users activated in earlier
  // rounds, and users crossing 1 - p activate together at the end.
  void spread_lt() {
    next_.clear();
    candidates_.clear();
    for (const auto& [u, j] : frontier_) {
      for (const auto& nb : data_.social.out_neighbors(u)) {
        if (state_.active(nb.node, j)) continue;
        add_pressure(nb.node, j, nb.weight);
        candidates_.push_back({nb.node, j});
      }
    }
    for (const auto& [i, k] : candidates_) {
      if (state_.active(i, k)) continue;
      if (pressure_[slot(i, k)] + kThresholdSlack >= 1.0 - data_.prefs(i, k)) {
        state_.activate(i, k);
        next_.push_back({i, k});
      }
    }
  }

  std::size_t slot(UserId u, ItemId v) const {
    return static_cast<std::size_t>(u) * data_.num_items() + v;
  }

  void add_pressure(UserId u, ItemId v, double w) {
    if (pressure_.empty()) pressure_.assign(data_.num_users() * data_.num_items(), 0.0);
    auto& cell = pressure_[slot(u, v)];
    if (cell == 0.0) pressured_.push_back(slot(u, v));
    cell += w;
  }

  void clear_pressure() {
    for (auto s : pressured_) pressure_[s] = 0.0;
    pressured_.clear();
  }

  const Dataset& data_;
  const DiffusionConfig& config_;
  Rng& rng_;
  MultiplexState& state_;
  std::vector<SeedPair> frontier_;
  std::vector<SeedPair> next_;
  std::vector<SeedPair> candidates_;
  std::vector<double> pressure_;
  std::vector<std::size_t> pressured_;
};

void check_inputs(const SeedSet& seeds, const Dataset& data, const DiffusionConfig& config) {
  config.validate();
  data.validate();
  seeds.check_bounds(data.num_users(), data.num_items());
}

}  // namespace

DiffusionOutcome simulate_once(const SeedSet& seeds, const Dataset& data,
                               const DiffusionConfig& config, Rng& rng, MultiplexState& state) {
  check_inputs(seeds, data, config);
  return Cascade(data, config, rng, state).run(seeds);
}

DiffusionOutcome simulate_once(const SeedSet& seeds, const Dataset& data,
                               const DiffusionConfig& config, Rng& rng) {
  MultiplexState state(data.num_users(), data.num_items());
  return simulate_once(seeds, data, config, rng, state);
}

InfluenceEstimate estimate_influence_stats(const SeedSet& seeds, const Dataset& data,
                                           const DiffusionConfig& config) {
  check_inputs(seeds, data, config);
  const std::size_t runs = config.simulations;
  const std::size_t workers = std::max<std::size_t>(1, std::min(config.threads, runs));
  std::vector<std::size_t> totals(runs, 0);
  std::vector<std::optional<MultiplexState>> states(workers);
  parallel_for(runs, workers, [&](std::size_t r, std::size_t w) {
    if (!states[w]) states[w].emplace(data.num_users(), data.num_items());
    Rng rng = make_rng(config.seed, r);
    totals[r] = Cascade(data, config, rng, *states[w]).run(seeds).total;
  });
  // Integer sums are exact, so the reduction order does not matter.
  std::uint64_t sum = 0;
  std::uint64_t sum_sq = 0;
  for (auto t : totals) {
    sum += t;
    sum_sq += static_cast<std::uint64_t>(t) * t;
  }
  InfluenceEstimate est;
  est.runs = runs;
  est.mean = static_cast<double>(sum) / static_cast<double>(runs);
  if (runs > 1) {
    const double r = static_cast<double>(runs);
    const double var = (static_cast<double>(sum_sq) - r * est.mean * est.mean) / (r - 1.0);
    est.std_error = std::sqrt(std::max(0.0, var) / r);
  }
  return est;
}

double estimate_influence(const SeedSet& seeds, const Dataset& data, const DiffusionConfig& config) {
  return estimate_influence_stats(seeds, data, config).mean;
}

}  // namespace gbim

#pragma once

// Multiplex diffusion: one propagation layer per item over the shared social
// graph, Multi-LT or Multi-IC dynamics inside each layer, and the association
// mechanism that lets an activated user self-activate on adjacent item layers.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gbim/netdata.hpp"
#include "gbim/rng.hpp"

namespace gbim {

struct SeedPair {
  UserId user;
  ItemId item;

  friend auto operator<=>(const SeedPair&, const SeedPair&) = default;
};

// A set of (user, item) pairs where every user and every item appears at most
// once. Pairs are kept sorted, so equality and ordering are canonical.
class SeedSet {
 public:
  SeedSet() = default;
  explicit SeedSet(std::vector<SeedPair> pairs, std::optional<std::size_t> budget = std::nullopt);

  const std::vector<SeedPair>& pairs() const noexcept { return pairs_; }
  std::size_t size() const noexcept { return pairs_.size(); }
  bool empty() const noexcept { return pairs_.empty(); }
  std::optional<std::size_t> budget() const noexcept { return budget_; }

  bool uses_user(UserId u) const;
  bool uses_item(ItemId v) const;

  // Copy with one more pair; throws ValidationError when the pair reuses a
  // user or item. The budget is dropped.
  SeedSet with(SeedPair pair) const;

  // Throws ValidationError when an id is outside [0, n) x [0, m).
  void check_bounds(std::size_t n, std::size_t m) const;

  std::string to_string() const;  // "(u:v) (u:v) ..."
  static SeedSet parse(const std::string& text);

  friend bool operator==(const SeedSet& a, const SeedSet& b) { return a.pairs_ == b.pairs_; }
  friend bool operator<(const SeedSet& a, const SeedSet& b) { return a.pairs_ < b.pairs_; }

 private:
  std::vector<SeedPair> pairs_;
  std::optional<std::size_t> budget_;
};

struct SeedSetHash {
  std::size_t operator()(const SeedSet& s) const noexcept;
};

enum class DiffusionModel { linear_threshold, independent_cascade };

std::string to_string(DiffusionModel model);
DiffusionModel parse_diffusion_model(const std::string& name);  // "lt" / "ic"

struct DiffusionConfig {
  DiffusionModel model = DiffusionModel::independent_cascade;
  double beta = 0.3;
  std::size_t simulations = 100;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void validate() const;
};

struct DiffusionOutcome {
  std::vector<std::size_t> sigma;  // activated users per item layer
  std::size_t total = 0;
};

// Activation status over the n x m multiplex. Reset cost is proportional to the
// number of activations, not to n * m.
class MultiplexState {
 public:
  MultiplexState(std::size_t n, std::size_t m);

  bool active(UserId u, ItemId v) const { return active_[index(u, v)] != 0; }
  // Returns false if already active.
  bool activate(UserId u, ItemId v);
  void reset();

  std::size_t num_active() const noexcept { return touched_.size(); }
  const std::vector<SeedPair>& activation_order() const noexcept { return touched_; }

 private:
  std::size_t index(UserId u, ItemId v) const { return static_cast<std::size_t>(u) * m_ + v; }

  std::size_t m_;
  std::vector<std::uint8_t> active_;
  std::vector<SeedPair> touched_;
};

// One stochastic run of the multiplex model. `state` is scratch space of
// matching size; it is reset before use.
DiffusionOutcome simulate_once(const SeedSet& seeds, const Dataset& data,
                               const DiffusionConfig& config, Rng& rng, MultiplexState& state);

DiffusionOutcome simulate_once(const SeedSet& seeds, const Dataset& data,
                               const DiffusionConfig& config, Rng& rng);

struct InfluenceEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t runs = 0;
};

// Mean of config.simulations independent runs. Run r uses stream r of
// config.seed, so the value is bit-identical for any thread count.
InfluenceEstimate estimate_influence_stats(const SeedSet& seeds, const Dataset& data,
                                           const DiffusionConfig& config);

double estimate_influence(const SeedSet& seeds, const Dataset& data, const DiffusionConfig& config);

// Number of independent Bernoulli events (probability strictly inside (0, 1))
// the exact oracle would have to enumerate for this instance.
std::size_t count_random_events(const Dataset& data, const DiffusionConfig& config);

inline constexpr std::size_t kExactOracleEventLimit = 25;

// Exact expected multiplex influence by enumerating every outcome of the
// random events. Throws OracleInfeasible above kExactOracleEventLimit events.
double exact_influence(const SeedSet& seeds, const Dataset& data, const DiffusionConfig& config);

}  // namespace gbim

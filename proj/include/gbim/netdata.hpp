#pragma once

// Network and preference data: the directed social graph, the undirected item
// association graph and the dense user-item preference matrix, together with
// text-file ingestion and the dataset builders.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace gbim {

using UserId = std::uint32_t;
using ItemId = std::uint32_t;

struct WeightedEdge {
  UserId src;
  UserId dst;
  double weight;

  friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

struct Neighbor {
  UserId node;
  double weight;
};

enum class WeightMode { explicit_weights, reciprocal_in_degree };

class SocialGraph {
 public:
  SocialGraph() = default;

  // Validates: ids < n, no self-loops, no duplicate directed edges, weights in (0, 1].
  SocialGraph(std::size_t n, std::vector<WeightedEdge> edges);

  // Every incoming weight of node j is set to 1 / in_degree(j).
  static SocialGraph with_reciprocal_weights(std::size_t n,
                                             std::vector<std::pair<UserId, UserId>> arcs);

  std::size_t num_users() const noexcept { return n_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }

  // Sorted by (src, dst).
  const std::vector<WeightedEdge>& edges() const noexcept { return edges_; }

  std::span<const Neighbor> out_neighbors(UserId u) const {
    return {out_.data() + out_offsets_[u], out_offsets_[u + 1] - out_offsets_[u]};
  }
  std::span<const Neighbor> in_neighbors(UserId u) const {
    return {in_.data() + in_offsets_[u], in_offsets_[u + 1] - in_offsets_[u]};
  }
  std::size_t out_degree(UserId u) const { return out_offsets_[u + 1] - out_offsets_[u]; }
  std::size_t in_degree(UserId u) const { return in_offsets_[u + 1] - in_offsets_[u]; }

 private:
  std::size_t n_ = 0;
  std::vector<WeightedEdge> edges_;
  std::vector<std::size_t> out_offsets_{0};
  std::vector<Neighbor> out_;
  std::vector<std::size_t> in_offsets_{0};
  std::vector<Neighbor> in_;
};

class ItemGraph {
 public:
  ItemGraph() = default;

  // Undirected; each edge may be given in either orientation but only once.
  ItemGraph(std::size_t m, std::vector<std::pair<ItemId, ItemId>> edges);

  std::size_t num_items() const noexcept { return m_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }

  // Normalized to (a < b), sorted.
  const std::vector<std::pair<ItemId, ItemId>>& edges() const noexcept { return edges_; }

  std::span<const ItemId> neighbors(ItemId v) const {
    return {adj_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }
  std::size_t degree(ItemId v) const { return offsets_[v + 1] - offsets_[v]; }
  bool adjacent(ItemId a, ItemId b) const;

 private:
  std::size_t m_ = 0;
  std::vector<std::pair<ItemId, ItemId>> edges_;
  std::vector<std::size_t> offsets_{0};
  std::vector<ItemId> adj_;
};

// Dense row-major n x m matrix with entries in [0, 1].
class PreferenceMatrix {
 public:
  PreferenceMatrix() = default;
  PreferenceMatrix(std::size_t n, std::size_t m, std::vector<double> values);
  PreferenceMatrix(std::size_t n, std::size_t m, double fill);

  std::size_t num_users() const noexcept { return n_; }
  std::size_t num_items() const noexcept { return m_; }

  double operator()(UserId u, ItemId v) const noexcept { return values_[u * m_ + v]; }
  std::span<const double> row(UserId u) const { return {values_.data() + u * m_, m_}; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::vector<double> values_;
};

struct Interaction {
  UserId user;
  ItemId item;
  double value;
};

struct InteractionTable {
  std::vector<Interaction> rows;
};

// The complete input of the multiplex diffusion model.
struct Dataset {
  SocialGraph social;
  ItemGraph items;
  PreferenceMatrix prefs;

  std::size_t num_users() const noexcept { return social.num_users(); }
  std::size_t num_items() const noexcept { return items.num_items(); }

  // Dimension agreement between the three parts.
  void validate() const;
};

// Lines are "src dst [weight]" separated by whitespace or tabs; '#' starts a comment.
// Without `n` the user count is max id + 1.
SocialGraph load_social_graph(const std::filesystem::path& path, WeightMode mode,
                              std::optional<std::size_t> n = std::nullopt);

// Lines are "user item value".
InteractionTable load_interactions(const std::filesystem::path& path);

// Lines are "a b" (undirected).
ItemGraph load_item_graph(const std::filesystem::path& path, std::size_t m);

// Raw-value cosine similarity between item interaction vectors, m x m row-major.
// Repeated (user, item) rows are summed.
std::vector<double> item_cosine_similarity(const InteractionTable& table, std::size_t m);

ItemGraph build_item_graph(const InteractionTable& table, std::size_t m, double threshold = 0.5);

struct PreferenceOptions {
  double cold_start_fill = 0.1;
};

PreferenceMatrix build_preference_matrix(const InteractionTable& table, std::size_t n,
                                         std::size_t m, const PreferenceOptions& options = {});

struct SyntheticParams {
  std::size_t users = 0;
  std::size_t user_edges = 0;
  std::size_t items = 0;
  std::size_t item_edges = 0;
  std::uint64_t seed = 0;
};

Dataset generate_synthetic(const SyntheticParams& params);

}  // namespace gbim

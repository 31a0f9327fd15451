#include "gbim/netdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_set>

#include "gbim/error.hpp"
#include "gbim/rng.hpp"

namespace gbim {

namespace {

std::uint64_t arc_key(std::uint64_t a, std::uint64_t b) { return (a << 32) | b; }

template <typename Adj>
void build_csr(std::size_t n, const std::vector<WeightedEdge>& edges, bool outgoing,
               std::vector<std::size_t>& offsets, std::vector<Adj>& adj) {
  offsets.assign(n + 1, 0);
  for (const auto& e : edges) ++offsets[(outgoing ? e.src : e.dst) + 1];
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  adj.resize(edges.size());
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (const auto& e : edges) {
    const UserId from = outgoing ? e.src : e.dst;
    const UserId to = outgoing ? e.dst : e.src;
    adj[cursor[from]++] = Adj{to, e.weight};
  }
}

// Splits a line on whitespace after stripping a '#' comment.
std::vector<std::string_view> tokenize(std::string_view line) {
  if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r' ||
                               line[i] == ',')) {
      ++i;
    }
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r' &&
           line[j] != ',') {
      ++j;
    }
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view token, const std::string& source, std::size_t line) {
  T value{};
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw ParseError(source, line, "cannot parse '" + std::string(token) + "'");
  }
  return value;
}

template <typename Fn>
void for_each_record(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  std::string line;
  std::size_t lineno = 0;
  const std::string source = path.string();
  while (std::getline(in, line)) {
    ++lineno;
    auto tokens = tokenize(line);
    if (tokens.empty()) continue;
    fn(tokens, source, lineno);
  }
}

struct AggregatedInteractions {
  // Per item: (user, summed value), sorted by user.
  std::vector<std::vector<std::pair<UserId, double>>> by_item;
  // Per user: (item, summed value), sorted by item.
  std::vector<std::vector<std::pair<ItemId, double>>> by_user;
};

AggregatedInteractions aggregate(const InteractionTable& table, std::size_t n, std::size_t m) {
  std::vector<Interaction> rows = table.rows;
  for (const auto& r : rows) {
    if (r.user >= n) throw ValidationError("interaction user id out of range: " + std::to_string(r.user));
    if (r.item >= m) throw ValidationError("interaction item id out of range: " + std::to_string(r.item));
    if (!(r.value >= 0.0) || !std::isfinite(r.value)) {
      throw ValidationError("interaction values must be finite and non-negative");
    }
  }
  std::sort(rows.begin(), rows.end(), [](const Interaction& a, const Interaction& b) {
    return std::tie(a.user, a.item) < std::tie(b.user, b.item);
  });
  AggregatedInteractions agg;
  agg.by_item.resize(m);
  agg.by_user.resize(n);
  for (std::size_t i = 0; i < rows.size();) {
    double sum = 0.0;
    std::size_t j = i;
    while (j < rows.size() && rows[j].user == rows[i].user && rows[j].item == rows[i].item) {
      sum += rows[j].value;
      ++j;
    }
    agg.by_user[rows[i].user].emplace_back(rows[i].item, sum);
    agg.by_item[rows[i].item].emplace_back(rows[i].user, sum);
    i = j;
  }
  return agg;
}

std::size_t max_item_id_plus_one(const InteractionTable& table) {
  std::size_t hi = 0;
  for (const auto& r : table.rows) hi = std::max<std::size_t>(hi, r.item + 1);
  return hi;
}

std::vector<double> cosine_from(const AggregatedInteractions& agg, std::size_t m) {
  std::vector<double> dot(m * m, 0.0);
  for (const auto& items : agg.by_user) {
    for (const auto& [a, va] : items) {
      for (const auto& [b, vb] : items) dot[a * m + b] += va * vb;
    }
  }
  std::vector<double> sim(m * m, 0.0);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      const double na = dot[a * m + a];
      const double nb = dot[b * m + b];
      if (na <= 0.0 || nb <= 0.0) continue;
      sim[a * m + b] = std::clamp(dot[a * m + b] / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
    }
  }
  return sim;
}

}  // namespace

SocialGraph::SocialGraph(std::size_t n, std::vector<WeightedEdge> edges)
    : n_(n), edges_(std::move(edges)) {
  if (n_ > UINT32_MAX) throw ValidationError("too many users");
  for (const auto& e : edges_) {
    if (e.src >= n_ || e.dst >= n_) {
      throw ValidationError("edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) +
                            ") references a user outside [0, " + std::to_string(n_) + ")");
    }
    if (e.src == e.dst) throw ValidationError("self-loop on user " + std::to_string(e.src));
    if (!std::isfinite(e.weight) || e.weight <= 0.0 || e.weight > 1.0) {
      throw ValidationError("edge weight must lie in (0, 1]");
    }
  }
  std::sort(edges_.begin(), edges_.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
    return std::tie(a.src, a.dst) < std::tie(b.src, b.dst);
  });
  for (std::size_t i = 1; i < edges_.size(); ++i) {
    if (edges_[i].src == edges_[i - 1].src && edges_[i].dst == edges_[i - 1].dst) {
      throw ValidationError("duplicate edge (" + std::to_string(edges_[i].src) + ", " +
                            std::to_string(edges_[i].dst) + ")");
    }
  }
  build_csr(n_, edges_, true, out_offsets_, out_);
  build_csr(n_, edges_, false, in_offsets_, in_);
}

SocialGraph SocialGraph::with_reciprocal_weights(std::size_t n,
                                                 std::vector<std::pair<UserId, UserId>> arcs) {
  std::vector<std::size_t> indeg(n, 0);
  for (const auto& [s, d] : arcs) {
    if (d >= n || s >= n) {
      throw ValidationError("edge (" + std::to_string(s) + ", " + std::to_string(d) +
                            ") references a user outside [0, " + std::to_string(n) + ")");
    }
    ++indeg[d];
  }
  std::vector<WeightedEdge> edges;
  edges.reserve(arcs.size());
  for (const auto& [s, d] : arcs) {
    edges.push_back({s, d, 1.0 / static_cast<double>(indeg[d])});
  }
  return SocialGraph(n, std::move(edges));
}

ItemGraph::ItemGraph(std::size_t m, std::vector<std::pair<ItemId, ItemId>> edges)
    : m_(m), edges_(std::move(edges)) {
  for (auto& [a, b] : edges_) {
    if (a >= m_ || b >= m_) throw ValidationError("item edge references an item out of range");
    if (a == b) throw ValidationError("self-loop on item " + std::to_string(a));
    if (a > b) std::swap(a, b);
  }
  std::sort(edges_.begin(), edges_.end());
  if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end()) {
    throw ValidationError("duplicate item edge");
  }
  offsets_.assign(m_ + 1, 0);
  for (const auto& [a, b] : edges_) {
    ++offsets_[a + 1];
    ++offsets_[b + 1];
  }
  for (std::size_t i = 0; i < m_; ++i) offsets_[i + 1] += offsets_[i];
  adj_.resize(2 * edges_.size());
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (const auto& [a, b] : edges_) {
    adj_[cursor[a]++] = b;
    adj_[cursor[b]++] = a;
  }
  for (std::size_t v = 0; v < m_; ++v) {
    std::sort(adj_.begin() + static_cast<std::ptrdiff_t>(offsets_[v]),
              adj_.begin() + static_cast<std::ptrdiff_t>(offsets_[v + 1]));
  }
}

bool ItemGraph::adjacent(ItemId a, ItemId b) const {
  auto nb = neighbors(a);
  return std::binary_search(nb.begin(), nb.end(), b);
}

PreferenceMatrix::PreferenceMatrix(std::size_t n, std::size_t m, std::vector<double> values)
    : n_(n), m_(m), values_(std::move(values)) {
  if (values_.size() != n_ * m_) throw ValidationError("preference matrix has wrong size");
  for (double p : values_) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw ValidationError("preference entries must lie in [0, 1]");
    }
  }
}

PreferenceMatrix::PreferenceMatrix(std::size_t n, std::size_t m, double fill)
    : PreferenceMatrix(n, m, std::vector<double>(n * m, fill)) {}

void Dataset::validate() const {
  if (prefs.num_users() != social.num_users()) {
    throw ValidationError("preference matrix has " + std::to_string(prefs.num_users()) +
                          " rows but the social graph has " + std::to_string(social.num_users()) +
                          " users");
  }
  if (prefs.num_items() != items.num_items()) {
    throw ValidationError("preference matrix has " + std::to_string(prefs.num_items()) +
                          " columns but the item graph has " + std::to_string(items.num_items()) +
                          " items");
  }
}

SocialGraph load_social_graph(const std::filesystem::path& path, WeightMode mode,
                              std::optional<std::size_t> n) {
  std::vector<WeightedEdge> edges;
  std::size_t max_id = 0;
  for_each_record(path, [&](const std::vector<std::string_view>& tok, const std::string& src,
                            std::size_t line) {
    if (tok.size() < 2 || tok.size() > 3) {
      throw ParseError(src, line, "expected 'src dst [weight]'");
    }
    const auto s = parse_number<UserId>(tok[0], src, line);
    const auto d = parse_number<UserId>(tok[1], src, line);
    double w = 1.0;
    if (tok.size() == 3) w = parse_number<double>(tok[2], src, line);
    if (s == d) throw ParseError(src, line, "self-loop on user " + std::to_string(s));
    if (mode == WeightMode::explicit_weights && (!(w > 0.0) || w > 1.0 || !std::isfinite(w))) {
      throw ParseError(src, line, "edge weight must lie in (0, 1]");
    }
    max_id = std::max<std::size_t>(max_id, std::max(s, d));
    edges.push_back({s, d, w});
  });
  const std::size_t users = n.value_or(edges.empty() ? 0 : max_id + 1);
  if (mode == WeightMode::reciprocal_in_degree) {
    std::vector<std::pair<UserId, UserId>> arcs;
    arcs.reserve(edges.size());
    for (const auto& e : edges) arcs.emplace_back(e.src, e.dst);
    return SocialGraph::with_reciprocal_weights(users, std::move(arcs));
  }
  return SocialGraph(users, std::move(edges));
}

InteractionTable load_interactions(const std::filesystem::path& path) {
  InteractionTable table;
  for_each_record(path, [&](const std::vector<std::string_view>& tok, const std::string& src,
                            std::size_t line) {
    if (tok.size() != 3) throw ParseError(src, line, "expected 'user item value'");
    Interaction r{parse_number<UserId>(tok[0], src, line), parse_number<ItemId>(tok[1], src, line),
                  parse_number<double>(tok[2], src, line)};
    if (!(r.value >= 0.0) || !std::isfinite(r.value)) {
      throw ParseError(src, line, "interaction value must be finite and non-negative");
    }
    table.rows.push_back(r);
  });
  return table;
}

ItemGraph load_item_graph(const std::filesystem::path& path, std::size_t m) {
  std::vector<std::pair<ItemId, ItemId>> edges;
  for_each_record(path, [&](const std::vector<std::string_view>& tok, const std::string& src,
                            std::size_t line) {
    if (tok.size() != 2) throw ParseError(src, line, "expected 'a b'");
    edges.emplace_back(parse_number<ItemId>(tok[0], src, line),
                       parse_number<ItemId>(tok[1], src, line));
  });
  return ItemGraph(m, std::move(edges));
}

std::vector<double> item_cosine_similarity(const InteractionTable& table, std::size_t m) {
  if (max_item_id_plus_one(table) > m) {
    throw ValidationError("item count " + std::to_string(m) + " is smaller than the largest item id");
  }
  std::size_t n = 0;
  for (const auto& r : table.rows) n = std::max<std::size_t>(n, r.user + 1);
  return cosine_from(aggregate(table, n, m), m);
}

ItemGraph build_item_graph(const InteractionTable& table, std::size_t m, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ValidationError("similarity threshold must lie in [0, 1]");
  }
  const auto sim = item_cosine_similarity(table, m);
  std::vector<std::pair<ItemId, ItemId>> edges;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      if (sim[a * m + b] > threshold) {
        edges.emplace_back(static_cast<ItemId>(a), static_cast<ItemId>(b));
      }
    }
  }
  return ItemGraph(m, std::move(edges));
}

PreferenceMatrix build_preference_matrix(const InteractionTable& table, std::size_t n,
                                         std::size_t m, const PreferenceOptions& options) {
  if (!(options.cold_start_fill >= 0.0 && options.cold_start_fill <= 1.0)) {
    throw ValidationError("cold-start fill must lie in [0, 1]");
  }
  const auto agg = aggregate(table, n, m);
  const auto sim = cosine_from(agg, m);
  std::vector<double> values(n * m, options.cold_start_fill);
  std::vector<double> score(m);
  for (std::size_t u = 0; u < n; ++u) {
    const auto& rated = agg.by_user[u];
    if (rated.empty()) continue;
    for (std::size_t j = 0; j < m; ++j) {
      double num = 0.0;
      double den = 0.0;
      for (const auto& [l, r] : rated) {
        const double s = sim[j * m + l];
        num += s * r;
        den += s;
      }
      score[j] = den > 0.0 ? num / den : 0.0;
    }
    const auto [lo_it, hi_it] = std::minmax_element(score.begin(), score.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    double* row = values.data() + u * m;
    if (hi > lo) {
      for (std::size_t j = 0; j < m; ++j) row[j] = (score[j] - lo) / (hi - lo);
    } else if (hi > 0.0) {
      std::fill(row, row + m, 1.0);
    }
  }
  return PreferenceMatrix(n, m, std::move(values));
}

Dataset generate_synthetic(const SyntheticParams& params) {
  const std::size_t n = params.users;
  const std::size_t m = params.items;
  if (n > UINT32_MAX || m > UINT32_MAX) throw ValidationError("synthetic sizes too large");
  const std::uint64_t max_arcs = static_cast<std::uint64_t>(n) * (n > 0 ? n - 1 : 0);
  const std::uint64_t max_item_edges = static_cast<std::uint64_t>(m) * (m > 0 ? m - 1 : 0) / 2;
  if (params.user_edges > max_arcs) {
    throw ValidationError("requested " + std::to_string(params.user_edges) +
                          " user edges but at most " + std::to_string(max_arcs) + " exist");
  }
  if (params.item_edges > max_item_edges) {
    throw ValidationError("requested " + std::to_string(params.item_edges) +
                          " item edges but at most " + std::to_string(max_item_edges) + " exist");
  }

  // G(n, M): M distinct pairs drawn uniformly. Dense requests pick the complement instead.
  auto sample_pairs = [](std::uint64_t total, std::uint64_t want, Rng& rng, auto&& draw,
                         auto&& enumerate) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
    const bool complement = want > total / 2;
    const std::uint64_t draws = complement ? total - want : want;
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(draws * 2);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> order;
    while (chosen.size() < draws) {
      auto p = draw(rng);
      if (chosen.insert(arc_key(p.first, p.second)).second) order.push_back(p);
    }
    if (complement) {
      enumerate([&](std::uint32_t a, std::uint32_t b) {
        if (!chosen.count(arc_key(a, b))) out.emplace_back(a, b);
      });
    } else {
      out = std::move(order);
    }
    std::sort(out.begin(), out.end());
    return out;
  };

  Rng user_rng = make_rng(params.seed, 1);
  auto arcs = sample_pairs(
      max_arcs, params.user_edges, user_rng,
      [n](Rng& rng) {
        for (;;) {
          const auto a = static_cast<std::uint32_t>(uniform_index(rng, n));
          const auto b = static_cast<std::uint32_t>(uniform_index(rng, n));
          if (a != b) return std::pair{a, b};
        }
      },
      [n](auto&& emit) {
        for (std::uint32_t a = 0; a < n; ++a)
          for (std::uint32_t b = 0; b < n; ++b)
            if (a != b) emit(a, b);
      });

  Rng item_rng = make_rng(params.seed, 2);
  auto item_edges = sample_pairs(
      max_item_edges, params.item_edges, item_rng,
      [m](Rng& rng) {
        for (;;) {
          auto a = static_cast<std::uint32_t>(uniform_index(rng, m));
          auto b = static_cast<std::uint32_t>(uniform_index(rng, m));
          if (a == b) continue;
          if (a > b) std::swap(a, b);
          return std::pair{a, b};
        }
      },
      [m](auto&& emit) {
        for (std::uint32_t a = 0; a < m; ++a)
          for (std::uint32_t b = a + 1; b < m; ++b) emit(a, b);
      });

  Rng pref_rng = make_rng(params.seed, 3);
  std::vector<double> prefs(n * m);
  for (auto& p : prefs) p = uniform01(pref_rng);

  Dataset data{SocialGraph::with_reciprocal_weights(n, std::move(arcs)),
               ItemGraph(m, std::move(item_edges)), PreferenceMatrix(n, m, std::move(prefs))};
  return data;
}

}  // namespace gbim

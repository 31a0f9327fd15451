#pragma once

// Reference seed selection: degree ranking, lazy greedy, uniform random.

#include <cstddef>
#include <functional>
#include <string>

#include "gbim/acquisition.hpp"
#include "gbim/diffusion.hpp"

namespace gbim {

struct BaselineResult {
  std::string method;
  SeedSet seeds;
  double influence = 0.0;
  std::size_t evaluations = 0;
  double wall_seconds = 0.0;
};

// Greedy over pairs by (out-degree of user) * (item-graph degree of item),
// skipping pairs that reuse a user or item; ties go to the smaller (user, item).
SeedSet max_degree(const Dataset& data, std::size_t k);

using SeedEvaluator = std::function<double(const SeedSet&)>;

struct GreedyResult {
  SeedSet seeds;
  double value = 0.0;           // objective of the final set
  std::size_t evaluations = 0;  // objective calls made
};

// CELF lazy greedy: marginal gains are kept as stale upper bounds in a max-heap
// and only the top entry is refreshed until a fresh entry reaches the top.
GreedyResult lazy_greedy(const Dataset& data, std::size_t k, const SeedEvaluator& evaluate);

// Lazy greedy with estimate_influence under `config` as the objective. Every
// call uses the same stream, so gains are compared under common random numbers.
GreedyResult lazy_greedy(const Dataset& data, const DiffusionConfig& config, std::size_t k);

// Number of objective calls plain (non-lazy) greedy would make.
std::size_t full_greedy_evaluations(std::size_t n, std::size_t m, std::size_t k);

SeedSet random_baseline(const Universe& universe, Rng& rng);

}  // namespace gbim

#pragma once

// Surrogate checkpoints in a line-oriented text format:
//
//   gbim-surrogate 1
//   config <d> <t> <node_feature_scale> <L> <w_1> ... <w_L>
//   prf_seed <seed>
//   target <offset> <scale>
//   array <name> <rows> <cols>
//   <row values>                     one line per row
//   ...
//   end
//
// Arrays appear in the order item_encoder, node_features, w_query, w_key,
// w_value, prf, then mlp.<l>.weight / mlp.<l>.bias for every layer. Reals use
// the shortest round-trip form, so a save/load cycle is exact.

#include <filesystem>
#include <iosfwd>

#include "gbim/surrogate.hpp"

namespace gbim {

void write_checkpoint(std::ostream& out, const SurrogateParams& params);
SurrogateParams read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const SurrogateParams& params);
SurrogateParams load_checkpoint(const std::filesystem::path& path);

}  // namespace gbim

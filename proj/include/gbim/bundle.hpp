#pragma once

// Dataset bundle: a line-oriented text file holding the social graph, the item
// graph and the preference matrix, so that prepared data can be shared between
// CLI invocations.
//
//   gbim-bundle 1
//   users <n>
//   items <m>
//   social_edges <count>
//   <src> <dst> <weight>            one line per edge
//   item_edges <count>
//   <a> <b>                         one line per undirected edge, a < b
//   preferences <n> <m>
//   <p_0> <p_1> ... <p_{m-1}>        one line per user
//   end
//
// Reals are written in shortest round-trip form, so read(write(d)) == d exactly.

#include <filesystem>
#include <iosfwd>

#include "gbim/netdata.hpp"

namespace gbim {

void write_bundle(std::ostream& out, const Dataset& data);
Dataset read_bundle(std::istream& in, const std::string& source = "<bundle>");

void save_bundle(const std::filesystem::path& path, const Dataset& data);
Dataset load_bundle(const std::filesystem::path& path);

}  // namespace gbim

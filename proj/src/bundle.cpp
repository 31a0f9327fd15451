#include "gbim/bundle.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "gbim/error.hpp"
#include "gbim/text_io.hpp"

namespace gbim {

namespace {

constexpr const char* kMagic = "gbim-bundle";
constexpr int kVersion = 1;

class LineReader {
 public:
  LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  std::istringstream next() {
    std::string line;
    if (!std::getline(in_, line)) throw ParseError(source_, line_ + 1, "unexpected end of bundle");
    ++line_;
    return std::istringstream(line);
  }

  // Reads "<keyword> <values...>" and checks the keyword.
  std::istringstream section(const std::string& keyword) {
    auto ls = next();
    std::string word;
    ls >> word;
    if (word != keyword) fail("expected '" + keyword + "', found '" + word + "'");
    return ls;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_, what); }

  template <typename T>
  T read(std::istringstream& ls) {
    std::string tok;
    if (!(ls >> tok)) fail("missing field");
    try {
      if constexpr (std::is_floating_point_v<T>) {
        return parse_double(tok);
      } else {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(tok, &pos);
        if (pos != tok.size()) fail("bad integer '" + tok + "'");
        return static_cast<T>(v);
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception&) {
      fail("bad number '" + tok + "'");
    }
  }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_ = 0;
};

}  // namespace

void write_bundle(std::ostream& out, const Dataset& data) {
  data.validate();
  out << kMagic << ' ' << kVersion << '\n';
  out << "users " << data.num_users() << '\n';
  out << "items " << data.num_items() << '\n';
  out << "social_edges " << data.social.num_edges() << '\n';
  for (const auto& e : data.social.edges()) {
    out << e.src << ' ' << e.dst << ' ' << format_double(e.weight) << '\n';
  }
  out << "item_edges " << data.items.num_edges() << '\n';
  for (const auto& [a, b] : data.items.edges()) out << a << ' ' << b << '\n';
  out << "preferences " << data.num_users() << ' ' << data.num_items() << '\n';
  std::string line;
  for (std::size_t u = 0; u < data.num_users(); ++u) {
    line.clear();
    for (double p : data.prefs.row(static_cast<UserId>(u))) {
      if (!line.empty()) line += ' ';
      line += format_double(p);
    }
    out << line << '\n';
  }
  out << "end\n";
}

Dataset read_bundle(std::istream& in, const std::string& source) {
  LineReader reader(in, source);
  {
    auto ls = reader.section(kMagic);
    if (reader.read<int>(ls) != kVersion) reader.fail("unsupported bundle version");
  }
  auto ls = reader.section("users");
  const auto n = reader.read<std::size_t>(ls);
  ls = reader.section("items");
  const auto m = reader.read<std::size_t>(ls);

  ls = reader.section("social_edges");
  const auto ne = reader.read<std::size_t>(ls);
  std::vector<WeightedEdge> edges;
  edges.reserve(ne);
  for (std::size_t i = 0; i < ne; ++i) {
    auto row = reader.next();
    WeightedEdge e{};
    e.src = reader.read<UserId>(row);
    e.dst = reader.read<UserId>(row);
    e.weight = reader.read<double>(row);
    edges.push_back(e);
  }

  ls = reader.section("item_edges");
  const auto ni = reader.read<std::size_t>(ls);
  std::vector<std::pair<ItemId, ItemId>> item_edges;
  item_edges.reserve(ni);
  for (std::size_t i = 0; i < ni; ++i) {
    auto row = reader.next();
    const auto a = reader.read<ItemId>(row);
    const auto b = reader.read<ItemId>(row);
    item_edges.emplace_back(a, b);
  }

  ls = reader.section("preferences");
  if (reader.read<std::size_t>(ls) != n || reader.read<std::size_t>(ls) != m) {
    reader.fail("preference shape disagrees with header");
  }
  std::vector<double> prefs;
  prefs.reserve(n * m);
  for (std::size_t u = 0; u < n; ++u) {
    auto row = reader.next();
    for (std::size_t j = 0; j < m; ++j) prefs.push_back(reader.read<double>(row));
  }
  reader.section("end");

  Dataset data{SocialGraph(n, std::move(edges)), ItemGraph(m, std::move(item_edges)),
               PreferenceMatrix(n, m, std::move(prefs))};
  return data;
}

void save_bundle(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write bundle: " + path.string());
  write_bundle(out, data);
  if (!out) throw Error("failed writing bundle: " + path.string());
}

Dataset load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open bundle: " + path.string());
  return read_bundle(in, path.string());
}

}  // namespace gbim

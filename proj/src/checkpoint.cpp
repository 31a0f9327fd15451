#include "gbim/checkpoint.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "gbim/error.hpp"
#include "gbim/text_io.hpp"

namespace gbim {

namespace {

void write_array(std::ostream& out, const std::string& name, const Eigen::MatrixXd& a) {
  out << "array " << name << ' ' << a.rows() << ' ' << a.cols() << '\n';
  std::string line;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    line.clear();
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (j) line += ' ';
      line += format_double(a(i, j));
    }
    out << line << '\n';
  }
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::istringstream line(const std::string& keyword) {
    std::string text;
    if (!std::getline(in_, text)) throw ParseError("<checkpoint>", lineno_ + 1, "unexpected end");
    ++lineno_;
    std::istringstream ls(text);
    if (!keyword.empty()) {
      std::string word;
      ls >> word;
      if (word != keyword) fail("expected '" + keyword + "'");
    }
    return ls;
  }

  double real(std::istringstream& ls) {
    std::string tok;
    if (!(ls >> tok)) fail("missing value");
    try {
      return parse_double(tok);
    } catch (const ValidationError&) {
      fail("bad number '" + tok + "'");
    }
  }

  template <typename T>
  T integer(std::istringstream& ls) {
    long long v = 0;
    if (!(ls >> v) || v < 0) fail("bad integer");
    return static_cast<T>(v);
  }

  Eigen::MatrixXd array(const std::string& name) {
    auto ls = line("array");
    std::string found;
    ls >> found;
    if (found != name) fail("expected array '" + name + "', found '" + found + "'");
    const auto rows = integer<Eigen::Index>(ls);
    const auto cols = integer<Eigen::Index>(ls);
    Eigen::MatrixXd a(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      auto row = line("");
      for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = real(row);
    }
    return a;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("<checkpoint>", lineno_, what);
  }

 private:
  std::istream& in_;
  std::size_t lineno_ = 0;
};

}  // namespace

void write_checkpoint(std::ostream& out, const SurrogateParams& p) {
  const auto& c = p.config;
  out << "gbim-surrogate 1\n";
  out << "config " << c.hidden_dim << ' ' << c.random_features << ' '
      << format_double(c.node_feature_scale) << ' ' << c.mlp_hidden.size();
  for (auto w : c.mlp_hidden) out << ' ' << w;
  out << '\n';
  out << "prf_seed " << p.prf_seed << '\n';
  out << "target " << format_double(p.target_offset) << ' ' << format_double(p.target_scale) << '\n';
  write_array(out, "item_encoder", p.item_encoder);
  write_array(out, "node_features", p.node_features);
  write_array(out, "w_query", p.w_query);
  write_array(out, "w_key", p.w_key);
  write_array(out, "w_value", p.w_value);
  write_array(out, "prf", p.prf);
  for (std::size_t l = 0; l < p.mlp.size(); ++l) {
    write_array(out, "mlp." + std::to_string(l) + ".weight", p.mlp[l].weight);
    write_array(out, "mlp." + std::to_string(l) + ".bias", p.mlp[l].bias);
  }
  out << "end\n";
}

SurrogateParams read_checkpoint(std::istream& in) {
  Reader r(in);
  {
    auto ls = r.line("gbim-surrogate");
    if (r.integer<int>(ls) != 1) r.fail("unsupported checkpoint version");
  }
  SurrogateParams p;
  {
    auto ls = r.line("config");
    p.config.hidden_dim = r.integer<std::size_t>(ls);
    p.config.random_features = r.integer<std::size_t>(ls);
    p.config.node_feature_scale = r.real(ls);
    const auto layers = r.integer<std::size_t>(ls);
    p.config.mlp_hidden.clear();
    for (std::size_t l = 0; l < layers; ++l) p.config.mlp_hidden.push_back(r.integer<std::size_t>(ls));
  }
  {
    auto ls = r.line("prf_seed");
    std::uint64_t seed = 0;
    if (!(ls >> seed)) r.fail("bad prf seed");
    p.prf_seed = seed;
  }
  {
    auto ls = r.line("target");
    p.target_offset = r.real(ls);
    p.target_scale = r.real(ls);
  }
  p.item_encoder = r.array("item_encoder");
  p.node_features = r.array("node_features");
  p.w_query = r.array("w_query");
  p.w_key = r.array("w_key");
  p.w_value = r.array("w_value");
  p.prf = r.array("prf");
  for (std::size_t l = 0; l <= p.config.mlp_hidden.size(); ++l) {
    DenseLayer layer;
    layer.weight = r.array("mlp." + std::to_string(l) + ".weight");
    layer.bias = r.array("mlp." + std::to_string(l) + ".bias");
    p.mlp.push_back(std::move(layer));
  }
  r.line("end");

  const auto d = static_cast<Eigen::Index>(p.config.hidden_dim);
  if (p.item_encoder.cols() != d || p.node_features.cols() != d || p.w_query.rows() != d ||
      p.w_key.rows() != d || p.w_value.rows() != d || p.prf.cols() != d ||
      p.prf.rows() != static_cast<Eigen::Index>(p.config.random_features)) {
    r.fail("array shapes disagree with the config");
  }
  return p;
}

void save_checkpoint(const std::filesystem::path& path, const SurrogateParams& params) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write checkpoint: " + path.string());
  write_checkpoint(out, params);
}

SurrogateParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open checkpoint: " + path.string());
  return read_checkpoint(in);
}

}  // namespace gbim

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "spn/network.hpp"

namespace spn {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct LineScanner {
  std::string_view line;
  std::size_t pos = 0;

  bool next_token(std::string_view& tok) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    if (pos >= line.size()) return false;
    const std::size_t start = pos;
    while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t') ++pos;
    tok = line.substr(start, pos - start);
    return true;
  }

  template <typename Int>
  Int read_int(const char* what) {
    std::string_view tok;
    if (!next_token(tok)) throw IoError(std::string("missing ") + what);
    Int value{};
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc{} || p != tok.data() + tok.size())
      throw IoError(std::string("malformed ") + what + ": '" + std::string(tok) + "'");
    return value;
  }

  double read_double(const char* what) {
    std::string_view tok;
    if (!next_token(tok)) throw IoError(std::string("missing ") + what);
    double value{};
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc{} || p != tok.data() + tok.size())
      throw IoError(std::string("malformed ") + what + ": '" + std::string(tok) + "'");
    return value;
  }

  void expect_end(const char* what) {
    std::string_view tok;
    if (next_token(tok)) throw IoError(std::string("trailing tokens on ") + what);
  }
};

}  // namespace

std::string serialize(const Spn& s) {
  std::ostringstream out;
  out << "spn-model v1 " << s.n_vars() << ' ' << s.size() << ' ' << s.root() << '\n';
  for (NodeId id = 0; id < s.size(); ++id) {
    const Node& n = s.node(id);
    switch (n.kind) {
      case NodeKind::Sum:
        out << "S " << id << ' ' << n.children.size();
        for (std::size_t i = 0; i < n.children.size(); ++i)
          out << ' ' << n.children[i] << ' ' << fmt_double(n.log_weights[i]);
        out << '\n';
        break;
      case NodeKind::Product:
        out << "P " << id << ' ' << n.children.size();
        for (NodeId c : n.children) out << ' ' << c;
        out << '\n';
        break;
      case NodeKind::Leaf:
        out << "L " << id << ' ' << n.variable << ' ' << fmt_double(n.log_p[0]) << ' '
            << fmt_double(n.log_p[1]) << '\n';
        break;
    }
  }
  return out.str();
}

Spn deserialize(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find('\n', start);
    const std::string_view line =
        text.substr(start, end == std::string_view::npos ? text.size() - start : end - start);
    // Skip blanks and # comments.
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i < line.size() && line[i] != '#') lines.push_back(line);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  if (lines.empty()) throw IoError("empty model document");

  LineScanner header{lines[0]};
  std::string_view magic, version;
  if (!header.next_token(magic) || magic != "spn-model")
    throw IoError("not an spn-model document");
  if (!header.next_token(version) || version != "v1")
    throw IoError("unsupported spn-model version");
  const int n_vars = header.read_int<int>("n_vars");
  const std::size_t n_nodes = header.read_int<std::size_t>("n_nodes");
  const NodeId root = header.read_int<NodeId>("root id");
  header.expect_end("header");
  if (lines.size() - 1 != n_nodes) throw IoError("node count does not match header");

  std::vector<Node> nodes;
  nodes.reserve(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    LineScanner sc{lines[i + 1]};
    std::string_view tag;
    if (!sc.next_token(tag)) throw IoError("malformed record");
    const NodeId id = sc.read_int<NodeId>("node id");
    if (id != i) throw IoError("node ids must be dense and in order");
    if (tag == "S") {
      const std::size_t k = sc.read_int<std::size_t>("child count");
      std::vector<NodeId> children(k);
      std::vector<double> lw(k);
      for (std::size_t c = 0; c < k; ++c) {
        children[c] = sc.read_int<NodeId>("child id");
        lw[c] = sc.read_double("log weight");
      }
      sc.expect_end("sum record");
      nodes.push_back(Node::sum_log(std::move(children), std::move(lw)));
    } else if (tag == "P") {
      const std::size_t k = sc.read_int<std::size_t>("child count");
      std::vector<NodeId> children(k);
      for (std::size_t c = 0; c < k; ++c) children[c] = sc.read_int<NodeId>("child id");
      sc.expect_end("product record");
      nodes.push_back(Node::product(std::move(children)));
    } else if (tag == "L") {
      const int var = sc.read_int<int>("variable");
      const double lp0 = sc.read_double("log p0");
      const double lp1 = sc.read_double("log p1");
      sc.expect_end("leaf record");
      nodes.push_back(Node::leaf_log(var, lp0, lp1));
    } else {
      throw IoError("unknown record tag '" + std::string(tag) + "'");
    }
  }
  return build_spn(std::move(nodes), root, n_vars);
}

void save_spn(const Spn& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << serialize(s);
  if (!out) throw IoError("write failed: " + path);
}

Spn load_spn(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

}  // namespace spn

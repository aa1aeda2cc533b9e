#include "utp/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace utp {
namespace {

std::optional<NodeKind> parse_kind(std::string_view s) {
  if (s == "kernel") return NodeKind::Kernel;
  if (s == "threaded") return NodeKind::Threaded;
  if (s == "distsim") return NodeKind::Distsim;
  return std::nullopt;
}

std::optional<std::size_t> parse_count(std::string_view s) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || v == 0) return std::nullopt;
  return v;
}

std::optional<std::pair<std::size_t, std::size_t>> parse_grid(std::string_view s) {
  const auto x = s.find('x');
  if (x == std::string_view::npos) return std::nullopt;
  auto r = parse_count(s.substr(0, x));
  auto c = parse_count(s.substr(x + 1));
  if (!r || !c) return std::nullopt;
  return std::pair{*r, *c};
}

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

// Parameter checks shared by parse and validate.
void check_params(const NodeSpec& n, std::size_t line, std::vector<Diagnostic>& diags) {
  for (const auto& [key, value] : n.params) {
    const std::string tok = key + "=" + value;
    bool known = false;
    if (n.kind == NodeKind::Threaded && key == "workers") {
      known = true;
      if (!parse_count(value)) diags.push_back({line, tok, "workers must be a positive integer"});
    } else if (n.kind == NodeKind::Distsim && key == "ranks") {
      known = true;
      if (!parse_count(value)) diags.push_back({line, tok, "ranks must be a positive integer"});
    } else if (n.kind == NodeKind::Distsim && key == "grid") {
      known = true;
      if (!parse_grid(value)) diags.push_back({line, tok, "grid must look like RxC"});
    }
    if (!known) {
      diags.push_back({line, tok, "unknown key '" + key + "' for " + std::string(to_string(n.kind)) + " node"});
    }
  }
  if (n.kind == NodeKind::Distsim && n.params.contains("grid")) {
    auto g = parse_grid(n.params.at("grid"));
    auto it = n.params.find("ranks");
    const auto ranks = it == n.params.end() ? std::optional<std::size_t>{1} : parse_count(it->second);
    if (g && ranks && g->first * g->second != *ranks) {
      diags.push_back({line, "grid=" + n.params.at("grid"), "grid does not multiply to ranks=" + std::to_string(*ranks)});
    }
  }
}

void structural(const FlowGraph& g, std::vector<Diagnostic>& diags) {
  auto line_of = [&](const std::string& id) {
    auto it = g.node_lines.find(id);
    return it == g.node_lines.end() ? std::size_t{0} : it->second;
  };
  std::map<std::string, std::vector<std::string>> out;
  std::set<std::string> ids;
  std::size_t distsim = 0;
  for (const auto& n : g.nodes) {
    if (!ids.insert(n.id).second) diags.push_back({line_of(n.id), n.id, "duplicate node id"});
    check_params(n, line_of(n.id), diags);
    if (n.kind == NodeKind::Distsim && ++distsim == 2) {
      diags.push_back({line_of(n.id), n.id, "at most one distsim node is supported"});
    }
  }
  for (const auto& [from, to] : g.edges) {
    if (!ids.contains(from) || !ids.contains(to)) {
      diags.push_back({0, ids.contains(from) ? to : from, "edge references undeclared node"});
      continue;
    }
    out[from].push_back(to);
  }
  if (g.root.empty()) {
    diags.push_back({0, "root", "missing root directive"});
    return;
  }
  if (!ids.contains(g.root)) {
    diags.push_back({0, g.root, "root references undeclared node"});
    return;
  }
  for (const auto& n : g.nodes) {
    const auto& succ = out[n.id];
    if (n.kind == NodeKind::Kernel && !succ.empty()) {
      diags.push_back({line_of(n.id), n.id, "kernel node cannot have outgoing edges"});
    } else if (n.kind != NodeKind::Kernel && succ.empty()) {
      diags.push_back({line_of(n.id), n.id, "non-kernel node has no outgoing edge (every path must end at a kernel node)"});
    } else if (succ.size() > 1) {
      diags.push_back({line_of(n.id), n.id,
                       "node has " + std::to_string(succ.size()) +
                           " outgoing edges; multi-terminal graphs (GPU kernel nodes) are not supported"});
    }
  }
  // Follow the unique path from the root; a revisit is a cycle.
  std::set<std::string> seen;
  std::string cur = g.root;
  while (true) {
    if (!seen.insert(cur).second) {
      diags.push_back({line_of(cur), cur, "cycle in flow graph"});
      return;
    }
    const auto& succ = out[cur];
    if (succ.empty()) break;
    cur = succ.front();
  }
  for (const auto& n : g.nodes) {
    if (!seen.contains(n.id)) diags.push_back({line_of(n.id), n.id, "node unreachable from root"});
  }
}

std::string format(const std::vector<Diagnostic>& diags) {
  std::string s = "invalid flow-graph configuration:";
  for (const auto& d : diags) {
    s += "\n  line " + std::to_string(d.line) + ": '" + d.token + "': " + d.message;
  }
  return s;
}

}  // namespace

std::string_view to_string(NodeKind k) noexcept {
  switch (k) {
    case NodeKind::Kernel: return "kernel";
    case NodeKind::Threaded: return "threaded";
    case NodeKind::Distsim: return "distsim";
  }
  return "?";
}

ConfigParseError::ConfigParseError(std::vector<Diagnostic> diags)
    : ConfigError(format(diags)), diags_(std::move(diags)) {}

const NodeSpec* FlowGraph::find(std::string_view id) const {
  for (const auto& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

std::vector<std::size_t> FlowGraph::path() const {
  auto index = [&](std::string_view id) {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].id == id) return i;
    }
    throw ConfigError("flow graph: undeclared node '" + std::string(id) + "'");
  };
  std::vector<std::size_t> p{index(root)};
  while (p.size() <= nodes.size()) {
    const std::string& cur = nodes[p.back()].id;
    const std::string* next = nullptr;
    for (const auto& [from, to] : edges) {
      if (from == cur) next = &to;
    }
    if (!next) return p;
    p.push_back(index(*next));
  }
  throw ConfigError("flow graph: cycle");
}

std::size_t FlowGraph::flow_depth() const {
  std::size_t d = 0;
  for (std::size_t i : path()) {
    if (nodes[i].kind != NodeKind::Kernel) ++d;
  }
  return d;
}

FlowGraph parse_config(std::string_view text) {
  FlowGraph g;
  std::vector<Diagnostic> diags;
  std::size_t lineno = 0;
  std::size_t root_line = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    const std::string_view d = toks[0];
    if (d == "node") {
      if (toks.size() < 3) {
        diags.push_back({lineno, std::string(d), "expected: node <id> <kind> [key=value...]"});
        continue;
      }
      auto kind = parse_kind(toks[2]);
      if (!kind) {
        diags.push_back({lineno, std::string(toks[2]), "unknown node kind (expected kernel, threaded or distsim)"});
        continue;
      }
      NodeSpec n{std::string(toks[1]), *kind, {}};
      if (g.find(n.id)) {
        diags.push_back({lineno, n.id, "duplicate node id"});
        continue;
      }
      for (std::size_t i = 3; i < toks.size(); ++i) {
        const auto eq = toks[i].find('=');
        if (eq == std::string_view::npos || eq == 0 || eq + 1 == toks[i].size()) {
          diags.push_back({lineno, std::string(toks[i]), "expected key=value"});
          continue;
        }
        auto [it, fresh] = n.params.emplace(std::string(toks[i].substr(0, eq)), std::string(toks[i].substr(eq + 1)));
        if (!fresh) diags.push_back({lineno, std::string(toks[i]), "duplicate key"});
      }
      g.node_lines[n.id] = lineno;
      g.nodes.push_back(std::move(n));
    } else if (d == "edge") {
      if (toks.size() != 3) {
        diags.push_back({lineno, std::string(d), "expected: edge <from> <to>"});
        continue;
      }
      for (auto id : {toks[1], toks[2]}) {
        if (!g.find(id)) diags.push_back({lineno, std::string(id), "edge references undeclared node"});
      }
      g.edges.emplace_back(std::string(toks[1]), std::string(toks[2]));
    } else if (d == "root") {
      if (toks.size() != 2) {
        diags.push_back({lineno, std::string(d), "expected: root <id>"});
        continue;
      }
      if (!g.root.empty()) {
        diags.push_back({lineno, std::string(toks[1]), "duplicate root directive (first on line " + std::to_string(root_line) + ")"});
        continue;
      }
      g.root = std::string(toks[1]);
      root_line = lineno;
      if (!g.find(g.root)) diags.push_back({lineno, g.root, "root references undeclared node"});
    } else {
      diags.push_back({lineno, std::string(d), "unknown directive"});
    }
  }
  if (g.root.empty()) diags.push_back({lineno, "root", "missing root directive"});
  if (!diags.empty()) throw ConfigParseError(std::move(diags));
  // Undeclared references were reported above with their lines.
  structural(g, diags);
  for (auto& diag : diags) {
    if (diag.line == 0) diag.line = root_line;
  }
  if (!diags.empty()) throw ConfigParseError(std::move(diags));
  return g;
}

void validate(const FlowGraph& g) {
  std::vector<Diagnostic> diags;
  structural(g, diags);
  if (!diags.empty()) throw ConfigParseError(std::move(diags));
}

std::string render(const FlowGraph& g) {
  std::string s;
  for (const auto& n : g.nodes) {
    s += "node " + n.id + " " + std::string(to_string(n.kind));
    for (const auto& [k, v] : n.params) s += " " + k + "=" + v;
    s += "\n";
  }
  for (const auto& [from, to] : g.edges) s += "edge " + from + " " + to + "\n";
  s += "root " + g.root + "\n";
  return s;
}

std::size_t default_workers() noexcept {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

FlowGraph preset(std::string_view name) {
  const std::string w = std::to_string(default_workers());
  if (name == "G1") return parse_config("node cb kernel\nroot cb\n");
  if (name == "G2") return parse_config("node sg threaded workers=" + w + "\nnode cb kernel\nedge sg cb\nroot sg\n");
  if (name == "G3") {
    return parse_config("node dt distsim ranks=2\nnode sg threaded workers=" + w +
                        "\nnode cb kernel\nedge dt sg\nedge sg cb\nroot dt\n");
  }
  if (name == "G4") {
    throw ConfigError("preset G4 needs GPU kernel execution, which this runtime does not provide");
  }
  throw ConfigError("unknown preset '" + std::string(name) + "' (expected G1, G2 or G3)");
}

FlowGraph load_config(std::string_view preset_or_path) {
  if (preset_or_path.size() == 2 && preset_or_path[0] == 'G') return preset(preset_or_path);
  std::ifstream f{std::string(preset_or_path)};
  if (!f) throw ConfigError("cannot open config file '" + std::string(preset_or_path) + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

void apply_overrides(FlowGraph& g, std::optional<std::size_t> workers, std::optional<std::size_t> ranks) {
  for (auto& n : g.nodes) {
    if (workers && n.kind == NodeKind::Threaded) n.params["workers"] = std::to_string(*workers);
    if (ranks && n.kind == NodeKind::Distsim) {
      n.params["ranks"] = std::to_string(*ranks);
      n.params.erase("grid");
    }
  }
  validate(g);
}

void check_partition_depth(const FlowGraph& g, const PartitionSpec& spec) {
  const std::size_t depth = g.flow_depth();
  if (depth > spec.size()) {
    throw ConfigError("flow graph has " + std::to_string(depth) + " non-kernel node(s) but the data has only " +
                      std::to_string(spec.size()) + " partition level(s); each non-kernel node consumes one level");
  }
}

std::size_t workers_of(const NodeSpec& n) {
  auto it = n.params.find("workers");
  if (it == n.params.end()) return default_workers();
  auto v = parse_count(it->second);
  if (!v) throw ConfigError("node " + n.id + ": bad workers value");
  return *v;
}

std::size_t ranks_of(const NodeSpec& n) {
  auto it = n.params.find("ranks");
  if (it == n.params.end()) return 1;
  auto v = parse_count(it->second);
  if (!v) throw ConfigError("node " + n.id + ": bad ranks value");
  return *v;
}

std::pair<std::size_t, std::size_t> default_grid(std::size_t ranks) {
  std::size_t pr = 1;
  for (std::size_t d = 1; d * d <= ranks; ++d) {
    if (ranks % d == 0) pr = d;
  }
  return {pr, ranks / pr};
}

std::pair<std::size_t, std::size_t> grid_of(const NodeSpec& n) {
  auto it = n.params.find("grid");
  if (it == n.params.end()) return default_grid(ranks_of(n));
  auto g = parse_grid(it->second);
  if (!g) throw ConfigError("node " + n.id + ": bad grid value");
  return *g;
}

}  // namespace utp

#pragma once

// Flow-graph configuration: a line grammar
//
//   # comment
//   node <id> <kernel|threaded|distsim> [key=value ...]
//   edge <from> <to>
//   root <id>
//
// threaded accepts workers=N; distsim accepts ranks=P and grid=RxC.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "utp/data.hpp"
#include "utp/error.hpp"

namespace utp {

enum class NodeKind { Kernel, Threaded, Distsim };

std::string_view to_string(NodeKind k) noexcept;

struct NodeSpec {
  std::string id;
  NodeKind kind = NodeKind::Kernel;
  std::map<std::string, std::string> params;
  bool operator==(const NodeSpec&) const = default;
};

struct FlowGraph {
  std::vector<NodeSpec> nodes;
  std::vector<std::pair<std::string, std::string>> edges;
  std::string root;
  // Source line of each directive; diagnostics only, ignored by ==.
  std::map<std::string, std::size_t> node_lines;

  bool operator==(const FlowGraph& o) const {
    return nodes == o.nodes && edges == o.edges && root == o.root;
  }

  const NodeSpec* find(std::string_view id) const;
  // Node indices from the root to the sink. Requires a validated graph.
  std::vector<std::size_t> path() const;
  // Non-kernel nodes on the root-to-sink path.
  std::size_t flow_depth() const;
};

struct Diagnostic {
  std::size_t line = 0;
  std::string token;
  std::string message;
};

class ConfigParseError : public ConfigError {
 public:
  explicit ConfigParseError(std::vector<Diagnostic> diags);
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diags_; }

 private:
  std::vector<Diagnostic> diags_;
};

/// Parses and validates. Throws ConfigParseError listing every problem.
FlowGraph parse_config(std::string_view text);
/// Structural checks: ids, root, acyclic, single-successor non-kernel
/// nodes, kernel sinks, parameter types.
void validate(const FlowGraph& g);
std::string render(const FlowGraph& g);

/// G1: kernel. G2: threaded -> kernel. G3: distsim -> threaded -> kernel.
FlowGraph preset(std::string_view name);
/// A preset name, or otherwise a path to a config file.
FlowGraph load_config(std::string_view preset_or_path);
void apply_overrides(FlowGraph& g, std::optional<std::size_t> workers, std::optional<std::size_t> ranks);

/// The flow graph may not be deeper than the data: every non-kernel node
/// consumes one partition level.
void check_partition_depth(const FlowGraph& g, const PartitionSpec& spec);

std::size_t default_workers() noexcept;
std::size_t workers_of(const NodeSpec& n);
std::size_t ranks_of(const NodeSpec& n);
/// (p_r, p_c); defaults to p_r = largest divisor of P not above sqrt(P).
std::pair<std::size_t, std::size_t> grid_of(const NodeSpec& n);
std::pair<std::size_t, std::size_t> default_grid(std::size_t ranks);

}  // namespace utp

#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "utp/trace.hpp"

namespace utp {

struct Violation {
  std::uint64_t seq = 0;  // event at which the problem was detected
  std::int64_t task = -1;
  std::string message;
};

struct CheckReport {
  std::size_t events = 0;
  std::size_t tasks = 0;
  std::size_t messages = 0;
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
};

struct CheckOptions {
  // Nodes that simulate distributed memory. Left empty, any node that
  // emitted a message counts; name them when a trace may have lost all of
  // its messages.
  std::set<std::string> distributed_nodes;
};

/// Replays a trace and reports every lifecycle, hierarchy, epoch-ordering
/// and message violation found.
CheckReport check_trace(const std::vector<TraceEvent>& events, const CheckOptions& options = {});

/// "op detail" for every executed leaf, as a multiset.
std::multiset<std::string> leaf_multiset(const std::vector<TraceEvent>& events);

/// Root-to-task paths of "op detail" strings for every task, as a
/// multiset. Equal signatures mean the same task tree irrespective of ids,
/// timing or node placement.
std::multiset<std::string> task_tree_signature(const std::vector<TraceEvent>& events);

}  // namespace utp

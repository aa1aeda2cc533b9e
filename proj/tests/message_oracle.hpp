#pragma once

// Brute-force count of the transfers a p x p level-1 blocked Cholesky
// needs on a block-cyclic rank grid: every (block, write-version,
// consumer rank) a task reads from a block it does not own.

#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace oracle {

struct RemoteRead {
  int src, dst;
  std::string handle;
  unsigned version;
  bool operator<(const RemoteRead& o) const {
    return std::tie(src, dst, handle, version) < std::tie(o.src, o.dst, o.handle, o.version);
  }
};

inline std::set<RemoteRead> cholesky_remote_reads(std::size_t p, std::size_t pr, std::size_t pc) {
  using Blk = std::pair<std::size_t, std::size_t>;
  auto owner = [&](Blk b) { return static_cast<int>((b.first % pr) * pc + b.second % pc); };
  auto name = [](Blk b) { return "A(" + std::to_string(b.first) + "," + std::to_string(b.second) + ")"; };
  std::map<Blk, unsigned> version;
  std::set<RemoteRead> out;
  auto task = [&](std::vector<Blk> reads, Blk write) {
    const int rank = owner(write);
    for (Blk r : reads) {
      if (owner(r) != rank) out.insert({owner(r), rank, name(r), version[r]});
    }
    ++version[write];
  };
  for (std::size_t k = 0; k < p; ++k) {
    task({}, {k, k});
    for (std::size_t i = k + 1; i < p; ++i) task({{k, k}}, {i, k});
    for (std::size_t i = k + 1; i < p; ++i) task({{i, k}}, {i, i});
    for (std::size_t j = k + 1; j < p; ++j)
      for (std::size_t i = j + 1; i < p; ++i) task({{i, k}, {j, k}}, {i, j});
  }
  return out;
}

inline std::string detail(const RemoteRead& r) {
  return std::to_string(r.src) + "→" + std::to_string(r.dst) + "," + r.handle + "," + std::to_string(r.version);
}

}  // namespace oracle

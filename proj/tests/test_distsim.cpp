#include <doctest.h>

#include <algorithm>

#include "message_oracle.hpp"
#include "utp/cholesky.hpp"
#include "utp/dispatcher.hpp"
#include "utp/distsim_executor.hpp"
#include "utp/runner.hpp"
#include "utp/trace_check.hpp"

using namespace utp;

namespace {

constexpr auto R = AccessMode::Read;
constexpr auto W = AccessMode::ReadWrite;

FlowGraph dist(std::size_t ranks, std::string grid = "") {
  std::string text = "node dt distsim ranks=" + std::to_string(ranks);
  if (!grid.empty()) text += " grid=" + grid;
  return parse_config(text + "\nnode cb kernel\nedge dt cb\nroot dt\n");
}

std::multiset<std::string> message_details(const std::vector<TraceEvent>& ev) {
  std::multiset<std::string> m;
  for (const auto& e : ev) {
    if (e.event == EventKind::Message) m.insert(e.detail);
  }
  return m;
}

std::multiset<std::string> oracle_details(std::size_t p, std::size_t pr, std::size_t pc) {
  std::multiset<std::string> m;
  for (const auto& r : oracle::cholesky_remote_reads(p, pr, pc)) m.insert(oracle::detail(r));
  return m;
}

}  // namespace

TEST_CASE("owner-computes rank assignment") {
  DataTree t(6, 6, {{3, 3}});
  const DataHandle& a = t.root();
  TaskFactory f(cholesky_registry());
  auto root = f.create("potrf", nullptr, {{&a, W}});
  auto p11 = f.create("potrf", root.get(), {{&a.child(1, 1), W}});
  CHECK(assign_rank(*p11, RankMap{2, 2}) == 3);
  auto g = f.create("gemm", root.get(), {{&a.child(2, 0), R}, {&a.child(1, 0), R}, {&a.child(2, 1), W}});
  CHECK(assign_rank(*g, RankMap{1, 1}) == 0);
  auto tr = f.create("trsm", root.get(), {{&a.child(0, 0), R}, {&a.child(1, 0), W}});
  CHECK(assign_rank(*tr, RankMap{2, 1}) == 1);
  CHECK(RankMap{2, 2}.owner(a.child(2, 1)) == 1);
  auto ro = f.create("trsm", root.get(), {{&a.child(0, 0), R}, {&a.child(1, 0), R}});
  CHECK_THROWS_AS(assign_rank(*ro, RankMap{2, 2}), UsageError);
}

TEST_CASE("one rank sends nothing") {
  DataTree t(32, 32, {{4, 4}});
  fill_spd(t.root(), 1);
  const MatrixStore a0 = t.store();
  Dispatcher::Options o;
  o.trace = true;
  Dispatcher d(dist(1), cholesky_registry(), o);
  d.submit("potrf", {{&t.root(), W}});
  d.wait_all();
  CHECK(d.messages() == 0);
  CHECK(message_details(d.take_trace()).empty());
  CHECK(cholesky_residual(a0, t.store()) <= 1e-12);
}

TEST_CASE("message count matches the remote-read oracle") {
  struct Case {
    std::size_t n, p, ranks;
    std::string grid;
    std::size_t pr, pc;
  };
  for (const Case c : {Case{8, 2, 2, "2x1", 2, 1}, Case{8, 2, 2, "1x2", 1, 2}, Case{32, 4, 2, "", 1, 2},
                       Case{32, 4, 4, "", 2, 2}, Case{48, 6, 4, "", 2, 2}, Case{48, 6, 3, "", 1, 3},
                       Case{64, 8, 6, "", 2, 3}}) {
    CAPTURE(c.n);
    CAPTURE(c.p);
    CAPTURE(c.ranks);
    DataTree t(c.n, c.n, {{c.p, c.p}});
    fill_spd(t.root(), 4);
    const MatrixStore a0 = t.store();
    Dispatcher::Options o;
    o.trace = true;
    Dispatcher d(dist(c.ranks, c.grid), cholesky_registry(), o);
    d.submit("potrf", {{&t.root(), W}});
    d.wait_all();
    const auto want = oracle_details(c.p, c.pr, c.pc);
    CHECK(d.messages() == want.size());
    const auto ev = d.take_trace();
    CHECK(message_details(ev) == want);
    CHECK(check_trace(ev).ok());
    CHECK(cholesky_residual(a0, t.store()) <= 1e-12);
  }
  // Hand count for n=8, b1=2 on a 2x1 grid: potrf(0,0) and trsm(1,0) on
  // rank 0 and 1 resp.; trsm reads A(0,0) v1 remotely. syrk and potrf(1,1)
  // are local to rank 1.
  CHECK(oracle::cholesky_remote_reads(2, 2, 1).size() == 1);
}

TEST_CASE("an initial block is shipped as filled, and once per rank") {
  DataTree t(4, 4, {{2, 2}});
  fill_spd(t.root(), 9);
  const auto a00 = read_region(t.root().child(0, 0));
  const DataHandle& a = t.root();
  OperationRegistry reg;
  auto copy = [](const Task& x) {
    write_region(*x.args()[1].handle, x.store(), read_region(*x.args()[0].handle, x.store()));
  };
  reg.add(Operation("copy", [](const Task&, ChildSink&) {}, copy));
  reg.add(Operation(
      "program",
      [&](const Task&, ChildSink& s) {
        s.emit("copy", {{&a.child(0, 0), R}, {&a.child(0, 1), W}});
        s.emit("copy", {{&a.child(0, 0), R}, {&a.child(1, 1), W}});
      },
      [](const Task&) {}));
  Dispatcher::Options o;
  o.trace = true;
  // 1x2 grid: column 0 on rank 0, column 1 on rank 1.
  Dispatcher d(dist(2, "1x2"), reg, o);
  d.submit("program", {{&a, W}});
  d.wait_all();
  CHECK(read_region(a.child(0, 1)) == a00);
  CHECK(read_region(a.child(1, 1)) == a00);
  CHECK(d.messages() == 1);
  const auto ev = d.take_trace();
  CHECK(message_details(ev) == std::multiset<std::string>{"0→1,A(0,0),0"});
  CHECK(check_trace(ev).ok());
}

TEST_CASE("G3 over two levels agrees with the oracle for P = 2 and 4") {
  for (std::size_t ranks : {2, 4}) {
    RunOptions o;
    o.n = 64;
    o.b1 = 4;
    o.b2 = 2;
    o.config = "G3";
    o.threads = 2;
    o.ranks = ranks;
    o.trace = true;
    o.verify = true;
    const RunResult r = run_cholesky(o);
    const auto [pr, pc] = default_grid(ranks);
    CHECK(message_details(r.trace) == oracle_details(4, pr, pc));
    CHECK(r.row.messages == oracle_details(4, pr, pc).size());
    CHECK(*r.row.residual <= 1e-12);
    CHECK(check_trace(r.trace).ok());
  }
}

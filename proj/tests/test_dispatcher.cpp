#include <doctest.h>

#include <condition_variable>
#include <mutex>

#include "utp/cholesky.hpp"
#include "utp/dispatcher.hpp"
#include "utp/error.hpp"
#include "utp/runner.hpp"
#include "utp/trace_check.hpp"

using namespace utp;
using namespace std::chrono_literals;

namespace {

constexpr auto W = AccessMode::ReadWrite;

Dispatcher::Options traced() {
  Dispatcher::Options o;
  o.trace = true;
  return o;
}

FlowGraph g2(std::size_t workers) {
  FlowGraph g = preset("G2");
  apply_overrides(g, workers, std::nullopt);
  return g;
}

FlowGraph g3(std::size_t workers, std::size_t ranks) {
  FlowGraph g = preset("G3");
  apply_overrides(g, workers, ranks);
  return g;
}

}  // namespace

TEST_CASE("full factorization under each reference graph") {
  for (const auto& [name, graph, spec] : std::vector<std::tuple<std::string, FlowGraph, PartitionSpec>>{
           {"G1", preset("G1"), {{4, 4}}},
           {"G2", g2(4), {{4, 4}}},
           {"G2 two levels", g2(2), {{2, 2}, {2, 2}}},
           {"G3", g3(2, 2), {{2, 2}, {2, 2}}},
           {"G3 P=4", g3(2, 4), {{4, 4}, {2, 2}}}}) {
    CAPTURE(name);
    DataTree t(64, 64, spec);
    fill_spd(t.root(), 3);
    const MatrixStore original = t.store();
    Dispatcher d(graph, cholesky_registry(), traced());
    d.submit("potrf", {{&t.root(), W}});
    d.wait_all();
    CHECK(cholesky_residual(original, t.store()) <= 1e-12);
    const auto r = check_trace(d.take_trace());
    for (const auto& v : r.violations) MESSAGE(v.message);
    CHECK(r.ok());
  }
}

TEST_CASE("unpartitioned root under G2 becomes ready at the threaded node") {
  DataTree t(1, 1, {});
  t.store().at(0, 0) = 4.0;
  Dispatcher d(g2(2), cholesky_registry(), traced());
  d.submit("potrf", {{&t.root(), W}});
  d.wait_all();
  CHECK(t.store().at(0, 0) == 2.0);
  const auto ev = d.take_trace();
  REQUIRE(ev.size() == 5);
  CHECK(ev[0].event == EventKind::Submitted);
  CHECK(ev[0].node == "sg");
  CHECK(ev[1].event == EventKind::Ready);
  CHECK(ev[1].node == "sg");
  CHECK(ev[2].event == EventKind::RunStart);
  CHECK(ev[2].node == "cb");
  CHECK(ev[3].event == EventKind::RunEnd);
  CHECK(ev[4].event == EventKind::Finished);
  CHECK(ev[4].node == "sg");
}

TEST_CASE("parent finishes after all of its children") {
  DataTree t(8, 8, {{2, 2}});
  fill_spd(t.root(), 1);
  Dispatcher d(g2(2), cholesky_registry(), traced());
  Task& root = d.submit("potrf", {{&t.root(), W}});
  d.wait_all();
  const auto ev = d.take_trace();
  std::size_t child_finished = 0;
  bool parent_seen = false;
  for (const auto& e : ev) {
    if (e.event != EventKind::Finished) continue;
    if (e.task == static_cast<std::int64_t>(root.id())) {
      parent_seen = true;
      CHECK(child_finished == 4);
    } else if (e.parent == static_cast<std::int64_t>(root.id())) {
      CHECK_FALSE(parent_seen);
      ++child_finished;
    }
  }
  CHECK(parent_seen);
  CHECK(root.state() == TaskState::Finished);
}

TEST_CASE("independent program tasks both complete") {
  for (const FlowGraph& g : {preset("G1"), g2(2), g3(1, 2)}) {
    DataTree a(16, 16, {{2, 2}, {2, 2}}), b(16, 16, {{2, 2}, {2, 2}}, "B");
    fill_spd(a.root(), 1);
    fill_spd(b.root(), 2);
    const MatrixStore a0 = a.store(), b0 = b.store();
    Dispatcher d(g, cholesky_registry(), traced());
    d.submit("potrf", {{&a.root(), W}});
    d.submit("potrf", {{&b.root(), W}});
    d.wait_all();
    CHECK(cholesky_residual(a0, a.store()) <= 1e-12);
    CHECK(cholesky_residual(b0, b.store()) <= 1e-12);
    CHECK(check_trace(d.take_trace()).ok());
  }
}

TEST_CASE("wait_all with nothing submitted returns immediately") {
  Dispatcher d(g2(2), cholesky_registry());
  const auto t0 = std::chrono::steady_clock::now();
  d.wait_all();
  CHECK(std::chrono::steady_clock::now() - t0 < 1s);
}

TEST_CASE("a split with no children finishes the task") {
  OperationRegistry reg;
  register_cholesky_ops(reg);
  reg.add(Operation("nothing", [](const Task&, ChildSink&) {}, [](const Task&) {}));
  for (const FlowGraph& g : {preset("G1"), g2(2)}) {
    DataTree t(4, 4, {{2, 2}});
    Dispatcher d(g, reg, traced());
    Task& x = d.submit("nothing", {{&t.root(), W}});
    d.wait_all();
    CHECK(x.state() == TaskState::Finished);
    CHECK(check_trace(d.take_trace()).ok());
  }
}

TEST_CASE("program-level misuse") {
  DataTree t(4, 4, {{2, 2}});
  Dispatcher d(g2(1), cholesky_registry());
  Task& x = d.create_task("potrf", {{&t.root(), W}});
  fill_spd(t.root(), 1);
  d.submit(x);
  CHECK_THROWS_AS(d.submit(x), UsageError);
  d.wait_all();
  CHECK_THROWS_AS(d.create_task("potrf", {{&t.root().child(0, 0), W}}), UsageError);
}

TEST_CASE("numerical failure surfaces from wait_all") {
  for (const FlowGraph& g : {preset("G1"), g2(3), g3(2, 2), g3(2, 4)}) {
    DataTree t(16, 16, {{2, 2}, {2, 2}});
    fill_spd(t.root(), 1);
    t.store().at(9, 9) = -100.0;
    Dispatcher d(g, cholesky_registry());
    d.submit("potrf", {{&t.root(), W}});
    try {
      d.wait_all();
      FAIL("expected failure");
    } catch (const NumericalError& e) {
      CHECK(e.pivot() == 9);
    }
  }
}

TEST_CASE("flow deeper than the partition tree is rejected") {
  DataTree t(16, 16, {{2, 2}});
  fill_spd(t.root(), 1);
  Dispatcher d(g3(1, 2), cholesky_registry());
  d.submit("potrf", {{&t.root(), W}});
  CHECK_THROWS_AS(d.wait_all(), ConfigError);
}

TEST_CASE("withheld completion is reported as a deadlock") {
  std::mutex mu;
  std::condition_variable cv;
  bool release = false;
  OperationRegistry reg;
  reg.add(Operation("stuck", [](const Task&, ChildSink&) {}, [&](const Task&) {
    std::unique_lock lock(mu);
    cv.wait(lock, [&] { return release; });
  }));
  DataTree t(2, 2, {});
  Dispatcher::Options o;
  o.deadlock_timeout = 200ms;
  Dispatcher d(g2(1), reg, o);
  d.submit("stuck", {{&t.root(), W}});
  try {
    d.wait_all();
    FAIL("expected deadlock");
  } catch (const DeadlockError& e) {
    const std::string what = e.what();
    CHECK(what.find("stuck") != std::string::npos);
    CHECK(what.find("Running") != std::string::npos);
  }
  {
    std::lock_guard lock(mu);
    release = true;
  }
  cv.notify_all();
  d.wait_all();
}

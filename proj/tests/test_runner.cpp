#include <doctest.h>

#include "utp/error.hpp"
#include "utp/runner.hpp"

using namespace utp;

TEST_CASE("result header and row round-trip") {
  CHECK(kResultHeader == "config,n,b1,b2,workers,ranks,wall_ms,leaf_tasks,messages,residual");
  ResultRow r;
  r.config = "G3";
  r.n = 256;
  r.b1 = 4;
  r.b2 = 2;
  r.workers = 4;
  r.ranks = 2;
  r.wall_ms = 12.345678901234567;
  r.leaf_tasks = 816;
  r.messages = 6;
  r.residual = 2.5146697921843697e-16;
  const ResultRow back = ResultRow::parse(r.to_csv());
  CHECK(back.to_csv() == r.to_csv());
  CHECK(back.wall_ms == r.wall_ms);
  CHECK(back.residual == r.residual);

  r.residual.reset();
  const std::string line = r.to_csv();
  CHECK(line.back() == ',');
  CHECK_FALSE(ResultRow::parse(line).residual.has_value());
  CHECK_THROWS_AS(ResultRow::parse("G1,1,2"), UsageError);
  CHECK_THROWS_AS(ResultRow::parse("G1,x,2,0,1,1,1.0,4,0,"), UsageError);
}

TEST_CASE("residual present iff verifying") {
  RunOptions o;
  o.n = 64;
  o.b1 = 2;
  o.config = "G1";
  CHECK_FALSE(run_cholesky(o).row.residual.has_value());
  o.verify = true;
  const auto r = run_cholesky(o).row;
  REQUIRE(r.residual.has_value());
  CHECK(*r.residual <= kResidualTolerance);
  CHECK(r.leaf_tasks == 4);
  CHECK(r.messages == 0);
}

TEST_CASE("leaf count is independent of the configuration") {
  std::optional<std::size_t> leaves;
  for (const char* cfg : {"G1", "G2", "G3"}) {
    RunOptions o;
    o.n = 64;
    o.b1 = 4;
    o.b2 = 2;
    o.config = cfg;
    o.threads = 2;
    o.ranks = 2;
    const auto r = run_cholesky(o).row;
    if (!leaves) leaves = r.leaf_tasks;
    CHECK(r.leaf_tasks == *leaves);
  }
}

TEST_CASE("bad sizes and ragged partitions are configuration errors") {
  RunOptions o;
  o.n = 64;
  o.b1 = 3;
  o.config = "G1";
  CHECK_THROWS_AS(run_cholesky(o), ConfigError);
  o.b1 = 0;
  CHECK_THROWS_AS(run_cholesky(o), ConfigError);
  o.b1 = 2;
  o.config = "G3";  // two non-kernel nodes, one level
  CHECK_THROWS_AS(run_cholesky(o), ConfigError);
  o.config = "/nonexistent/graph.cfg";
  CHECK_THROWS_AS(run_cholesky(o), ConfigError);
}

TEST_CASE("negated diagonal fails at pivot 0") {
  RunOptions o;
  o.n = 32;
  o.b1 = 2;
  o.b2 = 2;
  o.config = "G2";
  o.negate_diagonal = true;
  try {
    run_cholesky(o);
    FAIL("expected failure");
  } catch (const NumericalError& e) {
    CHECK(e.pivot() == 0);
  }
}

TEST_CASE("bench sweep") {
  BenchOptions b;
  b.sizes = {32, 64};
  b.configs = {"G1", "G2"};
  b.b1 = 2;
  b.repeats = 2;
  b.verify = true;
  const auto rows = run_bench(b);
  REQUIRE(rows.size() == 4);
  // Same seed, same n: the factor is computed identically.
  CHECK(rows[0].residual == rows[1].residual);
  CHECK(rows[2].residual == rows[3].residual);
  CHECK(rows[0].n == 32);
  CHECK(rows[3].n == 64);
  CHECK(rows[3].config == "G2");
}

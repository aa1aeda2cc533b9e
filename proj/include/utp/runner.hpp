#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "utp/config.hpp"
#include "utp/data.hpp"
#include "utp/trace.hpp"

namespace utp {

inline constexpr std::string_view kResultHeader = "config,n,b1,b2,workers,ranks,wall_ms,leaf_tasks,messages,residual";

/// One CSV row per run. b2 == 0 means a single partition level.
struct ResultRow {
  std::string config;
  std::size_t n = 0;
  std::size_t b1 = 0;
  std::size_t b2 = 0;
  std::size_t workers = 1;
  std::size_t ranks = 1;
  double wall_ms = 0.0;
  std::size_t leaf_tasks = 0;
  std::size_t messages = 0;
  std::optional<double> residual;

  std::string to_csv() const;
  /// Throws UsageError on malformed input.
  static ResultRow parse(std::string_view line);
};

struct RunOptions {
  std::size_t n = 0;
  std::size_t b1 = 1;
  std::size_t b2 = 0;
  std::string config = "G1";  // preset name or config file path
  std::optional<std::size_t> threads;
  std::optional<std::size_t> ranks;
  std::uint64_t seed = 1;
  bool verify = false;
  bool trace = false;
  bool negate_diagonal = false;  // fault injection: makes the input indefinite
  std::chrono::milliseconds deadlock_timeout{30000};
};

struct RunResult {
  ResultRow row;
  std::vector<TraceEvent> trace;
};

inline constexpr double kResidualTolerance = 1e-8;

PartitionSpec partition_spec(std::size_t b1, std::size_t b2);

/// Builds the SPD test matrix, factors it under the chosen flow graph, and
/// optionally verifies. Throws ConfigError / NumericalError / DeadlockError.
RunResult run_cholesky(const RunOptions& opts);

/// ||L L^T - A||_F / ||A||_F, with L the lower triangle of `factored`.
double cholesky_residual(const MatrixStore& original, const MatrixStore& factored);

struct BenchOptions {
  std::vector<std::size_t> sizes;
  std::vector<std::string> configs;
  std::vector<std::size_t> workers;  // empty: config default
  std::size_t b1 = 4;
  std::size_t b2 = 0;
  std::optional<std::size_t> ranks;
  std::size_t repeats = 3;
  std::uint64_t seed = 1;
  bool verify = false;
};

/// One row per (n, config, workers) point with the minimum wall time over
/// `repeats` runs.
std::vector<ResultRow> run_bench(const BenchOptions& opts);

}  // namespace utp

// utp: run, trace-check and bench front end for the task runtime.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "utp/error.hpp"
#include "utp/runner.hpp"
#include "utp/trace.hpp"
#include "utp/trace_check.hpp"

namespace {

enum Exit : int {
  kOk = 0,
  kFailure = 1,
  kVerifyFailed = 2,
  kNumerical = 3,
  kConfig = 4,
  kViolations = 5,
};

void emit_rows(const std::vector<utp::ResultRow>& rows, const std::string& out) {
  if (out.empty()) {
    std::cout << utp::kResultHeader << '\n';
    for (const auto& r : rows) std::cout << r.to_csv() << '\n';
    return;
  }
  const bool fresh = !std::filesystem::exists(out) || std::filesystem::file_size(out) == 0;
  std::ofstream os(out, std::ios::app);
  if (!os) throw utp::ConfigError("cannot open output file '" + out + "'");
  if (fresh) os << utp::kResultHeader << '\n';
  for (const auto& r : rows) os << r.to_csv() << '\n';
}

int cmd_run(const utp::RunOptions& opts, const std::string& trace_file, const std::string& out) {
  utp::RunResult r = utp::run_cholesky(opts);
  if (!trace_file.empty()) {
    std::ofstream os(trace_file);
    if (!os) throw utp::ConfigError("cannot open trace file '" + trace_file + "'");
    utp::write_trace(os, r.trace);
  }
  emit_rows({r.row}, out);
  if (r.row.residual && !(*r.row.residual <= utp::kResidualTolerance)) {
    std::cerr << "utp: verification failed: residual " << *r.row.residual << " exceeds " << utp::kResidualTolerance
              << '\n';
    return kVerifyFailed;
  }
  return kOk;
}

int cmd_trace_check(const std::string& file, const utp::CheckOptions& opts) {
  std::ifstream is(file);
  if (!is) {
    std::cerr << "utp: cannot open trace '" << file << "'\n";
    return kConfig;
  }
  std::vector<utp::TraceEvent> events;
  try {
    events = utp::read_trace(is);
  } catch (const utp::Error& e) {
    std::cerr << "utp: malformed trace: " << e.what() << '\n';
    return kConfig;
  }
  const utp::CheckReport rep = utp::check_trace(events, opts);
  if (rep.ok()) {
    std::cout << "ok: " << rep.events << " events, " << rep.tasks << " tasks, " << rep.messages << " messages\n";
    return kOk;
  }
  std::cout << rep.violations.size() << " violation(s):\n";
  for (const auto& v : rep.violations) std::cout << "  seq " << v.seq << ": " << v.message << '\n';
  return kViolations;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical task runtime driver"};
  app.require_subcommand(1);

  utp::RunOptions run;
  std::string op = "cholesky";
  std::size_t threads = 0, ranks = 0;
  std::string trace_file, run_out;
  auto* run_cmd = app.add_subcommand("run", "Factor one matrix under a flow-graph configuration");
  run_cmd->add_option("--op", op, "Operation")->check(CLI::IsMember({"cholesky"}));
  run_cmd->add_option("--n", run.n, "Matrix order")->required();
  run_cmd->add_option("--b1", run.b1, "Level-1 blocks per dimension")->required();
  run_cmd->add_option("--b2", run.b2, "Level-2 blocks per dimension (0: none)");
  run_cmd->add_option("--config", run.config, "Preset (G1, G2, G3) or config file")->required();
  run_cmd->add_option("--threads", threads, "Workers for threaded nodes");
  run_cmd->add_option("--ranks", ranks, "Ranks for distsim nodes");
  run_cmd->add_option("--seed", run.seed, "Matrix generator seed");
  run_cmd->add_flag("--verify", run.verify, "Check the factor against the input");
  run_cmd->add_option("--trace", trace_file, "Write the event trace as CSV");
  run_cmd->add_option("--out", run_out, "Append the result row to this CSV");
  run_cmd->add_flag("--negate-diagonal", run.negate_diagonal, "Negate the input diagonal (fault injection)");

  std::string check_file;
  auto* check_cmd = app.add_subcommand("trace-check", "Validate a trace file");
  check_cmd->add_option("file", check_file, "Trace CSV")->required();
  std::vector<std::string> dist_nodes;
  check_cmd->add_option("--distsim-node", dist_nodes, "Node simulating distributed memory (default: inferred)");

  utp::BenchOptions bench;
  bench.sizes = {256, 512};
  bench.configs = {"G1", "G2"};
  std::size_t bench_ranks = 0;
  std::string bench_out;
  auto* bench_cmd = app.add_subcommand("bench", "Sweep sizes, configurations and worker counts");
  bench_cmd->add_option("--n", bench.sizes, "Matrix orders")->delimiter(',');
  bench_cmd->add_option("--config", bench.configs, "Configurations")->delimiter(',');
  bench_cmd->add_option("--workers", bench.workers, "Worker counts")->delimiter(',');
  bench_cmd->add_option("--b1", bench.b1, "Level-1 blocks per dimension");
  bench_cmd->add_option("--b2", bench.b2, "Level-2 blocks per dimension (0: none)");
  bench_cmd->add_option("--ranks", bench_ranks, "Ranks for distsim nodes");
  bench_cmd->add_option("--repeats", bench.repeats, "Runs per point; the minimum time is kept");
  bench_cmd->add_option("--seed", bench.seed, "Matrix generator seed");
  bench_cmd->add_flag("--verify", bench.verify, "Verify the first run of each point");
  bench_cmd->add_option("--out", bench_out, "Append rows to this CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*run_cmd) {
      if (threads) run.threads = threads;
      if (ranks) run.ranks = ranks;
      run.trace = !trace_file.empty();
      return cmd_run(run, trace_file, run_out);
    }
    if (*check_cmd) return cmd_trace_check(check_file, {{dist_nodes.begin(), dist_nodes.end()}});
    if (bench_ranks) bench.ranks = bench_ranks;
    emit_rows(utp::run_bench(bench), bench_out);
    return kOk;
  } catch (const utp::ConfigParseError& e) {
    std::cerr << "utp: configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const utp::ConfigError& e) {
    std::cerr << "utp: configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const utp::NumericalError& e) {
    std::cerr << "utp: numerical failure at pivot " << e.pivot() << ": " << e.what() << '\n';
    return kNumerical;
  } catch (const utp::UsageError& e) {
    std::cerr << "utp: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "utp: " << e.what() << '\n';
    return kFailure;
  }
}

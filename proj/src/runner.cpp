#include "utp/runner.hpp"

#include <charconv>
#include <cmath>

#include "utp/cholesky.hpp"
#include "utp/dispatcher.hpp"
#include "utp/error.hpp"

namespace utp {
namespace {

template <typename T>
T field(std::string_view s, const char* name) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw UsageError("result row: bad " + std::string(name) + " '" + std::string(s) + "'");
  }
  return v;
}

// Shortest representation that parses back to the same value.
std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

std::string ResultRow::to_csv() const {
  std::string s = config + "," + std::to_string(n) + "," + std::to_string(b1) + "," + std::to_string(b2) + "," +
                  std::to_string(workers) + "," + std::to_string(ranks) + "," + format_double(wall_ms) + "," +
                  std::to_string(leaf_tasks) + "," + std::to_string(messages) + ",";
  if (residual) s += format_double(*residual);
  return s;
}

ResultRow ResultRow::parse(std::string_view line) {
  std::vector<std::string_view> f;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    f.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (f.size() != 10) throw UsageError("result row: expected 10 fields, got " + std::to_string(f.size()));
  ResultRow r;
  r.config = std::string(f[0]);
  r.n = field<std::size_t>(f[1], "n");
  r.b1 = field<std::size_t>(f[2], "b1");
  r.b2 = field<std::size_t>(f[3], "b2");
  r.workers = field<std::size_t>(f[4], "workers");
  r.ranks = field<std::size_t>(f[5], "ranks");
  r.wall_ms = field<double>(f[6], "wall_ms");
  r.leaf_tasks = field<std::size_t>(f[7], "leaf_tasks");
  r.messages = field<std::size_t>(f[8], "messages");
  if (!f[9].empty()) r.residual = field<double>(f[9], "residual");
  return r;
}

PartitionSpec partition_spec(std::size_t b1, std::size_t b2) {
  PartitionSpec spec;
  if (b1 > 0) spec.push_back({b1, b1});
  if (b2 > 0) spec.push_back({b2, b2});
  return spec;
}

double cholesky_residual(const MatrixStore& original, const MatrixStore& factored) {
  const std::size_t n = original.rows();
  if (original.cols() != n || factored.rows() != n || factored.cols() != n) {
    throw UsageError("cholesky_residual: shape mismatch");
  }
  // (L L^T)(i,j) = sum_{k <= min(i,j)} L(i,k) L(j,k), lower triangle of
  // `factored` only.
  double num = 0.0, den = 0.0;
  const double* l = factored.elements().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* li = l + i * n;
    for (std::size_t j = 0; j <= i; ++j) {
      const double* lj = l + j * n;
      double s = 0.0;
      for (std::size_t k = 0; k <= j; ++k) s += li[k] * lj[k];
      const double a = original.at(i, j);
      const double d = s - a;
      const double w = i == j ? 1.0 : 2.0;  // symmetric counterpart
      num += w * d * d;
      den += w * a * a;
    }
  }
  return std::sqrt(num) / std::sqrt(den);
}

RunResult run_cholesky(const RunOptions& opts) {
  if (opts.n == 0) throw ConfigError("--n must be at least 1");
  if (opts.b1 == 0) throw ConfigError("--b1 must be at least 1");
  FlowGraph graph = load_config(opts.config);
  apply_overrides(graph, opts.threads, opts.ranks);
  const PartitionSpec spec = partition_spec(opts.b1, opts.b2);
  DataTree data(opts.n, opts.n, spec);
  check_partition_depth(graph, spec);

  fill_spd(data.root(), opts.seed);
  if (opts.negate_diagonal) {
    for (std::size_t i = 0; i < opts.n; ++i) data.store().at(i, i) = -data.store().at(i, i);
  }
  std::optional<MatrixStore> original;
  if (opts.verify) original = data.store();

  ResultRow row;
  row.config = opts.config;
  row.n = opts.n;
  row.b1 = opts.b1;
  row.b2 = opts.b2;
  for (const auto& node : graph.nodes) {
    if (node.kind == NodeKind::Threaded) row.workers = workers_of(node);
    if (node.kind == NodeKind::Distsim) row.ranks = ranks_of(node);
  }

  Dispatcher::Options dopts;
  dopts.trace = opts.trace;
  dopts.deadlock_timeout = opts.deadlock_timeout;
  Dispatcher d(graph, cholesky_registry(), dopts);

  const auto t0 = std::chrono::steady_clock::now();
  d.submit("potrf", {{&data.root(), AccessMode::ReadWrite}});
  d.wait_all();
  const auto t1 = std::chrono::steady_clock::now();

  RunResult out;
  out.trace = d.take_trace();
  row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  row.leaf_tasks = d.leaf_tasks();
  row.messages = d.messages();
  if (original) row.residual = cholesky_residual(*original, data.store());
  out.row = std::move(row);
  return out;
}

std::vector<ResultRow> run_bench(const BenchOptions& opts) {
  std::vector<ResultRow> rows;
  const std::vector<std::optional<std::size_t>> workers = [&] {
    std::vector<std::optional<std::size_t>> w;
    if (opts.workers.empty()) w.push_back(std::nullopt);
    for (std::size_t x : opts.workers) w.push_back(x);
    return w;
  }();
  for (std::size_t n : opts.sizes) {
    for (const auto& cfg : opts.configs) {
      for (const auto& w : workers) {
        std::optional<ResultRow> best;
        for (std::size_t rep = 0; rep < std::max<std::size_t>(opts.repeats, 1); ++rep) {
          RunOptions ro;
          ro.n = n;
          ro.b1 = opts.b1;
          ro.b2 = opts.b2;
          ro.config = cfg;
          ro.threads = w;
          ro.ranks = opts.ranks;
          ro.seed = opts.seed;
          ro.verify = opts.verify && rep == 0;
          RunResult r = run_cholesky(ro);
          if (!best) {
            best = r.row;
          } else {
            best->wall_ms = std::min(best->wall_ms, r.row.wall_ms);
          }
        }
        rows.push_back(*best);
      }
    }
  }
  return rows;
}

}  // namespace utp

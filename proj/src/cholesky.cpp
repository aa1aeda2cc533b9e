#include "utp/cholesky.hpp"

#include <string>

#include "utp/error.hpp"
#include "utp/kernels.hpp"

namespace utp {
namespace {

constexpr AccessMode R = AccessMode::Read;
constexpr AccessMode RW = AccessMode::ReadWrite;

void expect_args(const Task& t, std::initializer_list<AccessMode> modes) {
  if (t.args().size() != modes.size()) {
    throw UsageError(t.op_name() + ": expected " + std::to_string(modes.size()) + " arguments, got " +
                     std::to_string(t.args().size()));
  }
  std::size_t i = 0;
  for (AccessMode m : modes) {
    if (t.args()[i].mode != m) {
      throw UsageError(t.op_name() + ": argument " + std::to_string(i) + " must be " + std::string(to_string(m)));
    }
    ++i;
  }
}

std::pair<std::size_t, std::size_t> grid_of(const Task& t, std::size_t arg) {
  const DataHandle& h = *t.args()[arg].handle;
  if (h.is_leaf()) {
    throw ConfigError(t.op_name() + ": cannot split over leaf handle " + h.name() +
                      " (partition depth shallower than flow depth)");
  }
  return h.grid();
}

[[noreturn]] void grid_mismatch(const Task& t) {
  std::string s = t.op_name() + ": argument grids do not conform:";
  for (const auto& a : t.args()) {
    const auto [r, c] = a.handle->grid();
    s += " " + a.handle->name() + "[" + std::to_string(r) + "x" + std::to_string(c) + "]";
  }
  throw ConfigError(s);
}

kernels::BlockView view(const Task& t, std::size_t arg) { return view_of(*t.args()[arg].handle, t.store()); }

}  // namespace

void potrf_split(const Task& t, ChildSink& sink) {
  expect_args(t, {RW});
  const auto [p, q] = grid_of(t, 0);
  if (p != q) grid_mismatch(t);
  const DataHandle& a = *t.args()[0].handle;
  for (std::size_t k = 0; k < p; ++k) {
    sink.emit("potrf", {{&a.child(k, k), RW}});
    for (std::size_t i = k + 1; i < p; ++i) sink.emit("trsm", {{&a.child(k, k), R}, {&a.child(i, k), RW}});
    for (std::size_t i = k + 1; i < p; ++i) sink.emit("syrk", {{&a.child(i, k), R}, {&a.child(i, i), RW}});
    for (std::size_t j = k + 1; j < p; ++j)
      for (std::size_t i = j + 1; i < p; ++i)
        sink.emit("gemm", {{&a.child(i, k), R}, {&a.child(j, k), R}, {&a.child(i, j), RW}});
  }
}

void trsm_split(const Task& t, ChildSink& sink) {
  expect_args(t, {R, RW});
  const auto [lq, lq2] = grid_of(t, 0);
  const auto [m, bq] = grid_of(t, 1);
  if (lq != lq2 || bq != lq) grid_mismatch(t);
  const DataHandle& l = *t.args()[0].handle;
  const DataHandle& b = *t.args()[1].handle;
  for (std::size_t j = 0; j < lq; ++j) {
    for (std::size_t i = 0; i < m; ++i) sink.emit("trsm", {{&l.child(j, j), R}, {&b.child(i, j), RW}});
    for (std::size_t k = j + 1; k < lq; ++k)
      for (std::size_t i = 0; i < m; ++i)
        sink.emit("gemm", {{&b.child(i, j), R}, {&l.child(k, j), R}, {&b.child(i, k), RW}});
  }
}

void syrk_split(const Task& t, ChildSink& sink) {
  expect_args(t, {R, RW});
  const auto [q, s] = grid_of(t, 0);
  const auto [cq, cq2] = grid_of(t, 1);
  if (cq != cq2 || cq != q) grid_mismatch(t);
  const DataHandle& a = *t.args()[0].handle;
  const DataHandle& c = *t.args()[1].handle;
  for (std::size_t k = 0; k < s; ++k) {
    for (std::size_t i = 0; i < q; ++i) sink.emit("syrk", {{&a.child(i, k), R}, {&c.child(i, i), RW}});
    for (std::size_t i = 0; i < q; ++i)
      for (std::size_t j = 0; j < i; ++j)
        sink.emit("gemm", {{&a.child(i, k), R}, {&a.child(j, k), R}, {&c.child(i, j), RW}});
  }
}

void gemm_split(const Task& t, ChildSink& sink) {
  expect_args(t, {R, R, RW});
  const auto [aq, as] = grid_of(t, 0);
  const auto [br, bs] = grid_of(t, 1);
  const auto [cq, cr] = grid_of(t, 2);
  if (aq != cq || br != cr || as != bs) grid_mismatch(t);
  const DataHandle& a = *t.args()[0].handle;
  const DataHandle& b = *t.args()[1].handle;
  const DataHandle& c = *t.args()[2].handle;
  for (std::size_t k = 0; k < as; ++k)
    for (std::size_t i = 0; i < aq; ++i)
      for (std::size_t j = 0; j < br; ++j)
        sink.emit("gemm", {{&a.child(i, k), R}, {&b.child(j, k), R}, {&c.child(i, j), RW}});
}

void potrf_run(const Task& t) {
  expect_args(t, {RW});
  const DataHandle& a = *t.args()[0].handle;
  try {
    kernels::potrf(view(t, 0));
  } catch (const NumericalError& e) {
    const std::size_t row = a.row_offset() + e.pivot();
    throw NumericalError("potrf: matrix not positive definite, non-positive pivot at row " + std::to_string(row) +
                             " (block " + a.name() + ", local row " + std::to_string(e.pivot()) + ")",
                         row);
  }
}

void trsm_run(const Task& t) {
  expect_args(t, {R, RW});
  try {
    kernels::trsm(view(t, 0), view(t, 1));
  } catch (const NumericalError& e) {
    const std::size_t row = t.args()[0].handle->row_offset() + e.pivot();
    throw NumericalError("trsm: zero diagonal at row " + std::to_string(row) + " (block " +
                             t.args()[0].handle->name() + ")",
                         row);
  }
}

void syrk_run(const Task& t) {
  expect_args(t, {R, RW});
  kernels::syrk(view(t, 0), view(t, 1));
}

void gemm_run(const Task& t) {
  expect_args(t, {R, R, RW});
  kernels::gemm(view(t, 0), view(t, 1), view(t, 2));
}

void register_cholesky_ops(OperationRegistry& registry) {
  registry.add(Operation("potrf", potrf_split, potrf_run));
  registry.add(Operation("trsm", trsm_split, trsm_run));
  registry.add(Operation("syrk", syrk_split, syrk_run));
  registry.add(Operation("gemm", gemm_split, gemm_run));
}

const OperationRegistry& cholesky_registry() {
  static const OperationRegistry reg = [] {
    OperationRegistry r;
    register_cholesky_ops(r);
    return r;
  }();
  return reg;
}

SplitCounts potrf_split_counts(std::size_t p) noexcept {
  const std::size_t pairs = p * (p - (p > 0 ? 1 : 0)) / 2;
  return {p, pairs, pairs, p >= 2 ? p * (p - 1) * (p - 2) / 6 : 0};
}

}  // namespace utp

#pragma once

#include <cstddef>

#include "utp/task.hpp"

namespace utp {

// Operation names: "potrf", "trsm", "syrk", "gemm".
//
// Argument conventions (R = Read, RW = ReadWrite):
//   potrf(A RW)             A <- chol(A), lower
//   trsm(L R, B RW)         B <- B * L^-T
//   syrk(A R, C RW)         lower(C) <- lower(C) - A * A^T
//   gemm(A R, B R, C RW)    C <- C - A * B^T
//
// Splits (right-looking, emission order as listed):
//   potrf over a p x p grid, for k = 0..p-1:
//     potrf(A(k,k)); trsm(A(k,k), A(i,k)) for i > k;
//     syrk(A(i,k), A(i,i)) for i > k;
//     gemm(A(i,k), A(j,k), A(i,j)) for j > k, i > j.
//   trsm with L on q x q and B on m x q, for j = 0..q-1:
//     trsm(L(j,j), B(i,j)) for all i;
//     gemm(B(i,j), L(k,j), B(i,k)) for k > j, all i.
//   syrk with A on q x s and C on q x q, for k = 0..s-1:
//     syrk(A(i,k), C(i,i)) for all i; gemm(A(i,k), A(j,k), C(i,j)) for i > j.
//   gemm with A on q x s, B on r x s, C on q x r:
//     gemm(A(i,k), B(j,k), C(i,j)) for k, i, j.

void potrf_split(const Task& t, ChildSink& sink);
void trsm_split(const Task& t, ChildSink& sink);
void syrk_split(const Task& t, ChildSink& sink);
void gemm_split(const Task& t, ChildSink& sink);

void potrf_run(const Task& t);
void trsm_run(const Task& t);
void syrk_run(const Task& t);
void gemm_run(const Task& t);

void register_cholesky_ops(OperationRegistry& registry);
/// Process-wide registry holding the four Cholesky operations.
const OperationRegistry& cholesky_registry();

struct SplitCounts {
  std::size_t potrf = 0, trsm = 0, syrk = 0, gemm = 0;
  std::size_t total() const noexcept { return potrf + trsm + syrk + gemm; }
  bool operator==(const SplitCounts&) const = default;
};

/// Closed form for a p x p potrf split.
SplitCounts potrf_split_counts(std::size_t p) noexcept;

}  // namespace utp

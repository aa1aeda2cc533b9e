#pragma once

// Leaf dense kernels for blocked Cholesky. Lower-triangular, right-looking,
// subtractive updates. Every routine has a scalar reference implementation
// and, on x86-64, an AVX2/FMA variant selected at runtime.

#include <cstddef>
#include <string_view>

namespace utp::kernels {

/// Strided window over row-major storage. Element (r, c) lives at
/// base[r * stride + c].
struct BlockView {
  double* base = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t stride = 0;

  double& operator()(std::size_t r, std::size_t c) const { return base[r * stride + c]; }
  const double* row(std::size_t r) const { return base + r * stride; }
  double* row(std::size_t r) { return base + r * stride; }
};

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa) noexcept;
bool isa_available(Isa isa) noexcept;
/// Best available ISA, unless UTP_KERNELS=scalar is set in the environment.
Isa default_isa() noexcept;
Isa active_isa() noexcept;
/// Throws UsageError if `isa` is not available on this machine.
void set_active_isa(Isa isa);

// Dispatching entry points.

/// a <- L with L*L^T = a (lower triangle read; strict upper zeroed).
/// Throws NumericalError with the local pivot index on a non-positive pivot.
void potrf(BlockView a);
/// b <- b * l^-T, l lower triangular (only the lower triangle is read).
void trsm(BlockView l, BlockView b);
/// lower(c) <- lower(c) - a * a^T.
void syrk(BlockView a, BlockView c);
/// c <- c - a * b^T.
void gemm(BlockView a, BlockView b, BlockView c);

namespace scalar {
void potrf(BlockView a);
void trsm(BlockView l, BlockView b);
void syrk(BlockView a, BlockView c);
void gemm(BlockView a, BlockView b, BlockView c);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define UTP_HAVE_AVX2_KERNELS 1
namespace avx2 {
void potrf(BlockView a);
void trsm(BlockView l, BlockView b);
void syrk(BlockView a, BlockView c);
void gemm(BlockView a, BlockView b, BlockView c);
}  // namespace avx2
#endif

}  // namespace utp::kernels

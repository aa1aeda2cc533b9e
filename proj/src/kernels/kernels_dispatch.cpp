#include <atomic>
#include <cstdlib>
#include <string>
#include <string_view>

#include "utp/error.hpp"
#include "utp/kernels.hpp"

namespace utp::kernels {
namespace {

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{default_isa()};
  return isa;
}

std::string shape(const BlockView& v) {
  return std::to_string(v.rows) + "x" + std::to_string(v.cols);
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  return isa == Isa::Avx2 ? "avx2" : "scalar";
}

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(UTP_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Isa default_isa() noexcept {
  if (const char* env = std::getenv("UTP_KERNELS"); env && std::string_view(env) == "scalar") {
    return Isa::Scalar;
  }
  return isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

Isa active_isa() noexcept { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_available(isa)) {
    throw UsageError("kernel ISA '" + std::string(isa_name(isa)) + "' not available on this CPU");
  }
  active().store(isa, std::memory_order_relaxed);
}

void potrf(BlockView a) {
  if (a.rows != a.cols) throw UsageError("potrf: block must be square, got " + shape(a));
#ifdef UTP_HAVE_AVX2_KERNELS
  if (active_isa() == Isa::Avx2) return avx2::potrf(a);
#endif
  scalar::potrf(a);
}

void trsm(BlockView l, BlockView b) {
  if (l.rows != l.cols) throw UsageError("trsm: triangular block must be square, got " + shape(l));
  if (b.cols != l.rows) throw UsageError("trsm: shape mismatch " + shape(l) + " vs " + shape(b));
  for (std::size_t j = 0; j < l.rows; ++j) {
    if (l(j, j) == 0.0) throw NumericalError("trsm: zero diagonal at row " + std::to_string(j), j);
  }
#ifdef UTP_HAVE_AVX2_KERNELS
  if (active_isa() == Isa::Avx2) return avx2::trsm(l, b);
#endif
  scalar::trsm(l, b);
}

void syrk(BlockView a, BlockView c) {
  if (c.rows != c.cols || c.rows != a.rows) {
    throw UsageError("syrk: shape mismatch " + shape(a) + " vs " + shape(c));
  }
#ifdef UTP_HAVE_AVX2_KERNELS
  if (active_isa() == Isa::Avx2) return avx2::syrk(a, c);
#endif
  scalar::syrk(a, c);
}

void gemm(BlockView a, BlockView b, BlockView c) {
  if (a.rows != c.rows || b.rows != c.cols || a.cols != b.cols) {
    throw UsageError("gemm: shape mismatch " + shape(a) + ", " + shape(b) + ", " + shape(c));
  }
#ifdef UTP_HAVE_AVX2_KERNELS
  if (active_isa() == Isa::Avx2) return avx2::gemm(a, b, c);
#endif
  scalar::gemm(a, b, c);
}

}  // namespace utp::kernels

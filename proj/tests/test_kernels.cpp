#include <doctest.h>

#include <cmath>
#include <random>

#include "oracle.hpp"
#include "utp/error.hpp"
#include "utp/kernels.hpp"

using namespace utp;
using namespace utp::kernels;

namespace {

BlockView view(oracle::Dense& m) { return {m.v.data(), m.rows, m.cols, m.cols}; }

std::vector<Isa> isas() {
  std::vector<Isa> v{Isa::Scalar};
  if (isa_available(Isa::Avx2)) v.push_back(Isa::Avx2);
  return v;
}

struct IsaGuard {
  Isa saved = active_isa();
  ~IsaGuard() { set_active_isa(saved); }
};

}  // namespace

TEST_CASE("potrf examples") {
  IsaGuard g;
  for (Isa isa : isas()) {
    set_active_isa(isa);
    CAPTURE(isa_name(isa));
    oracle::Dense a(1, 1, 4.0);
    potrf(view(a));
    CHECK(a(0, 0) == 2.0);

    oracle::Dense b(2, 2);
    b(0, 0) = 4.0;
    b(0, 1) = 99.0;  // upper triangle is ignored
    b(1, 0) = 2.0;
    b(1, 1) = 3.0;
    potrf(view(b));
    CHECK(b(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(b(0, 1) == 0.0);
    CHECK(b(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(b(1, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

    oracle::Dense neg(1, 1, -1.0);
    try {
      potrf(view(neg));
      FAIL("expected failure");
    } catch (const NumericalError& e) {
      CHECK(e.pivot() == 0);
    }
  }
}

TEST_CASE("trsm examples") {
  IsaGuard g;
  for (Isa isa : isas()) {
    set_active_isa(isa);
    CAPTURE(isa_name(isa));
    oracle::Dense id(3, 3);
    for (std::size_t i = 0; i < 3; ++i) id(i, i) = 1.0;
    std::mt19937_64 rng(3);
    oracle::Dense b = oracle::random(2, 3, rng), b0 = b;
    trsm(view(id), view(b));
    CHECK(b.v == b0.v);

    oracle::Dense l(2, 2);
    l(0, 0) = 2.0;
    l(1, 0) = 1.0;
    l(1, 1) = std::sqrt(2.0);
    oracle::Dense x(1, 2, 2.0);
    trsm(view(l), view(x));
    CHECK(x(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(x(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));

    oracle::Dense l1(1, 1, 2.0);
    oracle::Dense col(2, 1);
    col(0, 0) = 4.0;
    col(1, 0) = 6.0;
    trsm(view(l1), view(col));
    CHECK(col(0, 0) == 2.0);
    CHECK(col(1, 0) == 3.0);
  }
}

TEST_CASE("syrk examples") {
  IsaGuard g;
  for (Isa isa : isas()) {
    set_active_isa(isa);
    CAPTURE(isa_name(isa));
    std::mt19937_64 rng(4);
    oracle::Dense z(3, 2), c = oracle::random(3, 3, rng), c0 = c;
    syrk(view(z), view(c));
    CHECK(c.v == c0.v);

    oracle::Dense a(2, 1);
    a(0, 0) = 1.0;
    a(1, 0) = 2.0;
    oracle::Dense c2(2, 2);
    c2(0, 0) = 5.0;
    c2(1, 0) = 4.0;
    c2(1, 1) = 6.0;
    syrk(view(a), view(c2));
    CHECK(c2(0, 0) == 4.0);
    CHECK(c2(1, 0) == 2.0);
    CHECK(c2(1, 1) == 2.0);

    oracle::Dense i2(2, 2), ci(2, 2);
    i2(0, 0) = i2(1, 1) = ci(0, 0) = ci(1, 1) = 1.0;
    syrk(view(i2), view(ci));
    CHECK(ci(0, 0) == 0.0);
    CHECK(ci(1, 1) == 0.0);
    CHECK(ci(1, 0) == 0.0);
  }
}

TEST_CASE("gemm examples") {
  IsaGuard g;
  for (Isa isa : isas()) {
    set_active_isa(isa);
    CAPTURE(isa_name(isa));
    std::mt19937_64 rng(5);
    oracle::Dense a = oracle::random(3, 4, rng), z(3, 4), c = oracle::random(3, 3, rng), c0 = c;
    gemm(view(z), view(a), view(c));
    CHECK(c.v == c0.v);
    gemm(view(a), view(z), view(c));
    CHECK(c.v == c0.v);

    oracle::Dense x(1, 2), y(1, 2), r(1, 1, 11.0);
    x(0, 0) = 1.0;
    x(0, 1) = 2.0;
    y(0, 0) = 3.0;
    y(0, 1) = 4.0;
    gemm(view(x), view(y), view(r));
    CHECK(r(0, 0) == 0.0);
  }
}

TEST_CASE("blocked gemm over 2x2 sub-blocks equals the flat product") {
  IsaGuard g;
  for (Isa isa : isas()) {
    set_active_isa(isa);
    std::mt19937_64 rng(6);
    const std::size_t n = 8, h = 4;
    oracle::Dense a = oracle::random(n, n, rng), b = oracle::random(n, n, rng), c = oracle::random(n, n, rng);
    const oracle::Dense want = oracle::minus_abt(c, a, b);
    auto sub = [&](oracle::Dense& m, std::size_t i, std::size_t j) {
      return BlockView{m.v.data() + i * h * n + j * h, h, h, n};
    };
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j)
        for (std::size_t k = 0; k < 2; ++k) gemm(sub(a, i, k), sub(b, j, k), sub(c, i, j));
    CHECK(oracle::max_abs_diff(c, want) <= 1e-12);
  }
}

TEST_CASE("shape errors") {
  oracle::Dense sq(2, 2, 1.0), rect(2, 3, 1.0), other(3, 3, 1.0);
  CHECK_THROWS_AS(potrf(view(rect)), UsageError);
  CHECK_THROWS_AS(trsm(view(rect), view(sq)), UsageError);
  CHECK_THROWS_AS(trsm(view(other), view(sq)), UsageError);
  CHECK_THROWS_AS(syrk(view(rect), view(other)), UsageError);
  CHECK_THROWS_AS(gemm(view(sq), view(rect), view(sq)), UsageError);
}

TEST_CASE("trsm with a zero diagonal reports the row") {
  oracle::Dense l(2, 2), b(1, 2, 1.0);
  l(0, 0) = 1.0;
  try {
    trsm(view(l), view(b));
    FAIL("expected failure");
  } catch (const NumericalError& e) {
    CHECK(e.pivot() == 1);
  }
}

// Random shapes include odd sizes to exercise the vector tails.
TEST_CASE("simd and scalar variants agree on random instances") {
  if (!isa_available(Isa::Avx2)) {
    MESSAGE("AVX2 not available; only the scalar path is exercised");
    return;
  }
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> dim(1, 37);
  for (int it = 0; it < 100; ++it) {
    const std::size_t m = dim(rng), k = dim(rng), n = dim(rng);
    {
      oracle::Dense a = oracle::random_spd(m, rng), s = a;
      scalar::potrf(view(s));
      avx2::potrf(view(a));
      CHECK(oracle::max_abs_diff(a, s) <= 1e-12);
      oracle::Dense b = oracle::random(n, m, rng), bs = b;
      scalar::trsm(view(s), view(bs));
      avx2::trsm(view(s), view(b));
      CHECK(oracle::max_abs_diff(b, bs) <= 1e-12);
    }
    {
      oracle::Dense a = oracle::random(m, k, rng), c = oracle::random(m, m, rng), cs = c;
      scalar::syrk(view(a), view(cs));
      avx2::syrk(view(a), view(c));
      CHECK(oracle::max_abs_diff(c, cs) <= 1e-12);
    }
    {
      oracle::Dense a = oracle::random(m, k, rng), b = oracle::random(n, k, rng), c = oracle::random(m, n, rng),
                    cs = c;
      scalar::gemm(view(a), view(b), view(cs));
      avx2::gemm(view(a), view(b), view(c));
      CHECK(oracle::max_abs_diff(c, cs) <= 1e-12);
    }
  }
}

TEST_CASE("kernels match dense oracles on random instances") {
  IsaGuard g;
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<std::size_t> dim(1, 24);
  for (Isa isa : isas()) {
    set_active_isa(isa);
    CAPTURE(isa_name(isa));
    for (int it = 0; it < 50; ++it) {
      const std::size_t m = dim(rng), k = dim(rng);
      oracle::Dense a = oracle::random_spd(m, rng);
      const oracle::Dense la = oracle::cholesky(a);
      potrf(view(a));
      CHECK(oracle::max_abs_diff(a, la) <= 1e-12);

      oracle::Dense b = oracle::random(k, m, rng);
      const oracle::Dense xb = oracle::solve_xlt(la, b);
      trsm(view(a), view(b));
      CHECK(oracle::max_abs_diff(b, xb) <= 1e-12);

      oracle::Dense x = oracle::random(m, k, rng), c = oracle::random(m, m, rng);
      oracle::Dense want = oracle::minus_abt(c, x, x);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) want(i, j) = c(i, j);  // upper untouched
      syrk(view(x), view(c));
      CHECK(oracle::max_abs_diff(c, want) <= 1e-12);

      oracle::Dense y = oracle::random(k, k, rng), d = oracle::random(m, k, rng);
      const oracle::Dense wd = oracle::minus_abt(d, x, y);
      gemm(view(x), view(y), view(d));
      CHECK(oracle::max_abs_diff(d, wd) <= 1e-12);
    }
  }
}

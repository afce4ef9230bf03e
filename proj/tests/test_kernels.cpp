// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "eqprop/kernels.hpp"
#include "support.hpp"

using namespace eqprop;
namespace k = eqprop::kernels;

namespace {

// Shapes chosen to hit the vector body, the 4-wide tail and empty loops.
const std::size_t kSizes[] = {0, 1, 3, 4, 5, 7, 8, 15, 16, 33, 64, 784};

double tol_for(std::size_t n) { return 1e-14 * static_cast<double>(n + 1); }

} // namespace

TEST_CASE("scalar kernels match naive loops") {
  const auto &s = k::scalar_table();
  const Vector a = testing::random_vector(37, 1, -1, 1), b = testing::random_vector(37, 2, -1, 1);
  double want = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    want += a[i] * b[i];
  CHECK(s.dot(a.data(), b.data(), a.size()) == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("AVX2 kernels agree with the scalar reference") {
  const k::KernelTable *v = k::avx2_table();
  if (v == nullptr) {
    MESSAGE("AVX2 variant not available on this machine");
    return;
  }
  const auto &s = k::scalar_table();
  for (std::size_t n : kSizes) {
    const Vector a = testing::random_vector(n, 10 + n, -1, 1);
    const Vector b = testing::random_vector(n, 20 + n, -1, 1);
    CHECK(std::abs(v->dot(a.data(), b.data(), n) - s.dot(a.data(), b.data(), n)) <= tol_for(n));

    Vector ys = b, yv = b;
    s.axpy(0.37, a.data(), ys.data(), n);
    v->axpy(0.37, a.data(), yv.data(), n);
    CHECK(testing::max_abs_diff(ys, yv) <= 1e-15);
  }
  for (std::size_t rows : {1u, 3u, 10u, 64u})
    for (std::size_t cols : {1u, 5u, 8u, 13u, 784u}) {
      const Vector m = testing::random_vector(rows * cols, rows * 1000 + cols, -1, 1);
      const Vector xc = testing::random_vector(cols, cols, -1, 1);
      const Vector xr = testing::random_vector(rows, rows + 7, -1, 1);

      Vector ys(rows, 0.5), yv(rows, 0.5);
      s.gemv_acc(m.data(), rows, cols, xc.data(), ys.data());
      v->gemv_acc(m.data(), rows, cols, xc.data(), yv.data());
      CHECK(testing::max_abs_diff(ys, yv) <= tol_for(cols));

      Vector zs(cols, -0.25), zv(cols, -0.25);
      s.gemv_t_acc(m.data(), rows, cols, xr.data(), zs.data());
      v->gemv_t_acc(m.data(), rows, cols, xr.data(), zv.data());
      CHECK(testing::max_abs_diff(zs, zv) <= tol_for(rows));

      Vector as = m, av = m;
      s.ger(-1.5, xr.data(), rows, xc.data(), cols, as.data());
      v->ger(-1.5, xr.data(), rows, xc.data(), cols, av.data());
      CHECK(testing::max_abs_diff(as, av) <= 1e-15);
    }
}

TEST_CASE("kernel selection") {
  const std::string before = k::active().name;
  CHECK(k::select("scalar"));
  CHECK(std::string(k::active().name) == k::scalar_table().name);
  CHECK_FALSE(k::select("neon-does-not-exist"));
  CHECK(std::string(k::active().name) == k::scalar_table().name);
  if (k::avx2_table() != nullptr) {
    CHECK(k::select("avx2"));
    CHECK(&k::active() == k::avx2_table());
  }
  CHECK(k::select(before));
}

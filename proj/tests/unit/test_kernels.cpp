#include <doctest.h>

#include <cmath>
#include <vector>

#include "gradproj/kernels.hpp"
#include "gradproj/rng.hpp"

using namespace gradproj;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-2.0, 2.0);
    return v;
}

// Entrywise |a - b| <= tol * scale[i], where scale bounds the magnitude of the
// summed terms. FMA contraction and blocked summation only move rounding.
void require_close(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& scale) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        INFO("entry " << i);
        CHECK(std::abs(a[i] - b[i]) <= 1e-14 * (scale[i] + 1.0));
    }
}

const std::size_t kSizes[] = {1, 2, 3, 4, 5, 7, 8, 9, 16, 17, 31};

}  // namespace

TEST_CASE("scalar kernels match hand-computed values") {
    const auto& k = kernels::scalar_table();
    const double x[] = {0.0, 0.0, 3.0, 4.0};
    double d[4] = {-1, -1, -1, -1};
    k.pairwise_sq_dist(x, d, 2, 2);
    CHECK(d[0] == 0.0);
    CHECK(d[1] == 25.0);
    CHECK(d[2] == 25.0);
    CHECK(d[3] == 0.0);

    const double a[] = {1, 2, 3, 4, 5, 6};  // 2x3
    const double b[] = {1, 0, 0, 1, 1, 1};  // 3x2
    double c[4] = {0, 0, 0, 0};
    k.gemm_nn(a, b, c, 2, 3, 2);
    CHECK(c[0] == 4.0);
    CHECK(c[1] == 5.0);
    CHECK(c[2] == 10.0);
    CHECK(c[3] == 11.0);
}

TEST_CASE("avx2 kernels are equivalent to the scalar reference") {
    const kernels::Table* simd = kernels::avx2_table();
    if (simd == nullptr) {
        MESSAGE("AVX2 variant unavailable on this machine; equivalence test skipped");
        return;
    }
    const auto& ref = kernels::scalar_table();
    Rng rng(1234);

    SUBCASE("dot, axpy, mul_acc") {
        for (std::size_t n : kSizes) {
            const auto a = random_vec(rng, n);
            const auto b = random_vec(rng, n);
            double scale = 0.0;
            for (std::size_t i = 0; i < n; ++i) scale += std::abs(a[i] * b[i]);
            CHECK(std::abs(ref.dot(a.data(), b.data(), n) - simd->dot(a.data(), b.data(), n)) <= 1e-14 * (scale + 1));

            auto y1 = random_vec(rng, n);
            auto y2 = y1;
            ref.axpy(0.37, a.data(), y1.data(), n);
            simd->axpy(0.37, a.data(), y2.data(), n);
            require_close(y1, y2, std::vector<double>(n, 4.0));

            ref.mul_acc(a.data(), b.data(), y1.data(), n);
            simd->mul_acc(a.data(), b.data(), y2.data(), n);
            require_close(y1, y2, std::vector<double>(n, 8.0));
        }
    }

    SUBCASE("gemm variants") {
        for (std::size_t m : {1, 3, 8}) {
            for (std::size_t kk : kSizes) {
                for (std::size_t n : {1, 2, 3, 5, 8}) {
                    CAPTURE(m);
                    CAPTURE(kk);
                    CAPTURE(n);
                    const std::vector<double> scale(m * n, 4.0 * static_cast<double>(kk));

                    const auto a = random_vec(rng, m * kk);
                    const auto b = random_vec(rng, kk * n);
                    std::vector<double> c1(m * n, 0.5), c2(m * n, 0.5);
                    ref.gemm_nn(a.data(), b.data(), c1.data(), m, kk, n);
                    simd->gemm_nn(a.data(), b.data(), c2.data(), m, kk, n);
                    require_close(c1, c2, scale);

                    const auto bt = random_vec(rng, n * kk);
                    std::fill(c1.begin(), c1.end(), 0.0);
                    std::fill(c2.begin(), c2.end(), 0.0);
                    ref.gemm_nt(a.data(), bt.data(), c1.data(), m, kk, n);
                    simd->gemm_nt(a.data(), bt.data(), c2.data(), m, kk, n);
                    require_close(c1, c2, scale);

                    const auto at = random_vec(rng, kk * m);
                    std::fill(c1.begin(), c1.end(), 0.0);
                    std::fill(c2.begin(), c2.end(), 0.0);
                    ref.gemm_tn(at.data(), b.data(), c1.data(), m, kk, n);
                    simd->gemm_tn(at.data(), b.data(), c2.data(), m, kk, n);
                    require_close(c1, c2, scale);
                }
            }
        }
    }

    SUBCASE("pairwise squared distances and their gradient") {
        for (std::size_t n : kSizes) {
            for (std::size_t p : {1, 2, 3, 5, 8}) {
                CAPTURE(n);
                CAPTURE(p);
                const auto x = random_vec(rng, n * p);
                std::vector<double> d1(n * n), d2(n * n);
                ref.pairwise_sq_dist(x.data(), d1.data(), n, p);
                simd->pairwise_sq_dist(x.data(), d2.data(), n, p);
                require_close(d1, d2, std::vector<double>(n * n, 16.0 * static_cast<double>(p)));
                for (std::size_t i = 0; i < n; ++i) {
                    CHECK(d2[i * n + i] == 0.0);
                    for (std::size_t j = 0; j < n; ++j) CHECK(d2[i * n + j] == d2[j * n + i]);
                }

                const auto g = random_vec(rng, n * n);
                std::vector<double> g1(n * p, 0.25), g2(n * p, 0.25);
                ref.pairwise_sq_dist_grad(g.data(), x.data(), g1.data(), n, p);
                simd->pairwise_sq_dist_grad(g.data(), x.data(), g2.data(), n, p);
                require_close(g1, g2, std::vector<double>(n * p, 32.0 * static_cast<double>(n)));
            }
        }
    }
}

TEST_CASE("each kernel variant is deterministic") {
    Rng rng(99);
    const std::size_t n = 23, p = 3;
    const auto x = random_vec(rng, n * p);
    for (const kernels::Table* t : {&kernels::scalar_table(), kernels::avx2_table()}) {
        if (t == nullptr) continue;
        std::vector<double> d1(n * n), d2(n * n);
        t->pairwise_sq_dist(x.data(), d1.data(), n, p);
        t->pairwise_sq_dist(x.data(), d2.data(), n, p);
        CHECK(d1 == d2);
    }
}

TEST_CASE("active table is one of the compiled variants") {
    const auto& active = kernels::active();
    const bool known = &active == &kernels::scalar_table() || &active == kernels::avx2_table();
    CHECK(known);
    CHECK(kernels::variant_name(active.variant) == active.name);
}

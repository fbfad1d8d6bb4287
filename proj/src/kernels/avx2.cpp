// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after a runtime CPU check (see dispatch.cpp).

#include "gradproj/kernels.hpp"

#include <immintrin.h>

#include <vector>

namespace gradproj::kernels {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double sum = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void mul_acc_avx2(const double* a, const double* b, double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] += a[i] * b[i];
}

// Packs the columns of b(k x n) as rows of bt(n x k).
std::vector<double> transposed(const double* b, std::size_t k, std::size_t n) {
    std::vector<double> bt(n * k);
    for (std::size_t t = 0; t < k; ++t) {
        for (std::size_t j = 0; j < n; ++j) bt[j * k + t] = b[t * n + j];
    }
    return bt;
}

void gemm_nt_avx2(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += dot_avx2(ai, b + j * k, k);
    }
}

void gemm_nn_avx2(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    if (n < 4) {
        // Narrow right-hand side (the n x 2 layouts): vectorize over k instead.
        const std::vector<double> bt = transposed(b, k, n);
        gemm_nt_avx2(a, bt.data(), c, m, k, n);
        return;
    }
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        for (std::size_t t = 0; t < k; ++t) axpy_avx2(a[i * k + t], b + t * n, ci, n);
    }
}

void gemm_tn_avx2(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    if (n < 4) {
        const std::vector<double> at = transposed(a, k, m);
        const std::vector<double> bt = transposed(b, k, n);
        gemm_nt_avx2(at.data(), bt.data(), c, m, k, n);
        return;
    }
    for (std::size_t t = 0; t < k; ++t) {
        const double* bt = b + t * n;
        for (std::size_t i = 0; i < m; ++i) axpy_avx2(a[t * m + i], bt, c + i * n, n);
    }
}

void pairwise_sq_dist_avx2(const double* x, double* d, std::size_t n, std::size_t p) {
    // Column-major copy so four neighbours j..j+3 load as one vector per coordinate.
    const std::vector<double> xt = transposed(x, n, p);
    for (std::size_t i = 0; i < n; ++i) {
        d[i * n + i] = 0.0;
        std::size_t j = i + 1;
        for (; j + 4 <= n; j += 4) {
            __m256d acc = _mm256_setzero_pd();
            for (std::size_t t = 0; t < p; ++t) {
                const __m256d diff = _mm256_sub_pd(_mm256_set1_pd(x[i * p + t]), _mm256_loadu_pd(xt.data() + t * n + j));
                acc = _mm256_fmadd_pd(diff, diff, acc);
            }
            alignas(32) double out[4];
            _mm256_store_pd(out, acc);
            for (std::size_t q = 0; q < 4; ++q) {
                d[i * n + j + q] = out[q];
                d[(j + q) * n + i] = out[q];
            }
        }
        for (; j < n; ++j) {
            double sum = 0.0;
            for (std::size_t t = 0; t < p; ++t) {
                const double diff = x[i * p + t] - x[j * p + t];
                sum += diff * diff;
            }
            d[i * n + j] = sum;
            d[j * n + i] = sum;
        }
    }
}

void pairwise_sq_dist_grad_avx2(const double* g, const double* x, double* dx, std::size_t n, std::size_t p) {
    // Vectorized over neighbours j with column-major x and transposed g. The
    // diagonal needs no masking: x_i - x_i contributes exactly zero.
    const std::vector<double> xt = transposed(x, n, p);
    const std::vector<double> gt = transposed(g, n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* gi = g + i * n;
        const double* gti = gt.data() + i * n;
        for (std::size_t t = 0; t < p; ++t) {
            const double* xcol = xt.data() + t * n;
            const double xi = x[i * p + t];
            const __m256d vxi = _mm256_set1_pd(xi);
            __m256d acc = _mm256_setzero_pd();
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                const __m256d w = _mm256_add_pd(_mm256_loadu_pd(gi + j), _mm256_loadu_pd(gti + j));
                acc = _mm256_fmadd_pd(w, _mm256_sub_pd(vxi, _mm256_loadu_pd(xcol + j)), acc);
            }
            double sum = hsum(acc);
            for (; j < n; ++j) sum += (gi[j] + gti[j]) * (xi - xcol[j]);
            dx[i * p + t] += 2.0 * sum;
        }
    }
}

}  // namespace

const Table& avx2_table_unchecked() {
    static const Table table{
        Variant::avx2,
        "avx2",
        dot_avx2,
        axpy_avx2,
        mul_acc_avx2,
        gemm_nn_avx2,
        gemm_nt_avx2,
        gemm_tn_avx2,
        pairwise_sq_dist_avx2,
        pairwise_sq_dist_grad_avx2,
    };
    return table;
}

}  // namespace gradproj::kernels

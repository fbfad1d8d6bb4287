#include "gradproj/kernels.hpp"

namespace gradproj::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void mul_acc_scalar(const double* a, const double* b, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a[i] * b[i];
}

void gemm_nn_scalar(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double sum = 0.0;
            for (std::size_t t = 0; t < k; ++t) sum += a[i * k + t] * b[t * n + j];
            c[i * n + j] += sum;
        }
    }
}

void gemm_nt_scalar(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            c[i * n + j] += dot_scalar(a + i * k, b + j * k, k);
        }
    }
}

void gemm_tn_scalar(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double sum = 0.0;
            for (std::size_t t = 0; t < k; ++t) sum += a[t * m + i] * b[t * n + j];
            c[i * n + j] += sum;
        }
    }
}

void pairwise_sq_dist_scalar(const double* x, double* d, std::size_t n, std::size_t p) {
    for (std::size_t i = 0; i < n; ++i) {
        d[i * n + i] = 0.0;
        for (std::size_t j = i + 1; j < n; ++j) {
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

void pairwise_sq_dist_grad_scalar(const double* g, const double* x, double* dx, std::size_t n, std::size_t p) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double w = 2.0 * (g[i * n + j] + g[j * n + i]);
            for (std::size_t t = 0; t < p; ++t) {
                dx[i * p + t] += w * (x[i * p + t] - x[j * p + t]);
            }
        }
    }
}

}  // namespace

const Table& scalar_table() {
    static const Table table{
        Variant::scalar,
        "scalar",
        dot_scalar,
        axpy_scalar,
        mul_acc_scalar,
        gemm_nn_scalar,
        gemm_nt_scalar,
        gemm_tn_scalar,
        pairwise_sq_dist_scalar,
        pairwise_sq_dist_grad_scalar,
    };
    return table;
}

}  // namespace gradproj::kernels

#pragma once

// Dense double-precision kernels behind the autodiff engine's hot loops.
//
// Every kernel has a scalar reference implementation. On x86-64 an AVX2/FMA
// variant is compiled as well and selected at runtime when the CPU supports
// it. The variants agree to rounding (FMA contracts differently) but each one
// is individually deterministic: a fixed reduction order per call.
//
// All matrices are row-major. The gemm and *_acc kernels accumulate into the
// output; callers zero it first when they want an assignment.

#include <cstddef>
#include <string_view>

namespace gradproj::kernels {

enum class Variant { scalar, avx2 };

struct Table {
    Variant variant;
    const char* name;

    // sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // y += a * b (elementwise)
    void (*mul_acc)(const double* a, const double* b, double* y, std::size_t n);

    // c(m x n) += a(m x k) * b(k x n)
    void (*gemm_nn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
    // c(m x n) += a(m x k) * b(n x k)^T
    void (*gemm_nt)(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
    // c(m x n) += a(k x m)^T * b(k x n)
    void (*gemm_tn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);

    // d(n x n) = squared Euclidean distances between rows of x(n x p).
    // The result is bit-symmetric with an exactly zero diagonal.
    void (*pairwise_sq_dist)(const double* x, double* d, std::size_t n, std::size_t p);
    // dx(n x p) += 2 * sum_j (g_ij + g_ji) * (x_i - x_j)
    void (*pairwise_sq_dist_grad)(const double* g, const double* x, double* dx, std::size_t n, std::size_t p);
};

const Table& scalar_table();

// nullptr when the variant was not compiled in or the CPU lacks AVX2/FMA.
const Table* avx2_table();

// The table used by the engine. Chosen once: the best supported variant,
// unless GRADPROJ_KERNELS=scalar|avx2 overrides it.
const Table& active();

std::string_view variant_name(Variant v);

}  // namespace gradproj::kernels

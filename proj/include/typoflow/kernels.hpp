#pragma once

#include <cstddef>
#include <cstdint>

namespace typoflow::kern {

// Dense f32 inner loops behind the tensor ops. Two implementations share one
// table layout: a scalar reference and an AVX2 variant selected at runtime.
// Both keep the same accumulation order (k strictly ascending per output
// element, no fma contraction), so their results are bitwise identical and
// the equivalence tests can compare exactly.
struct KernelTable {
    const char* name;

    // c[m,n] = sum_k a[m,k] * b[k,n]        a:[M,K] b:[K,N] c:[M,N]
    void (*gemm_nn)(const float* a, const float* b, float* c, int m, int k, int n);

    // c[i,j] = sum_l a[l,i] * b[l,j]        a:[L,M] b:[L,N] c:[M,N]  (a^T b)
    void (*gemm_tn)(const float* a, const float* b, float* c, int l, int m, int n);

    void (*vadd)(const float* x, const float* y, float* out, int64_t n);
    void (*vsub)(const float* x, const float* y, float* out, int64_t n);
    void (*vmul)(const float* x, const float* y, float* out, int64_t n);
    // y[i] += a * x[i]
    void (*vaxpy)(float a, const float* x, float* y, int64_t n);
    // out[i] = x[i] * a
    void (*vscale)(const float* x, float a, float* out, int64_t n);
};

enum class Backend { Scalar, Avx2 };

const KernelTable& scalar_table();
const KernelTable& avx2_table();  // valid to call only if avx2_supported()

bool avx2_supported();

// Active table. Default comes from CPU detection, overridable by the
// TYPOFLOW_KERNELS env var (values: "scalar", "avx2") or set_backend().
const KernelTable& active();
Backend active_backend();
void set_backend(Backend b);

// Reference loops, templated so the float64 evaluation path used by the
// gradient-check oracle shares the exact loop structure with the f32
// reference kernels without going through the dispatch table.
namespace ref {

template <typename T>
void gemm_nn(const T* a, const T* b, T* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        T* crow = c + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) crow[j] = T(0);
        for (int p = 0; p < k; ++p) {
            const T av = a[static_cast<size_t>(i) * k + p];
            const T* brow = b + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

template <typename T>
void gemm_tn(const T* a, const T* b, T* c, int l, int m, int n) {
    for (size_t i = 0; i < static_cast<size_t>(m) * n; ++i) c[i] = T(0);
    for (int p = 0; p < l; ++p) {
        const T* arow = a + static_cast<size_t>(p) * m;
        const T* brow = b + static_cast<size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            const T av = arow[i];
            T* crow = c + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

template <typename T>
void transpose(const T* a, T* out, int rows, int cols) {
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            out[static_cast<size_t>(j) * rows + i] = a[static_cast<size_t>(i) * cols + j];
}

}  // namespace ref

}  // namespace typoflow::kern

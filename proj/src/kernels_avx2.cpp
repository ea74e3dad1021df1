// AVX2 kernel variants. Same accumulation order as the scalar reference
// (k ascending per output element, separate mul and add), so outputs are
// bitwise equal to the scalar table. This file is compiled with -mavx2 and
// only reached after the runtime CPU check.

#include "typoflow/kernels.hpp"

#if defined(__AVX2__)
#include <immintrin.h>

namespace typoflow::kern {

namespace {

void a_gemm_nn(const float* a, const float* b, float* c, int m, int k, int n) {
    const int n8 = n & ~7;
    for (int i = 0; i < m; ++i) {
        float* crow = c + static_cast<size_t>(i) * n;
        int j = 0;
        for (; j < n8; j += 8) _mm256_storeu_ps(crow + j, _mm256_setzero_ps());
        for (; j < n; ++j) crow[j] = 0.f;
        const float* arow = a + static_cast<size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const __m256 av = _mm256_set1_ps(arow[p]);
            const float* brow = b + static_cast<size_t>(p) * n;
            j = 0;
            for (; j < n8; j += 8) {
                __m256 acc = _mm256_loadu_ps(crow + j);
                acc = _mm256_add_ps(acc, _mm256_mul_ps(av, _mm256_loadu_ps(brow + j)));
                _mm256_storeu_ps(crow + j, acc);
            }
            for (; j < n; ++j) crow[j] += arow[p] * brow[j];
        }
    }
}

void a_gemm_tn(const float* a, const float* b, float* c, int l, int m, int n) {
    const size_t total = static_cast<size_t>(m) * n;
    size_t z = 0;
    for (; z + 8 <= total; z += 8) _mm256_storeu_ps(c + z, _mm256_setzero_ps());
    for (; z < total; ++z) c[z] = 0.f;
    const int n8 = n & ~7;
    for (int p = 0; p < l; ++p) {
        const float* arow = a + static_cast<size_t>(p) * m;
        const float* brow = b + static_cast<size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            const __m256 av = _mm256_set1_ps(arow[i]);
            float* crow = c + static_cast<size_t>(i) * n;
            int j = 0;
            for (; j < n8; j += 8) {
                __m256 acc = _mm256_loadu_ps(crow + j);
                acc = _mm256_add_ps(acc, _mm256_mul_ps(av, _mm256_loadu_ps(brow + j)));
                _mm256_storeu_ps(crow + j, acc);
            }
            for (; j < n; ++j) crow[j] += arow[i] * brow[j];
        }
    }
}

void a_vadd(const float* x, const float* y, float* out, int64_t n) {
    int64_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    for (; i < n; ++i) out[i] = x[i] + y[i];
}

void a_vsub(const float* x, const float* y, float* out, int64_t n) {
    int64_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_sub_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    for (; i < n; ++i) out[i] = x[i] - y[i];
}

void a_vmul(const float* x, const float* y, float* out, int64_t n) {
    int64_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    for (; i < n; ++i) out[i] = x[i] * y[i];
}

void a_vaxpy(float a, const float* x, float* y, int64_t n) {
    const __m256 av = _mm256_set1_ps(a);
    int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 acc = _mm256_loadu_ps(y + i);
        acc = _mm256_add_ps(acc, _mm256_mul_ps(av, _mm256_loadu_ps(x + i)));
        _mm256_storeu_ps(y + i, acc);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void a_vscale(const float* x, float a, float* out, int64_t n) {
    const __m256 av = _mm256_set1_ps(a);
    int64_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_mul_ps(av, _mm256_loadu_ps(x + i)));
    for (; i < n; ++i) out[i] = x[i] * a;
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable t{"avx2", a_gemm_nn, a_gemm_tn,
                               a_vadd, a_vsub,    a_vmul,
                               a_vaxpy, a_vscale};
    return t;
}

}  // namespace typoflow::kern

#else

namespace typoflow::kern {
// Built without AVX2 support; dispatch never hands this out.
const KernelTable& avx2_table() { return scalar_table(); }
}  // namespace typoflow::kern

#endif

#include "typoflow/kernels.hpp"

namespace typoflow::kern {

namespace {

void s_gemm_nn(const float* a, const float* b, float* c, int m, int k, int n) {
    ref::gemm_nn<float>(a, b, c, m, k, n);
}

void s_gemm_tn(const float* a, const float* b, float* c, int l, int m, int n) {
    ref::gemm_tn<float>(a, b, c, l, m, n);
}

void s_vadd(const float* x, const float* y, float* out, int64_t n) {
    for (int64_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

void s_vsub(const float* x, const float* y, float* out, int64_t n) {
    for (int64_t i = 0; i < n; ++i) out[i] = x[i] - y[i];
}

void s_vmul(const float* x, const float* y, float* out, int64_t n) {
    for (int64_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void s_vaxpy(float a, const float* x, float* y, int64_t n) {
    for (int64_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void s_vscale(const float* x, float a, float* out, int64_t n) {
    for (int64_t i = 0; i < n; ++i) out[i] = x[i] * a;
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable t{"scalar", s_gemm_nn, s_gemm_tn,
                               s_vadd,   s_vsub,    s_vmul,
                               s_vaxpy,  s_vscale};
    return t;
}

}  // namespace typoflow::kern

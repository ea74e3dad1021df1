#include "typoflow/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace typoflow::kern {

bool avx2_supported() {
#if defined(__GNUC__) && (defined(__x86_64__) || defined(__i386__))
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

namespace {

Backend initial_backend() {
    if (const char* env = std::getenv("TYPOFLOW_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::Scalar;
        if (std::strcmp(env, "avx2") == 0) {
            if (!avx2_supported())
                throw std::runtime_error("TYPOFLOW_KERNELS=avx2 but CPU lacks AVX2");
            return Backend::Avx2;
        }
        throw std::runtime_error(std::string("unknown TYPOFLOW_KERNELS value: ") + env);
    }
    return avx2_supported() ? Backend::Avx2 : Backend::Scalar;
}

Backend g_backend = initial_backend();

}  // namespace

const KernelTable& active() {
    return g_backend == Backend::Avx2 ? avx2_table() : scalar_table();
}

Backend active_backend() { return g_backend; }

void set_backend(Backend b) {
    if (b == Backend::Avx2 && !avx2_supported())
        throw std::runtime_error("AVX2 backend requested but not supported by this CPU");
    g_backend = b;
}

}  // namespace typoflow::kern

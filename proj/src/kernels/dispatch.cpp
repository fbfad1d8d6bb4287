#include "gradproj/kernels.hpp"

#include <cstdlib>
#include <string>

namespace gradproj::kernels {

#if defined(GRADPROJ_HAVE_AVX2)
const Table& avx2_table_unchecked();
#endif

namespace {

bool cpu_has_avx2_fma() {
#if defined(GRADPROJ_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Table& select() {
    const Table* simd = avx2_table();
    if (const char* env = std::getenv("GRADPROJ_KERNELS")) {
        const std::string want(env);
        if (want == "scalar") return scalar_table();
        if (want == "avx2" && simd != nullptr) return *simd;
    }
    return simd != nullptr ? *simd : scalar_table();
}

}  // namespace

const Table* avx2_table() {
#if defined(GRADPROJ_HAVE_AVX2)
    static const bool supported = cpu_has_avx2_fma();
    return supported ? &avx2_table_unchecked() : nullptr;
#else
    (void)cpu_has_avx2_fma;
    return nullptr;
#endif
}

const Table& active() {
    static const Table& table = select();
    return table;
}

std::string_view variant_name(Variant v) {
    switch (v) {
        case Variant::scalar:
            return "scalar";
        case Variant::avx2:
            return "avx2";
    }
    return "unknown";
}

}  // namespace gradproj::kernels

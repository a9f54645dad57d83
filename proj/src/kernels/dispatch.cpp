#include <atomic>
#include <cstdlib>
#include <string_view>

#include "jscreen/kernels.hpp"
#include "kernels_impl.hpp"

namespace jscreen::kernels {
namespace {

constexpr KernelTable kScalar{Isa::scalar, "scalar", detail::dot_scalar, detail::axpy_scalar,
                              detail::gemv_t_scalar};

#if defined(JSCREEN_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::avx2, "avx2", detail::dot_avx2, detail::axpy_avx2,
                            detail::gemv_t_avx2};
#endif

#if defined(JSCREEN_HAVE_NEON)
constexpr KernelTable kNeon{Isa::neon, "neon", detail::dot_neon, detail::axpy_neon,
                            detail::gemv_t_neon};
#endif

const KernelTable* detect() noexcept {
    if (const char* forced = std::getenv("JSCREEN_KERNELS")) {
        const std::string_view name(forced);
        if (name == "scalar") return &kScalar;
        if (name == "avx2" && avx2_table()) return avx2_table();
        if (name == "neon" && neon_table()) return neon_table();
    }
    if (const KernelTable* t = avx2_table()) return t;
    if (const KernelTable* t = neon_table()) return t;
    return &kScalar;
}

std::atomic<const KernelTable*>& slot() noexcept {
    static std::atomic<const KernelTable*> current{detect()};
    return current;
}

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

const KernelTable* avx2_table() noexcept {
#if defined(JSCREEN_HAVE_AVX2)
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &kAvx2 : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable* neon_table() noexcept {
#if defined(JSCREEN_HAVE_NEON)
    return &kNeon;  // mandatory on AArch64
#else
    return nullptr;
#endif
}

const KernelTable& active() noexcept { return *slot().load(std::memory_order_relaxed); }

bool select(Isa isa) noexcept {
    const KernelTable* t = nullptr;
    switch (isa) {
        case Isa::scalar: t = &kScalar; break;
        case Isa::avx2: t = avx2_table(); break;
        case Isa::neon: t = neon_table(); break;
    }
    if (!t) return false;
    slot().store(t, std::memory_order_relaxed);
    return true;
}

std::string_view isa_name(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
        case Isa::neon: return "neon";
    }
    return "unknown";
}

}  // namespace jscreen::kernels

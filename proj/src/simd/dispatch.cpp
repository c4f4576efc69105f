#include <atomic>
#include <cstdlib>
#include <string>

#include "demonet/simd/kernels.hpp"

namespace demonet::simd {
namespace {

const KernelTable* select_default() {
    if (const char* env = std::getenv("DEMONET_SIMD"); env && std::string(env) == "scalar")
        return &scalar_kernels();
    if (const KernelTable* t = avx2_kernels()) return t;
    return &scalar_kernels();
}

std::atomic<const KernelTable*>& active() {
    static std::atomic<const KernelTable*> table{select_default()};
    return table;
}

}  // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
    }
    return "unknown";
}

const KernelTable& kernels() { return *active().load(std::memory_order_relaxed); }

bool force_isa(Isa isa) {
    const KernelTable* t = isa == Isa::avx2 ? avx2_kernels() : &scalar_kernels();
    if (!t) return false;
    active().store(t, std::memory_order_relaxed);
    return true;
}

}  // namespace demonet::simd

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels_impl.hpp"

namespace tvec::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* pick_default() {
    if (const char* env = std::getenv("TVEC_ISA")) {
        const std::string want(env);
        if (want == "scalar") return &detail::kScalarTable;
        if (want == "avx2" && isa_supported(Isa::kAvx2)) return table_for(Isa::kAvx2);
    }
    if (const KernelTable* t = table_for(Isa::kAvx2)) return t;
    return &detail::kScalarTable;
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{pick_default()};
    return table;
}

}  // namespace

const KernelTable& scalar_table() { return detail::kScalarTable; }

bool isa_supported(Isa isa) {
    switch (isa) {
        case Isa::kScalar:
            return true;
        case Isa::kAvx2:
            return detail::avx2_table_if_compiled() != nullptr && cpu_has_avx2();
    }
    return false;
}

const KernelTable* table_for(Isa isa) {
    if (!isa_supported(isa)) return nullptr;
    switch (isa) {
        case Isa::kScalar:
            return &detail::kScalarTable;
        case Isa::kAvx2:
            return detail::avx2_table_if_compiled();
    }
    return nullptr;
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

void set_active(Isa isa) {
    const KernelTable* t = table_for(isa);
    if (t == nullptr)
        throw std::invalid_argument("kernel ISA not supported here: " + std::string(isa_name(isa)));
    current().store(t, std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::kScalar:
            return "scalar";
        case Isa::kAvx2:
            return "avx2";
    }
    return "unknown";
}

}  // namespace tvec::kernels

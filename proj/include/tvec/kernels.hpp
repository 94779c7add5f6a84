#pragma once

// Dense f64 inner-loop kernels with a scalar reference implementation and
// an AVX2/FMA variant picked at runtime.
//
// The scalar table is the reference: every other table must agree with it
// to within accumulated rounding (checked in tests/test_kernels.cpp).
// Results are bit-reproducible for a fixed ISA, not across ISAs.

#include <cstddef>
#include <span>
#include <string_view>

namespace tvec::kernels {

enum class Isa { kScalar, kAvx2 };

struct KernelTable {
    Isa isa;
    const char* name;
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    double (*squared_distance)(const double* a, const double* b, std::size_t n);
    // out[r] = <rows[r*stride .. r*stride+n), q> for r in [0, count)
    void (*row_dots)(const double* rows, std::size_t count, std::size_t stride,
                     const double* q, std::size_t n, double* out);
};

const KernelTable& scalar_table();

// nullptr when the ISA is not compiled in or the CPU lacks it.
const KernelTable* table_for(Isa isa);

bool isa_supported(Isa isa);

// Table used by the rest of the library. Defaults to the widest supported
// ISA; the TVEC_ISA environment variable ("scalar" or "avx2") overrides it.
const KernelTable& active();

// Throws std::invalid_argument if the ISA is unsupported on this machine.
void set_active(Isa isa);

std::string_view isa_name(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active().axpy(alpha, x.data(), y.data(), x.size());
}

inline double squared_norm(std::span<const double> a) {
    return active().dot(a.data(), a.data(), a.size());
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    return active().squared_distance(a.data(), b.data(), a.size());
}

}  // namespace tvec::kernels

#include "kernels_impl.hpp"

namespace tvec::kernels::detail {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double squared_distance_scalar(const double* a, const double* b, std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double diff = a[i] - b[i];
        sum += diff * diff;
    }
    return sum;
}

void row_dots_scalar(const double* rows, std::size_t count, std::size_t stride,
                     const double* q, std::size_t n, double* out) {
    for (std::size_t r = 0; r < count; ++r) out[r] = dot_scalar(rows + r * stride, q, n);
}

}  // namespace

const KernelTable kScalarTable{Isa::kScalar,           "scalar", &dot_scalar, &axpy_scalar,
                               &squared_distance_scalar, &row_dots_scalar};

}  // namespace tvec::kernels::detail

#include "kernels_impl.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#define TVEC_AVX2 __attribute__((target("avx2,fma")))

namespace tvec::kernels::detail {

namespace {

TVEC_AVX2 inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    const __m128d swapped = _mm_unpackhi_pd(pair, pair);
    return _mm_cvtsd_f64(_mm_add_sd(pair, swapped));
}

TVEC_AVX2 double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double sum = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

TVEC_AVX2 void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

TVEC_AVX2 double squared_distance_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(diff, diff, acc);
    }
    double sum = hsum(acc);
    for (; i < n; ++i) {
        const double diff = a[i] - b[i];
        sum += diff * diff;
    }
    return sum;
}

TVEC_AVX2 void row_dots_avx2(const double* rows, std::size_t count, std::size_t stride,
                             const double* q, std::size_t n, double* out) {
    for (std::size_t r = 0; r < count; ++r) out[r] = dot_avx2(rows + r * stride, q, n);
}

}  // namespace

const KernelTable kAvx2Table{Isa::kAvx2,           "avx2", &dot_avx2, &axpy_avx2,
                             &squared_distance_avx2, &row_dots_avx2};

const KernelTable* avx2_table_if_compiled() { return &kAvx2Table; }

}  // namespace tvec::kernels::detail

#else

namespace tvec::kernels::detail {
const KernelTable* avx2_table_if_compiled() { return nullptr; }
}  // namespace tvec::kernels::detail

#endif

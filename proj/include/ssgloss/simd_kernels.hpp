#pragma once

#include <cstddef>

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#include <immintrin.h>
#define SSGLOSS_HAVE_AVX2_PATH 1
#endif

// Inner loops of the fast kernel. A window is `rows` runs of `run`
// contiguous values spaced `step` apart; every sampled window of a center is
// the center's window displaced by shifts[k].

namespace ssgloss::simd {

namespace scalar {

inline void window_sq_distances(const double* base, const std::ptrdiff_t* shifts, std::size_t n, int rows,
                                std::ptrdiff_t step, int run, double* out) noexcept {
    for (std::size_t k = 0; k < n; ++k) {
        const double* other = base + shifts[k];
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
        for (int r = 0; r < rows; ++r) {
            const double* a = base + r * step;
            const double* b = other + r * step;
            int i = 0;
            for (; i + 4 <= run; i += 4) {
                const double d0 = a[i] - b[i];
                const double d1 = a[i + 1] - b[i + 1];
                const double d2 = a[i + 2] - b[i + 2];
                const double d3 = a[i + 3] - b[i + 3];
                s0 += d0 * d0;
                s1 += d1 * d1;
                s2 += d2 * d2;
                s3 += d3 * d3;
            }
            for (; i < run; ++i) {
                const double d = a[i] - b[i];
                s0 += d * d;
            }
        }
        out[k] = (s0 + s1) + (s2 + s3);
    }
}

inline void window_cross(const double* base, const std::ptrdiff_t* shifts, std::size_t n, int rows,
                         std::ptrdiff_t step, int run, double* out) noexcept {
    for (std::size_t k = 0; k < n; ++k) {
        const double* other = base + shifts[k];
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
        for (int r = 0; r < rows; ++r) {
            const double* a = base + r * step;
            const double* b = other + r * step;
            int i = 0;
            for (; i + 4 <= run; i += 4) {
                s0 += a[i] * b[i];
                s1 += a[i + 1] * b[i + 1];
                s2 += a[i + 2] * b[i + 2];
                s3 += a[i + 3] * b[i + 3];
            }
            for (; i < run; ++i) s0 += a[i] * b[i];
        }
        out[k] = (s0 + s1) + (s2 + s3);
    }
}

// grad_a += coef * (a - b), grad_b -= coef * (a - b), row by row.
inline void scatter_pair(const double* a, const double* b, std::ptrdiff_t src_step, double* grad_a, double* grad_b,
                         std::ptrdiff_t dst_step, int rows, int run, double coef) noexcept {
    for (int r = 0; r < rows; ++r) {
        const double* ar = a + r * src_step;
        const double* br = b + r * src_step;
        double* ga = grad_a + r * dst_step;
        double* gb = grad_b + r * dst_step;
        for (int i = 0; i < run; ++i) {
            const double term = coef * (ar[i] - br[i]);
            ga[i] += term;
            gb[i] -= term;
        }
    }
}

} // namespace scalar

#ifdef SSGLOSS_HAVE_AVX2_PATH
namespace avx2 {

__attribute__((target("avx2,fma"))) inline __m256i tail_mask(int tail) noexcept {
    return _mm256_setr_epi64x(tail > 0 ? -1 : 0, tail > 1 ? -1 : 0, tail > 2 ? -1 : 0, 0);
}

__attribute__((target("avx2,fma"))) inline double horizontal_sum(__m256d v) noexcept {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

// Four sampled windows per pass: the center window is loaded once for all of
// them and the four accumulator chains hide the FMA latency.
__attribute__((target("avx2,fma"))) inline void window_sq_distances(const double* base, const std::ptrdiff_t* shifts,
                                                                     std::size_t n, int rows, std::ptrdiff_t step,
                                                                     int run, double* out) noexcept {
    const int full = run / 4;
    const int tail = run % 4;
    const __m256i mask = tail_mask(tail);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const double* o0 = base + shifts[k];
        const double* o1 = base + shifts[k + 1];
        const double* o2 = base + shifts[k + 2];
        const double* o3 = base + shifts[k + 3];
        __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
        __m256d acc2 = _mm256_setzero_pd(), acc3 = _mm256_setzero_pd();
        for (int r = 0; r < rows; ++r) {
            const std::ptrdiff_t row = r * step;
            const double* a = base + row;
            for (int v = 0; v < full; ++v) {
                const __m256d x = _mm256_loadu_pd(a + 4 * v);
                const __m256d d0 = _mm256_sub_pd(x, _mm256_loadu_pd(o0 + row + 4 * v));
                const __m256d d1 = _mm256_sub_pd(x, _mm256_loadu_pd(o1 + row + 4 * v));
                const __m256d d2 = _mm256_sub_pd(x, _mm256_loadu_pd(o2 + row + 4 * v));
                const __m256d d3 = _mm256_sub_pd(x, _mm256_loadu_pd(o3 + row + 4 * v));
                acc0 = _mm256_fmadd_pd(d0, d0, acc0);
                acc1 = _mm256_fmadd_pd(d1, d1, acc1);
                acc2 = _mm256_fmadd_pd(d2, d2, acc2);
                acc3 = _mm256_fmadd_pd(d3, d3, acc3);
            }
            if (tail) {
                const int o = 4 * full;
                const __m256d x = _mm256_maskload_pd(a + o, mask);
                const __m256d d0 = _mm256_sub_pd(x, _mm256_maskload_pd(o0 + row + o, mask));
                const __m256d d1 = _mm256_sub_pd(x, _mm256_maskload_pd(o1 + row + o, mask));
                const __m256d d2 = _mm256_sub_pd(x, _mm256_maskload_pd(o2 + row + o, mask));
                const __m256d d3 = _mm256_sub_pd(x, _mm256_maskload_pd(o3 + row + o, mask));
                acc0 = _mm256_fmadd_pd(d0, d0, acc0);
                acc1 = _mm256_fmadd_pd(d1, d1, acc1);
                acc2 = _mm256_fmadd_pd(d2, d2, acc2);
                acc3 = _mm256_fmadd_pd(d3, d3, acc3);
            }
        }
        out[k] = horizontal_sum(acc0);
        out[k + 1] = horizontal_sum(acc1);
        out[k + 2] = horizontal_sum(acc2);
        out[k + 3] = horizontal_sum(acc3);
    }
    for (; k + 2 <= n; k += 2) {
        const double* o0 = base + shifts[k];
        const double* o1 = base + shifts[k + 1];
        __m256d acc00 = _mm256_setzero_pd(), acc01 = _mm256_setzero_pd();
        __m256d acc10 = _mm256_setzero_pd(), acc11 = _mm256_setzero_pd();
        for (int r = 0; r < rows; ++r) {
            const double* a = base + r * step;
            const double* b0 = o0 + r * step;
            const double* b1 = o1 + r * step;
            int v = 0;
            for (; v + 2 <= full; v += 2) {
                const __m256d x0 = _mm256_loadu_pd(a + 4 * v);
                const __m256d x1 = _mm256_loadu_pd(a + 4 * v + 4);
                const __m256d d00 = _mm256_sub_pd(x0, _mm256_loadu_pd(b0 + 4 * v));
                const __m256d d01 = _mm256_sub_pd(x1, _mm256_loadu_pd(b0 + 4 * v + 4));
                const __m256d d10 = _mm256_sub_pd(x0, _mm256_loadu_pd(b1 + 4 * v));
                const __m256d d11 = _mm256_sub_pd(x1, _mm256_loadu_pd(b1 + 4 * v + 4));
                acc00 = _mm256_fmadd_pd(d00, d00, acc00);
                acc01 = _mm256_fmadd_pd(d01, d01, acc01);
                acc10 = _mm256_fmadd_pd(d10, d10, acc10);
                acc11 = _mm256_fmadd_pd(d11, d11, acc11);
            }
            if (v < full) {
                const __m256d x = _mm256_loadu_pd(a + 4 * v);
                const __m256d d0 = _mm256_sub_pd(x, _mm256_loadu_pd(b0 + 4 * v));
                const __m256d d1 = _mm256_sub_pd(x, _mm256_loadu_pd(b1 + 4 * v));
                acc00 = _mm256_fmadd_pd(d0, d0, acc00);
                acc10 = _mm256_fmadd_pd(d1, d1, acc10);
            }
            if (tail) {
                const __m256d x = _mm256_maskload_pd(a + 4 * full, mask);
                const __m256d d0 = _mm256_sub_pd(x, _mm256_maskload_pd(b0 + 4 * full, mask));
                const __m256d d1 = _mm256_sub_pd(x, _mm256_maskload_pd(b1 + 4 * full, mask));
                acc01 = _mm256_fmadd_pd(d0, d0, acc01);
                acc11 = _mm256_fmadd_pd(d1, d1, acc11);
            }
        }
        out[k] = horizontal_sum(_mm256_add_pd(acc00, acc01));
        out[k + 1] = horizontal_sum(_mm256_add_pd(acc10, acc11));
    }
    for (; k < n; ++k) {
        const double* other = base + shifts[k];
        __m256d acc0 = _mm256_setzero_pd();
        __m256d acc1 = _mm256_setzero_pd();
        for (int r = 0; r < rows; ++r) {
            const double* a = base + r * step;
            const double* b = other + r * step;
            int v = 0;
            for (; v + 2 <= full; v += 2) {
                const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + 4 * v), _mm256_loadu_pd(b + 4 * v));
                const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + 4 * v + 4), _mm256_loadu_pd(b + 4 * v + 4));
                acc0 = _mm256_fmadd_pd(d0, d0, acc0);
                acc1 = _mm256_fmadd_pd(d1, d1, acc1);
            }
            if (v < full) {
                const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + 4 * v), _mm256_loadu_pd(b + 4 * v));
                acc0 = _mm256_fmadd_pd(d, d, acc0);
            }
            if (tail) {
                const __m256d d =
                    _mm256_sub_pd(_mm256_maskload_pd(a + 4 * full, mask), _mm256_maskload_pd(b + 4 * full, mask));
                acc1 = _mm256_fmadd_pd(d, d, acc1);
            }
        }
        out[k] = horizontal_sum(_mm256_add_pd(acc0, acc1));
    }
}

__attribute__((target("avx2,fma"))) inline void window_cross(const double* base, const std::ptrdiff_t* shifts,
                                                              std::size_t n, int rows, std::ptrdiff_t step, int run,
                                                              double* out) noexcept {
    const int full = run / 4;
    const int tail = run % 4;
    const __m256i mask = tail_mask(tail);
    for (std::size_t k = 0; k < n; ++k) {
        const double* other = base + shifts[k];
        __m256d acc0 = _mm256_setzero_pd();
        __m256d acc1 = _mm256_setzero_pd();
        for (int r = 0; r < rows; ++r) {
            const double* a = base + r * step;
            const double* b = other + r * step;
            int v = 0;
            for (; v + 2 <= full; v += 2) {
                acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + 4 * v), _mm256_loadu_pd(b + 4 * v), acc0);
                acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + 4 * v + 4), _mm256_loadu_pd(b + 4 * v + 4), acc1);
            }
            if (v < full) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + 4 * v), _mm256_loadu_pd(b + 4 * v), acc0);
            if (tail)
                acc1 = _mm256_fmadd_pd(_mm256_maskload_pd(a + 4 * full, mask), _mm256_maskload_pd(b + 4 * full, mask),
                                       acc1);
        }
        out[k] = horizontal_sum(_mm256_add_pd(acc0, acc1));
    }
}

// Windows of a and b may overlap in the gradient buffer; each vector is
// stored before the next overlapping load, so every update lands.
__attribute__((target("avx2,fma"))) inline void scatter_pair(const double* a, const double* b, std::ptrdiff_t src_step,
                                                              double* grad_a, double* grad_b, std::ptrdiff_t dst_step,
                                                              int rows, int run, double coef) noexcept {
    const int full = run / 4;
    const int tail = run % 4;
    const __m256i mask = tail_mask(tail);
    const __m256d c = _mm256_set1_pd(coef);
    for (int r = 0; r < rows; ++r) {
        const double* ar = a + r * src_step;
        const double* br = b + r * src_step;
        double* ga = grad_a + r * dst_step;
        double* gb = grad_b + r * dst_step;
        for (int v = 0; v < full; ++v) {
            const __m256d term = _mm256_mul_pd(c, _mm256_sub_pd(_mm256_loadu_pd(ar + 4 * v), _mm256_loadu_pd(br + 4 * v)));
            _mm256_storeu_pd(ga + 4 * v, _mm256_add_pd(_mm256_loadu_pd(ga + 4 * v), term));
            _mm256_storeu_pd(gb + 4 * v, _mm256_sub_pd(_mm256_loadu_pd(gb + 4 * v), term));
        }
        if (tail) {
            const int o = 4 * full;
            const __m256d term =
                _mm256_mul_pd(c, _mm256_sub_pd(_mm256_maskload_pd(ar + o, mask), _mm256_maskload_pd(br + o, mask)));
            _mm256_maskstore_pd(ga + o, mask, _mm256_add_pd(_mm256_maskload_pd(ga + o, mask), term));
            _mm256_maskstore_pd(gb + o, mask, _mm256_sub_pd(_mm256_maskload_pd(gb + o, mask), term));
        }
    }
}

} // namespace avx2
#endif

inline bool avx2_available() noexcept {
#ifdef SSGLOSS_HAVE_AVX2_PATH
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return ok;
#else
    return false;
#endif
}

// Dispatching entry points. `use_simd` lets callers pin the portable path.
inline void window_sq_distances(bool use_simd, const double* base, const std::ptrdiff_t* shifts, std::size_t n,
                                int rows, std::ptrdiff_t step, int run, double* out) noexcept {
#ifdef SSGLOSS_HAVE_AVX2_PATH
    if (use_simd && avx2_available()) return avx2::window_sq_distances(base, shifts, n, rows, step, run, out);
#endif
    (void)use_simd;
    scalar::window_sq_distances(base, shifts, n, rows, step, run, out);
}

inline void window_cross(bool use_simd, const double* base, const std::ptrdiff_t* shifts, std::size_t n, int rows,
                         std::ptrdiff_t step, int run, double* out) noexcept {
#ifdef SSGLOSS_HAVE_AVX2_PATH
    if (use_simd && avx2_available()) return avx2::window_cross(base, shifts, n, rows, step, run, out);
#endif
    (void)use_simd;
    scalar::window_cross(base, shifts, n, rows, step, run, out);
}

inline void scatter_pair(bool use_simd, const double* a, const double* b, std::ptrdiff_t src_step, double* grad_a,
                         double* grad_b, std::ptrdiff_t dst_step, int rows, int run, double coef) noexcept {
#ifdef SSGLOSS_HAVE_AVX2_PATH
    if (use_simd && avx2_available()) return avx2::scatter_pair(a, b, src_step, grad_a, grad_b, dst_step, rows, run, coef);
#endif
    (void)use_simd;
    scalar::scatter_pair(a, b, src_step, grad_a, grad_b, dst_step, rows, run, coef);
}

} // namespace ssgloss::simd

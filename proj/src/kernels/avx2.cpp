#include "ceph/simd.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

#define CEPH_AVX2 __attribute__((target("avx2")))

namespace ceph::simd {

namespace {

CEPH_AVX2 void outer_product(std::span<const double> rows, std::span<const double> cols, std::span<double> out) {
    const std::size_t w = cols.size();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const __m256d a = _mm256_set1_pd(rows[r]);
        double* dst = out.data() + r * w;
        std::size_t c = 0;
        for (; c + 4 <= w; c += 4) _mm256_storeu_pd(dst + c, _mm256_mul_pd(a, _mm256_loadu_pd(cols.data() + c)));
        for (; c < w; ++c) dst[c] = rows[r] * cols[c];
    }
}

CEPH_AVX2 void accumulate(std::span<double> acc, std::span<const double> in) {
    const std::size_t n = acc.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(acc.data() + i, _mm256_add_pd(_mm256_loadu_pd(acc.data() + i), _mm256_loadu_pd(in.data() + i)));
    }
    for (; i < n; ++i) acc[i] += in[i];
}

CEPH_AVX2 void scale(std::span<double> data, double factor) {
    const __m256d f = _mm256_set1_pd(factor);
    const std::size_t n = data.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(data.data() + i, _mm256_mul_pd(_mm256_loadu_pd(data.data() + i), f));
    for (; i < n; ++i) data[i] *= factor;
}

CEPH_AVX2 double horizontal_sum(__m256d v) {
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, v);
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

CEPH_AVX2 double sum(std::span<const double> data) {
    const std::size_t n = data.size();
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(data.data() + i));
    double s = horizontal_sum(acc);
    for (; i < n; ++i) s += data[i];
    return s;
}

CEPH_AVX2 double masked_sum(std::span<const double> data, std::span<const std::uint8_t> mask) {
    const std::size_t n = data.size();
    __m256d acc = _mm256_setzero_pd();
    const __m256i zero = _mm256_setzero_si256();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        std::int32_t bytes;
        __builtin_memcpy(&bytes, mask.data() + i, 4);
        const __m256i m64 = _mm256_cvtepu8_epi64(_mm_cvtsi32_si128(bytes));
        const __m256d keep = _mm256_castsi256_pd(_mm256_xor_si256(_mm256_cmpeq_epi64(m64, zero), _mm256_set1_epi64x(-1)));
        acc = _mm256_add_pd(acc, _mm256_and_pd(keep, _mm256_loadu_pd(data.data() + i)));
    }
    double s = horizontal_sum(acc);
    for (; i < n; ++i) {
        if (mask[i]) s += data[i];
    }
    return s;
}

CEPH_AVX2 std::size_t argmax(std::span<const double> data) {
    const std::size_t n = data.size();
    if (n == 0) return 0;
    double best = data[0];
    std::size_t i = 0;
    if (n >= 4) {
        __m256d m = _mm256_loadu_pd(data.data());
        for (i = 4; i + 4 <= n; i += 4) m = _mm256_max_pd(m, _mm256_loadu_pd(data.data() + i));
        alignas(32) double lanes[4];
        _mm256_store_pd(lanes, m);
        for (double v : lanes) best = v > best ? v : best;
    }
    for (; i < n; ++i) best = data[i] > best ? data[i] : best;
    const __m256d target = _mm256_set1_pd(best);
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        const int hit = _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(data.data() + j), target, _CMP_EQ_OQ));
        if (hit) return j + static_cast<std::size_t>(__builtin_ctz(static_cast<unsigned>(hit)));
    }
    for (; j < n; ++j) {
        if (data[j] == best) return j;
    }
    return 0;
}

CEPH_AVX2 void widen(std::span<const float> in, std::span<double> out) {
    const std::size_t n = in.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out.data() + i, _mm256_cvtps_pd(_mm_loadu_ps(in.data() + i)));
    for (; i < n; ++i) out[i] = static_cast<double>(in[i]);
}

CEPH_AVX2 void narrow(std::span<const double> in, std::span<float> out) {
    const std::size_t n = in.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm_storeu_ps(out.data() + i, _mm256_cvtpd_ps(_mm256_loadu_pd(in.data() + i)));
    for (; i < n; ++i) out[i] = static_cast<float>(in[i]);
}

constexpr Kernels kAvx2{Isa::Avx2, outer_product, accumulate, scale, sum, masked_sum, argmax, widen, narrow};

}  // namespace

const Kernels* avx2_kernels() noexcept {
    static const bool usable = __builtin_cpu_supports("avx2");
    return usable ? &kAvx2 : nullptr;
}

}  // namespace ceph::simd

#else

namespace ceph::simd {
const Kernels* avx2_kernels() noexcept { return nullptr; }
}  // namespace ceph::simd

#endif

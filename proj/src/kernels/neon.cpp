#include "ceph/simd.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>

namespace ceph::simd {

namespace {

void outer_product(std::span<const double> rows, std::span<const double> cols, std::span<double> out) {
    const std::size_t w = cols.size();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const float64x2_t a = vdupq_n_f64(rows[r]);
        double* dst = out.data() + r * w;
        std::size_t c = 0;
        for (; c + 2 <= w; c += 2) vst1q_f64(dst + c, vmulq_f64(a, vld1q_f64(cols.data() + c)));
        for (; c < w; ++c) dst[c] = rows[r] * cols[c];
    }
}

void accumulate(std::span<double> acc, std::span<const double> in) {
    const std::size_t n = acc.size();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(acc.data() + i, vaddq_f64(vld1q_f64(acc.data() + i), vld1q_f64(in.data() + i)));
    for (; i < n; ++i) acc[i] += in[i];
}

void scale(std::span<double> data, double factor) {
    const std::size_t n = data.size();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(data.data() + i, vmulq_n_f64(vld1q_f64(data.data() + i), factor));
    for (; i < n; ++i) data[i] *= factor;
}

double sum(std::span<const double> data) {
    const std::size_t n = data.size();
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(data.data() + i));
    double s = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; i < n; ++i) s += data[i];
    return s;
}

double masked_sum(std::span<const double> data, std::span<const std::uint8_t> mask) {
    const std::size_t n = data.size();
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const uint64x2_t keep = {mask[i] ? ~0ULL : 0ULL, mask[i + 1] ? ~0ULL : 0ULL};
        const float64x2_t v = vreinterpretq_f64_u64(vandq_u64(keep, vreinterpretq_u64_f64(vld1q_f64(data.data() + i))));
        acc = vaddq_f64(acc, v);
    }
    double s = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; i < n; ++i) {
        if (mask[i]) s += data[i];
    }
    return s;
}

std::size_t argmax(std::span<const double> data) {
    const std::size_t n = data.size();
    if (n == 0) return 0;
    double best = data[0];
    std::size_t i = 0;
    if (n >= 2) {
        float64x2_t m = vld1q_f64(data.data());
        for (i = 2; i + 2 <= n; i += 2) m = vmaxq_f64(m, vld1q_f64(data.data() + i));
        best = vmaxvq_f64(m);
    }
    for (; i < n; ++i) best = data[i] > best ? data[i] : best;
    for (std::size_t j = 0; j < n; ++j) {
        if (data[j] == best) return j;
    }
    return 0;
}

void widen(std::span<const float> in, std::span<double> out) {
    const std::size_t n = in.size();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out.data() + i, vcvt_f64_f32(vld1_f32(in.data() + i)));
    for (; i < n; ++i) out[i] = static_cast<double>(in[i]);
}

void narrow(std::span<const double> in, std::span<float> out) {
    const std::size_t n = in.size();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1_f32(out.data() + i, vcvt_f32_f64(vld1q_f64(in.data() + i)));
    for (; i < n; ++i) out[i] = static_cast<float>(in[i]);
}

constexpr Kernels kNeon{Isa::Neon, outer_product, accumulate, scale, sum, masked_sum, argmax, widen, narrow};

}  // namespace

const Kernels* neon_kernels() noexcept { return &kNeon; }

}  // namespace ceph::simd

#else

namespace ceph::simd {
const Kernels* neon_kernels() noexcept { return nullptr; }
}  // namespace ceph::simd

#endif

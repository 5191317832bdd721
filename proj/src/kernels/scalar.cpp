#include "ceph/simd.hpp"

namespace ceph::simd {

namespace {

void outer_product(std::span<const double> rows, std::span<const double> cols, std::span<double> out) {
    const std::size_t w = cols.size();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const double a = rows[r];
        double* dst = out.data() + r * w;
        for (std::size_t c = 0; c < w; ++c) dst[c] = a * cols[c];
    }
}

void accumulate(std::span<double> acc, std::span<const double> in) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += in[i];
}

void scale(std::span<double> data, double factor) {
    for (auto& v : data) v *= factor;
}

double sum(std::span<const double> data) {
    double s = 0.0;
    for (double v : data) s += v;
    return s;
}

double masked_sum(std::span<const double> data, std::span<const std::uint8_t> mask) {
    double s = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (mask[i]) s += data[i];
    }
    return s;
}

std::size_t argmax(std::span<const double> data) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < data.size(); ++i) {
        if (data[i] > data[best]) best = i;
    }
    return best;
}

void widen(std::span<const float> in, std::span<double> out) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = static_cast<double>(in[i]);
}

void narrow(std::span<const double> in, std::span<float> out) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = static_cast<float>(in[i]);
}

constexpr Kernels kScalar{Isa::Scalar, outer_product, accumulate, scale, sum, masked_sum, argmax, widen, narrow};

}  // namespace

const Kernels& scalar_kernels() noexcept { return kScalar; }

}  // namespace ceph::simd

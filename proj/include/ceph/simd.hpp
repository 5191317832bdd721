#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

// Data-parallel inner loops behind a runtime-selected function table. Every
// kernel has a scalar reference; vector variants must agree with it exactly
// for element-wise kernels and to rounding for reductions.
namespace ceph::simd {

enum class Isa : std::uint8_t { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa) noexcept;

struct Kernels {
    Isa isa;
    // out[r * cols.size() + c] = rows[r] * cols[c]
    void (*outer_product)(std::span<const double> rows, std::span<const double> cols, std::span<double> out);
    // acc[i] += in[i]
    void (*accumulate)(std::span<double> acc, std::span<const double> in);
    // data[i] *= factor
    void (*scale)(std::span<double> data, double factor);
    double (*sum)(std::span<const double> data);
    // sum of data[i] where mask[i] != 0
    double (*masked_sum)(std::span<const double> data, std::span<const std::uint8_t> mask);
    // first index of the maximum; 0 for empty input
    std::size_t (*argmax)(std::span<const double> data);
    void (*widen)(std::span<const float> in, std::span<double> out);
    void (*narrow)(std::span<const double> in, std::span<float> out);
};

const Kernels& scalar_kernels() noexcept;
// nullptr when the variant was not compiled in or the CPU lacks it.
const Kernels* avx2_kernels() noexcept;
const Kernels* neon_kernels() noexcept;

// Best available table. CEPH_SIMD=scalar|avx2|neon overrides the choice when
// that variant is usable.
const Kernels& active() noexcept;

}  // namespace ceph::simd

#include <cstdlib>
#include <string_view>

#include "ceph/simd.hpp"

namespace ceph::simd {

std::string_view to_string(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "scalar";
}

namespace {

const Kernels& choose() noexcept {
    const char* env = std::getenv("CEPH_SIMD");
    const std::string_view want = env ? env : "";
    if (want == "scalar") return scalar_kernels();
    if (want == "avx2" && avx2_kernels()) return *avx2_kernels();
    if (want == "neon" && neon_kernels()) return *neon_kernels();
    if (const auto* k = avx2_kernels()) return *k;
    if (const auto* k = neon_kernels()) return *k;
    return scalar_kernels();
}

}  // namespace

const Kernels& active() noexcept {
    static const Kernels& chosen = choose();
    return chosen;
}

}  // namespace ceph::simd

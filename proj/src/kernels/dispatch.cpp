// SPDX-License-Identifier: Apache-2.0
#include "hintbox/kernels/kernels.hpp"

#include <cstdlib>
#include <string>

namespace hintbox::kernels {

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

namespace {

constexpr KernelTable kScalar{Isa::Scalar, scalar::depth_to_gray, scalar::blend_rgb, scalar::fill_rgb,
                              scalar::sum_f32};

#if defined(__x86_64__) || defined(_M_X64)
constexpr KernelTable kAvx2{Isa::Avx2, avx2::depth_to_gray, avx2::blend_rgb, avx2::fill_rgb, avx2::sum_f32};
#endif

#if defined(__aarch64__)
constexpr KernelTable kNeon{Isa::Neon, neon::depth_to_gray, neon::blend_rgb, neon::fill_rgb, neon::sum_f32};
#endif

const KernelTable& select() {
  const char* env = std::getenv("HINTBOX_ISA");
  if (env != nullptr) {
    const std::string want(env);
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
      if (want == isa_name(isa)) {
        if (const auto* t = table_for(isa)) return *t;
      }
    }
  }
#if defined(__aarch64__)
  return kNeon;
#else
  if (const auto* t = table_for(Isa::Avx2)) return *t;
  return kScalar;
#endif
}

}  // namespace

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return &kScalar;
    case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
      if (__builtin_cpu_supports("avx2")) return &kAvx2;
#endif
      return nullptr;
    case Isa::Neon:
#if defined(__aarch64__)
      return &kNeon;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

}  // namespace hintbox::kernels

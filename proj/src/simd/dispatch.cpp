#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels_impl.hpp"

namespace abilu::simd {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(ABILU_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() noexcept {
  const KernelTable* best = &detail::kScalarTable;
  if (const KernelTable* avx = avx2_kernels()) best = avx;
  if (const char* env = std::getenv("ABILU_ISA")) {
    const std::string want(env);
    if (want == "scalar") return &detail::kScalarTable;
    if (want == "avx2" && avx2_kernels() != nullptr) return avx2_kernels();
  }
  return best;
}

std::atomic<const KernelTable*>& active() noexcept {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable& kernels() noexcept { return *active().load(std::memory_order_relaxed); }

const KernelTable& scalar_kernels() noexcept { return detail::kScalarTable; }

const KernelTable* avx2_kernels() noexcept {
#if defined(ABILU_HAVE_AVX2)
  static const bool ok = cpu_has_avx2();
  return ok ? &detail::kAvx2Table : nullptr;
#else
  return nullptr;
#endif
}

bool isa_supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2: return avx2_kernels() != nullptr;
  }
  return false;
}

void set_isa(Isa isa) {
  if (!isa_supported(isa))
    throw std::invalid_argument("ISA not supported on this machine: " + std::string(isa_name(isa)));
  active().store(isa == Isa::Avx2 ? avx2_kernels() : &detail::kScalarTable,
                 std::memory_order_relaxed);
}

Isa active_isa() noexcept { return kernels().isa; }

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

}  // namespace abilu::simd

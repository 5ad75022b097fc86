#pragma once

// Data-parallel inner kernels shared by every solver module.
//
// Each kernel has a scalar reference implementation and, where the target
// supports it, an AVX2/FMA variant. The active table is chosen once at
// start-up from the CPU features (override with ABILU_ISA=scalar|avx2) and
// can be switched explicitly with set_isa(). All solver code goes through
// kernels(), so sequential and asynchronous code paths always execute the
// same arithmetic and remain bitwise comparable within a process.
//
// Block kernels operate on dense b x b row-major blocks.

#include <cstddef>
#include <string_view>

namespace abilu::simd {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  Isa isa;

  double (*dot)(const double* x, const double* y, std::size_t n);
  /// y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  /// x *= a
  void (*scale)(double a, double* x, std::size_t n);

  /// y = B x
  void (*block_gemv)(std::size_t b, const double* blk, const double* x, double* y);
  /// acc -= B x
  void (*block_gemv_sub)(std::size_t b, const double* blk, const double* x, double* acc);
  /// acc += B x
  void (*block_gemv_add)(std::size_t b, const double* blk, const double* x, double* acc);
  /// out = L R
  void (*block_gemm)(std::size_t b, const double* lhs, const double* rhs, double* out);
  /// acc -= L R
  void (*block_gemm_sub)(std::size_t b, const double* lhs, const double* rhs, double* acc);
};

/// Currently active kernel table.
const KernelTable& kernels() noexcept;

const KernelTable& scalar_kernels() noexcept;

/// AVX2 table, or nullptr when it was not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels() noexcept;

bool isa_supported(Isa isa) noexcept;

/// Throws std::invalid_argument if the ISA is not supported on this machine.
void set_isa(Isa isa);

Isa active_isa() noexcept;

std::string_view isa_name(Isa isa) noexcept;

/// RAII switch of the active ISA, restoring the previous one on exit.
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa) : previous_(active_isa()) { set_isa(isa); }
  ~ScopedIsa() { set_isa(previous_); }
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  Isa previous_;
};

}  // namespace abilu::simd

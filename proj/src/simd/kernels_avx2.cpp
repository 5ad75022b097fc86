// AVX2/FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma and must only be entered after a run-time CPU check.
//
// Block kernels are specialized for b == 4 (one block row per __m256d) and
// forward every other block size to the scalar reference.

#include <immintrin.h>

#include "kernels_impl.hpp"

namespace abilu::simd::detail {
namespace {

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  acc0 = _mm256_add_pd(acc0, acc1);
  const __m128d lo = _mm256_castpd256_pd128(acc0);
  const __m128d hi = _mm256_extractf128_pd(acc0, 1);
  __m128d s = _mm_add_pd(lo, hi);
  s = _mm_add_sd(s, _mm_unpackhi_pd(s, s));
  double sum = _mm_cvtsd_f64(s);
  for (; i < n; ++i) sum += x[i] * y[i];
  return sum;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale_avx2(double a, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

// Row dot products of a 4x4 block with x, returned as one vector.
inline __m256d gemv4(const double* blk, const double* x) {
  const __m256d vx = _mm256_loadu_pd(x);
  const __m256d p0 = _mm256_mul_pd(_mm256_loadu_pd(blk), vx);
  const __m256d p1 = _mm256_mul_pd(_mm256_loadu_pd(blk + 4), vx);
  const __m256d p2 = _mm256_mul_pd(_mm256_loadu_pd(blk + 8), vx);
  const __m256d p3 = _mm256_mul_pd(_mm256_loadu_pd(blk + 12), vx);
  const __m256d h01 = _mm256_hadd_pd(p0, p1);
  const __m256d h23 = _mm256_hadd_pd(p2, p3);
  const __m256d lo = _mm256_permute2f128_pd(h01, h23, 0x20);
  const __m256d hi = _mm256_permute2f128_pd(h01, h23, 0x31);
  return _mm256_add_pd(lo, hi);
}

void block_gemv_avx2(std::size_t b, const double* blk, const double* x, double* y) {
  if (b != 4) return block_gemv_scalar(b, blk, x, y);
  _mm256_storeu_pd(y, gemv4(blk, x));
}

void block_gemv_sub_avx2(std::size_t b, const double* blk, const double* x, double* acc) {
  if (b != 4) return block_gemv_sub_scalar(b, blk, x, acc);
  _mm256_storeu_pd(acc, _mm256_sub_pd(_mm256_loadu_pd(acc), gemv4(blk, x)));
}

void block_gemv_add_avx2(std::size_t b, const double* blk, const double* x, double* acc) {
  if (b != 4) return block_gemv_add_scalar(b, blk, x, acc);
  _mm256_storeu_pd(acc, _mm256_add_pd(_mm256_loadu_pd(acc), gemv4(blk, x)));
}

void block_gemm_avx2(std::size_t b, const double* lhs, const double* rhs, double* out) {
  if (b != 4) return block_gemm_scalar(b, lhs, rhs, out);
  const __m256d r0 = _mm256_loadu_pd(rhs);
  const __m256d r1 = _mm256_loadu_pd(rhs + 4);
  const __m256d r2 = _mm256_loadu_pd(rhs + 8);
  const __m256d r3 = _mm256_loadu_pd(rhs + 12);
  for (std::size_t r = 0; r < 4; ++r) {
    const double* l = lhs + 4 * r;
    __m256d acc = _mm256_mul_pd(_mm256_set1_pd(l[0]), r0);
    acc = _mm256_fmadd_pd(_mm256_set1_pd(l[1]), r1, acc);
    acc = _mm256_fmadd_pd(_mm256_set1_pd(l[2]), r2, acc);
    acc = _mm256_fmadd_pd(_mm256_set1_pd(l[3]), r3, acc);
    _mm256_storeu_pd(out + 4 * r, acc);
  }
}

void block_gemm_sub_avx2(std::size_t b, const double* lhs, const double* rhs, double* acc) {
  if (b != 4) return block_gemm_sub_scalar(b, lhs, rhs, acc);
  const __m256d r0 = _mm256_loadu_pd(rhs);
  const __m256d r1 = _mm256_loadu_pd(rhs + 4);
  const __m256d r2 = _mm256_loadu_pd(rhs + 8);
  const __m256d r3 = _mm256_loadu_pd(rhs + 12);
  for (std::size_t r = 0; r < 4; ++r) {
    const double* l = lhs + 4 * r;
    __m256d a = _mm256_loadu_pd(acc + 4 * r);
    a = _mm256_fnmadd_pd(_mm256_set1_pd(l[0]), r0, a);
    a = _mm256_fnmadd_pd(_mm256_set1_pd(l[1]), r1, a);
    a = _mm256_fnmadd_pd(_mm256_set1_pd(l[2]), r2, a);
    a = _mm256_fnmadd_pd(_mm256_set1_pd(l[3]), r3, a);
    _mm256_storeu_pd(acc + 4 * r, a);
  }
}

}  // namespace

const KernelTable kAvx2Table{
    Isa::Avx2,          dot_avx2,           axpy_avx2,
    scale_avx2,         block_gemv_avx2,    block_gemv_sub_avx2,
    block_gemv_add_avx2, block_gemm_avx2,   block_gemm_sub_avx2,
};

}  // namespace abilu::simd::detail

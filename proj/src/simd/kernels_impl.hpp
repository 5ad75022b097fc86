#pragma once

#include "abilu/simd/kernels.hpp"

namespace abilu::simd::detail {

double dot_scalar(const double* x, const double* y, std::size_t n);
void axpy_scalar(double a, const double* x, double* y, std::size_t n);
void scale_scalar(double a, double* x, std::size_t n);
void block_gemv_scalar(std::size_t b, const double* blk, const double* x, double* y);
void block_gemv_sub_scalar(std::size_t b, const double* blk, const double* x, double* acc);
void block_gemv_add_scalar(std::size_t b, const double* blk, const double* x, double* acc);
void block_gemm_scalar(std::size_t b, const double* lhs, const double* rhs, double* out);
void block_gemm_sub_scalar(std::size_t b, const double* lhs, const double* rhs, double* acc);

extern const KernelTable kScalarTable;

#if defined(ABILU_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif

}  // namespace abilu::simd::detail

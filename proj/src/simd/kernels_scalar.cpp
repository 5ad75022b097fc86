#include "kernels_impl.hpp"

namespace abilu::simd::detail {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void block_gemv_scalar(std::size_t b, const double* blk, const double* x, double* y) {
  for (std::size_t r = 0; r < b; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < b; ++c) s += blk[r * b + c] * x[c];
    y[r] = s;
  }
}

void block_gemv_sub_scalar(std::size_t b, const double* blk, const double* x, double* acc) {
  for (std::size_t r = 0; r < b; ++r) {
    double s = acc[r];
    for (std::size_t c = 0; c < b; ++c) s -= blk[r * b + c] * x[c];
    acc[r] = s;
  }
}

void block_gemv_add_scalar(std::size_t b, const double* blk, const double* x, double* acc) {
  for (std::size_t r = 0; r < b; ++r) {
    double s = acc[r];
    for (std::size_t c = 0; c < b; ++c) s += blk[r * b + c] * x[c];
    acc[r] = s;
  }
}

void block_gemm_scalar(std::size_t b, const double* lhs, const double* rhs, double* out) {
  for (std::size_t i = 0; i < b * b; ++i) out[i] = 0.0;
  for (std::size_t r = 0; r < b; ++r)
    for (std::size_t t = 0; t < b; ++t) {
      const double a = lhs[r * b + t];
      for (std::size_t c = 0; c < b; ++c) out[r * b + c] += a * rhs[t * b + c];
    }
}

void block_gemm_sub_scalar(std::size_t b, const double* lhs, const double* rhs, double* acc) {
  for (std::size_t r = 0; r < b; ++r)
    for (std::size_t t = 0; t < b; ++t) {
      const double a = lhs[r * b + t];
      for (std::size_t c = 0; c < b; ++c) acc[r * b + c] -= a * rhs[t * b + c];
    }
}

const KernelTable kScalarTable{
    Isa::Scalar,          dot_scalar,           axpy_scalar,
    scale_scalar,         block_gemv_scalar,    block_gemv_sub_scalar,
    block_gemv_add_scalar, block_gemm_scalar,   block_gemm_sub_scalar,
};

}  // namespace abilu::simd::detail

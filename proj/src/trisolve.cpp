#include "abilu/trisolve.hpp"

#include <cmath>
#include <string>

#include "abilu/simd/kernels.hpp"

namespace abilu {

TriangularView triangular_view(const IluFactors& f, TriangularSide side) noexcept {
  TriangularView t;
  t.pattern = f.pattern.get();
  t.block_size = f.block_size;
  t.values = f.lu;
  if (side == TriangularSide::Upper) {
    t.triangle = Triangle::Upper;
    t.diag_inv = f.diag_inv;
  }
  return t;
}

TriangularMatrix::TriangularMatrix(BlockSparseMatrix m, Triangle triangle)
    : m_(std::move(m)), triangle_(triangle) {
  const auto& pat = m_.pattern();
  const Index b = m_.block_size();
  const Index bb = b * b;
  for (Index i = 0; i < pat.n_block_rows(); ++i)
    for (Index p = pat.row_begin(i); p < pat.row_end(i); ++p) {
      const Index j = pat.col_idx()[p];
      if (triangle == Triangle::Lower ? j > i : j < i)
        throw InvalidPattern("block outside the triangle in block row " + std::to_string(i));
    }
  diag_inv_.resize(pat.n_block_rows() * bb);
  for (Index i = 0; i < pat.n_block_rows(); ++i)
    if (!block_lu_invert_into(b, m_.block(pat.diag(i)), std::span<double>(diag_inv_).subspan(i * bb, bb)))
      throw SingularDiagonal(i);
}

TriangularView TriangularMatrix::view() const noexcept {
  TriangularView t;
  t.pattern = &m_.pattern();
  t.block_size = m_.block_size();
  t.values = m_.values();
  t.diag_inv = diag_inv_;
  t.triangle = triangle_;
  return t;
}

namespace {

void check_rhs(const TriangularView& t, std::span<const double> rhs) {
  if (rhs.size() != t.dim()) throw DimensionMismatch("right-hand side length differs from the system size");
}

}  // namespace

std::vector<double> sequential_trisolve(const TriangularView& t, std::span<const double> rhs) {
  check_rhs(t, rhs);
  const auto& pat = *t.pattern;
  const auto& kern = simd::kernels();
  const Index b = t.block_size;
  const Index bb = b * b;
  const Index n = pat.n_block_rows();
  const bool lower = t.triangle == Triangle::Lower;
  std::vector<double> x(rhs.begin(), rhs.end());
  std::vector<double> tmp(b);
  for (Index step = 0; step < n; ++step) {
    const Index i = lower ? step : n - 1 - step;
    double* xi = x.data() + i * b;
    for (Index p = pat.row_begin(i); p < pat.row_end(i); ++p) {
      const Index j = pat.col_idx()[p];
      if (lower ? j >= i : j <= i) continue;
      kern.block_gemv_sub(b, t.values.data() + p * bb, x.data() + j * b, xi);
    }
    if (!t.unit_diagonal()) {
      kern.block_gemv(b, t.diag_inv.data() + i * bb, xi, tmp.data());
      std::copy(tmp.begin(), tmp.end(), xi);
    }
  }
  return x;
}

std::vector<double> sequential_trisolve(const IluFactors& f, TriangularSide side, std::span<const double> rhs) {
  return sequential_trisolve(triangular_view(f, side), rhs);
}

TrisolveWorkSet::TrisolveWorkSet(const TriangularView& t, std::span<const double> rhs) : t_(t), rhs_(rhs) {
  check_rhs(t, rhs);
}

std::vector<Index> TrisolveWorkSet::slot_owner() const {
  std::vector<Index> owner(t_.dim());
  for (Index s = 0; s < owner.size(); ++s) {
    const Index row = s / t_.block_size;
    owner[s] = t_.triangle == Triangle::Lower ? row : size() - 1 - row;
  }
  return owner;
}

void async_trisolve(const TriangularView& t, std::span<const double> rhs, const SweepConfig& cfg,
                    std::span<double> x) {
  if (x.size() != t.dim()) throw DimensionMismatch("solution length differs from the system size");
  TrisolveWorkSet work(t, rhs);
  run_parallel(work, cfg, x);
}

std::vector<double> async_trisolve(const IluFactors& f, TriangularSide side, std::span<const double> rhs,
                                   const SweepConfig& cfg) {
  std::vector<double> x(f.dim(), 0.0);
  async_trisolve(triangular_view(f, side), rhs, cfg, x);
  return x;
}

void replay_trisolve(const TriangularView& t, std::span<const double> rhs, const Schedule& sched,
                     std::span<double> x) {
  if (x.size() != t.dim()) throw DimensionMismatch("solution length differs from the system size");
  TrisolveWorkSet work(t, rhs);
  const auto owner = work.slot_owner();
  run_replay(work, sched, x, owner);
}

double jacobi_iteration_matrix_norm(const TriangularView& t) {
  const auto& pat = *t.pattern;
  const auto& kern = simd::kernels();
  const Index b = t.block_size;
  const Index bb = b * b;
  const bool lower = t.triangle == Triangle::Lower;
  std::vector<double> prod(bb);
  std::vector<double> row_sum(b);
  double norm = 0.0;
  for (Index i = 0; i < pat.n_block_rows(); ++i) {
    std::fill(row_sum.begin(), row_sum.end(), 0.0);
    for (Index p = pat.row_begin(i); p < pat.row_end(i); ++p) {
      const Index j = pat.col_idx()[p];
      if (lower ? j >= i : j <= i) continue;
      const double* m = t.values.data() + p * bb;
      if (!t.unit_diagonal()) {
        kern.block_gemm(b, t.diag_inv.data() + i * bb, m, prod.data());
        m = prod.data();
      }
      for (Index r = 0; r < b; ++r)
        for (Index c = 0; c < b; ++c) row_sum[r] += std::abs(m[r * b + c]);
    }
    for (double s : row_sum) norm = std::max(norm, s);
  }
  return norm;
}

double jacobi_iteration_matrix_norm(const IluFactors& f, TriangularSide side) {
  return jacobi_iteration_matrix_norm(triangular_view(f, side));
}

double jacobi_iteration_matrix_norm(const BlockSparseMatrix& m, Triangle triangle) {
  const TriangularMatrix t(m, triangle);
  return jacobi_iteration_matrix_norm(t.view());
}

}  // namespace abilu

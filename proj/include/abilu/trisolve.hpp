#pragma once

// Block triangular solves: sequential substitution, asynchronous sweeps
// (one work item per block row) and Jacobi iteration-matrix diagnostics.

#include <span>
#include <vector>

#include "abilu/async_exec.hpp"
#include "abilu/blockmat.hpp"
#include "abilu/ilu.hpp"

namespace abilu {

/// Which factor of an IluFactors to use.
enum class TriangularSide { LowerUnit, Upper };

enum class Triangle { Lower, Upper };

/// Non-owning description of a block triangular operator. Blocks of `pattern`
/// outside the triangle are ignored; an empty diag_inv means unit diagonal.
struct TriangularView {
  const BlockPattern* pattern = nullptr;
  Index block_size = 1;
  std::span<const double> values;
  std::span<const double> diag_inv;
  Triangle triangle = Triangle::Lower;

  Index n_block_rows() const noexcept { return pattern->n_block_rows(); }
  Index dim() const noexcept { return n_block_rows() * block_size; }
  bool unit_diagonal() const noexcept { return diag_inv.empty(); }
};

TriangularView triangular_view(const IluFactors& f, TriangularSide side) noexcept;

/// Owning triangular matrix with stored (non-unit) diagonal blocks.
class TriangularMatrix {
 public:
  /// Throws InvalidPattern if a block lies outside the triangle and
  /// SingularDiagonal if a diagonal block is singular.
  TriangularMatrix(BlockSparseMatrix m, Triangle triangle);

  const BlockSparseMatrix& matrix() const noexcept { return m_; }
  TriangularView view() const noexcept;

 private:
  BlockSparseMatrix m_;
  Triangle triangle_;
  std::vector<double> diag_inv_;
};

/// Forward (Lower) or backward (Upper) substitution.
std::vector<double> sequential_trisolve(const TriangularView& t, std::span<const double> rhs);
std::vector<double> sequential_trisolve(const IluFactors& f, TriangularSide side, std::span<const double> rhs);

/// Work set for the asynchronous solve; item k is block row k for a lower
/// system and block row n - 1 - k for an upper one. State is the solution.
class TrisolveWorkSet {
 public:
  TrisolveWorkSet(const TriangularView& t, std::span<const double> rhs);

  Index size() const noexcept { return t_.n_block_rows(); }
  Index row_of_item(Index item) const noexcept {
    return t_.triangle == Triangle::Lower ? item : size() - 1 - item;
  }
  std::vector<Index> slot_owner() const;

  template <class View>
  void update(Index item, View& view) const;

 private:
  TriangularView t_;
  std::span<const double> rhs_;
};

/// cfg.n_sweeps asynchronous sweeps starting from the contents of x.
void async_trisolve(const TriangularView& t, std::span<const double> rhs, const SweepConfig& cfg,
                    std::span<double> x);
/// Same, from a zero initial guess.
std::vector<double> async_trisolve(const IluFactors& f, TriangularSide side, std::span<const double> rhs,
                                   const SweepConfig& cfg);

/// Replays `sched` (over n_block_rows items) starting from the contents of x.
void replay_trisolve(const TriangularView& t, std::span<const double> rhs, const Schedule& sched,
                     std::span<double> x);

/// || D^{-1} T~ ||_inf, D the block diagonal and T~ the strict triangle.
double jacobi_iteration_matrix_norm(const TriangularView& t);
double jacobi_iteration_matrix_norm(const IluFactors& f, TriangularSide side);
/// Throws SingularDiagonal.
double jacobi_iteration_matrix_norm(const BlockSparseMatrix& m, Triangle triangle);

template <class View>
void TrisolveWorkSet::update(Index item, View& view) const {
  const auto& pat = *t_.pattern;
  const auto& kern = simd::kernels();
  const Index b = t_.block_size;
  const Index bb = b * b;
  const Index i = row_of_item(item);
  thread_local std::vector<double> acc, xj, out;
  acc.assign(rhs_.begin() + static_cast<std::ptrdiff_t>(i * b),
             rhs_.begin() + static_cast<std::ptrdiff_t>((i + 1) * b));
  xj.resize(b);
  out.resize(b);
  const bool lower = t_.triangle == Triangle::Lower;
  for (Index p = pat.row_begin(i); p < pat.row_end(i); ++p) {
    const Index j = pat.col_idx()[p];
    if (lower ? j >= i : j <= i) continue;
    view.load_range(j * b, xj);
    kern.block_gemv_sub(b, t_.values.data() + p * bb, xj.data(), acc.data());
  }
  if (t_.unit_diagonal()) {
    view.store_range(i * b, acc);
  } else {
    kern.block_gemv(b, t_.diag_inv.data() + i * bb, acc.data(), out.data());
    view.store_range(i * b, out);
  }
}

}  // namespace abilu

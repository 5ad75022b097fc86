#pragma once

// Block compressed sparse row storage with fixed-size dense b x b blocks.
//
// A matrix is a shared, immutable BlockPattern plus a contiguous value array
// holding one row-major b x b block per stored block entry, in pattern order.
// Every block row must contain its diagonal block; column indices are
// strictly increasing within a row.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "abilu/errors.hpp"

namespace abilu {

using Index = std::size_t;

inline constexpr Index npos = static_cast<Index>(-1);

class BlockPattern {
 public:
  /// Validates sorted unique columns and presence of every diagonal block.
  BlockPattern(Index n_block_rows, std::vector<Index> row_ptr, std::vector<Index> col_idx);

  Index n_block_rows() const noexcept { return n_block_rows_; }
  Index nnz_blocks() const noexcept { return col_idx_.size(); }

  std::span<const Index> row_ptr() const noexcept { return row_ptr_; }
  std::span<const Index> col_idx() const noexcept { return col_idx_; }
  std::span<const Index> diag_pos() const noexcept { return diag_pos_; }

  Index row_begin(Index row) const noexcept { return row_ptr_[row]; }
  Index row_end(Index row) const noexcept { return row_ptr_[row + 1]; }
  Index diag(Index row) const noexcept { return diag_pos_[row]; }

  /// Position of block (row, col), or npos when it is not stored.
  Index find(Index row, Index col) const noexcept;

  /// Block row owning each stored position.
  std::vector<Index> row_of_positions() const;

  friend bool operator==(const BlockPattern& a, const BlockPattern& b) noexcept {
    return a.n_block_rows_ == b.n_block_rows_ && a.row_ptr_ == b.row_ptr_ && a.col_idx_ == b.col_idx_;
  }

 private:
  Index n_block_rows_;
  std::vector<Index> row_ptr_;
  std::vector<Index> col_idx_;
  std::vector<Index> diag_pos_;
};

/// Dense b x b block, row-major.
class DenseBlock {
 public:
  DenseBlock() = default;
  explicit DenseBlock(Index b) : b_(b), a_(b * b, 0.0) {}
  DenseBlock(Index b, std::vector<double> values);
  DenseBlock(Index b, std::span<const double> values);

  static DenseBlock identity(Index b);

  Index size() const noexcept { return b_; }
  double& operator()(Index r, Index c) noexcept { return a_[r * b_ + c]; }
  double operator()(Index r, Index c) const noexcept { return a_[r * b_ + c]; }
  std::span<double> values() noexcept { return a_; }
  std::span<const double> values() const noexcept { return a_; }
  double* data() noexcept { return a_.data(); }
  const double* data() const noexcept { return a_.data(); }

  double max_abs() const noexcept;

  friend DenseBlock operator*(const DenseBlock& x, const DenseBlock& y);
  friend bool operator==(const DenseBlock&, const DenseBlock&) = default;

 private:
  Index b_ = 0;
  std::vector<double> a_;
};

class BlockSparseMatrix {
 public:
  BlockSparseMatrix() = default;
  BlockSparseMatrix(Index block_size, std::shared_ptr<const BlockPattern> pattern,
                    std::vector<double> values);
  BlockSparseMatrix(Index n_block_rows, Index block_size, std::vector<Index> row_ptr,
                    std::vector<Index> col_idx, std::vector<double> values);

  Index block_size() const noexcept { return b_; }
  Index n_block_rows() const noexcept { return pattern_ ? pattern_->n_block_rows() : 0; }
  /// Scalar dimension n = n_block_rows * b.
  Index dim() const noexcept { return n_block_rows() * b_; }
  Index nnz_blocks() const noexcept { return pattern_ ? pattern_->nnz_blocks() : 0; }
  /// Scalar nonzero count m = |S_B| * b^2.
  Index nnz() const noexcept { return nnz_blocks() * b_ * b_; }

  const BlockPattern& pattern() const noexcept { return *pattern_; }
  const std::shared_ptr<const BlockPattern>& pattern_ptr() const noexcept { return pattern_; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> block(Index pos) const noexcept {
    return std::span<const double>(values_).subspan(pos * b_ * b_, b_ * b_);
  }
  DenseBlock dense_block(Index pos) const { return DenseBlock(b_, block(pos)); }

  /// Same pattern, new values.
  BlockSparseMatrix with_values(std::vector<double> values) const;

  /// Scalar entry (i, j); zero when outside the block pattern.
  double entry(Index i, Index j) const noexcept;

  /// Row-major dense copy; intended for small oracles and tests.
  std::vector<double> to_dense() const;

  friend bool operator==(const BlockSparseMatrix& a, const BlockSparseMatrix& b) noexcept;

 private:
  Index b_ = 1;
  std::shared_ptr<const BlockPattern> pattern_;
  std::vector<double> values_;
};

/// Inverts a nonsingular block by dense LU with partial pivoting.
/// Throws SingularBlock when a pivot falls below the singularity threshold.
DenseBlock block_lu_invert(const DenseBlock& block);

/// Non-throwing form for hot loops; `out` receives the inverse.
/// Returns false (leaving `out` unspecified) when the block is singular.
bool block_lu_invert_into(Index b, std::span<const double> block, std::span<double> out) noexcept;

/// Pivot magnitude below which a block counts as singular:
/// 1e-30 * (1 + max |entry|).
double singularity_threshold(std::span<const double> block) noexcept;

/// Solves block * x = rhs in place by dense LU with partial pivoting.
void block_lu_solve(const DenseBlock& block, std::span<double> rhs);

/// y = A x
void spmv(const BlockSparseMatrix& a, std::span<const double> x, std::span<double> y);
std::vector<double> spmv(const BlockSparseMatrix& a, std::span<const double> x);

/// Equivalent b = 1 matrix holding every entry of every stored block.
BlockSparseMatrix scalar_view(const BlockSparseMatrix& a);

/// Groups a scalar (b = 1) matrix into b x b blocks; in-block entries missing
/// from the scalar pattern become explicit zeros. Throws NonTilingPattern when
/// the dimension is not a multiple of b.
BlockSparseMatrix block_view(const BlockSparseMatrix& scalar, Index b);

/// Builds a matrix from scalar coordinate triplets (0-based), grouping into b x b
/// blocks. Duplicate entries are summed.
struct Triplet {
  Index row;
  Index col;
  double value;
};
BlockSparseMatrix from_triplets(Index dim, Index b, std::span<const Triplet> entries);

}  // namespace abilu

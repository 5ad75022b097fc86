#include "abilu/blockmat.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

#include "abilu/simd/kernels.hpp"

namespace abilu {

// ---------------------------------------------------------------------------
// BlockPattern

BlockPattern::BlockPattern(Index n_block_rows, std::vector<Index> row_ptr, std::vector<Index> col_idx)
    : n_block_rows_(n_block_rows), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)) {
  if (row_ptr_.size() != n_block_rows_ + 1)
    throw InvalidPattern("row_ptr must have n_block_rows + 1 entries");
  if (row_ptr_.front() != 0 || row_ptr_.back() != col_idx_.size())
    throw InvalidPattern("row_ptr must start at 0 and end at the number of stored blocks");
  diag_pos_.assign(n_block_rows_, npos);
  for (Index i = 0; i < n_block_rows_; ++i) {
    if (row_ptr_[i] > row_ptr_[i + 1]) throw InvalidPattern("row_ptr is not non-decreasing");
    for (Index p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      const Index j = col_idx_[p];
      if (j >= n_block_rows_)
        throw InvalidPattern("column index out of range in block row " + std::to_string(i));
      if (p > row_ptr_[i] && col_idx_[p - 1] >= j)
        throw InvalidPattern("column indices not strictly increasing in block row " + std::to_string(i));
      if (j == i) diag_pos_[i] = p;
    }
    if (diag_pos_[i] == npos)
      throw InvalidPattern("missing diagonal block in block row " + std::to_string(i));
  }
}

Index BlockPattern::find(Index row, Index col) const noexcept {
  const auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[row]);
  const auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[row + 1]);
  const auto it = std::lower_bound(first, last, col);
  if (it == last || *it != col) return npos;
  return static_cast<Index>(it - col_idx_.begin());
}

std::vector<Index> BlockPattern::row_of_positions() const {
  std::vector<Index> rows(nnz_blocks());
  for (Index i = 0; i < n_block_rows_; ++i)
    std::fill(rows.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]),
              rows.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]), i);
  return rows;
}

// ---------------------------------------------------------------------------
// DenseBlock

DenseBlock::DenseBlock(Index b, std::vector<double> values) : b_(b), a_(std::move(values)) {
  if (a_.size() != b * b) throw DimensionMismatch("dense block needs b*b values");
}

DenseBlock::DenseBlock(Index b, std::span<const double> values)
    : DenseBlock(b, std::vector<double>(values.begin(), values.end())) {}

DenseBlock DenseBlock::identity(Index b) {
  DenseBlock id(b);
  for (Index i = 0; i < b; ++i) id(i, i) = 1.0;
  return id;
}

double DenseBlock::max_abs() const noexcept {
  double m = 0.0;
  for (double v : a_) m = std::max(m, std::abs(v));
  return m;
}

DenseBlock operator*(const DenseBlock& x, const DenseBlock& y) {
  if (x.size() != y.size()) throw DimensionMismatch("block sizes differ");
  DenseBlock out(x.size());
  simd::kernels().block_gemm(x.size(), x.data(), y.data(), out.data());
  return out;
}

// ---------------------------------------------------------------------------
// Dense block LU

double singularity_threshold(std::span<const double> block) noexcept {
  double m = 0.0;
  for (double v : block) m = std::max(m, std::abs(v));
  return 1e-30 * (1.0 + m);
}

namespace {

// In-place LU with partial pivoting of a b x b row-major block.
bool lu_factor(Index b, double* a, Index* piv, double threshold) noexcept {
  for (Index k = 0; k < b; ++k) {
    Index p = k;
    double best = std::abs(a[k * b + k]);
    for (Index r = k + 1; r < b; ++r) {
      const double v = std::abs(a[r * b + k]);
      if (v > best) {
        best = v;
        p = r;
      }
    }
    if (!(best >= threshold)) return false;  // also rejects NaN
    piv[k] = p;
    if (p != k)
      for (Index c = 0; c < b; ++c) std::swap(a[k * b + c], a[p * b + c]);
    const double inv = 1.0 / a[k * b + k];
    for (Index r = k + 1; r < b; ++r) {
      const double f = a[r * b + k] * inv;
      a[r * b + k] = f;
      for (Index c = k + 1; c < b; ++c) a[r * b + c] -= f * a[k * b + c];
    }
  }
  return true;
}

void lu_solve(Index b, const double* lu, const Index* piv, double* x) noexcept {
  for (Index k = 0; k < b; ++k)
    if (piv[k] != k) std::swap(x[k], x[piv[k]]);
  for (Index r = 1; r < b; ++r) {
    double s = x[r];
    for (Index c = 0; c < r; ++c) s -= lu[r * b + c] * x[c];
    x[r] = s;
  }
  for (Index r = b; r-- > 0;) {
    double s = x[r];
    for (Index c = r + 1; c < b; ++c) s -= lu[r * b + c] * x[c];
    x[r] = s / lu[r * b + r];
  }
}

struct LuScratch {
  std::vector<double> lu;
  std::vector<Index> piv;
  std::vector<double> col;
  void resize(Index b) {
    lu.resize(b * b);
    piv.resize(b);
    col.resize(b);
  }
};

LuScratch& scratch() {
  thread_local LuScratch s;
  return s;
}

}  // namespace

bool block_lu_invert_into(Index b, std::span<const double> block, std::span<double> out) noexcept {
  if (b == 1) {
    const double v = block[0];
    if (!(std::abs(v) >= 1e-30 * (1.0 + std::abs(v)))) return false;
    out[0] = 1.0 / v;
    return true;
  }
  LuScratch& s = scratch();
  s.resize(b);
  std::copy(block.begin(), block.begin() + static_cast<std::ptrdiff_t>(b * b), s.lu.begin());
  if (!lu_factor(b, s.lu.data(), s.piv.data(), singularity_threshold(block.first(b * b))))
    return false;
  for (Index c = 0; c < b; ++c) {
    std::fill(s.col.begin(), s.col.end(), 0.0);
    s.col[c] = 1.0;
    lu_solve(b, s.lu.data(), s.piv.data(), s.col.data());
    for (Index r = 0; r < b; ++r) out[r * b + c] = s.col[r];
  }
  return true;
}

DenseBlock block_lu_invert(const DenseBlock& block) {
  DenseBlock inv(block.size());
  if (!block_lu_invert_into(block.size(), block.values(), inv.values()))
    throw SingularBlock("block is singular to working precision");
  return inv;
}

void block_lu_solve(const DenseBlock& block, std::span<double> rhs) {
  const Index b = block.size();
  if (rhs.size() != b) throw DimensionMismatch("rhs length differs from block size");
  std::vector<double> lu(block.values().begin(), block.values().end());
  std::vector<Index> piv(b);
  if (!lu_factor(b, lu.data(), piv.data(), singularity_threshold(block.values())))
    throw SingularBlock("block is singular to working precision");
  lu_solve(b, lu.data(), piv.data(), rhs.data());
}

// ---------------------------------------------------------------------------
// BlockSparseMatrix

BlockSparseMatrix::BlockSparseMatrix(Index block_size, std::shared_ptr<const BlockPattern> pattern,
                                     std::vector<double> values)
    : b_(block_size), pattern_(std::move(pattern)), values_(std::move(values)) {
  if (b_ == 0) throw InvalidPattern("block size must be at least 1");
  if (!pattern_) throw InvalidPattern("null pattern");
  if (values_.size() != pattern_->nnz_blocks() * b_ * b_)
    throw DimensionMismatch("value array length must be nnz_blocks * b^2");
}

BlockSparseMatrix::BlockSparseMatrix(Index n_block_rows, Index block_size, std::vector<Index> row_ptr,
                                     std::vector<Index> col_idx, std::vector<double> values)
    : BlockSparseMatrix(block_size,
                        std::make_shared<const BlockPattern>(n_block_rows, std::move(row_ptr),
                                                             std::move(col_idx)),
                        std::move(values)) {}

BlockSparseMatrix BlockSparseMatrix::with_values(std::vector<double> values) const {
  return BlockSparseMatrix(b_, pattern_, std::move(values));
}

double BlockSparseMatrix::entry(Index i, Index j) const noexcept {
  const Index pos = pattern_->find(i / b_, j / b_);
  if (pos == npos) return 0.0;
  return values_[pos * b_ * b_ + (i % b_) * b_ + (j % b_)];
}

std::vector<double> BlockSparseMatrix::to_dense() const {
  const Index n = dim();
  std::vector<double> d(n * n, 0.0);
  const auto& p = *pattern_;
  for (Index i = 0; i < p.n_block_rows(); ++i)
    for (Index pos = p.row_begin(i); pos < p.row_end(i); ++pos) {
      const Index j = p.col_idx()[pos];
      for (Index r = 0; r < b_; ++r)
        for (Index c = 0; c < b_; ++c)
          d[(i * b_ + r) * n + j * b_ + c] = values_[pos * b_ * b_ + r * b_ + c];
    }
  return d;
}

bool operator==(const BlockSparseMatrix& a, const BlockSparseMatrix& b) noexcept {
  if (a.b_ != b.b_ || a.values_.size() != b.values_.size()) return false;
  if (a.pattern_ != b.pattern_ && !(a.pattern_ && b.pattern_ && *a.pattern_ == *b.pattern_))
    return false;
  return a.values_.empty() ||
         std::memcmp(a.values_.data(), b.values_.data(), a.values_.size() * sizeof(double)) == 0;
}

// ---------------------------------------------------------------------------
// Operations

void spmv(const BlockSparseMatrix& a, std::span<const double> x, std::span<double> y) {
  if (x.size() != a.dim() || y.size() != a.dim())
    throw DimensionMismatch("spmv: vector length differs from matrix dimension");
  const auto& k = simd::kernels();
  const auto& p = a.pattern();
  const Index b = a.block_size();
  const double* vals = a.values().data();
  for (Index i = 0; i < p.n_block_rows(); ++i) {
    double* yi = y.data() + i * b;
    std::fill(yi, yi + b, 0.0);
    for (Index pos = p.row_begin(i); pos < p.row_end(i); ++pos)
      k.block_gemv_add(b, vals + pos * b * b, x.data() + p.col_idx()[pos] * b, yi);
  }
}

std::vector<double> spmv(const BlockSparseMatrix& a, std::span<const double> x) {
  std::vector<double> y(a.dim());
  spmv(a, x, y);
  return y;
}

BlockSparseMatrix scalar_view(const BlockSparseMatrix& a) {
  const Index b = a.block_size();
  if (b == 1) return a;
  const auto& p = a.pattern();
  const Index n = a.dim();
  std::vector<Index> row_ptr(n + 1, 0);
  std::vector<Index> col_idx;
  std::vector<double> values;
  col_idx.reserve(a.nnz());
  values.reserve(a.nnz());
  for (Index i = 0; i < p.n_block_rows(); ++i)
    for (Index r = 0; r < b; ++r) {
      for (Index pos = p.row_begin(i); pos < p.row_end(i); ++pos) {
        const Index j = p.col_idx()[pos];
        for (Index c = 0; c < b; ++c) {
          col_idx.push_back(j * b + c);
          values.push_back(a.values()[pos * b * b + r * b + c]);
        }
      }
      row_ptr[i * b + r + 1] = col_idx.size();
    }
  return BlockSparseMatrix(n, 1, std::move(row_ptr), std::move(col_idx), std::move(values));
}

BlockSparseMatrix from_triplets(Index dim, Index b, std::span<const Triplet> entries) {
  if (b == 0) throw InvalidPattern("block size must be at least 1");
  if (dim % b != 0)
    throw NonTilingPattern("dimension " + std::to_string(dim) + " is not a multiple of block size " +
                           std::to_string(b));
  const Index nb = dim / b;
  struct Keyed {
    Index brow, bcol, r, c;
    double value;
    Index order;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(entries.size());
  for (Index t = 0; t < entries.size(); ++t) {
    const auto& e = entries[t];
    if (e.row >= dim || e.col >= dim) throw DimensionMismatch("triplet index out of range");
    keyed.push_back({e.row / b, e.col / b, e.row % b, e.col % b, e.value, t});
  }
  std::sort(keyed.begin(), keyed.end(), [](const Keyed& x, const Keyed& y) {
    if (x.brow != y.brow) return x.brow < y.brow;
    if (x.bcol != y.bcol) return x.bcol < y.bcol;
    return x.order < y.order;
  });
  std::vector<Index> row_ptr(nb + 1, 0);
  std::vector<Index> col_idx;
  std::vector<double> values;
  std::vector<char> set;
  for (Index t = 0; t < keyed.size(); ++t) {
    const auto& e = keyed[t];
    if (t == 0 || e.brow != keyed[t - 1].brow || e.bcol != keyed[t - 1].bcol) {
      col_idx.push_back(e.bcol);
      values.resize(values.size() + b * b, 0.0);
      set.resize(set.size() + b * b, 0);
      ++row_ptr[e.brow + 1];
    }
    const Index off = (col_idx.size() - 1) * b * b + e.r * b + e.c;
    // Assign on first touch so that signed zeros survive a round trip.
    if (set[off]) {
      values[off] += e.value;
    } else {
      values[off] = e.value;
      set[off] = 1;
    }
  }
  std::partial_sum(row_ptr.begin(), row_ptr.end(), row_ptr.begin());
  return BlockSparseMatrix(nb, b, std::move(row_ptr), std::move(col_idx), std::move(values));
}

BlockSparseMatrix block_view(const BlockSparseMatrix& scalar, Index b) {
  if (scalar.block_size() != 1) throw InvalidPattern("block_view expects a b = 1 matrix");
  if (b == 1) return scalar;
  const auto& p = scalar.pattern();
  std::vector<Triplet> t;
  t.reserve(scalar.nnz());
  for (Index i = 0; i < p.n_block_rows(); ++i)
    for (Index pos = p.row_begin(i); pos < p.row_end(i); ++pos)
      t.push_back({i, p.col_idx()[pos], scalar.values()[pos]});
  return from_triplets(scalar.dim(), b, t);
}

}  // namespace abilu

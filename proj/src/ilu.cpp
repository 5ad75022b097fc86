#include "abilu/ilu.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "abilu/simd/kernels.hpp"

namespace abilu {

namespace detail {

void ilu_dependencies(const BlockPattern& pat, std::vector<Index>& dep_ptr,
                      std::vector<std::pair<Index, Index>>& deps) {
  dep_ptr.assign(pat.nnz_blocks() + 1, 0);
  deps.clear();
  for (Index i = 0; i < pat.n_block_rows(); ++i)
    for (Index p = pat.row_begin(i); p < pat.row_end(i); ++p) {
      const Index j = pat.col_idx()[p];
      const Index kmax = std::min(i, j);
      for (Index q = pat.row_begin(i); q < pat.row_end(i) && pat.col_idx()[q] < kmax; ++q) {
        const Index pkj = pat.find(pat.col_idx()[q], j);
        if (pkj != npos) deps.emplace_back(q, pkj);
      }
      dep_ptr[p + 1] = deps.size();
    }
}

void fill_scaled_identity(Index b, double scale, double* block) {
  std::fill(block, block + b * b, 0.0);
  for (Index r = 0; r < b; ++r) block[r * b + r] = scale;
}

}  // namespace detail

namespace {

void require_same_pattern(const BlockSparseMatrix& a, const IluFactors& f) {
  if (f.block_size != a.block_size() || !f.pattern || !(*f.pattern == a.pattern()) ||
      f.lu.size() != a.values().size() || f.diag_inv.size() != a.n_block_rows() * a.block_size() * a.block_size())
    throw DimensionMismatch("factors do not match the matrix pattern");
}

std::vector<double> guard_scales(const BlockSparseMatrix& a) {
  std::vector<double> s(a.n_block_rows());
  for (Index i = 0; i < s.size(); ++i) s[i] = guard_scale(a, i);
  return s;
}

// Lower part with identity diagonal blocks, or upper part including the diagonal.
BlockSparseMatrix triangular_part(const IluFactors& f, bool lower) {
  const auto& pat = *f.pattern;
  const Index b = f.block_size;
  std::vector<Index> row_ptr(pat.n_block_rows() + 1, 0);
  std::vector<Index> col_idx;
  std::vector<double> values;
  for (Index i = 0; i < pat.n_block_rows(); ++i) {
    for (Index p = pat.row_begin(i); p < pat.row_end(i); ++p) {
      const Index j = pat.col_idx()[p];
      if (lower ? j > i : j < i) continue;
      col_idx.push_back(j);
      if (lower && j == i) {
        const auto id = DenseBlock::identity(b);
        values.insert(values.end(), id.values().begin(), id.values().end());
      } else {
        const auto blk = f.block(p);
        values.insert(values.end(), blk.begin(), blk.end());
      }
    }
    row_ptr[i + 1] = col_idx.size();
  }
  return BlockSparseMatrix(pat.n_block_rows(), b, std::move(row_ptr), std::move(col_idx), std::move(values));
}

}  // namespace

BlockSparseMatrix IluFactors::lower() const { return triangular_part(*this, true); }
BlockSparseMatrix IluFactors::upper() const { return triangular_part(*this, false); }
BlockSparseMatrix IluFactors::fused() const { return BlockSparseMatrix(block_size, pattern, lu); }

bool operator==(const IluFactors& x, const IluFactors& y) noexcept {
  if (x.block_size != y.block_size || !x.pattern || !y.pattern || !(*x.pattern == *y.pattern)) return false;
  if (x.lu.size() != y.lu.size() || x.diag_inv.size() != y.diag_inv.size()) return false;
  return std::memcmp(x.lu.data(), y.lu.data(), x.lu.size() * sizeof(double)) == 0 &&
         std::memcmp(x.diag_inv.data(), y.diag_inv.data(), x.diag_inv.size() * sizeof(double)) == 0;
}

DenseBlock modified_guard(const DenseBlock& diag, double scale) {
  std::vector<double> inv(diag.size() * diag.size());
  if (block_lu_invert_into(diag.size(), diag.values(), inv)) return diag;
  DenseBlock sub(diag.size());
  detail::fill_scaled_identity(diag.size(), scale, sub.data());
  return sub;
}

double guard_scale(const BlockSparseMatrix& a, Index row) noexcept {
  double m = 0.0;
  for (double v : a.block(a.pattern().diag(row))) m = std::max(m, std::abs(v));
  return m > 0.0 ? m : 1.0;
}

IluFactors make_factors(const BlockSparseMatrix& a, std::vector<double> lu, IluStats* stats) {
  if (lu.size() != a.values().size()) throw DimensionMismatch("fused factor values do not match the pattern");
  const Index b = a.block_size();
  const Index bb = b * b;
  IluFactors f;
  f.pattern = a.pattern_ptr();
  f.block_size = b;
  f.lu = std::move(lu);
  f.diag_inv.assign(a.n_block_rows() * bb, 0.0);
  for (Index i = 0; i < a.n_block_rows(); ++i) {
    double* d = f.lu.data() + a.pattern().diag(i) * bb;
    double* inv = f.diag_inv.data() + i * bb;
    if (!block_lu_invert_into(b, std::span<const double>(d, bb), std::span<double>(inv, bb))) {
      const double s = guard_scale(a, i);
      detail::fill_scaled_identity(b, s, d);
      detail::fill_scaled_identity(b, 1.0 / s, inv);
      if (stats) ++stats->guard_substitutions;
    }
  }
  return f;
}

IluFactors initial_guess(const BlockSparseMatrix& a, IluStats* stats) {
  return make_factors(a, std::vector<double>(a.values().begin(), a.values().end()), stats);
}

IluFactors sequential_ilu0(const BlockSparseMatrix& a) {
  const auto& pat = a.pattern();
  const auto& kern = simd::kernels();
  const Index b = a.block_size();
  const Index bb = b * b;
  IluFactors f;
  f.pattern = a.pattern_ptr();
  f.block_size = b;
  f.lu.assign(a.values().begin(), a.values().end());
  f.diag_inv.assign(a.n_block_rows() * bb, 0.0);
  std::vector<double> prod(bb);

  for (Index i = 0; i < pat.n_block_rows(); ++i) {
    for (Index p = pat.row_begin(i); p < pat.row_end(i); ++p) {
      const Index j = pat.col_idx()[p];
      double* acc = f.lu.data() + p * bb;
      for (Index q = pat.row_begin(i); q < p && pat.col_idx()[q] < std::min(i, j); ++q) {
        const Index pkj = pat.find(pat.col_idx()[q], j);
        if (pkj != npos) kern.block_gemm_sub(b, f.lu.data() + q * bb, f.lu.data() + pkj * bb, acc);
      }
      if (j < i) {
        kern.block_gemm(b, acc, f.diag_inv.data() + j * bb, prod.data());
        std::copy(prod.begin(), prod.end(), acc);
      } else if (j == i) {
        if (!block_lu_invert_into(b, std::span<const double>(acc, bb),
                                  std::span<double>(f.diag_inv.data() + i * bb, bb)))
          throw SingularDiagonal(i);
      }
    }
  }
  return f;
}

IluFactors async_ilu0(const BlockSparseMatrix& a, const SweepConfig& cfg, IluStats* stats) {
  return async_ilu0(a, cfg, initial_guess(a, stats), stats);
}

IluFactors async_ilu0(const BlockSparseMatrix& a, const SweepConfig& cfg, const IluFactors& initial,
                      IluStats* stats) {
  require_same_pattern(a, initial);
  std::atomic<std::uint64_t> guards{0};
  IluRowWorkSet work(a, &guards);
  auto state = work.pack(initial);
  run_parallel(work, cfg, state);
  if (stats) stats->guard_substitutions += guards.load();
  return work.unpack(state);
}

std::vector<double> ilu_fixed_point_map(const BlockSparseMatrix& a, const IluFactors& x) {
  require_same_pattern(a, x);
  const auto& pat = a.pattern();
  const auto& kern = simd::kernels();
  const Index b = a.block_size();
  const Index bb = b * b;
  std::vector<double> inv(a.n_block_rows() * bb);
  for (Index j = 0; j < pat.n_block_rows(); ++j)
    if (!block_lu_invert_into(b, x.block(pat.diag(j)), std::span<double>(inv.data() + j * bb, bb)))
      throw SingularDiagonal(j);

  std::vector<double> g(a.values().begin(), a.values().end());
  std::vector<double> prod(bb);
  for (Index i = 0; i < pat.n_block_rows(); ++i)
    for (Index p = pat.row_begin(i); p < pat.row_end(i); ++p) {
      const Index j = pat.col_idx()[p];
      double* acc = g.data() + p * bb;
      for (Index q = pat.row_begin(i); q < p && pat.col_idx()[q] < std::min(i, j); ++q) {
        const Index pkj = pat.find(pat.col_idx()[q], j);
        if (pkj != npos) kern.block_gemm_sub(b, x.lu.data() + q * bb, x.lu.data() + pkj * bb, acc);
      }
      if (j < i) {
        kern.block_gemm(b, acc, inv.data() + j * bb, prod.data());
        std::copy(prod.begin(), prod.end(), acc);
      }
    }
  return g;
}

IluResidual ilu_fixed_point_residual(const BlockSparseMatrix& a, const IluFactors& x) {
  const auto g = ilu_fixed_point_map(a, x);
  IluResidual r;
  double a_norm = 0.0;
  for (Index k = 0; k < g.size(); ++k) {
    const double d = std::abs(x.lu[k] - g[k]);
    r.norm_1 += d;
    r.norm_max = std::max(r.norm_max, d);
    a_norm += std::abs(a.values()[k]);
  }
  r.relative = a_norm > 0.0 ? r.norm_1 / a_norm : r.norm_1;
  return r;
}

// ---------------------------------------------------------------------------

std::pair<BlockSparseMatrix, ScalingVectors> symmetric_scale(const BlockSparseMatrix& a) {
  const auto& pat = a.pattern();
  const Index b = a.block_size();
  const Index bb = b * b;
  std::vector<double> d(a.dim());
  for (Index i = 0; i < pat.n_block_rows(); ++i) {
    const auto blk = a.block(pat.diag(i));
    for (Index r = 0; r < b; ++r) {
      const double v = blk[r * b + r];
      if (v == 0.0 || !std::isfinite(v)) throw ZeroDiagonal(i * b + r);
      d[i * b + r] = 1.0 / std::sqrt(std::abs(v));
    }
  }
  std::vector<double> values(a.values().begin(), a.values().end());
  for (Index i = 0; i < pat.n_block_rows(); ++i)
    for (Index p = pat.row_begin(i); p < pat.row_end(i); ++p) {
      const Index j = pat.col_idx()[p];
      double* blk = values.data() + p * bb;
      for (Index r = 0; r < b; ++r)
        for (Index c = 0; c < b; ++c) blk[r * b + c] = blk[r * b + c] * d[i * b + r] * d[j * b + c];
    }
  ScalingVectors s{d, d};
  return {a.with_values(std::move(values)), std::move(s)};
}

std::vector<double> scale_rhs(const ScalingVectors& s, std::span<const double> b) {
  if (b.size() != s.row_scale.size()) throw DimensionMismatch("rhs length differs from scaling");
  std::vector<double> out(b.size());
  for (Index k = 0; k < b.size(); ++k) out[k] = s.row_scale[k] * b[k];
  return out;
}

std::vector<double> unscale_solution(const ScalingVectors& s, std::span<const double> x) {
  if (x.size() != s.col_scale.size()) throw DimensionMismatch("solution length differs from scaling");
  std::vector<double> out(x.size());
  for (Index k = 0; k < x.size(); ++k) out[k] = s.col_scale[k] * x[k];
  return out;
}

// ---------------------------------------------------------------------------
// Work sets

IluRowWorkSet::IluRowWorkSet(const BlockSparseMatrix& a, std::atomic<std::uint64_t>* guard_counter)
    : a_(a),
      b_(a.block_size()),
      bb_(a.block_size() * a.block_size()),
      lu_size_(a.values().size()),
      scale_(guard_scales(a)),
      guard_counter_(guard_counter) {
  detail::ilu_dependencies(a.pattern(), dep_ptr_, deps_);
}

std::vector<Index> IluRowWorkSet::slot_owner() const {
  std::vector<Index> owner(state_size());
  const auto rows = a_.pattern().row_of_positions();
  for (Index p = 0; p < rows.size(); ++p)
    std::fill_n(owner.begin() + static_cast<std::ptrdiff_t>(p * bb_), bb_, rows[p]);
  for (Index i = 0; i < a_.n_block_rows(); ++i)
    std::fill_n(owner.begin() + static_cast<std::ptrdiff_t>(lu_size_ + i * bb_), bb_, i);
  return owner;
}

std::vector<double> IluRowWorkSet::pack(const IluFactors& f) const {
  require_same_pattern(a_, f);
  std::vector<double> state(f.lu);
  state.insert(state.end(), f.diag_inv.begin(), f.diag_inv.end());
  return state;
}

IluFactors IluRowWorkSet::unpack(std::span<const double> state) const {
  IluFactors f;
  f.pattern = a_.pattern_ptr();
  f.block_size = b_;
  f.lu.assign(state.begin(), state.begin() + static_cast<std::ptrdiff_t>(lu_size_));
  f.diag_inv.assign(state.begin() + static_cast<std::ptrdiff_t>(lu_size_), state.end());
  return f;
}

IluBlockWorkSet::IluBlockWorkSet(const BlockSparseMatrix& a, std::atomic<std::uint64_t>* guard_counter)
    : a_(a),
      b_(a.block_size()),
      bb_(a.block_size() * a.block_size()),
      row_of_(a.pattern().row_of_positions()),
      scale_(guard_scales(a)),
      guard_counter_(guard_counter) {
  detail::ilu_dependencies(a.pattern(), dep_ptr_, deps_);
}

std::vector<Index> IluBlockWorkSet::slot_owner() const {
  std::vector<Index> owner(state_size());
  for (Index k = 0; k < owner.size(); ++k) owner[k] = k / bb_;
  return owner;
}

Index ilu_work_items(const BlockSparseMatrix& a, IluGranularity granularity) noexcept {
  return granularity == IluGranularity::Row ? a.n_block_rows() : a.nnz_blocks();
}

IluFactors replay_ilu(const BlockSparseMatrix& a, const IluFactors& initial, const Schedule& sched,
                      IluGranularity granularity, IluStats* stats) {
  require_same_pattern(a, initial);
  std::atomic<std::uint64_t> guards{0};
  IluFactors out;
  if (granularity == IluGranularity::Row) {
    IluRowWorkSet work(a, &guards);
    auto state = work.pack(initial);
    const auto owner = work.slot_owner();
    run_replay(work, sched, state, owner);
    out = work.unpack(state);
  } else {
    IluBlockWorkSet work(a, &guards);
    std::vector<double> state(initial.lu);
    const auto owner = work.slot_owner();
    run_replay(work, sched, state, owner);
    IluStats local;
    out = make_factors(a, std::move(state), &local);
    guards += local.guard_substitutions;
  }
  if (stats) stats->guard_substitutions += guards.load();
  return out;
}

}  // namespace abilu

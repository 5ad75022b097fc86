#pragma once

// Template bodies of the ILU work-set updates. Included from ilu.hpp.

#include <algorithm>
#include <vector>

#include "abilu/simd/kernels.hpp"

namespace abilu {

namespace detail {

/// For every pattern position p = (i, j): the pairs (pos of (i, k), pos of (k, j))
/// for all k < min(i, j) with both blocks stored, ascending in k.
void ilu_dependencies(const BlockPattern& pattern, std::vector<Index>& dep_ptr,
                      std::vector<std::pair<Index, Index>>& deps);

/// Writes scale * I (and optionally its inverse) into b x b row-major buffers.
void fill_scaled_identity(Index b, double scale, double* block);

}  // namespace detail

template <class View>
void IluRowWorkSet::update(Index i, View& view) const {
  const auto& pat = a_.pattern();
  const auto& kern = simd::kernels();
  const Index begin = pat.row_begin(i);
  const Index end = pat.row_end(i);
  thread_local std::vector<double> row, tmp, prod, inv;
  row.resize((end - begin) * bb_);
  tmp.resize(bb_);
  prod.resize(bb_);
  inv.resize(bb_);

  for (Index p = begin; p < end; ++p) {
    double* acc = row.data() + (p - begin) * bb_;
    const auto a_blk = a_.block(p);
    std::copy(a_blk.begin(), a_blk.end(), acc);
    for (Index d = dep_ptr_[p]; d < dep_ptr_[p + 1]; ++d) {
      const auto [pik, pkj] = deps_[d];
      view.load_range(pkj * bb_, tmp);
      kern.block_gemm_sub(b_, row.data() + (pik - begin) * bb_, tmp.data(), acc);
    }
    const Index j = pat.col_idx()[p];
    if (j < i) {
      view.load_range(lu_size_ + j * bb_, tmp);
      kern.block_gemm(b_, acc, tmp.data(), prod.data());
      std::copy(prod.begin(), prod.end(), acc);
    } else if (j == i) {
      if (!block_lu_invert_into(b_, std::span<const double>(acc, bb_), inv)) {
        detail::fill_scaled_identity(b_, scale_[i], acc);
        detail::fill_scaled_identity(b_, 1.0 / scale_[i], inv.data());
        if (guard_counter_) guard_counter_->fetch_add(1, std::memory_order_relaxed);
      }
    }
  }
  view.store_range(begin * bb_, row);
  view.store_range(lu_size_ + i * bb_, inv);
}

template <class View>
void IluBlockWorkSet::update(Index p, View& view) const {
  const auto& pat = a_.pattern();
  const auto& kern = simd::kernels();
  thread_local std::vector<double> acc, lhs, rhs, inv;
  acc.resize(bb_);
  lhs.resize(bb_);
  rhs.resize(bb_);
  inv.resize(bb_);

  const Index i = row_of_[p];
  const Index j = pat.col_idx()[p];
  const auto a_blk = a_.block(p);
  std::copy(a_blk.begin(), a_blk.end(), acc.begin());
  for (Index d = dep_ptr_[p]; d < dep_ptr_[p + 1]; ++d) {
    const auto [pik, pkj] = deps_[d];
    view.load_range(pik * bb_, lhs);
    view.load_range(pkj * bb_, rhs);
    kern.block_gemm_sub(b_, lhs.data(), rhs.data(), acc.data());
  }
  if (j < i) {
    view.load_range(pat.diag(j) * bb_, rhs);
    if (!block_lu_invert_into(b_, rhs, inv)) {
      detail::fill_scaled_identity(b_, 1.0 / scale_[j], inv.data());
      if (guard_counter_) guard_counter_->fetch_add(1, std::memory_order_relaxed);
    }
    kern.block_gemm(b_, acc.data(), inv.data(), lhs.data());
    view.store_range(p * bb_, lhs);
    return;
  }
  if (j == i && !block_lu_invert_into(b_, acc, inv)) {
    detail::fill_scaled_identity(b_, scale_[i], acc.data());
    if (guard_counter_) guard_counter_->fetch_add(1, std::memory_order_relaxed);
  }
  view.store_range(p * bb_, acc);
}

}  // namespace abilu

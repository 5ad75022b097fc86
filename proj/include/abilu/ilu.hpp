#pragma once

// ILU(0) and block ILU(0): sequential reference factorization, asynchronous
// fixed-point factorization, the singularity-guarded ("modified") update, and
// fixed-point residual diagnostics.
//
// Factors are stored fused in A's block pattern: the strict lower positions
// hold L (unit block diagonal implied), the remaining positions hold U. The
// inverse of every U_ii is cached alongside.

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "abilu/async_exec.hpp"
#include "abilu/blockmat.hpp"

namespace abilu {

struct IluFactors {
  std::shared_ptr<const BlockPattern> pattern;
  Index block_size = 1;
  std::vector<double> lu;        ///< fused L\U, one b x b block per pattern position
  std::vector<double> diag_inv;  ///< inverse of U_ii, one block per block row

  Index n_block_rows() const noexcept { return pattern ? pattern->n_block_rows() : 0; }
  Index dim() const noexcept { return n_block_rows() * block_size; }
  std::span<const double> block(Index pos) const noexcept {
    const Index bb = block_size * block_size;
    return std::span<const double>(lu).subspan(pos * bb, bb);
  }
  std::span<const double> diag_inverse(Index row) const noexcept {
    const Index bb = block_size * block_size;
    return std::span<const double>(diag_inv).subspan(row * bb, bb);
  }

  /// L with explicit identity diagonal blocks, on the lower part of the pattern.
  BlockSparseMatrix lower() const;
  /// U on the upper part of the pattern (diagonal included).
  BlockSparseMatrix upper() const;
  /// Fused storage as a matrix with A's pattern.
  BlockSparseMatrix fused() const;

  /// Bitwise comparison of pattern, factors and cached inverses.
  friend bool operator==(const IluFactors& x, const IluFactors& y) noexcept;
};

/// Counters reported by the guarded iterations.
struct IluStats {
  std::uint64_t guard_substitutions = 0;
};

/// Substitute for a singular diagonal block: `diag` itself when it is
/// nonsingular, otherwise scale * I.
DenseBlock modified_guard(const DenseBlock& diag, double scale);

/// Guard scale for block row i: max |entry| of A_ii, or 1 when A_ii is zero.
double guard_scale(const BlockSparseMatrix& a, Index row) noexcept;

/// Builds factors from fused values in a's pattern; singular U_ii are replaced
/// by the guard substitute (counted in stats) and their inverses cached.
IluFactors make_factors(const BlockSparseMatrix& a, std::vector<double> lu, IluStats* stats = nullptr);

/// Standard initial guess: the entries of A.
IluFactors initial_guess(const BlockSparseMatrix& a, IluStats* stats = nullptr);

/// Row-by-row, left-to-right evaluation of the ILU(0) equations.
/// Throws SingularDiagonal(row) when a U_ii is singular.
IluFactors sequential_ilu0(const BlockSparseMatrix& a);

/// cfg.n_sweeps asynchronous sweeps, one work item per block row, starting
/// from `initial` (default: the entries of A). Never produces a singular U_ii.
IluFactors async_ilu0(const BlockSparseMatrix& a, const SweepConfig& cfg, IluStats* stats = nullptr);
IluFactors async_ilu0(const BlockSparseMatrix& a, const SweepConfig& cfg, const IluFactors& initial,
                      IluStats* stats = nullptr);

/// One synchronized evaluation g(x) of the ILU equations, in fused layout.
/// U_jj inverses are recomputed from x. Throws SingularDiagonal.
std::vector<double> ilu_fixed_point_map(const BlockSparseMatrix& a, const IluFactors& x);

struct IluResidual {
  double norm_1 = 0.0;
  double norm_max = 0.0;
  /// norm_1 divided by the entrywise 1-norm of A.
  double relative = 0.0;
};

/// || x - g(x) || over all fused entries.
IluResidual ilu_fixed_point_residual(const BlockSparseMatrix& a, const IluFactors& x);

// ---------------------------------------------------------------------------
// Symmetric scaling

struct ScalingVectors {
  std::vector<double> row_scale;
  std::vector<double> col_scale;
};

/// D A D with d_i = 1 / sqrt(|a_ii|). Throws ZeroDiagonal.
std::pair<BlockSparseMatrix, ScalingVectors> symmetric_scale(const BlockSparseMatrix& a);

/// b~ = D b
std::vector<double> scale_rhs(const ScalingVectors& s, std::span<const double> b);
/// x = D x~
std::vector<double> unscale_solution(const ScalingVectors& s, std::span<const double> x_scaled);

// ---------------------------------------------------------------------------
// Work sets

/// Item i computes block row i left to right. State layout is
/// [fused lu | diag_inv]; row i owns its lu blocks and its diag_inv block.
class IluRowWorkSet {
 public:
  IluRowWorkSet(const BlockSparseMatrix& a, std::atomic<std::uint64_t>* guard_counter = nullptr);

  Index size() const noexcept { return a_.n_block_rows(); }
  Index state_size() const noexcept { return lu_size_ + a_.n_block_rows() * bb_; }
  std::vector<Index> slot_owner() const;

  std::vector<double> pack(const IluFactors& f) const;
  IluFactors unpack(std::span<const double> state) const;

  template <class View>
  void update(Index row, View& view) const;

 private:
  const BlockSparseMatrix& a_;
  Index b_, bb_, lu_size_;
  std::vector<Index> dep_ptr_;
  std::vector<std::pair<Index, Index>> deps_;  ///< (pos of L_ik, pos of U_kj), ascending k
  std::vector<double> scale_;
  std::atomic<std::uint64_t>* guard_counter_;
};

/// Item p computes the single block at pattern position p; items are in
/// Gaussian-elimination (row-major) order. State is the fused lu array only;
/// U_jj inverses are taken from the block read at update time.
class IluBlockWorkSet {
 public:
  IluBlockWorkSet(const BlockSparseMatrix& a, std::atomic<std::uint64_t>* guard_counter = nullptr);

  Index size() const noexcept { return a_.nnz_blocks(); }
  Index state_size() const noexcept { return a_.values().size(); }
  std::vector<Index> slot_owner() const;

  template <class View>
  void update(Index pos, View& view) const;

 private:
  const BlockSparseMatrix& a_;
  Index b_, bb_;
  std::vector<Index> row_of_;
  std::vector<Index> dep_ptr_;
  std::vector<std::pair<Index, Index>> deps_;
  std::vector<double> scale_;
  std::atomic<std::uint64_t>* guard_counter_;
};

enum class IluGranularity { Row, Block };

/// Number of work items for the given granularity.
Index ilu_work_items(const BlockSparseMatrix& a, IluGranularity granularity) noexcept;

/// Replays `sched` (over ilu_work_items items) from `initial`.
IluFactors replay_ilu(const BlockSparseMatrix& a, const IluFactors& initial, const Schedule& sched,
                      IluGranularity granularity, IluStats* stats = nullptr);

}  // namespace abilu

#include "abilu/detail/ilu_impl.hpp"

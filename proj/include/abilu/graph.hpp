#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "abilu/blockmat.hpp"

namespace abilu {

/// Undirected graph in compressed adjacency form; neighbour lists are sorted.
class Graph {
 public:
  Graph() : offsets_{0} {}
  /// Symmetrizes, sorts and de-duplicates; self loops are dropped.
  static Graph from_lists(const std::vector<std::vector<Index>>& lists);

  Index size() const noexcept { return offsets_.size() - 1; }
  std::span<const Index> neighbors(Index v) const noexcept {
    return std::span<const Index>(adj_).subspan(offsets_[v], offsets_[v + 1] - offsets_[v]);
  }
  Index degree(Index v) const noexcept { return offsets_[v + 1] - offsets_[v]; }
  bool symmetric() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::vector<Index> offsets_;
  std::vector<Index> adj_;
};

/// Block-level connectivity of a matrix (off-diagonal blocks, symmetrized).
Graph matrix_graph(const BlockSparseMatrix& a);

/// Cells of a 2D grid: face-neighbour graph, cell centres and boundary flags.
struct CellGrid {
  Graph adjacency;
  std::vector<std::array<double, 2>> centers;
  std::vector<std::uint8_t> boundary;

  Index size() const noexcept { return centers.size(); }
  /// Throws InvalidSpec when sizes disagree, adjacency is asymmetric or a
  /// coordinate is not finite.
  void validate() const;

  friend bool operator==(const CellGrid&, const CellGrid&) = default;
};

/// Bijective renumbering; new_to_old()[k] is the old index placed at position k.
class Permutation {
 public:
  Permutation() = default;
  /// Throws InvalidSpec unless the array is a bijection on 0..n-1.
  explicit Permutation(std::vector<Index> new_to_old);
  static Permutation identity(Index n);

  Index size() const noexcept { return perm_.size(); }
  std::span<const Index> new_to_old() const noexcept { return perm_; }
  std::span<const Index> old_to_new() const noexcept { return inverse_; }
  Permutation inverse() const { return Permutation(inverse_); }

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<Index> perm_;
  std::vector<Index> inverse_;
};

}  // namespace abilu

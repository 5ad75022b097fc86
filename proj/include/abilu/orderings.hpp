#pragma once

// Cell / block-row orderings: reverse Cuthill-McKee, one-way dissection,
// boundary-layer line ordering and the hybrid line-X orderings, plus the
// helpers that apply a permutation to matrices, vectors and grids.
//
// All functions are pure and single-threaded.

#include <optional>
#include <string_view>
#include <vector>

#include "abilu/blockmat.hpp"
#include "abilu/graph.hpp"

namespace abilu {

/// Reverse Cuthill-McKee. Each connected component starts from a
/// pseudo-peripheral vertex found by repeated BFS from its minimum-degree
/// vertex; neighbours are visited by increasing degree, ties by lower index.
Permutation rcm_order(const Graph& g);

/// Pseudo-peripheral vertex of the component containing `start`, restricted
/// to vertices with allowed[v] != 0 (empty mask = every vertex allowed).
Index pseudo_peripheral_vertex(const Graph& g, Index start, std::span<const char> allowed = {});

/// BFS level sets from `root` restricted to allowed vertices.
std::vector<std::vector<Index>> level_structure(const Graph& g, Index root,
                                                std::span<const char> allowed = {});

/// One level-set bisection step of one-way dissection on a connected vertex subset.
struct LevelBisection {
  std::vector<Index> part_a;
  std::vector<Index> part_b;
  std::vector<Index> separator;
};
/// Returns nullopt when the subset has fewer than three BFS levels.
std::optional<LevelBisection> level_set_bisection(const Graph& g, std::span<const Index> vertices);

inline constexpr Index kDefaultDissectionLeaf = 64;

/// Recursive one-way dissection: parts are numbered before the separator
/// level that splits them; recursion stops at `leaf_size` vertices.
Permutation one_way_dissection_order(const Graph& g, Index leaf_size = kDefaultDissectionLeaf);

// ---------------------------------------------------------------------------
// Lines of anisotropic cells

struct LineSet {
  std::vector<std::vector<Index>> lines;  ///< boundary-to-interior march order
  std::vector<Index> isotropic_cells;     ///< ascending

  /// Throws InvalidSpec unless lines and isotropic cells partition 0..n-1,
  /// every line has length >= 2 and consecutive line cells are neighbours.
  void validate(const CellGrid& grid) const;
};

inline constexpr double kDefaultAnisotropyThreshold = 4.0;

/// Ratio of the largest to the smallest centre distance to face neighbours
/// (1 for cells with no neighbours).
double cell_anisotropy(const CellGrid& grid, Index cell);

/// Greedy line march from boundary cells whose anisotropy exceeds `threshold`.
/// A line grows to the nearest neighbour not already in it, provided that
/// neighbour is untaken, itself anisotropic, and closer than `threshold` times
/// the current cell's smallest neighbour distance; ties go to the lower index.
LineSet find_lines(const CellGrid& grid, double threshold = kDefaultAnisotropyThreshold);

/// Lines first (each contiguous, march order), then isotropic cells.
Permutation line_order(const LineSet& lines);

enum class InnerOrdering { Rcm, OneWayDissection };

/// Graph whose vertices are lines (0..L-1) followed by isotropic cells.
Graph condensed_line_graph(const LineSet& lines, const CellGrid& grid);

/// Orders the condensed line graph with `inner`, then expands each line vertex
/// into its contiguous cell sequence.
Permutation hybrid_line_order(const LineSet& lines, const CellGrid& grid, InnerOrdering inner,
                              Index leaf_size = kDefaultDissectionLeaf);

// ---------------------------------------------------------------------------
// Applying permutations

/// Symmetric block permutation P A P^T: new block (k, l) = old (p[k], p[l]).
BlockSparseMatrix permute_matrix(const BlockSparseMatrix& a, const Permutation& p);

/// new sub-vector k = old sub-vector p[k], sub-vectors of length b.
std::vector<double> permute_vector(std::span<const double> x, const Permutation& p, Index b);
/// Inverse of permute_vector.
std::vector<double> unpermute_vector(std::span<const double> x, const Permutation& p, Index b);

CellGrid permute_grid(const CellGrid& grid, const Permutation& p);

/// max |new(v) - new(w)| over the edges of g.
Index bandwidth(const Graph& g, const Permutation& p);
/// max |i - j| over stored blocks.
Index bandwidth(const BlockSparseMatrix& a);

// ---------------------------------------------------------------------------
// Named orderings, as selected by `--ordering`

enum class OrderingKind { Natural, Rcm, OneWayDissection, Line, LineRcm, LineOneWayDissection };

OrderingKind parse_ordering(std::string_view name);
std::string_view ordering_name(OrderingKind kind) noexcept;
bool ordering_needs_grid(OrderingKind kind) noexcept;

struct OrderingOptions {
  double line_threshold = kDefaultAnisotropyThreshold;
  Index leaf_size = kDefaultDissectionLeaf;
};

/// Line-based kinds need `grid`; the topological kinds use `graph`.
Permutation compute_ordering(OrderingKind kind, const Graph& graph, const CellGrid* grid,
                             const OrderingOptions& options = {});

}  // namespace abilu

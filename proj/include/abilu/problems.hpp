#pragma once

// Desk-scale test problems on structured 2D cell grids.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "abilu/blockmat.hpp"
#include "abilu/graph.hpp"

namespace abilu {

enum class ProblemKind { Poisson2D, ConvectionDiffusion2D, BlockCoupled2D, BoundaryLayerGrid };

struct ProblemSpec {
  ProblemKind kind = ProblemKind::Poisson2D;
  Index nx = 16;
  Index ny = 16;
  /// Weight of the y-direction diffusion relative to x.
  double anisotropy = 1.0;
  /// Geometric growth of wall-normal spacing (boundary-layer grid).
  double stretching = 1.2;
  /// Number of stretched layers next to the wall (boundary-layer grid).
  Index layers = 10;
  /// dx / dy of the wall-adjacent layer (boundary-layer grid).
  double wall_aspect = 100.0;
  /// Upwinded convection velocity in cell-Peclet units.
  double vx = 0.0;
  double vy = 0.0;
  Index block_size = 1;
  /// Strength of the random intra-block coupling for b > 1.
  double coupling = 0.2;
  std::uint64_t seed = 1;
  /// Adds diag_shift * |a_ii| to every scalar diagonal entry.
  double diag_shift = 0.0;

  /// Throws InvalidSpec.
  void validate() const;
};

struct Problem {
  BlockSparseMatrix a;
  std::vector<double> rhs;  ///< A * x, x a fixed pseudo-random vector with entries in [0.5, 1.5)
  CellGrid grid;
};

/// Builds the matrix, right-hand side and cell grid. Deterministic given spec.seed.
///
/// Poisson2D / ConvectionDiffusion2D: unit-spaced 5-point stencil with Dirichlet
/// boundaries (diagonal 2 + 2 * anisotropy, off-diagonals -1 and -anisotropy),
/// plus first-order upwind convection. BlockCoupled2D turns every scalar
/// contribution c into the block c * (I + coupling * R), R random with zero
/// diagonal and shared by the four entries an edge contributes. BoundaryLayerGrid uses finite-volume coefficients (face length over
/// centre distance) on a grid whose first `layers` rows are geometrically
/// stretched away from the wall at y = 0; b > 1 adds block coupling as above.
Problem generate(const ProblemSpec& spec);

/// Parses "kind:NXxNY[,key=value...]" with kind in {poisson, convdiff, block, bl}
/// and keys eps, vx, vy, b, kappa, seed, stretch, layers, aspect, shift.
ProblemSpec parse_problem_spec(std::string_view text);
std::string format_problem_spec(const ProblemSpec& spec);

std::string_view problem_kind_name(ProblemKind kind) noexcept;

/// A + sigma * diag(|a_ii|) on scalar diagonal entries.
BlockSparseMatrix shift_diagonal(const BlockSparseMatrix& a, double sigma);

/// Cell-centred grid of nx x ny unit squares, cell (ix, iy) at index iy * nx + ix.
CellGrid uniform_grid(Index nx, Index ny);

}  // namespace abilu

#pragma once

// Experiment drivers behind the `bench` command-line tool.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "abilu/graph.hpp"
#include "abilu/ilu.hpp"
#include "abilu/io.hpp"
#include "abilu/krylov.hpp"
#include "abilu/orderings.hpp"

namespace abilu {

struct ExperimentConfig {
  /// Problem spec ("convdiff:64x64,...") or a Matrix Market path.
  std::string problem = "convdiff:64x64,eps=0.01,vx=1,vy=0.5";
  /// Block size used when reading a Matrix Market file.
  Index block_size = 1;
  /// Grid file for line orderings of Matrix Market input.
  std::filesystem::path grid_path;
  OrderingKind ordering = OrderingKind::Natural;
  OrderingOptions ordering_options;
  bool scale_symmetric = false;
  std::vector<Index> build_sweeps = {1, 2, 3, 5, 10, 20, kExactSweeps};
  std::vector<Index> apply_sweeps = {1, 2, 3, 5, 10, 20, kExactSweeps};
  std::vector<Index> workers = {1};
  Index reps = 3;
  std::uint64_t seed = 1;
  /// 0 selects the default for the block size.
  Index chunk_size = 0;
  FgmresOptions fgmres;
  /// Diagnostics: shift sequence sigma_k = diag_shift0 * diag_ratio^k.
  Index diag_steps = 8;
  double diag_shift0 = 1.0;
  double diag_ratio = 0.5;

  /// Throws InvalidConfig.
  void validate() const;
};

/// Matrix, right-hand side and grid after ordering (and optional scaling).
struct PreparedSystem {
  BlockSparseMatrix a;
  std::vector<double> rhs;
  CellGrid grid;
  bool has_grid = false;
  Permutation permutation;
  bool scaled = false;
  ScalingVectors scaling;
};

PreparedSystem prepare_system(const ExperimentConfig& cfg);

/// One factorization + FGMRES solve.
struct SolveOutcome {
  Index iterations = 0;
  bool converged = false;
  double factor_ms = 0.0;
  double apply_ms = 0.0;
  double wall_ms = 0.0;
};

/// build/apply == kExactSweeps selects sequential factorization / exact solves.
/// Factorization or solver failures are reported as non-convergence.
SolveOutcome solve_once(const BlockSparseMatrix& a, std::span<const double> rhs, Index build_sweeps,
                        Index apply_sweeps, Index workers, Index chunk_size, const FgmresOptions& opts);

std::vector<SweepRecord> run_sweep_study(const ExperimentConfig& cfg);
std::vector<DiagRecord> run_factor_diagnostics(const ExperimentConfig& cfg);
std::vector<ScalingRecord> run_scaling(const ExperimentConfig& cfg);

/// Parses "a,b,c" into sweep counts ("exact" allowed) or plain counts.
std::vector<Index> parse_sweep_list(std::string_view text);
std::vector<Index> parse_count_list(std::string_view text);

}  // namespace abilu

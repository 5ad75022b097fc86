#pragma once

// Matrix Market, grid and CSV files.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "abilu/blockmat.hpp"
#include "abilu/graph.hpp"
#include "abilu/ilu.hpp"

namespace abilu {

// ---------------------------------------------------------------------------
// Matrix Market (coordinate, 1-based)

/// Writes every entry of every stored block (zeros included) with 17
/// significant digits as `real general`.
void write_matrix_market(const BlockSparseMatrix& a, std::ostream& os);
void write_matrix_market(const BlockSparseMatrix& a, const std::filesystem::path& path);

/// Reads `real` or `integer` coordinate files with `general`, `symmetric` or
/// `skew-symmetric` storage (the latter two are expanded) and groups the
/// entries into b x b blocks; in-block entries missing from the file become
/// explicit zeros. Duplicates are summed. Throws ParseError(line),
/// NonTilingPattern, or InvalidPattern when a diagonal block is absent.
BlockSparseMatrix read_matrix_market(std::istream& is, Index block_size = 1);
BlockSparseMatrix read_matrix_market(const std::filesystem::path& path, Index block_size = 1);

/// Writes L.mtx (strict lower part, unit diagonal omitted) and U.mtx into dir.
void write_factors(const IluFactors& f, const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Grid files
//
//   cells N
//   adjacency
//   <degree> <neighbour> ...        N lines, 0-based
//   centers
//   <x> <y>                         N lines
//   boundary
//   <0|1>                           N lines

void write_grid(const CellGrid& grid, std::ostream& os);
void write_grid(const CellGrid& grid, const std::filesystem::path& path);
/// Throws ParseError(line) or InvalidSpec when the grid is inconsistent.
CellGrid read_grid(std::istream& is);
CellGrid read_grid(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  friend bool operator==(const CsvTable&, const CsvTable&) = default;
};

/// RFC 4180 style: fields containing ',', '"' or newlines are quoted.
void write_csv(const CsvTable& table, std::ostream& os);
void write_csv(const CsvTable& table, const std::filesystem::path& path);
/// Throws ParseError(line) on ragged rows or unterminated quotes.
CsvTable read_csv(std::istream& is);
CsvTable read_csv(const std::filesystem::path& path);

/// Sweep count meaning "exact (sequential) factorization or solve".
inline constexpr Index kExactSweeps = 0;
std::string format_sweeps(Index sweeps);
/// "exact" or a positive integer. Throws InvalidConfig.
Index parse_sweeps(std::string_view text);

struct SweepRecord {
  std::string ordering;
  Index threads = 1;
  Index build_sweeps = 1;
  Index apply_sweeps = 1;
  std::optional<double> fgmres_iters;  ///< mean over repetitions; empty if any run failed
  bool converged = false;
  double wall_ms = 0.0;
  double iters_rel_dev = 0.0;  ///< max |iters - mean| / mean

  friend bool operator==(const SweepRecord&, const SweepRecord&) = default;
};

struct DiagRecord {
  Index step = 0;
  double ilu_residual_1norm = 0.0;
  double ilu_residual_relative = 0.0;
  double L_jacobi_maxnorm = 0.0;
  double U_jacobi_maxnorm = 0.0;
  std::string variant;
  double shift = 0.0;

  friend bool operator==(const DiagRecord&, const DiagRecord&) = default;
};

struct ScalingRecord {
  Index threads = 1;
  double total_precond_ms = 0.0;
  double speedup = 1.0;
  double fgmres_iters = 0.0;
  bool converged = false;

  friend bool operator==(const ScalingRecord&, const ScalingRecord&) = default;
};

CsvTable to_csv(const std::vector<SweepRecord>& rows);
CsvTable to_csv(const std::vector<DiagRecord>& rows);
CsvTable to_csv(const std::vector<ScalingRecord>& rows);

/// Inverse of to_csv; throws ParseError on a wrong header or bad field.
std::vector<SweepRecord> sweep_records(const CsvTable& t);
std::vector<DiagRecord> diag_records(const CsvTable& t);
std::vector<ScalingRecord> scaling_records(const CsvTable& t);

/// to_csv + write_csv. Throws IoError.
template <class Record>
void write_csv_report(const std::vector<Record>& rows, const std::filesystem::path& path) {
  write_csv(to_csv(rows), path);
}

}  // namespace abilu

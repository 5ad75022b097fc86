#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <unistd.h>

#include "abilu/io.hpp"
#include "abilu/orderings.hpp"
#include "abilu/problems.hpp"
#include "unit/test_util.hpp"

namespace {

using namespace abilu;
namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("abilu_test_" + name + "_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

bool pattern_symmetric(const BlockSparseMatrix& a) {
  const auto& p = a.pattern();
  for (Index i = 0; i < p.n_block_rows(); ++i)
    for (Index q = p.row_begin(i); q < p.row_end(i); ++q)
      if (p.find(p.col_idx()[q], i) == npos) return false;
  return true;
}

bool cholesky_succeeds(std::vector<double> a, Index n) {
  for (Index j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (Index k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0)) return false;
    d = std::sqrt(d);
    a[j * n + j] = d;
    for (Index i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (Index k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / d;
    }
  }
  return true;
}

// --- generators --------------------------------------------------------------

TEST(Generate, PoissonThreeByThreeIsTextbookStencil) {
  const auto p = generate(parse_problem_spec("poisson:3x3"));
  ASSERT_EQ(p.a.dim(), 9u);
  for (Index i = 0; i < 9; ++i) {
    EXPECT_EQ(p.a.entry(i, i), 4.0);
    for (Index j = 0; j < 9; ++j) {
      if (i == j) continue;
      const Index xi = i % 3, yi = i / 3, xj = j % 3, yj = j / 3;
      const bool nb = (xi == xj && (yi + 1 == yj || yj + 1 == yi)) || (yi == yj && (xi + 1 == xj || xj + 1 == xi));
      EXPECT_EQ(p.a.entry(i, j), nb ? -1.0 : 0.0) << i << "," << j;
    }
  }
  // Row sums: 0 in the interior, positive next to the Dirichlet boundary.
  EXPECT_EQ(spmv(p.a, std::vector<double>(9, 1.0))[4], 0.0);
  EXPECT_EQ(spmv(p.a, std::vector<double>(9, 1.0))[0], 2.0);
}

TEST(Generate, ConvDiffWithoutVelocityIsPoisson) {
  const auto cd = generate(parse_problem_spec("convdiff:7x5,eps=0.3"));
  const auto po = generate(parse_problem_spec("poisson:7x5,eps=0.3"));
  EXPECT_EQ(cd.a, po.a);
}

TEST(Generate, BlockWithUnitBlockSizeIsConvDiff) {
  const auto bl = generate(parse_problem_spec("block:9x6,b=1,vx=1.5,vy=-0.5,eps=0.2"));
  const auto cd = generate(parse_problem_spec("convdiff:9x6,vx=1.5,vy=-0.5,eps=0.2"));
  EXPECT_EQ(bl.a, cd.a);
}

TEST(Generate, UpwindConvectionMakesMatrixNonsymmetric) {
  const auto p = generate(parse_problem_spec("convdiff:6x6,vx=2"));
  EXPECT_NE(p.a.entry(1, 0), p.a.entry(0, 1));
}

TEST(Generate, StructuralInvariantsForAllKinds) {
  for (const char* spec : {"poisson:6x4", "convdiff:5x7,vx=1,vy=2", "block:5x5,b=3", "bl:6x12", "bl:6x12,b=2"}) {
    const auto p = generate(parse_problem_spec(spec));
    EXPECT_TRUE(pattern_symmetric(p.a)) << spec;
    EXPECT_EQ(p.rhs.size(), p.a.dim());
    EXPECT_EQ(p.grid.size(), p.a.n_block_rows());
    EXPECT_NO_THROW(p.grid.validate());
    EXPECT_EQ(matrix_graph(p.a), p.grid.adjacency) << spec;
  }
}

TEST(Generate, PoissonIsSymmetricPositiveDefinite) {
  for (const char* spec : {"poisson:4x4", "poisson:6x3,eps=5"}) {
    const auto p = generate(parse_problem_spec(spec));
    const auto d = p.a.to_dense();
    const Index n = p.a.dim();
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) EXPECT_EQ(d[i * n + j], d[j * n + i]);
    EXPECT_TRUE(cholesky_succeeds(d, n));
  }
}

TEST(Generate, DeterministicGivenSeed) {
  const auto a = generate(parse_problem_spec("block:6x6,b=2,seed=3"));
  const auto b = generate(parse_problem_spec("block:6x6,b=2,seed=3"));
  const auto c = generate(parse_problem_spec("block:6x6,b=2,seed=4"));
  EXPECT_EQ(a.a, b.a);
  EXPECT_EQ(a.rhs, b.rhs);
  EXPECT_FALSE(a.a == c.a);
}

TEST(Generate, BoundaryLayerLinesDetectedForStrongStretching) {
  for (const char* spec : {"bl:6x10,stretch=1.5,layers=5", "bl:6x12,stretch=2,layers=8"}) {
    const auto p = generate(parse_problem_spec(spec));
    EXPECT_FALSE(find_lines(p.grid).lines.empty()) << spec;
  }
}

TEST(Generate, DiagonalShiftAddsScaledDiagonal) {
  const auto base = generate(parse_problem_spec("poisson:4x4"));
  const auto shifted = generate(parse_problem_spec("poisson:4x4,shift=0.5"));
  for (Index i = 0; i < 16; ++i) EXPECT_EQ(shifted.a.entry(i, i), 6.0);
  EXPECT_EQ(shift_diagonal(base.a, 0.5), shifted.a);
}

TEST(ProblemSpec, ParseFormatRoundTrip) {
  for (const char* spec : {"poisson:3x4", "convdiff:64x64,eps=0.01,vx=1,vy=0.5", "block:100x100,b=4,kappa=0.1",
                           "bl:32x48,stretch=1.3,layers=12,aspect=250,seed=9,shift=0.25"}) {
    const auto s = parse_problem_spec(spec);
    const auto t = parse_problem_spec(format_problem_spec(s));
    EXPECT_EQ(format_problem_spec(t), format_problem_spec(s));
    EXPECT_EQ(generate(t).a, generate(s).a);
  }
}

TEST(ProblemSpec, InvalidSpecsRejected) {
  for (const char* bad : {"poisson", "laplace:3x3", "poisson:3", "poisson:0x3", "poisson:3x3,foo=1",
                          "poisson:3x3,b=2", "bl:4x4,layers=9", "bl:4x8,stretch=0.5", "poisson:3x3,eps=-1",
                          "poisson:3x3,vx=abc", "block:3x3,b=0"})
    EXPECT_THROW(generate(parse_problem_spec(bad)), InvalidSpec) << bad;
}

// --- Matrix Market -------------------------------------------------------------

TEST(MatrixMarket, OneByOneFile) {
  std::ostringstream os;
  write_matrix_market(from_triplets(1, 1, std::vector<Triplet>{{0, 0, 42.0}}), os);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "%%MatrixMarket matrix coordinate real general");
  std::istringstream again(os.str());
  const auto a = read_matrix_market(again);
  EXPECT_EQ(a.entry(0, 0), 42.0);
  EXPECT_EQ(a.nnz(), 1u);
}

TEST(MatrixMarket, RandomMatricesRoundTripBitwise) {
  std::mt19937_64 rng(61);
  for (Index b : {1, 2, 4}) {
    auto a = tu::random_block_matrix(rng, {.n_block_rows = 15, .block_size = b, .fill = 0.3});
    // Include awkward values.
    std::vector<double> v(a.values().begin(), a.values().end());
    v[0] = 1.0 / 3.0;
    v[1 % v.size()] = -1e-300;
    v[v.size() - 1] = 12345678.901234567;
    a = a.with_values(v);
    std::stringstream ss;
    write_matrix_market(a, ss);
    EXPECT_EQ(read_matrix_market(ss, b), a);
  }
}

TEST(MatrixMarket, FileRoundTripAndFactorsDump) {
  const auto dir = temp_dir("mm");
  const auto a = generate(parse_problem_spec("block:4x4,b=2")).a;
  write_matrix_market(a, dir / "a.mtx");
  EXPECT_EQ(read_matrix_market(dir / "a.mtx", 2), a);

  const auto f = sequential_ilu0(a);
  write_factors(f, dir);
  // L.mtx has no diagonal entries, so read both dumps as plain triplets.
  auto triplets = [](const fs::path& path) {
    std::ifstream is(path);
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "%%MatrixMarket matrix coordinate real general");
    while (std::getline(is, line) && line[0] == '%') {
    }
    std::map<std::pair<Index, Index>, double> m;
    Index r, c;
    double v;
    while (is >> r >> c >> v) m[{r - 1, c - 1}] = v;
    return m;
  };
  const auto l = triplets(dir / "L.mtx");
  const auto u = triplets(dir / "U.mtx");
  const auto lower = f.lower(), upper = f.upper();
  Index n_lower = 0, n_upper = 0;
  for (Index r = 0; r < a.dim(); ++r)
    for (Index c = 0; c < a.dim(); ++c) {
      const auto pos = a.pattern().find(r / 2, c / 2);
      if (pos == npos) continue;
      if (c / 2 < r / 2) {
        ++n_lower;
        EXPECT_EQ(l.at({r, c}), lower.entry(r, c));
      } else {
        ++n_upper;
        EXPECT_EQ(u.at({r, c}), upper.entry(r, c));
      }
    }
  EXPECT_EQ(l.size(), n_lower);
  EXPECT_EQ(u.size(), n_upper);
  fs::remove_all(dir);
}

TEST(MatrixMarket, SymmetricFileIsExpanded) {
  std::istringstream is(
      "%%MatrixMarket matrix coordinate real symmetric\n"
      "% comment\n"
      "3 3 4\n"
      "1 1 2.0\n"
      "2 1 -1.0\n"
      "2 2 2.0\n"
      "3 3 5.0\n");
  const auto a = read_matrix_market(is);
  const std::vector<double> dense{2, -1, 0, -1, 2, 0, 0, 0, 5};
  const std::vector<double> x{1, 2, 3};
  EXPECT_EQ(spmv(a, x), tu::dense_matvec(dense, x));
}

TEST(MatrixMarket, SkewSymmetricAndIntegerFiles) {
  std::istringstream is(
      "%%MatrixMarket matrix coordinate integer skew-symmetric\n"
      "2 2 3\n"
      "1 1 3\n"
      "2 1 4\n"
      "2 2 1\n");
  const auto a = read_matrix_market(is);
  EXPECT_EQ(a.entry(1, 0), 4.0);
  EXPECT_EQ(a.entry(0, 1), -4.0);
}

TEST(MatrixMarket, ErrorsCarryLineNumbers) {
  auto line_of = [](const std::string& text) -> Index {
    std::istringstream is(text);
    try {
      read_matrix_market(is);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("hello\n"), 1u);
  EXPECT_EQ(line_of("%%MatrixMarket matrix array real general\n1 1\n1\n"), 1u);
  EXPECT_EQ(line_of("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n3 3 1\n"), 4u);
  EXPECT_EQ(line_of("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 x\n"), 3u);
  EXPECT_EQ(line_of("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1\n2 2 1\n"), 4u);
}

TEST(MatrixMarket, NonTilingAndMissingDiagonal) {
  std::istringstream odd("%%MatrixMarket matrix coordinate real general\n3 3 3\n1 1 1\n2 2 1\n3 3 1\n");
  EXPECT_THROW(read_matrix_market(odd, 2), NonTilingPattern);
  std::istringstream nodiag("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n2 1 1\n");
  EXPECT_THROW(read_matrix_market(nodiag), InvalidPattern);
}

TEST(MatrixMarket, MissingFileIsIoError) {
  EXPECT_THROW(read_matrix_market(fs::path("/nonexistent/abilu.mtx")), IoError);
}

// --- grids -------------------------------------------------------------------

TEST(GridFile, RoundTripBitwise) {
  const auto p = generate(parse_problem_spec("bl:5x12"));
  std::stringstream ss;
  write_grid(p.grid, ss);
  EXPECT_EQ(read_grid(ss), p.grid);

  const auto dir = temp_dir("grid");
  write_grid(p.grid, dir / "g.txt");
  EXPECT_EQ(read_grid(dir / "g.txt"), p.grid);
  fs::remove_all(dir);
}

TEST(GridFile, MalformedInputRejected) {
  std::istringstream truncated("cells 2\nadjacency\n1 1\n");
  EXPECT_THROW(read_grid(truncated), ParseError);
  std::istringstream asym(
      "cells 2\nadjacency\n1 1\n0\ncenters\n0 0\n1 0\nboundary\n1\n1\n");
  EXPECT_THROW(read_grid(asym), InvalidSpec);
  std::istringstream bad_keyword("cells 1\nneighbours\n0\n");
  EXPECT_THROW(read_grid(bad_keyword), ParseError);
}

// --- CSV ---------------------------------------------------------------------

TEST(Csv, EmptyReportIsHeaderOnly) {
  std::ostringstream os;
  write_csv(to_csv(std::vector<SweepRecord>{}), os);
  EXPECT_EQ(os.str(), "ordering,threads,build_sweeps,apply_sweeps,fgmres_iters,converged,wall_ms,iters_rel_dev\n");
}

TEST(Csv, SweepRecordRoundTrip) {
  std::vector<SweepRecord> rows{
      {"rcm", 4, 1, 3, 12.333333333333334, true, 3.25, 0.054054054054054057},
      {"line-1wd", 8, kExactSweeps, kExactSweeps, 9.0, true, 1e-3, 0.0},
      {"natural", 2, 2, 1, std::nullopt, false, 17.5, 0.0},
  };
  const auto dir = temp_dir("csv");
  write_csv_report(rows, dir / "s.csv");
  EXPECT_EQ(sweep_records(read_csv(dir / "s.csv")), rows);
  const auto t = read_csv(dir / "s.csv");
  EXPECT_EQ(t.rows[1][2], "exact");
  EXPECT_EQ(t.rows[2][4], "");
  fs::remove_all(dir);
}

TEST(Csv, DiagAndScalingRoundTrip) {
  std::vector<DiagRecord> d{{0, 1.5e-3, 2.25e-7, 0.75, 1.0 / 3.0, "async-block", 1.0},
                            {1, 0.0, 0.0, 0.0, 0.0, "sequential", 0.5}};
  std::stringstream ss;
  write_csv(to_csv(d), ss);
  EXPECT_EQ(diag_records(read_csv(ss)), d);

  std::vector<ScalingRecord> s{{1, 10.5, 1.0, 9.0, true}, {4, 3.1, 3.3870967741935485, 9.666666666666666, false}};
  std::stringstream ss2;
  write_csv(to_csv(s), ss2);
  EXPECT_EQ(scaling_records(read_csv(ss2)), s);
}

TEST(Csv, QuotingRoundTrip) {
  CsvTable t{{"a", "b"}, {{"plain", "with,comma"}, {"has \"quote\"", "multi\nline"}, {"", " spaced "}}};
  std::stringstream ss;
  write_csv(t, ss);
  EXPECT_EQ(read_csv(ss), t);
}

TEST(Csv, MalformedInputRejected) {
  std::istringstream ragged("a,b\n1,2\n3\n");
  EXPECT_THROW(read_csv(ragged), ParseError);
  std::istringstream open_quote("a\n\"unterminated\n");
  EXPECT_THROW(read_csv(open_quote), ParseError);
  std::istringstream wrong_header("x,y\n1,2\n");
  EXPECT_THROW(sweep_records(read_csv(wrong_header)), ParseError);
  std::istringstream bad_flag("threads,total_precond_ms,speedup,fgmres_iters,converged\n1,2,1,3,yes\n");
  EXPECT_THROW(scaling_records(read_csv(bad_flag)), ParseError);
}

TEST(Csv, UnwritablePathIsIoError) {
  EXPECT_THROW(write_csv_report(std::vector<ScalingRecord>{}, fs::path("/nonexistent/dir/x.csv")), IoError);
}

TEST(Sweeps, FormatAndParse) {
  EXPECT_EQ(format_sweeps(kExactSweeps), "exact");
  EXPECT_EQ(format_sweeps(3), "3");
  EXPECT_EQ(parse_sweeps("exact"), kExactSweeps);
  EXPECT_EQ(parse_sweeps("20"), 20u);
  EXPECT_THROW(parse_sweeps("0"), InvalidConfig);
  EXPECT_THROW(parse_sweeps("-1"), InvalidConfig);
  EXPECT_THROW(parse_sweeps("three"), InvalidConfig);
}

}  // namespace

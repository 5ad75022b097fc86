#include <gtest/gtest.h>

#include <filesystem>

#include <unistd.h>

#include "abilu/bench.hpp"
#include "abilu/problems.hpp"
#include "unit/test_util.hpp"

namespace {

using namespace abilu;
namespace fs = std::filesystem;

ExperimentConfig small_config(const char* problem = "convdiff:16x16,eps=0.01,vx=1,vy=0.5") {
  ExperimentConfig c;
  c.problem = problem;
  c.build_sweeps = {1, kExactSweeps};
  c.apply_sweeps = {1, 3, kExactSweeps};
  c.workers = {1};
  c.reps = 2;
  return c;
}

TEST(ExperimentConfig, DefaultsFollowTableLayout) {
  const ExperimentConfig c;
  const std::vector<Index> grid{1, 2, 3, 5, 10, 20, kExactSweeps};
  EXPECT_EQ(c.build_sweeps, grid);
  EXPECT_EQ(c.apply_sweeps, grid);
  EXPECT_EQ(c.reps, 3u);
  EXPECT_NO_THROW(c.validate());
}

TEST(ExperimentConfig, InvalidConfigsRejected) {
  auto c = small_config();
  c.build_sweeps.clear();
  EXPECT_THROW(c.validate(), InvalidConfig);
  c = small_config();
  c.reps = 0;
  EXPECT_THROW(c.validate(), InvalidConfig);
  c = small_config();
  c.workers = {1, 0};
  EXPECT_THROW(c.validate(), InvalidConfig);
  c = small_config();
  c.fgmres.restart = 0;
  EXPECT_THROW(c.validate(), InvalidConfig);
}

TEST(ListParsing, SweepsAndCounts) {
  EXPECT_EQ(parse_sweep_list("1,2,exact"), (std::vector<Index>{1, 2, kExactSweeps}));
  EXPECT_EQ(parse_count_list("1,2,4,8"), (std::vector<Index>{1, 2, 4, 8}));
  EXPECT_THROW(parse_sweep_list(""), InvalidConfig);
  EXPECT_THROW(parse_sweep_list("1,,2"), InvalidConfig);
  EXPECT_THROW(parse_count_list("1,exact"), InvalidConfig);
}

TEST(PrepareSystem, OrderingPreservesSolution) {
  for (auto kind : {OrderingKind::Rcm, OrderingKind::OneWayDissection, OrderingKind::LineRcm}) {
    auto c = small_config("bl:6x10,b=2");
    c.ordering = kind;
    const auto sys = prepare_system(c);
    const auto orig = generate(parse_problem_spec("bl:6x10,b=2"));
    const auto x_perm = tu::dense_solve(sys.a.to_dense(), sys.rhs);
    const auto x = unpermute_vector(x_perm, sys.permutation, 2);
    const auto ref = tu::dense_solve(orig.a.to_dense(), orig.rhs);
    EXPECT_LE(tu::max_abs_diff(x, ref), 1e-9 * tu::max_abs(ref));
  }
}

TEST(PrepareSystem, ScalingGivesUnitDiagonalAndRecoverableSolution) {
  auto c = small_config("convdiff:6x6,vx=2");
  c.scale_symmetric = true;
  const auto sys = prepare_system(c);
  ASSERT_TRUE(sys.scaled);
  for (Index i = 0; i < sys.a.dim(); ++i) EXPECT_NEAR(std::abs(sys.a.entry(i, i)), 1.0, 1e-15);
  const auto orig = generate(parse_problem_spec("convdiff:6x6,vx=2"));
  const auto x = unscale_solution(sys.scaling, tu::dense_solve(sys.a.to_dense(), sys.rhs));
  const auto ref = tu::dense_solve(orig.a.to_dense(), orig.rhs);
  EXPECT_LE(tu::max_abs_diff(x, ref), 1e-10 * tu::max_abs(ref));
}

TEST(PrepareSystem, MatrixMarketInputUsesOnesSolution) {
  const auto dir = fs::temp_directory_path() / ("abilu_bench_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const auto p = generate(parse_problem_spec("block:4x4,b=2"));
  write_matrix_market(p.a, dir / "a.mtx");
  auto c = small_config();
  c.problem = (dir / "a.mtx").string();
  c.block_size = 2;
  const auto sys = prepare_system(c);
  EXPECT_EQ(sys.a, p.a);
  EXPECT_EQ(sys.rhs, spmv(p.a, std::vector<double>(p.a.dim(), 1.0)));
  EXPECT_FALSE(sys.has_grid);

  c.ordering = OrderingKind::Line;
  EXPECT_THROW(prepare_system(c), InvalidConfig);
  write_grid(p.grid, dir / "g.txt");
  c.grid_path = dir / "g.txt";
  EXPECT_NO_THROW(prepare_system(c));
  fs::remove_all(dir);
}

TEST(SolveOnce, ExactExactMatchesScriptedSequentialRun) {
  const auto p = generate(parse_problem_spec("convdiff:20x20,eps=0.01,vx=1,vy=0.5"));
  const auto o = solve_once(p.a, p.rhs, kExactSweeps, kExactSweeps, 1, 0, FgmresOptions{});
  IluPreconditioner m(sequential_ilu0(p.a), SweepConfig{}, true);
  const auto r = fgmres(p.a, p.rhs, m, FgmresOptions{});
  EXPECT_EQ(o.iterations, r.iterations);
  EXPECT_EQ(o.converged, r.converged);
}

TEST(SolveOnce, FactorizationFailureIsDataNotError) {
  const auto a = from_triplets(2, 1, std::vector<Triplet>{{0, 0, 1}, {0, 1, 1}, {1, 0, 1}, {1, 1, 1}});
  const std::vector<double> b{1, 1};
  const auto o = solve_once(a, b, kExactSweeps, kExactSweeps, 1, 0, FgmresOptions{});
  EXPECT_FALSE(o.converged);
}

TEST(SweepStudy, OneRecordPerCellAndReproducible) {
  const auto c = small_config();
  const auto rows = run_sweep_study(c);
  ASSERT_EQ(rows.size(), 6u);
  const auto again = run_sweep_study(c);
  for (Index k = 0; k < rows.size(); ++k) {
    EXPECT_EQ(rows[k].ordering, "natural");
    EXPECT_TRUE(rows[k].converged);
    EXPECT_EQ(rows[k].fgmres_iters, again[k].fgmres_iters);
    EXPECT_EQ(rows[k].iters_rel_dev, 0.0);
  }
  // The exact/exact cell equals the classical ILU(0) run.
  const auto sys = prepare_system(c);
  IluPreconditioner m(sequential_ilu0(sys.a), SweepConfig{}, true);
  const auto r = fgmres(sys.a, sys.rhs, m, c.fgmres);
  EXPECT_EQ(*rows.back().fgmres_iters, static_cast<double>(r.iterations));
}

TEST(SweepStudy, NonConvergedCellsLeaveIterationsBlank) {
  auto c = small_config("convdiff:24x24,vx=5,vy=2");
  c.build_sweeps = {1};
  c.apply_sweeps = {1};
  c.fgmres.max_iters = 1;
  c.fgmres.rel_tol = 1e-12;
  const auto rows = run_sweep_study(c);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_FALSE(rows[0].converged);
  EXPECT_FALSE(rows[0].fgmres_iters.has_value());
}

TEST(FactorDiagnostics, SequentialRowsAreFixedPoints) {
  auto c = small_config("block:8x8,b=2");
  c.diag_steps = 4;
  const auto rows = run_factor_diagnostics(c);
  Index sequential = 0, block = 0, scalar = 0;
  for (const auto& r : rows) {
    EXPECT_TRUE(std::isfinite(r.L_jacobi_maxnorm));
    EXPECT_TRUE(std::isfinite(r.U_jacobi_maxnorm));
    if (r.variant == "sequential") {
      ++sequential;
      EXPECT_LE(r.ilu_residual_relative, 1e-13);
    }
    block += r.variant == "async-block";
    scalar += r.variant == "async-scalar";
  }
  EXPECT_EQ(sequential, 4u);
  EXPECT_EQ(block, 4u);
  EXPECT_EQ(scalar, 4u);
}

TEST(FactorDiagnostics, LargeShiftDrivesNormsTowardZero) {
  auto c = small_config("convdiff:12x12,vx=1");
  c.diag_steps = 4;
  c.diag_shift0 = 1.0;
  c.diag_ratio = 100.0;  // increasing shifts: 1, 1e2, 1e4, 1e6
  const auto rows = run_factor_diagnostics(c);
  double prev_l = 1e300, prev_u = 1e300;
  for (const auto& r : rows) {
    if (r.variant != "sequential") continue;
    EXPECT_LT(r.L_jacobi_maxnorm, prev_l);
    EXPECT_LT(r.U_jacobi_maxnorm, prev_u);
    prev_l = r.L_jacobi_maxnorm;
    prev_u = r.U_jacobi_maxnorm;
  }
  EXPECT_LT(prev_l, 1e-5);
  EXPECT_LT(prev_u, 1e-5);
}

TEST(Scaling, FirstEntryHasUnitSpeedupAndAllConverge) {
  auto c = small_config();
  c.workers = {1, 2, 4, 8};
  c.reps = 1;
  const auto rows = run_scaling(c);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].speedup, 1.0);
  for (const auto& r : rows) {
    EXPECT_TRUE(r.converged);
    EXPECT_GT(r.fgmres_iters, 0.0);
    EXPECT_GT(r.total_precond_ms, 0.0);
  }
}

}  // namespace

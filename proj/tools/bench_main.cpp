// bench: build/apply sweep studies, factor diagnostics and strong scaling.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "abilu/bench.hpp"
#include "abilu/simd/kernels.hpp"

namespace {

struct Options {
  std::string problem = abilu::ExperimentConfig{}.problem;
  std::size_t block_size = 1;
  std::string grid;
  std::string ordering = "natural";
  bool scale_symmetric = false;
  std::string build_sweeps = "1,2,3,5,10,20,exact";
  std::string apply_sweeps = "1,2,3,5,10,20,exact";
  std::string workers = "1";
  std::size_t reps = 3;
  std::uint64_t seed = 1;
  std::string out = "report.csv";
  std::size_t restart = 30;
  double rtol = 1e-2;
  std::size_t max_iters = 60;
  std::size_t chunk = 0;
  std::size_t diag_steps = 8;
  double diag_shift = 1.0;
  double diag_ratio = 0.5;
  std::string dump_factors;
  std::string isa;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--problem", o.problem, "problem spec (kind:NXxNY,key=value,...) or .mtx path")
      ->capture_default_str();
  cmd->add_option("--block-size", o.block_size, "block size for .mtx input")->capture_default_str();
  cmd->add_option("--grid", o.grid, "grid file for line orderings of .mtx input");
  cmd->add_option("--ordering", o.ordering, "natural|rcm|1wd|line|line-rcm|line-1wd")->capture_default_str();
  cmd->add_flag("--scale-symmetric", o.scale_symmetric, "scale to unit diagonal before factorizing");
  cmd->add_option("--build-sweeps", o.build_sweeps, "factorization sweeps, comma separated, 'exact' allowed")
      ->capture_default_str();
  cmd->add_option("--apply-sweeps", o.apply_sweeps, "triangular-solve sweeps, comma separated, 'exact' allowed")
      ->capture_default_str();
  cmd->add_option("--workers", o.workers, "worker counts, comma separated")->capture_default_str();
  cmd->add_option("--reps", o.reps, "repetitions per cell")->capture_default_str();
  cmd->add_option("--seed", o.seed, "problem generator seed")->capture_default_str();
  cmd->add_option("--out", o.out, "CSV output path")->capture_default_str();
  cmd->add_option("--restart", o.restart, "FGMRES restart length")->capture_default_str();
  cmd->add_option("--rtol", o.rtol, "FGMRES relative tolerance")->capture_default_str();
  cmd->add_option("--max-iters", o.max_iters, "FGMRES iteration limit")->capture_default_str();
  cmd->add_option("--chunk-size", o.chunk, "work items per chunk (0 = default for the block size)");
  cmd->add_option("--isa", o.isa, "kernel set: scalar|avx2 (default: best available)");
}

abilu::ExperimentConfig to_config(const Options& o) {
  abilu::ExperimentConfig c;
  c.problem = o.problem;
  c.block_size = o.block_size;
  c.grid_path = o.grid;
  c.ordering = abilu::parse_ordering(o.ordering);
  c.scale_symmetric = o.scale_symmetric;
  c.build_sweeps = abilu::parse_sweep_list(o.build_sweeps);
  c.apply_sweeps = abilu::parse_sweep_list(o.apply_sweeps);
  c.workers = abilu::parse_count_list(o.workers);
  c.reps = o.reps;
  c.seed = o.seed;
  c.chunk_size = o.chunk;
  c.fgmres = {o.restart, o.rtol, o.max_iters};
  c.diag_steps = o.diag_steps;
  c.diag_shift0 = o.diag_shift;
  c.diag_ratio = o.diag_ratio;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asynchronous (block) ILU preconditioning experiments"};
  app.require_subcommand(1);
  Options o;
  auto* sweep = app.add_subcommand("sweep", "FGMRES iterations over a build x apply sweep grid");
  auto* diag = app.add_subcommand("diag", "ILU residual and factor diagonal dominance over a shift sequence");
  auto* scale = app.add_subcommand("scale", "preconditioner wall time versus worker count");
  for (auto* cmd : {sweep, diag, scale}) add_common(cmd, o);
  sweep->add_option("--dump-factors", o.dump_factors, "write L.mtx/U.mtx of the first cell's factors here");
  diag->add_option("--steps", o.diag_steps, "number of shifted matrices")->capture_default_str();
  diag->add_option("--shift", o.diag_shift, "initial diagonal shift")->capture_default_str();
  diag->add_option("--shift-ratio", o.diag_ratio, "geometric shift ratio")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (!o.isa.empty()) abilu::simd::set_isa(o.isa == "scalar" ? abilu::simd::Isa::Scalar : abilu::simd::Isa::Avx2);
    const auto cfg = to_config(o);
    if (sweep->parsed()) {
      const auto rows = abilu::run_sweep_study(cfg);
      abilu::write_csv_report(rows, o.out);
      if (!o.dump_factors.empty()) {
        const auto sys = abilu::prepare_system(cfg);
        const auto bs = cfg.build_sweeps.front();
        const auto f = bs == abilu::kExactSweeps
                           ? abilu::sequential_ilu0(sys.a)
                           : abilu::async_ilu0(sys.a, abilu::SweepConfig{bs, cfg.workers.front(),
                                                                         cfg.chunk_size ? cfg.chunk_size
                                                                                        : abilu::default_chunk_size(sys.a.block_size())});
        abilu::write_factors(f, o.dump_factors);
      }
      std::printf("wrote %zu sweep-study rows to %s\n", rows.size(), o.out.c_str());
    } else if (diag->parsed()) {
      const auto rows = abilu::run_factor_diagnostics(cfg);
      abilu::write_csv_report(rows, o.out);
      std::printf("wrote %zu diagnostic rows to %s\n", rows.size(), o.out.c_str());
    } else {
      const auto rows = abilu::run_scaling(cfg);
      abilu::write_csv_report(rows, o.out);
      std::printf("wrote %zu scaling rows to %s\n", rows.size(), o.out.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "bench: %s\n", e.what());
    return 2;
  }
  return 0;
}

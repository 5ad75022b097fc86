#include "abilu/bench.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "abilu/problems.hpp"
#include "abilu/trisolve.hpp"

namespace abilu {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

bool is_matrix_file(const std::string& s) {
  return s.size() > 4 && s.compare(s.size() - 4, 4, ".mtx") == 0;
}

Index first_async(const std::vector<Index>& sweeps, Index fallback) {
  for (Index s : sweeps)
    if (s != kExactSweeps) return s;
  return fallback;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (build_sweeps.empty() || apply_sweeps.empty()) throw InvalidConfig("sweep grids must be nonempty");
  if (workers.empty()) throw InvalidConfig("worker list must be nonempty");
  for (Index w : workers)
    if (w == 0) throw InvalidConfig("worker counts must be positive");
  if (reps == 0) throw InvalidConfig("repetitions must be at least 1");
  if (block_size == 0) throw InvalidConfig("block size must be positive");
  if (fgmres.restart == 0 || fgmres.max_iters == 0 || !(fgmres.rel_tol > 0.0))
    throw InvalidConfig("FGMRES parameters must be positive");
  if (diag_steps == 0 || !(diag_ratio > 0.0) || !(diag_shift0 >= 0.0))
    throw InvalidConfig("diagnostic shift sequence is invalid");
}

PreparedSystem prepare_system(const ExperimentConfig& cfg) {
  cfg.validate();
  PreparedSystem sys;
  if (is_matrix_file(cfg.problem)) {
    sys.a = read_matrix_market(std::filesystem::path(cfg.problem), cfg.block_size);
    const std::vector<double> ones(sys.a.dim(), 1.0);
    sys.rhs = spmv(sys.a, ones);
    if (!cfg.grid_path.empty()) {
      sys.grid = read_grid(cfg.grid_path);
      if (sys.grid.size() != sys.a.n_block_rows())
        throw InvalidConfig("grid cell count differs from the number of block rows");
      sys.has_grid = true;
    }
  } else {
    auto spec = parse_problem_spec(cfg.problem);
    if (cfg.problem.find("seed=") == std::string::npos) spec.seed = cfg.seed;
    auto p = generate(spec);
    sys.a = std::move(p.a);
    sys.rhs = std::move(p.rhs);
    sys.grid = std::move(p.grid);
    sys.has_grid = true;
  }
  if (ordering_needs_grid(cfg.ordering) && !sys.has_grid)
    throw InvalidConfig("ordering '" + std::string(ordering_name(cfg.ordering)) + "' needs a grid file");

  sys.permutation = compute_ordering(cfg.ordering, matrix_graph(sys.a), sys.has_grid ? &sys.grid : nullptr,
                                     cfg.ordering_options);
  sys.a = permute_matrix(sys.a, sys.permutation);
  sys.rhs = permute_vector(sys.rhs, sys.permutation, sys.a.block_size());
  if (sys.has_grid) sys.grid = permute_grid(sys.grid, sys.permutation);
  if (cfg.scale_symmetric) {
    auto [scaled, s] = symmetric_scale(sys.a);
    sys.rhs = scale_rhs(s, sys.rhs);
    sys.a = std::move(scaled);
    sys.scaling = std::move(s);
    sys.scaled = true;
  }
  return sys;
}

SolveOutcome solve_once(const BlockSparseMatrix& a, std::span<const double> rhs, Index build_sweeps,
                        Index apply_sweeps, Index workers, Index chunk_size, const FgmresOptions& opts) {
  SolveOutcome out;
  const Index chunk = chunk_size ? chunk_size : default_chunk_size(a.block_size());
  const auto t0 = Clock::now();
  try {
    IluFactors f = build_sweeps == kExactSweeps ? sequential_ilu0(a)
                                                : async_ilu0(a, SweepConfig{build_sweeps, workers, chunk});
    out.factor_ms = ms_since(t0);
    const SweepConfig apply_cfg{apply_sweeps == kExactSweeps ? 1 : apply_sweeps, workers, chunk};
    IluPreconditioner m(std::move(f), apply_cfg, apply_sweeps == kExactSweeps);
    const auto res = fgmres(a, rhs, m, opts);
    out.apply_ms = m.apply_seconds() * 1e3;
    out.iterations = res.iterations;
    out.converged = res.converged;
  } catch (const Error&) {
    out.converged = false;
  }
  out.wall_ms = ms_since(t0);
  return out;
}

std::vector<SweepRecord> run_sweep_study(const ExperimentConfig& cfg) {
  const auto sys = prepare_system(cfg);
  std::vector<SweepRecord> rows;
  for (Index w : cfg.workers)
    for (Index bs : cfg.build_sweeps)
      for (Index as : cfg.apply_sweeps) {
        SweepRecord r;
        r.ordering = std::string(ordering_name(cfg.ordering));
        r.threads = w;
        r.build_sweeps = bs;
        r.apply_sweeps = as;
        std::vector<double> iters;
        bool all_converged = true;
        double wall = 0.0;
        for (Index rep = 0; rep < cfg.reps; ++rep) {
          const auto o = solve_once(sys.a, sys.rhs, bs, as, w, cfg.chunk_size, cfg.fgmres);
          all_converged = all_converged && o.converged;
          iters.push_back(static_cast<double>(o.iterations));
          wall += o.wall_ms;
        }
        r.converged = all_converged;
        r.wall_ms = wall / static_cast<double>(cfg.reps);
        const double mean = std::accumulate(iters.begin(), iters.end(), 0.0) / static_cast<double>(iters.size());
        if (all_converged) r.fgmres_iters = mean;
        double dev = 0.0;
        for (double it : iters) dev = std::max(dev, std::abs(it - mean));
        r.iters_rel_dev = mean > 0.0 ? dev / mean : 0.0;
        rows.push_back(std::move(r));
      }
  return rows;
}

std::vector<DiagRecord> run_factor_diagnostics(const ExperimentConfig& cfg) {
  const auto sys = prepare_system(cfg);
  const Index build = first_async(cfg.build_sweeps, 1);
  const Index workers = cfg.workers.front();
  std::vector<DiagRecord> rows;
  auto record = [&rows](Index step, double shift, const std::string& variant, const BlockSparseMatrix& a,
                        const IluFactors& f) {
    DiagRecord r;
    r.step = step;
    r.shift = shift;
    r.variant = variant;
    try {
      const auto res = ilu_fixed_point_residual(a, f);
      r.ilu_residual_1norm = res.norm_1;
      r.ilu_residual_relative = res.relative;
    } catch (const SingularDiagonal&) {
      r.ilu_residual_1norm = r.ilu_residual_relative = std::numeric_limits<double>::infinity();
    }
    r.L_jacobi_maxnorm = jacobi_iteration_matrix_norm(f, TriangularSide::LowerUnit);
    r.U_jacobi_maxnorm = jacobi_iteration_matrix_norm(f, TriangularSide::Upper);
    rows.push_back(std::move(r));
  };

  double sigma = cfg.diag_shift0;
  for (Index k = 0; k < cfg.diag_steps; ++k, sigma *= cfg.diag_ratio) {
    const auto a = shift_diagonal(sys.a, sigma);
    const Index chunk = cfg.chunk_size ? cfg.chunk_size : default_chunk_size(a.block_size());
    try {
      record(k, sigma, "sequential", a, sequential_ilu0(a));
    } catch (const SingularDiagonal&) {
      // A singular sequential pivot is data; the asynchronous variants are guarded.
    }
    const std::string tag = a.block_size() > 1 ? "async-block" : "async-scalar";
    record(k, sigma, tag, a, async_ilu0(a, SweepConfig{build, workers, chunk}));
    if (a.block_size() > 1) {
      const auto s = scalar_view(a);
      record(k, sigma, "async-scalar", s, async_ilu0(s, SweepConfig{build, workers, default_chunk_size(1)}));
    }
  }
  return rows;
}

std::vector<ScalingRecord> run_scaling(const ExperimentConfig& cfg) {
  const auto sys = prepare_system(cfg);
  const Index build = first_async(cfg.build_sweeps, 1);
  const Index apply = first_async(cfg.apply_sweeps, 3);
  std::vector<ScalingRecord> rows;
  double base = 0.0;
  for (Index w : cfg.workers) {
    ScalingRecord r;
    r.threads = w;
    r.converged = true;
    double total = 0.0;
    double iters = 0.0;
    for (Index rep = 0; rep < cfg.reps; ++rep) {
      const auto o = solve_once(sys.a, sys.rhs, build, apply, w, cfg.chunk_size, cfg.fgmres);
      total += o.factor_ms + o.apply_ms;
      iters += static_cast<double>(o.iterations);
      r.converged = r.converged && o.converged;
    }
    r.total_precond_ms = total / static_cast<double>(cfg.reps);
    r.fgmres_iters = iters / static_cast<double>(cfg.reps);
    if (rows.empty()) base = r.total_precond_ms;
    r.speedup = rows.empty() ? 1.0 : base / r.total_precond_ms;
    rows.push_back(r);
  }
  return rows;
}

std::vector<Index> parse_sweep_list(std::string_view text) {
  std::vector<Index> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(parse_sweeps(text.substr(0, comma)));
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
  }
  if (out.empty()) throw InvalidConfig("empty sweep list");
  return out;
}

std::vector<Index> parse_count_list(std::string_view text) {
  auto out = parse_sweep_list(text);
  for (Index v : out)
    if (v == kExactSweeps) throw InvalidConfig("'exact' is not a valid count here");
  return out;
}

}  // namespace abilu

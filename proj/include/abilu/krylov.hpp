#pragma once

// Restarted flexible GMRES with right preconditioning.

#include <chrono>
#include <span>
#include <vector>

#include "abilu/async_exec.hpp"
#include "abilu/blockmat.hpp"
#include "abilu/ilu.hpp"

namespace abilu {

/// out = M^{-1} in. Implementations may change from one call to the next.
class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  virtual void apply(std::span<const double> in, std::span<double> out) = 0;
};

class IdentityPreconditioner final : public Preconditioner {
 public:
  void apply(std::span<const double> in, std::span<double> out) override;
};

/// L-solve then U-solve with the given factors. In asynchronous mode each
/// solve runs apply_cfg sweeps from a zero initial guess; the U-solve starts
/// only after the L-solve has completed. Exact mode uses sequential substitution.
class IluPreconditioner final : public Preconditioner {
 public:
  IluPreconditioner(IluFactors factors, const SweepConfig& apply_cfg, bool exact = false);

  void apply(std::span<const double> in, std::span<double> out) override;

  const IluFactors& factors() const noexcept { return factors_; }
  bool exact() const noexcept { return exact_; }
  /// Start each asynchronous solve from the previous application's output
  /// instead of zero. Off by default.
  void set_warm_start(bool on) noexcept { warm_start_ = on; }
  bool warm_start() const noexcept { return warm_start_; }
  Index applications() const noexcept { return applications_; }
  /// Accumulated wall time spent inside apply().
  double apply_seconds() const noexcept { return apply_seconds_; }

 private:
  IluFactors factors_;
  SweepConfig cfg_;
  bool exact_;
  bool warm_start_ = false;
  std::vector<double> y_, x_prev_;
  Index applications_ = 0;
  double apply_seconds_ = 0.0;
};

enum class StopReason { RelTol, MaxIter, Breakdown };

const char* stop_reason_name(StopReason r) noexcept;

struct KrylovResult {
  std::vector<double> solution;
  Index iterations = 0;
  /// ||b - A x_k||_2 for k = 0 .. iterations (true residuals).
  std::vector<double> residual_history;
  bool converged = false;
  StopReason stop_reason = StopReason::MaxIter;

  double final_residual() const noexcept { return residual_history.back(); }
};

struct FgmresOptions {
  Index restart = 30;
  double rel_tol = 1e-2;
  Index max_iters = 60;
};

/// Solves A x = b from x0 = 0. Stops when ||b - A x||_2 <= rel_tol * ||b||_2
/// or after max_iters inner iterations in total.
KrylovResult fgmres(const BlockSparseMatrix& a, std::span<const double> b, Preconditioner& m,
                    const FgmresOptions& opts = {});

}  // namespace abilu

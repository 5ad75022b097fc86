#include "abilu/krylov.hpp"

#include <cmath>

#include "abilu/simd/kernels.hpp"
#include "abilu/trisolve.hpp"

namespace abilu {

void IdentityPreconditioner::apply(std::span<const double> in, std::span<double> out) {
  std::copy(in.begin(), in.end(), out.begin());
}

IluPreconditioner::IluPreconditioner(IluFactors factors, const SweepConfig& apply_cfg, bool exact)
    : factors_(std::move(factors)), cfg_(apply_cfg), exact_(exact), y_(factors_.dim()) {
  if (!exact_) cfg_.validate();
}

void IluPreconditioner::apply(std::span<const double> in, std::span<double> out) {
  if (in.size() != factors_.dim() || out.size() != factors_.dim())
    throw DimensionMismatch("preconditioner input length differs from the factor size");
  const auto start = std::chrono::steady_clock::now();
  const auto lower = triangular_view(factors_, TriangularSide::LowerUnit);
  const auto upper = triangular_view(factors_, TriangularSide::Upper);
  if (exact_) {
    const auto y = sequential_trisolve(lower, in);
    const auto x = sequential_trisolve(upper, y);
    std::copy(x.begin(), x.end(), out.begin());
  } else {
    const bool warm = warm_start_ && applications_ > 0;
    if (!warm) std::fill(y_.begin(), y_.end(), 0.0);
    async_trisolve(lower, in, cfg_, y_);
    if (warm) std::copy(x_prev_.begin(), x_prev_.end(), out.begin());
    else std::fill(out.begin(), out.end(), 0.0);
    async_trisolve(upper, y_, cfg_, out);
    if (warm_start_) x_prev_.assign(out.begin(), out.end());
  }
  ++applications_;
  apply_seconds_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

const char* stop_reason_name(StopReason r) noexcept {
  switch (r) {
    case StopReason::RelTol: return "rel_tol";
    case StopReason::MaxIter: return "max_iter";
    case StopReason::Breakdown: return "breakdown";
  }
  return "unknown";
}

namespace {

double norm2(std::span<const double> v) {
  return std::sqrt(simd::kernels().dot(v.data(), v.data(), v.size()));
}

// r = b - A x; returns ||r||.
double residual(const BlockSparseMatrix& a, std::span<const double> b, std::span<const double> x,
                std::vector<double>& r) {
  spmv(a, x, r);
  for (Index k = 0; k < r.size(); ++k) r[k] = b[k] - r[k];
  return norm2(r);
}

// Solves the leading k x k upper triangular system H y = g in place of y.
void back_substitute(const std::vector<std::vector<double>>& h, const std::vector<double>& g, Index k,
                     std::vector<double>& y) {
  y.assign(k, 0.0);
  for (Index i = k; i-- > 0;) {
    double s = g[i];
    for (Index j = i + 1; j < k; ++j) s -= h[j][i] * y[j];
    y[i] = s / h[i][i];
  }
}

}  // namespace

KrylovResult fgmres(const BlockSparseMatrix& a, std::span<const double> b, Preconditioner& m,
                    const FgmresOptions& opts) {
  const Index n = a.dim();
  if (b.size() != n) throw DimensionMismatch("right-hand side length differs from the matrix dimension");
  if (opts.restart == 0) throw InvalidConfig("restart length must be positive");
  for (double v : b)
    if (!std::isfinite(v)) throw InvalidConfig("right-hand side is not finite");
  const auto& kern = simd::kernels();
  const Index restart = opts.restart;

  KrylovResult res;
  res.solution.assign(n, 0.0);
  std::vector<double> r(b.begin(), b.end());
  double beta = norm2(r);
  res.residual_history.push_back(beta);
  const double target = opts.rel_tol * beta;
  if (beta == 0.0 || beta <= target) {
    res.converged = true;
    res.stop_reason = StopReason::RelTol;
    return res;
  }

  std::vector<std::vector<double>> v(restart + 1, std::vector<double>(n));
  std::vector<std::vector<double>> z(restart, std::vector<double>(n));
  // h[j] is column j of the Hessenberg matrix (length restart + 1).
  std::vector<std::vector<double>> h(restart, std::vector<double>(restart + 1));
  std::vector<double> cs(restart), sn(restart), g(restart + 1), y, x_trial(n), r_trial(n);

  auto trial_residual = [&](Index k) {
    back_substitute(h, g, k, y);
    x_trial = res.solution;
    for (Index j = 0; j < k; ++j) kern.axpy(y[j], z[j].data(), x_trial.data(), n);
    return residual(a, b, x_trial, r_trial);
  };

  while (res.iterations < opts.max_iters) {
    for (Index i = 0; i < n; ++i) v[0][i] = r[i] / beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;
    Index k = 0;
    bool breakdown = false;
    double true_norm = beta;
    while (k < restart && res.iterations < opts.max_iters) {
      m.apply(v[k], z[k]);
      auto& w = v[k + 1];
      spmv(a, z[k], w);
      auto& col = h[k];
      std::fill(col.begin(), col.end(), 0.0);
      for (Index i = 0; i <= k; ++i) {
        const double hik = kern.dot(w.data(), v[i].data(), n);
        col[i] += hik;
        kern.axpy(-hik, v[i].data(), w.data(), n);
      }
      double wnorm = norm2(w);
      // Second pass when the first one left a noticeable component behind.
      double loss = 0.0;
      if (wnorm > 0.0)
        for (Index i = 0; i <= k; ++i) loss = std::max(loss, std::abs(kern.dot(w.data(), v[i].data(), n)) / wnorm);
      if (loss > 1e-8) {
        for (Index i = 0; i <= k; ++i) {
          const double hik = kern.dot(w.data(), v[i].data(), n);
          col[i] += hik;
          kern.axpy(-hik, v[i].data(), w.data(), n);
        }
        wnorm = norm2(w);
      }
      col[k + 1] = wnorm;

      for (Index i = 0; i < k; ++i) {
        const double t = cs[i] * col[i] + sn[i] * col[i + 1];
        col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
        col[i] = t;
      }
      const double denom = std::hypot(col[k], col[k + 1]);
      if (denom == 0.0) {
        breakdown = true;
        break;
      }
      cs[k] = col[k] / denom;
      sn[k] = col[k + 1] / denom;
      col[k] = denom;
      col[k + 1] = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      ++k;
      ++res.iterations;

      true_norm = trial_residual(k);
      res.residual_history.push_back(true_norm);

      if (std::abs(g[k]) <= target) break;
      if (!(wnorm > 1e-14 * denom)) {
        breakdown = true;
        break;
      }
      kern.scale(1.0 / wnorm, w.data(), n);
    }

    if (k > 0) {
      res.solution = x_trial;
      r = r_trial;
      beta = true_norm;
    }
    if (beta <= target) {
      res.converged = true;
      res.stop_reason = StopReason::RelTol;
      return res;
    }
    if (breakdown) {
      res.stop_reason = StopReason::Breakdown;
      return res;
    }
  }
  res.stop_reason = StopReason::MaxIter;
  return res;
}

}  // namespace abilu

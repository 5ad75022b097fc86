#include <gtest/gtest.h>

#include <atomic>
#include <bit>
#include <cstring>
#include <random>

#include "abilu/async_exec.hpp"

namespace {

using namespace abilu;

struct ConstantWork {
  Index n;
  double c;
  Index size() const { return n; }
  template <class View>
  void update(Index i, View& v) const {
    v.store(i, c);
  }
};

struct CountingWork {
  Index n;
  mutable std::vector<std::atomic<int>>* counts;
  Index size() const { return n; }
  template <class View>
  void update(Index i, View& v) const {
    (*counts)[i].fetch_add(1);
    v.store(i, v.load(i) + 1.0);
  }
};

/// x_i <- 0.25 * (x_{i-1} + x_{i+1}) + i (a diagonally dominant linear map).
struct StencilWork {
  Index n;
  Index size() const { return n; }
  template <class View>
  void update(Index i, View& v) const {
    double s = static_cast<double>(i);
    if (i > 0) s += 0.25 * v.load(i - 1);
    if (i + 1 < n) s += 0.25 * v.load(i + 1);
    v.store(i, s);
  }
};

std::vector<double> stencil_jacobi(std::vector<double> x, Index rounds) {
  const Index n = x.size();
  for (Index r = 0; r < rounds; ++r) {
    std::vector<double> y(n);
    for (Index i = 0; i < n; ++i) {
      double s = static_cast<double>(i);
      if (i > 0) s += 0.25 * x[i - 1];
      if (i + 1 < n) s += 0.25 * x[i + 1];
      y[i] = s;
    }
    x = y;
  }
  return x;
}

std::vector<double> stencil_gauss_seidel(std::vector<double> x, Index rounds) {
  const Index n = x.size();
  for (Index r = 0; r < rounds; ++r)
    for (Index i = 0; i < n; ++i) {
      double s = static_cast<double>(i);
      if (i > 0) s += 0.25 * x[i - 1];
      if (i + 1 < n) s += 0.25 * x[i + 1];
      x[i] = s;
    }
  return x;
}

std::vector<Index> identity_owner(Index n) {
  std::vector<Index> o(n);
  for (Index i = 0; i < n; ++i) o[i] = i;
  return o;
}

TEST(SweepConfig, ZeroFieldsRejected) {
  EXPECT_THROW((SweepConfig{0, 1, 1}.validate()), InvalidConfig);
  EXPECT_THROW((SweepConfig{1, 0, 1}.validate()), InvalidConfig);
  EXPECT_THROW((SweepConfig{1, 1, 0}.validate()), InvalidConfig);
  EXPECT_NO_THROW((SweepConfig{1, 1, 1}.validate()));
}

TEST(SweepConfig, DefaultChunkSizes) {
  EXPECT_EQ(default_chunk_size(1), 1536u);
  EXPECT_EQ(default_chunk_size(4), 384u);
}

TEST(RunParallel, ZeroSweepsRejected) {
  std::vector<double> s(3);
  EXPECT_THROW(run_parallel(ConstantWork{3, 1.0}, SweepConfig{0, 1, 1}, s), InvalidConfig);
}

TEST(RunParallel, SingleItemSingleSweep) {
  std::vector<std::atomic<int>> counts(1);
  std::vector<double> s{0.0};
  run_parallel(CountingWork{1, &counts}, SweepConfig{1, 1, 1}, s);
  EXPECT_EQ(counts[0].load(), 1);
  EXPECT_EQ(s[0], 1.0);
}

TEST(RunParallel, EveryItemUpdatedOncePerSweep) {
  for (Index workers : {1, 2, 3, 8})
    for (Index chunk : {1, 7, 64}) {
      const Index n = 100, sweeps = 4;
      std::vector<std::atomic<int>> counts(n);
      std::vector<double> s(n, 0.0);
      run_parallel(CountingWork{n, &counts}, SweepConfig{sweeps, workers, chunk}, s);
      for (Index i = 0; i < n; ++i) {
        EXPECT_EQ(counts[i].load(), static_cast<int>(sweeps));
        EXPECT_EQ(s[i], static_cast<double>(sweeps));
      }
    }
}

TEST(RunParallel, ConstantOverwriteReachesConstant) {
  for (Index workers : {1, 2, 4, 8})
    for (Index sweeps : {1, 3}) {
      std::vector<double> s(257, -1.0);
      run_parallel(ConstantWork{257, 3.5}, SweepConfig{sweeps, workers, 16}, s);
      for (double v : s) EXPECT_EQ(v, 3.5);
    }
}

TEST(RunParallel, OneWorkerIsInOrderSequential) {
  const Index n = 50;
  std::vector<double> s(n, 1.0);
  run_parallel(StencilWork{n}, SweepConfig{3, 1, 8}, s);
  EXPECT_EQ(s, stencil_gauss_seidel(std::vector<double>(n, 1.0), 3));
}

TEST(RunParallel, OneWorkerEqualsZeroShiftReplay) {
  const Index n = 40;
  std::vector<double> par(n, 0.5), rep(n, 0.5);
  run_parallel(StencilWork{n}, SweepConfig{5, 1, 4}, par);
  const auto owner = identity_owner(n);
  run_replay(StencilWork{n}, gauss_seidel_schedule(n, 5), rep, owner);
  EXPECT_EQ(par, rep);
}

TEST(RunParallel, MultiWorkerConvergesToFixedPoint) {
  const Index n = 300;
  std::vector<double> s(n, 0.0);
  run_parallel(StencilWork{n}, SweepConfig{80, 4, 16}, s);
  const auto ref = stencil_gauss_seidel(std::vector<double>(n, 0.0), 200);
  for (Index i = 0; i < n; ++i) EXPECT_NEAR(s[i], ref[i], 1e-10 * (1 + std::abs(ref[i])));
}

struct ThrowingWork {
  Index size() const { return 100; }
  template <class View>
  void update(Index i, View& v) const {
    if (i == 42) throw SingularDiagonal(i);
    v.store(i, 1.0);
  }
};

TEST(RunParallel, ItemFailurePropagatesAfterJoin) {
  for (Index workers : {1, 4}) {
    std::vector<double> s(100, 0.0);
    try {
      run_parallel(ThrowingWork{}, SweepConfig{2, workers, 10}, s);
      FAIL() << "expected SingularDiagonal";
    } catch (const SingularDiagonal& e) {
      EXPECT_EQ(e.row(), 42u);
    }
  }
}

// Each slot holds a double whose low 26 mantissa bits are a hash of the high
// 26 bits. A torn (partially written) value would fail the check.
std::uint64_t mix(std::uint64_t t) {
  t ^= t >> 13;
  t *= 0x9E3779B97F4A7C15ull;
  return (t ^ (t >> 29)) & 0x3FFFFFFull;
}
double encode(std::uint64_t t) {
  const std::uint64_t bits = 0x3FF0000000000000ull | ((t & 0x3FFFFFFull) << 26) | mix(t & 0x3FFFFFFull);
  return std::bit_cast<double>(bits);
}
bool consistent(double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  return mix((bits >> 26) & 0x3FFFFFFull) == (bits & 0x3FFFFFFull);
}

struct ChecksumWork {
  Index n;
  std::atomic<std::uint64_t>* bad;
  std::atomic<std::uint64_t>* tick;
  Index size() const { return n; }
  template <class View>
  void update(Index i, View& v) const {
    for (Index d : {Index{1}, Index{2}, Index{5}, Index{17}}) {
      if (!consistent(v.load((i + d) % n))) bad->fetch_add(1);
    }
    v.store(i, encode(tick->fetch_add(1, std::memory_order_relaxed)));
  }
};

TEST(RunParallel, NoTornValuesUnderContention) {
  const Index n = 64;
  std::atomic<std::uint64_t> bad{0}, tick{1};
  std::vector<double> s(n, encode(0));
  run_parallel(ChecksumWork{n, &bad, &tick}, SweepConfig{2000, 8, 1}, s);
  EXPECT_EQ(bad.load(), 0u);
  for (double v : s) EXPECT_TRUE(consistent(v));
}

// --- replay ------------------------------------------------------------------

TEST(Replay, ZeroShiftsInOrderIsGaussSeidel) {
  const Index n = 20;
  std::vector<double> s(n, 2.0);
  const auto owner = identity_owner(n);
  run_replay(StencilWork{n}, gauss_seidel_schedule(n, 3), s, owner);
  EXPECT_EQ(s, stencil_gauss_seidel(std::vector<double>(n, 2.0), 3));
}

TEST(Replay, JacobiScheduleIsSynchronizedJacobi) {
  const Index n = 20;
  const auto owner = identity_owner(n);
  for (std::optional<std::uint64_t> seed : {std::optional<std::uint64_t>{}, std::optional<std::uint64_t>{7}}) {
    std::vector<double> s(n, 2.0);
    run_replay(StencilWork{n}, jacobi_schedule(n, 4, seed), s, owner);
    EXPECT_EQ(s, stencil_jacobi(std::vector<double>(n, 2.0), 4));
  }
}

TEST(Replay, ChunkedScheduleMatchesChunkwiseOracle) {
  const Index n = 12, chunk = 4, rounds = 3;
  std::vector<double> x(n, 1.0);
  for (Index r = 0; r < rounds; ++r) {
    const auto start = x;
    for (Index i = 0; i < n; ++i) {
      auto val = [&](Index k) { return k / chunk == i / chunk ? x[k] : start[k]; };
      double s = static_cast<double>(i);
      if (i > 0) s += 0.25 * val(i - 1);
      if (i + 1 < n) s += 0.25 * val(i + 1);
      x[i] = s;
    }
  }
  std::vector<double> s(n, 1.0);
  const auto owner = identity_owner(n);
  run_replay(StencilWork{n}, chunked_schedule(n, chunk, rounds), s, owner);
  EXPECT_EQ(s, x);
}

struct Copy {
  Index size() const { return 2; }
  template <class View>
  void update(Index i, View& v) const {
    if (i == 0) v.store(0, v.load(0) + 1.0);
    else v.store(1, v.load(0));
  }
};

TEST(Replay, ExplicitShiftReadsOlderVersion) {
  // Two items; item 1 reads item 0 with a delay of 2 steps.
  Schedule s;
  s.n_items = 2;
  s.round_length = 4;
  s.updates = {0, 0, 0, 1};
  s.shift = [](Index step, Index owner) { return step == 3 && owner == 0 ? Index{2} : Index{0}; };
  std::vector<double> st{0.0, -1.0};
  const std::vector<Index> owner{0, 1};
  run_replay(Copy{}, s, st, owner);
  EXPECT_EQ(st[0], 3.0);
  EXPECT_EQ(st[1], 1.0);  // version 1: after step 0 only
}

TEST(Replay, InvalidSchedulesRejected) {
  const auto owner = identity_owner(3);
  std::vector<double> st(3, 0.0);

  auto bad_index = gauss_seidel_schedule(3, 1);
  bad_index.updates[1] = 7;
  EXPECT_THROW(run_replay(StencilWork{3}, bad_index, st, owner), InvalidSchedule);

  auto missing = gauss_seidel_schedule(3, 2);
  missing.updates[2] = 0;  // first round never updates item 2
  EXPECT_THROW(validate_schedule(missing), InvalidSchedule);

  auto too_deep = gauss_seidel_schedule(3, 2);
  too_deep.max_shift = 2;
  too_deep.shift = [](Index, Index) { return Index{2}; };  // exceeds step index at j = 0 / 1
  EXPECT_THROW(run_replay(StencilWork{3}, too_deep, st, owner), InvalidSchedule);

  auto over_bound = gauss_seidel_schedule(3, 4);
  over_bound.max_shift = 1;
  over_bound.shift = [](Index j, Index) { return j >= 5 ? Index{3} : Index{0}; };
  EXPECT_THROW(run_replay(StencilWork{3}, over_bound, st, owner), InvalidSchedule);

  auto short_round = gauss_seidel_schedule(3, 1);
  short_round.round_length = 2;
  EXPECT_THROW(validate_schedule(short_round), InvalidSchedule);
}

TEST(Replay, SizeMismatchRejected) {
  std::vector<double> st(4, 0.0);
  const auto owner = identity_owner(4);
  EXPECT_THROW(run_replay(StencilWork{4}, gauss_seidel_schedule(3, 1), st, owner), InvalidSchedule);
  const auto short_owner = identity_owner(3);
  EXPECT_THROW(run_replay(StencilWork{4}, gauss_seidel_schedule(4, 1), st, short_owner), InvalidSchedule);
}

TEST(Replay, RandomScheduleIsValidAndDeterministic) {
  const Index n = 30;
  const auto sched = random_schedule(n, 10, 8, 99);
  EXPECT_NO_THROW(validate_schedule(sched));
  const auto owner = identity_owner(n);
  std::vector<double> a(n, 0.0), b(n, 0.0);
  run_replay(StencilWork{n}, sched, a, owner);
  run_replay(StencilWork{n}, random_schedule(n, 10, 8, 99), b, owner);
  EXPECT_EQ(a, b);
  for (Index j = 0; j < sched.n_steps(); ++j)
    for (Index o : {Index{0}, n - 1}) EXPECT_LE(sched.shift_at(j, o), std::min<Index>(j, 8));
}

TEST(Replay, RandomSchedulesConvergeOnContraction) {
  const Index n = 25;
  const auto owner = identity_owner(n);
  const auto ref = stencil_gauss_seidel(std::vector<double>(n, 0.0), 200);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::vector<double> s(n, 0.0);
    run_replay(StencilWork{n}, random_schedule(n, 120, 6, seed), s, owner);
    for (Index i = 0; i < n; ++i) EXPECT_NEAR(s[i], ref[i], 1e-11 * (1 + std::abs(ref[i])));
  }
}

}  // namespace

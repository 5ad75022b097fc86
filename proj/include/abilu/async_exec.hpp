#pragma once

// Fixed-point sweep engine.
//
// A work set is any type providing
//
//   Index size() const;                                   // number of items
//   template <class View> void update(Index item, View&) const;
//
// An update reads shared state through the view, computes its new values in
// local storage and then stores each of its own slots exactly once. Two
// executors are provided:
//
//   run_parallel  real threads, dynamic chunk claiming, no barrier between
//                 sweeps (each sweep has its own chunk counter);
//   run_replay    single-threaded interpretation of an explicit schedule of
//                 update indices u(j) and read delays s(j, owner).

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "abilu/blockmat.hpp"

namespace abilu {

inline constexpr Index kBlockChunkSize = 384;
inline constexpr Index kScalarChunkSize = 1536;

/// Chunk size used for a work set of b x b block items.
inline Index default_chunk_size(Index block_size) noexcept {
  return block_size == 1 ? kScalarChunkSize : kBlockChunkSize;
}

struct SweepConfig {
  Index n_sweeps = 1;
  Index n_workers = 1;
  Index chunk_size = kBlockChunkSize;

  /// Throws InvalidConfig when a field is zero.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Views

/// Shared state accessed with relaxed whole-value atomics per slot.
class AtomicView {
 public:
  explicit AtomicView(std::span<double> state) noexcept : state_(state) {}

  double load(Index slot) const noexcept {
    return std::atomic_ref<double>(state_[slot]).load(std::memory_order_relaxed);
  }
  void store(Index slot, double v) const noexcept {
    std::atomic_ref<double>(state_[slot]).store(v, std::memory_order_relaxed);
  }
  void load_range(Index first, std::span<double> out) const noexcept {
    for (Index k = 0; k < out.size(); ++k) out[k] = load(first + k);
  }
  void store_range(Index first, std::span<const double> in) const noexcept {
    for (Index k = 0; k < in.size(); ++k) store(first + k, in[k]);
  }

 private:
  std::span<double> state_;
};

// ---------------------------------------------------------------------------
// Parallel executor

/// Runs cfg.n_sweeps sweeps of `work` with cfg.n_workers threads (the caller is
/// one of them). Sweep s hands out chunks of cfg.chunk_size consecutive items
/// in ascending order from its own counter; a worker moves on to its next sweep
/// as soon as the current sweep has no unclaimed chunks. The first exception
/// thrown by an update stops further claiming and is rethrown after all
/// workers have joined.
template <class WorkSet>
void run_parallel(const WorkSet& work, const SweepConfig& cfg, std::span<double> state) {
  cfg.validate();
  const Index n_items = work.size();
  if (n_items == 0) throw InvalidConfig("work set is empty");
  const Index n_chunks = (n_items + cfg.chunk_size - 1) / cfg.chunk_size;
  const AtomicView view(state);

  if (cfg.n_workers == 1) {
    for (Index s = 0; s < cfg.n_sweeps; ++s)
      for (Index item = 0; item < n_items; ++item) work.update(item, view);
    return;
  }

  std::vector<std::atomic<Index>> next_chunk(cfg.n_sweeps);
  for (auto& c : next_chunk) c.store(0, std::memory_order_relaxed);
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&]() {
    try {
      for (Index s = 0; s < cfg.n_sweeps; ++s) {
        while (!failed.load(std::memory_order_relaxed)) {
          const Index c = next_chunk[s].fetch_add(1, std::memory_order_relaxed);
          if (c >= n_chunks) break;
          const Index end = std::min(n_items, (c + 1) * cfg.chunk_size);
          for (Index item = c * cfg.chunk_size; item < end; ++item) work.update(item, view);
        }
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
      failed.store(true, std::memory_order_relaxed);
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(cfg.n_workers - 1);
  for (Index w = 1; w < cfg.n_workers; ++w) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Deterministic replay

/// Explicit asynchronous schedule. Step j (0-based) updates item updates[j];
/// when that update reads a slot owned by item `o`, it sees the state after
/// steps 0 .. j - shift(j, o) - 1, i.e. the value at version j - shift(j, o).
/// Valid shifts satisfy 0 <= shift <= min(j, max_shift).
struct Schedule {
  Index n_items = 0;
  /// Every full round of this many consecutive steps must update every item.
  Index round_length = 0;
  Index max_shift = 8;
  std::vector<Index> updates;
  /// Empty means all shifts are zero.
  std::function<Index(Index step, Index owner)> shift;

  Index n_steps() const noexcept { return updates.size(); }
  Index shift_at(Index step, Index owner) const { return shift ? shift(step, owner) : 0; }
};

/// Checks the update function (indices in range, each full round covers every
/// item) and the declared bounds. Shift values are checked lazily by
/// run_replay when a read actually consults them. Throws InvalidSchedule.
void validate_schedule(const Schedule& sched);

/// In-order updates with zero delays: sequential Gauss-Seidel sweeps.
Schedule gauss_seidel_schedule(Index n_items, Index rounds);

/// Synchronized Jacobi: every read within a round sees the state at the start
/// of the round. With a seed, each round visits the items in a fresh random order.
Schedule jacobi_schedule(Index n_items, Index rounds, std::optional<std::uint64_t> shuffle_seed = {});

/// Chunked sequential execution: items are split into chunks of consecutive
/// indices; within a round, reads of items in the updating item's own chunk are
/// current and all other reads see the start of the round.
Schedule chunked_schedule(Index n_items, Index chunk_size, Index rounds);

/// Random valid schedule: each round is a random permutation, and every read
/// delay is drawn uniformly from [0, min(j, max_shift)] by a hash of
/// (seed, step, owner).
Schedule random_schedule(Index n_items, Index rounds, Index max_shift, std::uint64_t seed);

/// Single-threaded view used by run_replay; keeps a per-slot value history.
class ReplayView {
 public:
  ReplayView(std::span<double> state, std::span<const Index> slot_owner, const Schedule& sched);

  double load(Index slot) const;
  void store(Index slot, double v);
  void load_range(Index first, std::span<double> out) const {
    for (Index k = 0; k < out.size(); ++k) out[k] = load(first + k);
  }
  void store_range(Index first, std::span<const double> in) {
    for (Index k = 0; k < in.size(); ++k) store(first + k, in[k]);
  }

  void begin_step(Index step) noexcept { step_ = step; }
  /// Publishes the step's writes as version step + 1.
  void end_step();

 private:
  struct Entry {
    Index version;
    double value;
  };
  std::span<double> state_;
  std::span<const Index> owner_;
  const Schedule& sched_;
  Index step_ = 0;
  std::vector<std::vector<Entry>> history_;
  std::vector<std::pair<Index, double>> pending_;
};

/// Applies sched to `state`. slot_owner[s] is the item that writes slot s.
/// Writes made during a step become visible from the next version on; an
/// item never reads back its own writes within a step.
template <class WorkSet>
void run_replay(const WorkSet& work, const Schedule& sched, std::span<double> state,
                std::span<const Index> slot_owner) {
  validate_schedule(sched);
  if (sched.n_items != work.size()) throw InvalidSchedule("schedule and work set sizes differ");
  if (slot_owner.size() != state.size()) throw InvalidSchedule("slot owner map does not cover the state");
  ReplayView view(state, slot_owner, sched);
  for (Index j = 0; j < sched.n_steps(); ++j) {
    view.begin_step(j);
    work.update(sched.updates[j], view);
    view.end_step();
  }
}

}  // namespace abilu

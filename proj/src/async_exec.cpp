#include "abilu/async_exec.hpp"

#include <numeric>
#include <random>
#include <string>

namespace abilu {

void SweepConfig::validate() const {
  if (n_sweeps == 0) throw InvalidConfig("n_sweeps must be at least 1");
  if (n_workers == 0) throw InvalidConfig("n_workers must be at least 1");
  if (chunk_size == 0) throw InvalidConfig("chunk_size must be at least 1");
}

void validate_schedule(const Schedule& sched) {
  if (sched.n_items == 0) throw InvalidSchedule("schedule has no items");
  if (sched.round_length < sched.n_items)
    throw InvalidSchedule("round length shorter than the item count");
  const Index n_rounds = sched.n_steps() / sched.round_length;
  for (Index j = 0; j < sched.n_steps(); ++j)
    if (sched.updates[j] >= sched.n_items)
      throw InvalidSchedule("update index out of range at step " + std::to_string(j));
  for (Index r = 0; r < n_rounds; ++r) {
    std::vector<char> seen(sched.n_items, 0);
    for (Index j = r * sched.round_length; j < (r + 1) * sched.round_length; ++j) seen[sched.updates[j]] = 1;
    for (Index i = 0; i < sched.n_items; ++i)
      if (!seen[i])
        throw InvalidSchedule("item " + std::to_string(i) + " is not updated in round " + std::to_string(r));
  }
}

Schedule gauss_seidel_schedule(Index n_items, Index rounds) {
  Schedule s;
  s.n_items = n_items;
  s.round_length = n_items;
  s.updates.resize(n_items * rounds);
  for (Index j = 0; j < s.updates.size(); ++j) s.updates[j] = j % n_items;
  return s;
}

Schedule jacobi_schedule(Index n_items, Index rounds, std::optional<std::uint64_t> shuffle_seed) {
  Schedule s = gauss_seidel_schedule(n_items, rounds);
  s.max_shift = n_items;
  if (shuffle_seed) {
    std::mt19937_64 rng(*shuffle_seed);
    for (Index r = 0; r < rounds; ++r)
      std::shuffle(s.updates.begin() + static_cast<std::ptrdiff_t>(r * n_items),
                   s.updates.begin() + static_cast<std::ptrdiff_t>((r + 1) * n_items), rng);
  }
  s.shift = [n_items](Index j, Index) { return j % n_items; };
  return s;
}

Schedule chunked_schedule(Index n_items, Index chunk_size, Index rounds) {
  if (chunk_size == 0) throw InvalidSchedule("chunk size must be positive");
  Schedule s = gauss_seidel_schedule(n_items, rounds);
  s.max_shift = n_items;
  s.shift = [n_items, chunk_size](Index j, Index owner) {
    const Index item = j % n_items;
    return owner / chunk_size == item / chunk_size ? Index{0} : item;
  };
  return s;
}

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Schedule random_schedule(Index n_items, Index rounds, Index max_shift, std::uint64_t seed) {
  Schedule s = jacobi_schedule(n_items, rounds, seed);
  s.max_shift = max_shift;
  s.shift = [seed, max_shift](Index j, Index owner) {
    const std::uint64_t h = mix(mix(seed ^ mix(j)) + owner);
    return static_cast<Index>(h % (std::min(j, max_shift) + 1));
  };
  return s;
}

ReplayView::ReplayView(std::span<double> state, std::span<const Index> slot_owner, const Schedule& sched)
    : state_(state), owner_(slot_owner), sched_(sched), history_(state.size()) {
  for (Index k = 0; k < state.size(); ++k) history_[k].push_back({0, state[k]});
}

double ReplayView::load(Index slot) const {
  const Index shift = sched_.shift_at(step_, owner_[slot]);
  if (shift > step_ || shift > sched_.max_shift)
    throw InvalidSchedule("shift " + std::to_string(shift) + " at step " + std::to_string(step_) +
                          " exceeds min(step, max_shift)");
  const Index version = step_ - shift;
  const auto& h = history_[slot];
  for (auto it = h.rbegin(); it != h.rend(); ++it)
    if (it->version <= version) return it->value;
  throw InvalidSchedule("requested version is older than the retained history");
}

void ReplayView::store(Index slot, double v) { pending_.emplace_back(slot, v); }

void ReplayView::end_step() {
  const Index version = step_ + 1;
  const Index cutoff = version > sched_.max_shift ? version - sched_.max_shift : 0;
  for (const auto& [slot, v] : pending_) {
    auto& h = history_[slot];
    h.push_back({version, v});
    // Keep the newest entry at or below the oldest readable version.
    Index drop = 0;
    while (drop + 1 < h.size() && h[drop + 1].version <= cutoff) ++drop;
    if (drop > 0) h.erase(h.begin(), h.begin() + static_cast<std::ptrdiff_t>(drop));
    state_[slot] = v;
  }
  pending_.clear();
}

}  // namespace abilu

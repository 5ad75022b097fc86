#include "abilu/orderings.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

namespace abilu {
namespace {

bool is_allowed(std::span<const char> allowed, Index v) { return allowed.empty() || allowed[v]; }

// Minimum-degree vertex (lowest index on ties) of the last level.
Index min_degree_vertex(const Graph& g, std::span<const Index> vertices) {
  Index best = vertices.front();
  for (Index v : vertices)
    if (g.degree(v) < g.degree(best) || (g.degree(v) == g.degree(best) && v < best)) best = v;
  return best;
}

}  // namespace

std::vector<std::vector<Index>> level_structure(const Graph& g, Index root,
                                                std::span<const char> allowed) {
  std::vector<std::vector<Index>> levels;
  std::vector<char> seen(g.size(), 0);
  seen[root] = 1;
  levels.push_back({root});
  while (true) {
    std::vector<Index> next;
    for (Index v : levels.back())
      for (Index w : g.neighbors(v))
        if (!seen[w] && is_allowed(allowed, w)) {
          seen[w] = 1;
          next.push_back(w);
        }
    if (next.empty()) break;
    std::sort(next.begin(), next.end());
    levels.push_back(std::move(next));
  }
  return levels;
}

Index pseudo_peripheral_vertex(const Graph& g, Index start, std::span<const char> allowed) {
  Index root = start;
  auto levels = level_structure(g, root, allowed);
  while (true) {
    const Index candidate = min_degree_vertex(g, levels.back());
    auto cand_levels = level_structure(g, candidate, allowed);
    if (cand_levels.size() <= levels.size()) return root;
    root = candidate;
    levels = std::move(cand_levels);
  }
}

Permutation rcm_order(const Graph& g) {
  const Index n = g.size();
  std::vector<Index> order;
  order.reserve(n);
  std::vector<char> unvisited(n, 1);
  Index remaining = n;
  while (remaining > 0) {
    Index start = npos;
    for (Index v = 0; v < n; ++v)
      if (unvisited[v] && (start == npos || g.degree(v) < g.degree(start))) start = v;
    start = pseudo_peripheral_vertex(g, start, unvisited);

    std::deque<Index> queue{start};
    unvisited[start] = 0;
    --remaining;
    std::vector<Index> nbrs;
    while (!queue.empty()) {
      const Index v = queue.front();
      queue.pop_front();
      order.push_back(v);
      nbrs.clear();
      for (Index w : g.neighbors(v))
        if (unvisited[w]) nbrs.push_back(w);
      std::sort(nbrs.begin(), nbrs.end(), [&](Index a, Index b) {
        return g.degree(a) != g.degree(b) ? g.degree(a) < g.degree(b) : a < b;
      });
      for (Index w : nbrs) {
        unvisited[w] = 0;
        --remaining;
        queue.push_back(w);
      }
    }
  }
  std::reverse(order.begin(), order.end());
  return Permutation(std::move(order));
}

// ---------------------------------------------------------------------------
// One-way dissection

std::optional<LevelBisection> level_set_bisection(const Graph& g, std::span<const Index> vertices) {
  if (vertices.empty()) return std::nullopt;
  std::vector<char> allowed(g.size(), 0);
  for (Index v : vertices) allowed[v] = 1;
  const Index start = pseudo_peripheral_vertex(g, min_degree_vertex(g, vertices), allowed);
  const auto levels = level_structure(g, start, allowed);
  if (levels.size() < 3) return std::nullopt;

  Index median = 0;
  Index cumulative = 0;
  for (; median < levels.size(); ++median) {
    cumulative += levels[median].size();
    if (2 * cumulative >= vertices.size()) break;
  }
  median = std::clamp<Index>(median, 1, levels.size() - 2);

  LevelBisection out;
  for (Index l = 0; l < levels.size(); ++l) {
    auto& dst = l < median ? out.part_a : (l == median ? out.separator : out.part_b);
    dst.insert(dst.end(), levels[l].begin(), levels[l].end());
  }
  std::sort(out.part_a.begin(), out.part_a.end());
  std::sort(out.part_b.begin(), out.part_b.end());
  std::sort(out.separator.begin(), out.separator.end());
  return out;
}

namespace {

// Connected components of an induced subgraph, each sorted, ordered by smallest vertex.
std::vector<std::vector<Index>> components(const Graph& g, std::span<const Index> vertices) {
  std::vector<char> allowed(g.size(), 0);
  for (Index v : vertices) allowed[v] = 1;
  std::vector<std::vector<Index>> comps;
  std::vector<Index> sorted(vertices.begin(), vertices.end());
  std::sort(sorted.begin(), sorted.end());
  for (Index v : sorted) {
    if (!allowed[v]) continue;
    std::vector<Index> comp;
    for (const auto& level : level_structure(g, v, allowed)) comp.insert(comp.end(), level.begin(), level.end());
    for (Index w : comp) allowed[w] = 0;
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

void dissect(const Graph& g, std::vector<Index> vertices, Index leaf_size, std::vector<Index>& order) {
  std::sort(vertices.begin(), vertices.end());
  if (vertices.size() <= leaf_size) {
    order.insert(order.end(), vertices.begin(), vertices.end());
    return;
  }
  auto comps = components(g, vertices);
  if (comps.size() > 1) {
    for (auto& c : comps) dissect(g, std::move(c), leaf_size, order);
    return;
  }
  auto split = level_set_bisection(g, vertices);
  if (!split) {
    order.insert(order.end(), vertices.begin(), vertices.end());
    return;
  }
  dissect(g, std::move(split->part_a), leaf_size, order);
  dissect(g, std::move(split->part_b), leaf_size, order);
  order.insert(order.end(), split->separator.begin(), split->separator.end());
}

}  // namespace

Permutation one_way_dissection_order(const Graph& g, Index leaf_size) {
  if (leaf_size == 0) throw InvalidSpec("dissection leaf size must be positive");
  std::vector<Index> all(g.size());
  for (Index v = 0; v < g.size(); ++v) all[v] = v;
  std::vector<Index> order;
  order.reserve(g.size());
  dissect(g, std::move(all), leaf_size, order);
  return Permutation(std::move(order));
}

// ---------------------------------------------------------------------------
// Lines

namespace {

double distance(const CellGrid& grid, Index a, Index b) {
  const auto& p = grid.centers[a];
  const auto& q = grid.centers[b];
  return std::hypot(p[0] - q[0], p[1] - q[1]);
}

}  // namespace

double cell_anisotropy(const CellGrid& grid, Index cell) {
  const auto nbrs = grid.adjacency.neighbors(cell);
  if (nbrs.empty()) return 1.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (Index w : nbrs) {
    const double d = distance(grid, cell, w);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

LineSet find_lines(const CellGrid& grid, double threshold) {
  if (!(threshold > 1.0)) throw InvalidSpec("anisotropy threshold must exceed 1");
  const Index n = grid.size();
  std::vector<double> aniso(n), nearest(n, std::numeric_limits<double>::infinity());
  for (Index c = 0; c < n; ++c) {
    aniso[c] = cell_anisotropy(grid, c);
    for (Index w : grid.adjacency.neighbors(c)) nearest[c] = std::min(nearest[c], distance(grid, c, w));
  }

  LineSet out;
  std::vector<char> taken(n, 0);
  for (Index seed = 0; seed < n; ++seed) {
    if (!grid.boundary[seed] || taken[seed] || !(aniso[seed] > threshold)) continue;
    std::vector<Index> line{seed};
    taken[seed] = 1;
    Index cur = seed;
    while (true) {
      Index next = npos;
      double best = std::numeric_limits<double>::infinity();
      for (Index w : grid.adjacency.neighbors(cur)) {
        if (std::find(line.begin(), line.end(), w) != line.end()) continue;
        const double d = distance(grid, cur, w);
        if (d < best || (d == best && w < next)) {
          best = d;
          next = w;
        }
      }
      // Only strongly coupled neighbours continue a line; this keeps it from
      // turning into a weak direction at the end of an anisotropic stack.
      if (next == npos || taken[next] || !(aniso[next] > threshold) || !(best < threshold * nearest[cur])) break;
      taken[next] = 1;
      line.push_back(next);
      cur = next;
    }
    if (line.size() < 2) {
      taken[seed] = 0;
      continue;
    }
    out.lines.push_back(std::move(line));
  }
  for (Index c = 0; c < n; ++c)
    if (!taken[c]) out.isotropic_cells.push_back(c);
  return out;
}

void LineSet::validate(const CellGrid& grid) const {
  std::vector<char> seen(grid.size(), 0);
  auto mark = [&](Index c) {
    if (c >= grid.size() || seen[c]) throw InvalidSpec("line set does not partition the cells");
    seen[c] = 1;
  };
  for (const auto& line : lines) {
    if (line.size() < 2) throw InvalidSpec("line shorter than two cells");
    for (Index k = 0; k < line.size(); ++k) {
      mark(line[k]);
      if (k > 0) {
        const auto nb = grid.adjacency.neighbors(line[k - 1]);
        if (!std::binary_search(nb.begin(), nb.end(), line[k]))
          throw InvalidSpec("consecutive line cells are not neighbours");
      }
    }
  }
  for (Index c : isotropic_cells) mark(c);
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw InvalidSpec("line set does not cover every cell");
}

Permutation line_order(const LineSet& lines) {
  std::vector<Index> order;
  for (const auto& line : lines.lines) order.insert(order.end(), line.begin(), line.end());
  order.insert(order.end(), lines.isotropic_cells.begin(), lines.isotropic_cells.end());
  return Permutation(std::move(order));
}

Graph condensed_line_graph(const LineSet& lines, const CellGrid& grid) {
  const Index n_lines = lines.lines.size();
  std::vector<Index> vertex_of(grid.size(), npos);
  for (Index l = 0; l < n_lines; ++l)
    for (Index c : lines.lines[l]) vertex_of[c] = l;
  for (Index k = 0; k < lines.isotropic_cells.size(); ++k) vertex_of[lines.isotropic_cells[k]] = n_lines + k;

  std::vector<std::vector<Index>> lists(n_lines + lines.isotropic_cells.size());
  for (Index c = 0; c < grid.size(); ++c)
    for (Index d : grid.adjacency.neighbors(c))
      if (vertex_of[c] != vertex_of[d]) lists[vertex_of[c]].push_back(vertex_of[d]);
  return Graph::from_lists(lists);
}

Permutation hybrid_line_order(const LineSet& lines, const CellGrid& grid, InnerOrdering inner,
                              Index leaf_size) {
  const Graph condensed = condensed_line_graph(lines, grid);
  const Permutation outer =
      inner == InnerOrdering::Rcm ? rcm_order(condensed) : one_way_dissection_order(condensed, leaf_size);
  const Index n_lines = lines.lines.size();
  std::vector<Index> order;
  order.reserve(grid.size());
  for (Index v : outer.new_to_old()) {
    if (v < n_lines)
      order.insert(order.end(), lines.lines[v].begin(), lines.lines[v].end());
    else
      order.push_back(lines.isotropic_cells[v - n_lines]);
  }
  return Permutation(std::move(order));
}

// ---------------------------------------------------------------------------
// Applying permutations

BlockSparseMatrix permute_matrix(const BlockSparseMatrix& a, const Permutation& p) {
  const auto& pat = a.pattern();
  if (p.size() != pat.n_block_rows()) throw DimensionMismatch("permutation size differs from block rows");
  const Index b = a.block_size();
  const Index bb = b * b;
  const auto inv = p.old_to_new();
  std::vector<Index> row_ptr(pat.n_block_rows() + 1, 0);
  std::vector<Index> col_idx;
  std::vector<double> values;
  col_idx.reserve(pat.nnz_blocks());
  values.reserve(a.values().size());
  std::vector<std::pair<Index, Index>> row;  // (new column, old position)
  for (Index k = 0; k < pat.n_block_rows(); ++k) {
    const Index i = p.new_to_old()[k];
    row.clear();
    for (Index pos = pat.row_begin(i); pos < pat.row_end(i); ++pos) row.emplace_back(inv[pat.col_idx()[pos]], pos);
    std::sort(row.begin(), row.end());
    for (const auto& [col, pos] : row) {
      col_idx.push_back(col);
      const auto blk = a.block(pos);
      values.insert(values.end(), blk.begin(), blk.begin() + static_cast<std::ptrdiff_t>(bb));
    }
    row_ptr[k + 1] = col_idx.size();
  }
  return BlockSparseMatrix(pat.n_block_rows(), b, std::move(row_ptr), std::move(col_idx), std::move(values));
}

std::vector<double> permute_vector(std::span<const double> x, const Permutation& p, Index b) {
  if (x.size() != p.size() * b) throw DimensionMismatch("vector length differs from permutation size * b");
  std::vector<double> y(x.size());
  for (Index k = 0; k < p.size(); ++k)
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(p.new_to_old()[k] * b), b,
                y.begin() + static_cast<std::ptrdiff_t>(k * b));
  return y;
}

std::vector<double> unpermute_vector(std::span<const double> x, const Permutation& p, Index b) {
  if (x.size() != p.size() * b) throw DimensionMismatch("vector length differs from permutation size * b");
  std::vector<double> y(x.size());
  for (Index k = 0; k < p.size(); ++k)
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(k * b), b,
                y.begin() + static_cast<std::ptrdiff_t>(p.new_to_old()[k] * b));
  return y;
}

CellGrid permute_grid(const CellGrid& grid, const Permutation& p) {
  if (p.size() != grid.size()) throw DimensionMismatch("permutation size differs from cell count");
  const auto inv = p.old_to_new();
  CellGrid out;
  std::vector<std::vector<Index>> lists(grid.size());
  out.centers.resize(grid.size());
  out.boundary.resize(grid.size());
  for (Index k = 0; k < grid.size(); ++k) {
    const Index old = p.new_to_old()[k];
    out.centers[k] = grid.centers[old];
    out.boundary[k] = grid.boundary[old];
    for (Index w : grid.adjacency.neighbors(old)) lists[k].push_back(inv[w]);
  }
  out.adjacency = Graph::from_lists(lists);
  return out;
}

Index bandwidth(const Graph& g, const Permutation& p) {
  Index bw = 0;
  const auto inv = p.old_to_new();
  for (Index v = 0; v < g.size(); ++v)
    for (Index w : g.neighbors(v)) bw = std::max(bw, inv[v] > inv[w] ? inv[v] - inv[w] : inv[w] - inv[v]);
  return bw;
}

Index bandwidth(const BlockSparseMatrix& a) {
  Index bw = 0;
  const auto& p = a.pattern();
  for (Index i = 0; i < p.n_block_rows(); ++i)
    for (Index pos = p.row_begin(i); pos < p.row_end(i); ++pos) {
      const Index j = p.col_idx()[pos];
      bw = std::max(bw, i > j ? i - j : j - i);
    }
  return bw;
}

// ---------------------------------------------------------------------------

OrderingKind parse_ordering(std::string_view name) {
  if (name == "natural") return OrderingKind::Natural;
  if (name == "rcm") return OrderingKind::Rcm;
  if (name == "1wd") return OrderingKind::OneWayDissection;
  if (name == "line") return OrderingKind::Line;
  if (name == "line-rcm") return OrderingKind::LineRcm;
  if (name == "line-1wd") return OrderingKind::LineOneWayDissection;
  throw InvalidSpec("unknown ordering '" + std::string(name) + "'");
}

std::string_view ordering_name(OrderingKind kind) noexcept {
  switch (kind) {
    case OrderingKind::Natural: return "natural";
    case OrderingKind::Rcm: return "rcm";
    case OrderingKind::OneWayDissection: return "1wd";
    case OrderingKind::Line: return "line";
    case OrderingKind::LineRcm: return "line-rcm";
    case OrderingKind::LineOneWayDissection: return "line-1wd";
  }
  return "unknown";
}

bool ordering_needs_grid(OrderingKind kind) noexcept {
  return kind == OrderingKind::Line || kind == OrderingKind::LineRcm ||
         kind == OrderingKind::LineOneWayDissection;
}

Permutation compute_ordering(OrderingKind kind, const Graph& graph, const CellGrid* grid,
                             const OrderingOptions& options) {
  if (ordering_needs_grid(kind) && grid == nullptr)
    throw InvalidSpec("ordering '" + std::string(ordering_name(kind)) + "' needs cell geometry");
  switch (kind) {
    case OrderingKind::Natural: return Permutation::identity(graph.size());
    case OrderingKind::Rcm: return rcm_order(graph);
    case OrderingKind::OneWayDissection: return one_way_dissection_order(graph, options.leaf_size);
    case OrderingKind::Line: return line_order(find_lines(*grid, options.line_threshold));
    case OrderingKind::LineRcm:
      return hybrid_line_order(find_lines(*grid, options.line_threshold), *grid, InnerOrdering::Rcm,
                               options.leaf_size);
    case OrderingKind::LineOneWayDissection:
      return hybrid_line_order(find_lines(*grid, options.line_threshold), *grid,
                               InnerOrdering::OneWayDissection, options.leaf_size);
  }
  throw InvalidSpec("unknown ordering");
}

}  // namespace abilu

#include "abilu/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace abilu {

Graph Graph::from_lists(const std::vector<std::vector<Index>>& lists) {
  const Index n = lists.size();
  std::vector<std::vector<Index>> sym(n);
  for (Index v = 0; v < n; ++v)
    for (Index w : lists[v]) {
      if (w >= n) throw InvalidSpec("graph neighbour index out of range");
      if (w == v) continue;
      sym[v].push_back(w);
      sym[w].push_back(v);
    }
  Graph g;
  g.offsets_.assign(n + 1, 0);
  for (Index v = 0; v < n; ++v) {
    auto& l = sym[v];
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
    g.offsets_[v + 1] = g.offsets_[v] + l.size();
    g.adj_.insert(g.adj_.end(), l.begin(), l.end());
  }
  return g;
}

bool Graph::symmetric() const {
  for (Index v = 0; v < size(); ++v)
    for (Index w : neighbors(v)) {
      const auto nw = neighbors(w);
      if (!std::binary_search(nw.begin(), nw.end(), v)) return false;
    }
  return true;
}

Graph matrix_graph(const BlockSparseMatrix& a) {
  const auto& p = a.pattern();
  std::vector<std::vector<Index>> lists(p.n_block_rows());
  for (Index i = 0; i < p.n_block_rows(); ++i)
    for (Index pos = p.row_begin(i); pos < p.row_end(i); ++pos)
      if (p.col_idx()[pos] != i) lists[i].push_back(p.col_idx()[pos]);
  return Graph::from_lists(lists);
}

void CellGrid::validate() const {
  if (adjacency.size() != centers.size() || boundary.size() != centers.size())
    throw InvalidSpec("cell grid arrays have inconsistent sizes");
  if (!adjacency.symmetric()) throw InvalidSpec("cell adjacency is not symmetric");
  for (const auto& c : centers)
    if (!std::isfinite(c[0]) || !std::isfinite(c[1]))
      throw InvalidSpec("cell centre coordinate is not finite");
}

Permutation::Permutation(std::vector<Index> new_to_old) : perm_(std::move(new_to_old)) {
  inverse_.assign(perm_.size(), npos);
  for (Index k = 0; k < perm_.size(); ++k) {
    const Index old = perm_[k];
    if (old >= perm_.size() || inverse_[old] != npos)
      throw InvalidSpec("permutation is not a bijection (index " + std::to_string(old) + ")");
    inverse_[old] = k;
  }
}

Permutation Permutation::identity(Index n) {
  std::vector<Index> p(n);
  for (Index i = 0; i < n; ++i) p[i] = i;
  return Permutation(std::move(p));
}

}  // namespace abilu

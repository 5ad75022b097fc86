#include "abilu/problems.hpp"

#include <array>
#include <charconv>
#include <functional>
#include <cmath>
#include <sstream>

namespace abilu {

void ProblemSpec::validate() const {
  if (nx == 0 || ny == 0) throw InvalidSpec("grid dimensions must be positive");
  if (block_size == 0) throw InvalidSpec("block size must be positive");
  if (!(anisotropy > 0.0) || !std::isfinite(anisotropy)) throw InvalidSpec("anisotropy must be positive");
  if (!(stretching >= 1.0) || !std::isfinite(stretching)) throw InvalidSpec("stretching must be >= 1");
  if (!(wall_aspect > 0.0) || !std::isfinite(wall_aspect)) throw InvalidSpec("wall aspect must be positive");
  if (!std::isfinite(vx) || !std::isfinite(vy)) throw InvalidSpec("velocity must be finite");
  if (!std::isfinite(coupling) || !std::isfinite(diag_shift) || diag_shift < 0.0)
    throw InvalidSpec("coupling and diagonal shift must be finite (shift >= 0)");
  if (kind == ProblemKind::BoundaryLayerGrid && layers > ny)
    throw InvalidSpec("more boundary layers than grid rows");
  if (kind != ProblemKind::BlockCoupled2D && kind != ProblemKind::BoundaryLayerGrid && block_size != 1)
    throw InvalidSpec("block size > 1 requires the block or bl problem kind");
}

namespace {

// Each matrix contribution is value * B_id added to block (row, col), where
// B_id = I + coupling * R_id and R_id is random with zero diagonal. Both ends of
// an edge share the same id, so the symmetric part stays positive definite for
// moderate coupling; for b = 1 every B_id is exactly 1.
struct Term {
  Index col;
  double value;
  std::uint64_t id;
};
using Stencil = std::vector<std::vector<Term>>;

enum TermKind : std::uint64_t { kDiffusion = 0, kDirichlet = 1, kConvection = 2 };

std::uint64_t term_id(Index n, Index a, Index b, std::uint64_t kind, std::uint64_t dir) {
  const std::uint64_t lo = std::min(a, b);
  const std::uint64_t hi = std::max(a, b);
  return ((lo * n + hi) * 4 + kind) * 4 + dir;
}

Index cell(Index nx, Index ix, Index iy) { return iy * nx + ix; }

// Faces of cell (ix, iy) in the order south, west, east, north.
struct Face {
  bool exists;
  Index nb;
  std::uint64_t dir;
};

std::array<Face, 4> faces(Index nx, Index ny, Index ix, Index iy) {
  return {Face{iy > 0, iy > 0 ? cell(nx, ix, iy - 1) : 0, 0}, Face{ix > 0, ix > 0 ? cell(nx, ix - 1, iy) : 0, 1},
          Face{ix + 1 < nx, cell(nx, ix + 1, iy), 2}, Face{iy + 1 < ny, cell(nx, ix, iy + 1), 3}};
}

// diffusion[f] and boundary[f]: coefficient through face f to the neighbour or to
// a Dirichlet boundary (0 = no boundary term); flux[f]: upwind convection flux
// entering through face f.
Stencil build_stencil(Index nx, Index ny, const std::function<std::array<double, 4>(Index, Index)>& diffusion,
                      const std::function<std::array<double, 4>(Index, Index)>& boundary,
                      const std::function<std::array<double, 4>(Index, Index)>& inflow) {
  const Index n = nx * ny;
  Stencil st(n);
  for (Index iy = 0; iy < ny; ++iy)
    for (Index ix = 0; ix < nx; ++ix) {
      const Index c = cell(nx, ix, iy);
      const auto f = faces(nx, ny, ix, iy);
      const auto w = diffusion(ix, iy);
      const auto bd = boundary(ix, iy);
      const auto q = inflow(ix, iy);
      auto& row = st[c];
      for (Index k = 0; k < 4; ++k) {
        if (f[k].exists) {
          const auto id = term_id(n, c, f[k].nb, kDiffusion, 0);
          row.push_back({c, w[k], id});
          row.push_back({f[k].nb, -w[k], id});
        } else if (bd[k] != 0.0) {
          row.push_back({c, bd[k], term_id(n, c, c, kDirichlet, f[k].dir)});
        }
      }
      for (Index k = 0; k < 4; ++k) {
        if (q[k] == 0.0) continue;
        const auto id = term_id(n, c, f[k].exists ? f[k].nb : c, kConvection, f[k].dir);
        row.push_back({c, q[k], id});
        if (f[k].exists) row.push_back({f[k].nb, -q[k], id});
      }
    }
  return st;
}

Stencil structured_stencil(const ProblemSpec& s) {
  const double ax = 1.0;
  const double ay = s.anisotropy;
  const std::array<double, 4> w{ay, ax, ax, ay};
  // Upwind: flow in +x enters through the west face, and so on.
  const std::array<double, 4> q{s.vy > 0.0 ? s.vy : 0.0, s.vx > 0.0 ? s.vx : 0.0, s.vx < 0.0 ? -s.vx : 0.0,
                                s.vy < 0.0 ? -s.vy : 0.0};
  return build_stencil(
      s.nx, s.ny, [&](Index, Index) { return w; }, [&](Index, Index) { return w; },
      [&](Index, Index) { return q; });
}

// Row heights of the boundary-layer grid, bottom (wall) to top.
std::vector<double> layer_heights(const ProblemSpec& s) {
  const double dx = 1.0;
  std::vector<double> dy(s.ny, dx);
  double h = dx / s.wall_aspect;
  for (Index k = 0; k < s.layers; ++k, h *= s.stretching) dy[k] = std::min(h, dx);
  return dy;
}

CellGrid grid_from_rows(Index nx, std::span<const double> dy) {
  const Index ny = dy.size();
  CellGrid g;
  std::vector<std::vector<Index>> lists(nx * ny);
  g.centers.resize(nx * ny);
  g.boundary.resize(nx * ny);
  double y0 = 0.0;
  for (Index iy = 0; iy < ny; ++iy) {
    for (Index ix = 0; ix < nx; ++ix) {
      const Index c = cell(nx, ix, iy);
      g.centers[c] = {static_cast<double>(ix) + 0.5, y0 + 0.5 * dy[iy]};
      g.boundary[c] = (ix == 0 || iy == 0 || ix + 1 == nx || iy + 1 == ny) ? 1 : 0;
      if (ix + 1 < nx) lists[c].push_back(cell(nx, ix + 1, iy));
      if (iy + 1 < ny) lists[c].push_back(cell(nx, ix, iy + 1));
    }
    y0 += dy[iy];
  }
  g.adjacency = Graph::from_lists(lists);
  return g;
}

// Finite-volume coefficients: face length over centre distance. Dirichlet at
// the wall and the top, zero flux through the sides.
Stencil boundary_layer_stencil(const ProblemSpec& s, std::span<const double> dy) {
  const double dx = 1.0;
  const Index ny = s.ny;
  auto vertical = [&](Index a, Index b) { return dx / (0.5 * (dy[a] + dy[b])); };
  auto diffusion = [&](Index, Index iy) {
    return std::array<double, 4>{iy > 0 ? vertical(iy, iy - 1) : 0.0, dy[iy] / dx, dy[iy] / dx,
                                 iy + 1 < ny ? vertical(iy, iy + 1) : 0.0};
  };
  auto boundary = [&](Index, Index iy) {
    const double wall = dx / (0.5 * dy[iy]);
    return std::array<double, 4>{iy == 0 ? wall : 0.0, 0.0, 0.0, iy + 1 == ny ? wall : 0.0};
  };
  auto inflow = [&](Index, Index iy) {
    return std::array<double, 4>{s.vy > 0.0 ? s.vy * dx : 0.0, s.vx > 0.0 ? s.vx * dy[iy] : 0.0,
                                 s.vx < 0.0 ? -s.vx * dy[iy] : 0.0, s.vy < 0.0 ? -s.vy * dx : 0.0};
  };
  return build_stencil(s.nx, ny, diffusion, boundary, inflow);
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform in [-1, 1) from a hash.
double hashed_uniform(std::uint64_t seed, std::uint64_t key) {
  return static_cast<double>(mix(seed ^ mix(key)) >> 11) * 0x1.0p-52 - 1.0;
}

BlockSparseMatrix assemble(const Stencil& st, Index b, double coupling, std::uint64_t seed) {
  const Index n = st.size();
  const Index bb = b * b;
  std::vector<Index> row_ptr(n + 1, 0);
  std::vector<Index> col_idx;
  std::vector<double> values;
  std::vector<Index> cols;
  std::vector<double> coupling_block(bb);
  for (Index i = 0; i < n; ++i) {
    cols.clear();
    for (const auto& t : st[i]) cols.push_back(t.col);
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    const Index base = values.size();
    values.resize(base + cols.size() * bb, 0.0);
    for (const auto& t : st[i]) {
      for (Index r = 0; r < b; ++r)
        for (Index c = 0; c < b; ++c)
          coupling_block[r * b + c] =
              r == c ? 1.0 : coupling * hashed_uniform(seed, t.id * bb + r * b + c);
      const Index k = static_cast<Index>(std::lower_bound(cols.begin(), cols.end(), t.col) - cols.begin());
      double* blk = values.data() + base + k * bb;
      for (Index e = 0; e < bb; ++e) blk[e] += t.value * coupling_block[e];
    }
    col_idx.insert(col_idx.end(), cols.begin(), cols.end());
    row_ptr[i + 1] = col_idx.size();
  }
  return BlockSparseMatrix(n, b, std::move(row_ptr), std::move(col_idx), std::move(values));
}

}  // namespace

CellGrid uniform_grid(Index nx, Index ny) {
  const std::vector<double> dy(ny, 1.0);
  return grid_from_rows(nx, dy);
}

Problem generate(const ProblemSpec& spec) {
  spec.validate();
  Problem p;
  if (spec.kind == ProblemKind::BoundaryLayerGrid) {
    const auto dy = layer_heights(spec);
    p.grid = grid_from_rows(spec.nx, dy);
    p.a = assemble(boundary_layer_stencil(spec, dy), spec.block_size, spec.coupling, spec.seed);
  } else {
    ProblemSpec s = spec;
    if (s.kind == ProblemKind::Poisson2D) s.vx = s.vy = 0.0;
    p.grid = uniform_grid(spec.nx, spec.ny);
    p.a = assemble(structured_stencil(s), spec.block_size, spec.coupling, spec.seed);
  }
  if (spec.diag_shift > 0.0) p.a = shift_diagonal(p.a, spec.diag_shift);
  std::vector<double> x(p.a.dim());
  for (Index k = 0; k < x.size(); ++k) x[k] = 1.0 + 0.5 * hashed_uniform(spec.seed + 1, k);
  p.rhs = spmv(p.a, x);
  return p;
}

BlockSparseMatrix shift_diagonal(const BlockSparseMatrix& a, double sigma) {
  const Index b = a.block_size();
  std::vector<double> values(a.values().begin(), a.values().end());
  for (Index i = 0; i < a.n_block_rows(); ++i) {
    double* blk = values.data() + a.pattern().diag(i) * b * b;
    for (Index r = 0; r < b; ++r) blk[r * b + r] += sigma * std::abs(blk[r * b + r]);
  }
  return a.with_values(std::move(values));
}

std::string_view problem_kind_name(ProblemKind kind) noexcept {
  switch (kind) {
    case ProblemKind::Poisson2D: return "poisson";
    case ProblemKind::ConvectionDiffusion2D: return "convdiff";
    case ProblemKind::BlockCoupled2D: return "block";
    case ProblemKind::BoundaryLayerGrid: return "bl";
  }
  return "unknown";
}

namespace {

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw InvalidSpec("bad value '" + std::string(text) + "' for '" + std::string(key) + "'");
  return value;
}

}  // namespace

ProblemSpec parse_problem_spec(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw InvalidSpec("problem spec needs 'kind:NXxNY'");
  const auto kind = text.substr(0, colon);
  ProblemSpec s;
  if (kind == "poisson") s.kind = ProblemKind::Poisson2D;
  else if (kind == "convdiff") s.kind = ProblemKind::ConvectionDiffusion2D;
  else if (kind == "block") s.kind = ProblemKind::BlockCoupled2D, s.block_size = 4;
  else if (kind == "bl") s.kind = ProblemKind::BoundaryLayerGrid;
  else throw InvalidSpec("unknown problem kind '" + std::string(kind) + "'");

  std::string_view rest = text.substr(colon + 1);
  auto next_field = [&rest]() {
    const auto comma = rest.find(',');
    const auto field = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    return field;
  };
  const auto dims = next_field();
  const auto x = dims.find('x');
  if (x == std::string_view::npos) throw InvalidSpec("grid size must look like NXxNY");
  s.nx = parse_number<Index>("nx", dims.substr(0, x));
  s.ny = parse_number<Index>("ny", dims.substr(x + 1));
  while (!rest.empty()) {
    const auto field = next_field();
    const auto eq = field.find('=');
    if (eq == std::string_view::npos) throw InvalidSpec("expected key=value, got '" + std::string(field) + "'");
    const auto key = field.substr(0, eq);
    const auto val = field.substr(eq + 1);
    if (key == "eps") s.anisotropy = parse_number<double>(key, val);
    else if (key == "vx") s.vx = parse_number<double>(key, val);
    else if (key == "vy") s.vy = parse_number<double>(key, val);
    else if (key == "b") s.block_size = parse_number<Index>(key, val);
    else if (key == "kappa") s.coupling = parse_number<double>(key, val);
    else if (key == "seed") s.seed = parse_number<std::uint64_t>(key, val);
    else if (key == "stretch") s.stretching = parse_number<double>(key, val);
    else if (key == "layers") s.layers = parse_number<Index>(key, val);
    else if (key == "aspect") s.wall_aspect = parse_number<double>(key, val);
    else if (key == "shift") s.diag_shift = parse_number<double>(key, val);
    else throw InvalidSpec("unknown problem parameter '" + std::string(key) + "'");
  }
  s.validate();
  return s;
}

std::string format_problem_spec(const ProblemSpec& s) {
  std::ostringstream os;
  os.precision(17);
  os << problem_kind_name(s.kind) << ':' << s.nx << 'x' << s.ny << ",eps=" << s.anisotropy << ",vx=" << s.vx
     << ",vy=" << s.vy << ",b=" << s.block_size << ",kappa=" << s.coupling << ",seed=" << s.seed;
  if (s.kind == ProblemKind::BoundaryLayerGrid)
    os << ",stretch=" << s.stretching << ",layers=" << s.layers << ",aspect=" << s.wall_aspect;
  if (s.diag_shift != 0.0) os << ",shift=" << s.diag_shift;
  return os.str();
}

}  // namespace abilu

#include "abilu/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace abilu {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool parse_double(std::string_view text, double& out) {
  if (text.empty()) return false;
  const std::string s(text);
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

template <class T>
bool parse_integer(std::string_view text, T& out) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  Index i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const Index start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path.string() + "' for reading");
  return is;
}

void finish_write(std::ofstream& os, const std::filesystem::path& path) {
  os.flush();
  if (!os) throw IoError("write to '" + path.string() + "' failed");
}

void write_mm_entries(std::ostream& os, Index dim, const std::vector<Triplet>& entries) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << dim << ' ' << dim << ' ' << entries.size() << '\n';
  for (const auto& e : entries) os << e.row + 1 << ' ' << e.col + 1 << ' ' << fmt_double(e.value) << '\n';
}

}  // namespace

// ---------------------------------------------------------------------------
// Matrix Market

void write_matrix_market(const BlockSparseMatrix& a, std::ostream& os) {
  const auto& p = a.pattern();
  const Index b = a.block_size();
  std::vector<Triplet> entries;
  entries.reserve(a.nnz());
  for (Index i = 0; i < p.n_block_rows(); ++i)
    for (Index r = 0; r < b; ++r)
      for (Index pos = p.row_begin(i); pos < p.row_end(i); ++pos)
        for (Index c = 0; c < b; ++c)
          entries.push_back({i * b + r, p.col_idx()[pos] * b + c, a.values()[pos * b * b + r * b + c]});
  write_mm_entries(os, a.dim(), entries);
}

void write_matrix_market(const BlockSparseMatrix& a, const std::filesystem::path& path) {
  auto os = open_out(path);
  write_matrix_market(a, os);
  finish_write(os, path);
}

BlockSparseMatrix read_matrix_market(std::istream& is, Index block_size) {
  std::string line;
  Index line_no = 0;
  if (!std::getline(is, line)) throw ParseError(1, "empty file");
  ++line_no;
  const auto head = split_ws(line);
  if (head.size() != 5 || head[0] != "%%MatrixMarket" || lower(head[1]) != "matrix")
    throw ParseError(line_no, "missing %%MatrixMarket matrix header");
  if (lower(head[2]) != "coordinate") throw ParseError(line_no, "only coordinate format is supported");
  const auto field = lower(head[3]);
  if (field != "real" && field != "integer") throw ParseError(line_no, "unsupported field '" + field + "'");
  const auto symmetry = lower(head[4]);
  if (symmetry != "general" && symmetry != "symmetric" && symmetry != "skew-symmetric")
    throw ParseError(line_no, "unsupported symmetry '" + symmetry + "'");

  Index rows = 0, cols = 0, nnz = 0;
  bool have_size = false;
  std::vector<Triplet> entries;
  Index read = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0].front() == '%') continue;
    if (!have_size) {
      if (tok.size() != 3 || !parse_integer(tok[0], rows) || !parse_integer(tok[1], cols) ||
          !parse_integer(tok[2], nnz))
        throw ParseError(line_no, "bad size line");
      if (rows != cols) throw ParseError(line_no, "matrix is not square");
      have_size = true;
      entries.reserve(symmetry == "general" ? nnz : 2 * nnz);
      continue;
    }
    Index i = 0, j = 0;
    double v = 0.0;
    if (tok.size() != 3 || !parse_integer(tok[0], i) || !parse_integer(tok[1], j) || !parse_double(tok[2], v))
      throw ParseError(line_no, "bad entry line");
    if (i == 0 || j == 0 || i > rows || j > cols) throw ParseError(line_no, "entry index out of range");
    if (read == nnz) throw ParseError(line_no, "more entries than declared");
    ++read;
    entries.push_back({i - 1, j - 1, v});
    if (symmetry != "general" && i != j) entries.push_back({j - 1, i - 1, symmetry == "symmetric" ? v : -v});
  }
  if (!have_size) throw ParseError(line_no, "missing size line");
  if (read != nnz) throw ParseError(line_no, "fewer entries than declared");
  return from_triplets(rows, block_size, entries);
}

BlockSparseMatrix read_matrix_market(const std::filesystem::path& path, Index block_size) {
  auto is = open_in(path);
  return read_matrix_market(is, block_size);
}

void write_factors(const IluFactors& f, const std::filesystem::path& dir) {
  const auto& p = *f.pattern;
  const Index b = f.block_size;
  std::vector<Triplet> l, u;
  for (Index i = 0; i < p.n_block_rows(); ++i)
    for (Index r = 0; r < b; ++r)
      for (Index pos = p.row_begin(i); pos < p.row_end(i); ++pos) {
        const Index j = p.col_idx()[pos];
        for (Index c = 0; c < b; ++c) {
          const Triplet t{i * b + r, j * b + c, f.lu[pos * b * b + r * b + c]};
          (j < i ? l : u).push_back(t);
        }
      }
  std::filesystem::create_directories(dir);
  for (const auto& [name, entries] : {std::pair{"L.mtx", &l}, std::pair{"U.mtx", &u}}) {
    auto os = open_out(dir / name);
    write_mm_entries(os, f.dim(), *entries);
    finish_write(os, dir / name);
  }
}

// ---------------------------------------------------------------------------
// Grid files

void write_grid(const CellGrid& grid, std::ostream& os) {
  os << "cells " << grid.size() << "\nadjacency\n";
  for (Index c = 0; c < grid.size(); ++c) {
    const auto nb = grid.adjacency.neighbors(c);
    os << nb.size();
    for (Index w : nb) os << ' ' << w;
    os << '\n';
  }
  os << "centers\n";
  for (const auto& x : grid.centers) os << fmt_double(x[0]) << ' ' << fmt_double(x[1]) << '\n';
  os << "boundary\n";
  for (auto f : grid.boundary) os << static_cast<int>(f) << '\n';
}

void write_grid(const CellGrid& grid, const std::filesystem::path& path) {
  auto os = open_out(path);
  write_grid(grid, os);
  finish_write(os, path);
}

CellGrid read_grid(std::istream& is) {
  std::string line;
  Index line_no = 0;
  auto next = [&](const char* what) {
    while (std::getline(is, line)) {
      ++line_no;
      auto tok = split_ws(line);
      if (!tok.empty()) return tok;
    }
    throw ParseError(line_no, std::string("unexpected end of file, expected ") + what);
  };
  auto expect = [&](std::string_view keyword) {
    const auto tok = next(keyword.data());
    if (tok.size() != 1 || tok[0] != keyword) throw ParseError(line_no, "expected '" + std::string(keyword) + "'");
  };

  auto tok = next("cells");
  Index n = 0;
  if (tok.size() != 2 || tok[0] != "cells" || !parse_integer(tok[1], n)) throw ParseError(line_no, "expected 'cells N'");
  CellGrid g;
  std::vector<std::vector<Index>> lists(n);
  expect("adjacency");
  for (Index c = 0; c < n; ++c) {
    tok = next("adjacency line");
    Index deg = 0;
    if (!parse_integer(tok[0], deg) || tok.size() != deg + 1) throw ParseError(line_no, "bad adjacency line");
    for (Index k = 0; k < deg; ++k) {
      Index w = 0;
      if (!parse_integer(tok[k + 1], w) || w >= n) throw ParseError(line_no, "bad neighbour index");
      lists[c].push_back(w);
    }
  }
  expect("centers");
  g.centers.resize(n);
  for (Index c = 0; c < n; ++c) {
    tok = next("centre line");
    if (tok.size() != 2 || !parse_double(tok[0], g.centers[c][0]) || !parse_double(tok[1], g.centers[c][1]))
      throw ParseError(line_no, "bad centre line");
  }
  expect("boundary");
  g.boundary.resize(n);
  for (Index c = 0; c < n; ++c) {
    tok = next("boundary flag");
    if (tok.size() != 1 || (tok[0] != "0" && tok[0] != "1")) throw ParseError(line_no, "boundary flag must be 0 or 1");
    g.boundary[c] = tok[0] == "1" ? 1 : 0;
  }
  // Adjacency as written must already be symmetric.
  for (Index c = 0; c < n; ++c)
    for (Index w : lists[c])
      if (std::find(lists[w].begin(), lists[w].end(), c) == lists[w].end())
        throw InvalidSpec("grid adjacency is not symmetric");
  g.adjacency = Graph::from_lists(lists);
  g.validate();
  return g;
}

CellGrid read_grid(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_grid(is);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

void write_field(std::ostream& os, const std::string& f) {
  if (f.find_first_of(",\"\n\r") == std::string::npos) {
    os << f;
    return;
  }
  os << '"';
  for (char c : f) {
    if (c == '"') os << '"';
    os << c;
  }
  os << '"';
}

void write_row(std::ostream& os, const std::vector<std::string>& row) {
  for (Index k = 0; k < row.size(); ++k) {
    if (k) os << ',';
    write_field(os, row[k]);
  }
  os << '\n';
}

}  // namespace

void write_csv(const CsvTable& table, std::ostream& os) {
  write_row(os, table.header);
  for (const auto& r : table.rows) {
    if (r.size() != table.header.size()) throw IoError("CSV row width differs from the header");
    write_row(os, r);
  }
}

void write_csv(const CsvTable& table, const std::filesystem::path& path) {
  auto os = open_out(path);
  write_csv(table, os);
  finish_write(os, path);
}

CsvTable read_csv(std::istream& is) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool row_started = false;
  Index line_no = 1;
  Index record_line = 1;
  char c;
  while (is.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (is.peek() == '"') {
          is.get(c);
          field += '"';
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line_no;
        field += c;
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
      row_started = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      row_started = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && is.peek() == '\n') is.get(c);
      if (row_started || !field.empty()) {
        row.push_back(std::move(field));
        field.clear();
        records.push_back(std::move(row));
        row.clear();
      }
      row_started = false;
      ++line_no;
      record_line = line_no;
    } else {
      field += c;
      row_started = true;
    }
  }
  if (in_quotes) throw ParseError(record_line, "unterminated quoted field");
  if (row_started || !field.empty()) {
    row.push_back(std::move(field));
    records.push_back(std::move(row));
  }
  CsvTable t;
  if (records.empty()) throw ParseError(1, "missing CSV header");
  t.header = std::move(records.front());
  for (Index k = 1; k < records.size(); ++k) {
    if (records[k].size() != t.header.size()) throw ParseError(k + 1, "row width differs from the header");
    t.rows.push_back(std::move(records[k]));
  }
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_csv(is);
}

std::string format_sweeps(Index sweeps) { return sweeps == kExactSweeps ? "exact" : std::to_string(sweeps); }

Index parse_sweeps(std::string_view text) {
  if (text == "exact") return kExactSweeps;
  Index v = 0;
  if (!parse_integer(text, v) || v == 0)
    throw InvalidConfig("sweep count must be a positive integer or 'exact', got '" + std::string(text) + "'");
  return v;
}

// ---------------------------------------------------------------------------
// Typed records

namespace {

const std::vector<std::string> kSweepHeader = {"ordering",     "threads",        "build_sweeps",
                                               "apply_sweeps", "fgmres_iters",   "converged",
                                               "wall_ms",      "iters_rel_dev"};
const std::vector<std::string> kDiagHeader = {"step",           "ilu_residual_1norm", "ilu_residual_relative",
                                              "L_jacobi_maxnorm", "U_jacobi_maxnorm", "variant",
                                              "shift"};
const std::vector<std::string> kScalingHeader = {"threads", "total_precond_ms", "speedup", "fgmres_iters",
                                                 "converged"};

void check_header(const CsvTable& t, const std::vector<std::string>& expected) {
  if (t.header != expected) throw ParseError(1, "unexpected CSV header");
}

// Field parsers for row `r` (0-based data row => file line r + 2).
struct FieldReader {
  Index line;
  double real(const std::string& s) const {
    double v = 0.0;
    if (!parse_double(s, v)) throw ParseError(line, "bad number '" + s + "'");
    return v;
  }
  Index count(const std::string& s) const {
    Index v = 0;
    if (!parse_integer(s, v)) throw ParseError(line, "bad count '" + s + "'");
    return v;
  }
  bool flag(const std::string& s) const {
    if (s == "1") return true;
    if (s == "0") return false;
    throw ParseError(line, "bad flag '" + s + "'");
  }
  Index sweeps(const std::string& s) const {
    try {
      return parse_sweeps(s);
    } catch (const InvalidConfig&) {
      throw ParseError(line, "bad sweep count '" + s + "'");
    }
  }
};

}  // namespace

CsvTable to_csv(const std::vector<SweepRecord>& rows) {
  CsvTable t{kSweepHeader, {}};
  for (const auto& r : rows)
    t.rows.push_back({r.ordering, std::to_string(r.threads), format_sweeps(r.build_sweeps),
                      format_sweeps(r.apply_sweeps), r.fgmres_iters ? fmt_double(*r.fgmres_iters) : "",
                      r.converged ? "1" : "0", fmt_double(r.wall_ms), fmt_double(r.iters_rel_dev)});
  return t;
}

CsvTable to_csv(const std::vector<DiagRecord>& rows) {
  CsvTable t{kDiagHeader, {}};
  for (const auto& r : rows)
    t.rows.push_back({std::to_string(r.step), fmt_double(r.ilu_residual_1norm), fmt_double(r.ilu_residual_relative),
                      fmt_double(r.L_jacobi_maxnorm), fmt_double(r.U_jacobi_maxnorm), r.variant,
                      fmt_double(r.shift)});
  return t;
}

CsvTable to_csv(const std::vector<ScalingRecord>& rows) {
  CsvTable t{kScalingHeader, {}};
  for (const auto& r : rows)
    t.rows.push_back({std::to_string(r.threads), fmt_double(r.total_precond_ms), fmt_double(r.speedup),
                      fmt_double(r.fgmres_iters), r.converged ? "1" : "0"});
  return t;
}

std::vector<SweepRecord> sweep_records(const CsvTable& t) {
  check_header(t, kSweepHeader);
  std::vector<SweepRecord> out;
  for (Index k = 0; k < t.rows.size(); ++k) {
    const auto& f = t.rows[k];
    const FieldReader rd{k + 2};
    SweepRecord r;
    r.ordering = f[0];
    r.threads = rd.count(f[1]);
    r.build_sweeps = rd.sweeps(f[2]);
    r.apply_sweeps = rd.sweeps(f[3]);
    if (!f[4].empty()) r.fgmres_iters = rd.real(f[4]);
    r.converged = rd.flag(f[5]);
    r.wall_ms = rd.real(f[6]);
    r.iters_rel_dev = rd.real(f[7]);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<DiagRecord> diag_records(const CsvTable& t) {
  check_header(t, kDiagHeader);
  std::vector<DiagRecord> out;
  for (Index k = 0; k < t.rows.size(); ++k) {
    const auto& f = t.rows[k];
    const FieldReader rd{k + 2};
    out.push_back({rd.count(f[0]), rd.real(f[1]), rd.real(f[2]), rd.real(f[3]), rd.real(f[4]), f[5], rd.real(f[6])});
  }
  return out;
}

std::vector<ScalingRecord> scaling_records(const CsvTable& t) {
  check_header(t, kScalingHeader);
  std::vector<ScalingRecord> out;
  for (Index k = 0; k < t.rows.size(); ++k) {
    const auto& f = t.rows[k];
    const FieldReader rd{k + 2};
    out.push_back({rd.count(f[0]), rd.real(f[1]), rd.real(f[2]), rd.real(f[3]), rd.flag(f[4])});
  }
  return out;
}

}  // namespace abilu

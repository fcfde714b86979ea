#pragma once

// Text format for BTA matrices:
//
//   bta <n_s> <n_t> <n_b>
//   <D_1 rows> <blank> ... <D_nt rows> <blank>
//   <E_1 rows> <blank> ... <E_{nt-1} rows> <blank>
//   <F_1 rows> <blank> ... <F_nt rows> <blank>
//   <T rows>
//
// Every block is written row-major, one row per line, with whitespace
// separated values at 17 significant digits. Blocks with zero rows are
// written as nothing but their trailing blank line.

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "btainla/bta.hpp"
#include "btainla/text.hpp"

namespace btainla {

namespace detail {

inline void write_block(std::ostream& out, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out << ' ';
      out << text::format_double(m(r, c));
    }
    out << '\n';
  }
}

inline void read_block(text::LineReader& reader, Matrix& m, const char* name) {
  std::string line;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (!reader.next_nonblank(line)) {
      reader.fail(std::string("unexpected end of input inside block ") + name);
    }
    const auto tokens = text::split(line);
    if (static_cast<Eigen::Index>(tokens.size()) != m.cols()) {
      reader.fail(std::string("block ") + name + " row has " +
                  std::to_string(tokens.size()) + " values, expected " +
                  std::to_string(m.cols()));
    }
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      double v = 0.0;
      if (!text::parse_double(tokens[static_cast<std::size_t>(c)], v)) {
        reader.fail("invalid number '" +
                    std::string(tokens[static_cast<std::size_t>(c)]) + "'");
      }
      m(r, c) = v;
    }
  }
}

}  // namespace detail

inline void write_bta(std::ostream& out, const BtaMatrix& q) {
  q.check_shapes();
  out << "bta " << q.layout.n_s << ' ' << q.layout.n_t << ' ' << q.layout.n_b
      << '\n';
  for (const auto& b : q.D) {
    detail::write_block(out, b);
    out << '\n';
  }
  for (const auto& b : q.E) {
    detail::write_block(out, b);
    out << '\n';
  }
  for (const auto& b : q.F) {
    detail::write_block(out, b);
    out << '\n';
  }
  detail::write_block(out, q.T);
}

inline BtaMatrix read_bta(std::istream& in, const std::string& source = "<bta>") {
  text::LineReader reader(in, source);
  std::string line;
  if (!reader.next_nonblank(line)) reader.fail("empty input, expected 'bta' header");
  const auto head = text::split(line);
  std::size_t ns = 0, nt = 0, nb = 0;
  if (head.size() != 4 || head[0] != "bta" || !text::parse_int(head[1], ns) ||
      !text::parse_int(head[2], nt) || !text::parse_int(head[3], nb)) {
    reader.fail("malformed header, expected 'bta <n_s> <n_t> <n_b>'");
  }
  if (ns < 1 || nt < 1) reader.fail("n_s and n_t must be positive");

  BtaMatrix q(BtaLayout(ns, nt, nb));
  for (auto& b : q.D) detail::read_block(reader, b, "D");
  for (auto& b : q.E) detail::read_block(reader, b, "E");
  for (auto& b : q.F) detail::read_block(reader, b, "F");
  detail::read_block(reader, q.T, "T");
  if (reader.next_nonblank(line)) reader.fail("trailing content after T block");
  if (!q.all_finite()) reader.fail("non-finite entries in matrix");
  return q;
}

inline void save_bta(const std::string& path, const BtaMatrix& q) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_bta(out, q);
}

inline BtaMatrix load_bta(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_bta(in, path);
}

}  // namespace btainla

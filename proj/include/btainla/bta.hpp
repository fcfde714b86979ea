#pragma once

// Block tridiagonal arrowhead (BTA) matrices: storage, block Cholesky
// factorization, triangular solves, log-determinant and selected inversion.
//
// Layout of an SPD BTA matrix with n_t diagonal blocks of size n_s and an
// arrowhead tip of size n_b:
//
//   | D_1  E_1^T                 F_1^T |
//   | E_1  D_2   E_2^T           F_2^T |
//   |      E_2   ...    ...       ...  |
//   |             ...   D_nt     F_nt^T|
//   | F_1  F_2    ...   F_nt     T     |
//
// Only the lower blocks are stored. Within D_i and T only the lower triangle
// is authoritative.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "btainla/dense.hpp"

namespace btainla {

struct BtaLayout {
  std::size_t n_s = 1;
  std::size_t n_t = 1;
  std::size_t n_b = 0;

  BtaLayout() = default;
  BtaLayout(std::size_t ns, std::size_t nt, std::size_t nb)
      : n_s(ns), n_t(nt), n_b(nb) {
    if (n_s < 1 || n_t < 1) {
      throw std::invalid_argument("BtaLayout: n_s and n_t must be positive");
    }
  }

  /// Size of the spatial-temporal part, n_s * n_t.
  std::size_t n_latent_field() const noexcept { return n_s * n_t; }
  std::size_t n() const noexcept { return n_s * n_t + n_b; }

  friend bool operator==(const BtaLayout&, const BtaLayout&) = default;
};

namespace detail {

inline void check_block(const Matrix& m, Eigen::Index rows, Eigen::Index cols,
                        const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionMismatch(std::string(what) + " block has shape " +
                            std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()) + ", expected " +
                            std::to_string(rows) + "x" + std::to_string(cols));
  }
}

inline Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

}  // namespace detail

struct BtaMatrix {
  BtaLayout layout;
  std::vector<Matrix> D;  // n_t blocks, n_s x n_s
  std::vector<Matrix> E;  // n_t - 1 blocks, block (i+1, i)
  std::vector<Matrix> F;  // n_t blocks, n_b x n_s
  Matrix T;               // n_b x n_b

  BtaMatrix() = default;

  /// Zero matrix with the given layout.
  explicit BtaMatrix(const BtaLayout& lay) : layout(lay) {
    const auto ns = detail::idx(lay.n_s);
    const auto nb = detail::idx(lay.n_b);
    D.assign(lay.n_t, Matrix::Zero(ns, ns));
    E.assign(lay.n_t - 1, Matrix::Zero(ns, ns));
    F.assign(lay.n_t, Matrix::Zero(nb, ns));
    T = Matrix::Zero(nb, nb);
  }

  void check_shapes() const {
    const auto ns = detail::idx(layout.n_s);
    const auto nb = detail::idx(layout.n_b);
    if (D.size() != layout.n_t || E.size() + 1 != layout.n_t ||
        F.size() != layout.n_t) {
      throw DimensionMismatch("BtaMatrix: block counts do not match layout");
    }
    for (const auto& b : D) detail::check_block(b, ns, ns, "D");
    for (const auto& b : E) detail::check_block(b, ns, ns, "E");
    for (const auto& b : F) detail::check_block(b, nb, ns, "F");
    detail::check_block(T, nb, nb, "T");
  }

  bool all_finite() const {
    auto finite = [](const Matrix& m) { return m.allFinite(); };
    for (const auto& b : D) if (!finite(b)) return false;
    for (const auto& b : E) if (!finite(b)) return false;
    for (const auto& b : F) if (!finite(b)) return false;
    return finite(T);
  }
};

/// Lower block Cholesky factor L with L L^T = Q.
struct BtaFactor {
  BtaLayout layout;
  std::vector<Matrix> LD;  // lower triangular, n_s x n_s
  std::vector<Matrix> LE;  // block (i+1, i)
  std::vector<Matrix> LF;  // n_b x n_s
  Matrix LT;               // lower triangular, n_b x n_b
};

/// Diagonal blocks and arrowhead row of Q^{-1}. Interior off-diagonal blocks
/// are not part of the result.
struct SelectedInverse {
  BtaLayout layout;
  std::vector<Matrix> diag;   // S_ii
  std::vector<Matrix> arrow;  // S_{n_t+1, i}, n_b x n_s
  Matrix tip;                 // S_{n_t+1, n_t+1}

  /// Diagonal of Q^{-1} as a length-n vector.
  Vector diagonal() const {
    const auto ns = detail::idx(layout.n_s);
    Vector out(detail::idx(layout.n()));
    for (std::size_t i = 0; i < layout.n_t; ++i) {
      out.segment(detail::idx(i) * ns, ns) = diag[i].diagonal();
    }
    out.tail(tip.rows()) = tip.diagonal();
    return out;
  }
};

/// Block Cholesky factorization. The input is not modified; Schur-complement
/// updates act on working copies of the next diagonal block, the next arrow
/// block and the tip.
inline BtaFactor bta_factorize(const BtaMatrix& q) {
  using dense::Side;
  using dense::Trans;
  q.check_shapes();
  const auto& lay = q.layout;
  const std::size_t nt = lay.n_t;

  BtaFactor f;
  f.layout = lay;
  f.LD.resize(nt);
  f.LE.resize(nt - 1);
  f.LF.resize(nt);

  Matrix diag = q.D[0];
  Matrix arrow = q.F[0];
  Matrix tip = q.T;
  for (std::size_t i = 0; i < nt; ++i) {
    f.LD[i] = dense::chol(diag, i);
    f.LF[i] = dense::tri_solve(f.LD[i], std::move(arrow), Side::Right, Trans::Yes);
    dense::multiply_accumulate(tip, f.LF[i], Trans::No, f.LF[i], Trans::Yes, -1.0);
    if (i + 1 < nt) {
      f.LE[i] = dense::tri_solve(f.LD[i], q.E[i], Side::Right, Trans::Yes);
      diag = q.D[i + 1];
      dense::multiply_accumulate(diag, f.LE[i], Trans::No, f.LE[i], Trans::Yes, -1.0);
      arrow = q.F[i + 1];
      dense::multiply_accumulate(arrow, f.LF[i], Trans::No, f.LE[i], Trans::Yes, -1.0);
    }
  }
  f.LT = dense::chol(tip, nt);
  return f;
}

/// log det Q = 2 * sum log diag(L).
inline double bta_logdet(const BtaFactor& f) {
  double acc = 0.0;
  for (const auto& b : f.LD) acc += b.diagonal().array().log().sum();
  if (f.LT.size() > 0) acc += f.LT.diagonal().array().log().sum();
  return 2.0 * acc;
}

namespace detail {

inline void check_vector(const BtaLayout& lay, const Vector& v) {
  if (v.size() != idx(lay.n())) {
    throw DimensionMismatch("vector length " + std::to_string(v.size()) +
                            " does not match matrix dimension " +
                            std::to_string(lay.n()));
  }
}

}  // namespace detail

/// Solves L z = b.
inline Vector bta_forward_substitute(const BtaFactor& f, Vector b) {
  detail::check_vector(f.layout, b);
  const auto ns = detail::idx(f.layout.n_s);
  const auto nb = detail::idx(f.layout.n_b);
  const auto tip_off = ns * detail::idx(f.layout.n_t);
  for (std::size_t i = 0; i < f.layout.n_t; ++i) {
    auto zi = b.segment(detail::idx(i) * ns, ns);
    if (i > 0) {
      zi.noalias() -= f.LE[i - 1] * b.segment(detail::idx(i - 1) * ns, ns);
    }
    f.LD[i].triangularView<Eigen::Lower>().solveInPlace(zi);
    if (nb > 0) b.segment(tip_off, nb).noalias() -= f.LF[i] * zi;
  }
  if (nb > 0) {
    auto zt = b.segment(tip_off, nb);
    f.LT.triangularView<Eigen::Lower>().solveInPlace(zt);
  }
  return b;
}

/// Solves L^T x = z.
inline Vector bta_backward_substitute(const BtaFactor& f, Vector z) {
  detail::check_vector(f.layout, z);
  const auto ns = detail::idx(f.layout.n_s);
  const auto nb = detail::idx(f.layout.n_b);
  const auto tip_off = ns * detail::idx(f.layout.n_t);
  if (nb > 0) {
    auto xt = z.segment(tip_off, nb);
    f.LT.transpose().triangularView<Eigen::Upper>().solveInPlace(xt);
  }
  for (std::size_t k = f.layout.n_t; k-- > 0;) {
    auto xi = z.segment(detail::idx(k) * ns, ns);
    if (k + 1 < f.layout.n_t) {
      xi.noalias() -= f.LE[k].transpose() * z.segment(detail::idx(k + 1) * ns, ns);
    }
    if (nb > 0) xi.noalias() -= f.LF[k].transpose() * z.segment(tip_off, nb);
    f.LD[k].transpose().triangularView<Eigen::Upper>().solveInPlace(xi);
  }
  return z;
}

/// Solves Q x = b given L L^T = Q.
inline Vector bta_solve(const BtaFactor& f, const Vector& b) {
  if (!b.allFinite()) throw std::invalid_argument("bta_solve: non-finite rhs");
  return bta_backward_substitute(f, bta_forward_substitute(f, b));
}

/// y = Q x using only the stored lower blocks.
inline Vector bta_multiply(const BtaMatrix& q, const Vector& x) {
  detail::check_vector(q.layout, x);
  const auto ns = detail::idx(q.layout.n_s);
  const auto nb = detail::idx(q.layout.n_b);
  const auto tip_off = ns * detail::idx(q.layout.n_t);
  Vector y = Vector::Zero(x.size());
  const auto xt = x.segment(tip_off, nb);
  for (std::size_t i = 0; i < q.layout.n_t; ++i) {
    const auto off = detail::idx(i) * ns;
    const auto xi = x.segment(off, ns);
    y.segment(off, ns).noalias() += q.D[i].selfadjointView<Eigen::Lower>() * xi;
    if (i > 0) {
      y.segment(off, ns).noalias() += q.E[i - 1] * x.segment(off - ns, ns);
    }
    if (i + 1 < q.layout.n_t) {
      y.segment(off, ns).noalias() += q.E[i].transpose() * x.segment(off + ns, ns);
    }
    if (nb > 0) {
      y.segment(off, ns).noalias() += q.F[i].transpose() * xt;
      y.segment(tip_off, nb).noalias() += q.F[i] * xi;
    }
  }
  if (nb > 0) {
    y.segment(tip_off, nb).noalias() += q.T.selfadjointView<Eigen::Lower>() * xt;
  }
  return y;
}

/// Selected block inversion, traversing from the tip up to the first block.
/// With W1 = S_{i+1,i+1} L_E + S_{n+1,i+1}^T L_F and
///      W2 = S_{n+1,i+1} L_E + S_tip L_F:
///   S_{n+1,i} = -W2 L_D^{-1}
///   S_ii      = L_D^{-T} (I + L_E^T W1 + L_F^T W2) L_D^{-1}
inline SelectedInverse bta_selected_inverse(const BtaFactor& f) {
  using dense::Side;
  using dense::Trans;
  const auto& lay = f.layout;
  const auto ns = detail::idx(lay.n_s);
  const auto nb = detail::idx(lay.n_b);
  const std::size_t nt = lay.n_t;

  SelectedInverse s;
  s.layout = lay;
  s.diag.resize(nt);
  s.arrow.resize(nt);

  // S_tip = L_T^{-T} L_T^{-1}
  Matrix tip_inv = Matrix::Identity(nb, nb);
  dense::tri_solve_in_place(f.LT, tip_inv, Side::Left, Trans::No);
  s.tip = Matrix::Zero(nb, nb);
  dense::multiply_accumulate(s.tip, tip_inv, Trans::Yes, tip_inv, Trans::No);

  for (std::size_t k = nt; k-- > 0;) {
    const Matrix& ld = f.LD[k];
    const Matrix& lf = f.LF[k];

    Matrix w2 = Matrix::Zero(nb, ns);
    dense::multiply_accumulate(w2, s.tip, Trans::No, lf, Trans::No);
    Matrix inner = Matrix::Identity(ns, ns);
    if (k + 1 < nt) {
      const Matrix& le = f.LE[k];
      Matrix w1 = Matrix::Zero(ns, ns);
      dense::multiply_accumulate(w1, s.diag[k + 1], Trans::No, le, Trans::No);
      dense::multiply_accumulate(w1, s.arrow[k + 1], Trans::Yes, lf, Trans::No);
      dense::multiply_accumulate(w2, s.arrow[k + 1], Trans::No, le, Trans::No);
      dense::multiply_accumulate(inner, le, Trans::Yes, w1, Trans::No);
    }
    dense::multiply_accumulate(inner, lf, Trans::Yes, w2, Trans::No);

    s.arrow[k] = -w2;
    dense::tri_solve_in_place(ld, s.arrow[k], Side::Right, Trans::No);

    dense::tri_solve_in_place(ld, inner, Side::Right, Trans::No);
    dense::tri_solve_in_place(ld, inner, Side::Left, Trans::Yes);
    s.diag[k] = 0.5 * (inner + inner.transpose());
  }
  return s;
}

/// Full dense symmetric matrix represented by `q`.
inline Matrix to_dense(const BtaMatrix& q) {
  q.check_shapes();
  const auto ns = detail::idx(q.layout.n_s);
  const auto nb = detail::idx(q.layout.n_b);
  const auto tip_off = ns * detail::idx(q.layout.n_t);
  Matrix m = Matrix::Zero(detail::idx(q.layout.n()), detail::idx(q.layout.n()));
  for (std::size_t i = 0; i < q.layout.n_t; ++i) {
    const auto off = detail::idx(i) * ns;
    m.block(off, off, ns, ns) = q.D[i].selfadjointView<Eigen::Lower>();
    if (i + 1 < q.layout.n_t) {
      m.block(off + ns, off, ns, ns) = q.E[i];
      m.block(off, off + ns, ns, ns) = q.E[i].transpose();
    }
    m.block(tip_off, off, nb, ns) = q.F[i];
    m.block(off, tip_off, ns, nb) = q.F[i].transpose();
  }
  m.block(tip_off, tip_off, nb, nb) = q.T.selfadjointView<Eigen::Lower>();
  return m;
}

/// Full dense lower-triangular factor.
inline Matrix to_dense(const BtaFactor& f) {
  const auto ns = detail::idx(f.layout.n_s);
  const auto nb = detail::idx(f.layout.n_b);
  const auto tip_off = ns * detail::idx(f.layout.n_t);
  Matrix m = Matrix::Zero(detail::idx(f.layout.n()), detail::idx(f.layout.n()));
  for (std::size_t i = 0; i < f.layout.n_t; ++i) {
    const auto off = detail::idx(i) * ns;
    m.block(off, off, ns, ns) = f.LD[i];
    if (i + 1 < f.layout.n_t) m.block(off + ns, off, ns, ns) = f.LE[i];
    m.block(tip_off, off, nb, ns) = f.LF[i];
  }
  m.block(tip_off, tip_off, nb, nb) = f.LT;
  return m;
}

}  // namespace btainla

#pragma once

// Dense block kernels used by the block tridiagonal arrowhead recursions.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace btainla {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised when a dense diagonal block has a non-positive pivot.
/// `block_index()` is the 0-based diagonal block position (the tip block
/// of an arrowhead matrix reports index n_t).
class NotPositiveDefinite : public std::runtime_error {
 public:
  explicit NotPositiveDefinite(std::size_t block_index)
      : std::runtime_error("matrix is not positive definite (block " +
                           std::to_string(block_index) + ")"),
        block_index_(block_index) {}

  std::size_t block_index() const noexcept { return block_index_; }

 private:
  std::size_t block_index_;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace dense {

enum class Side { Left, Right };
enum class Trans { No, Yes };

/// Lower Cholesky factor of a symmetric block. Only the lower triangle of
/// `block` is read.
inline Matrix chol(const Matrix& block, std::size_t block_index = 0) {
  if (block.rows() != block.cols()) {
    throw DimensionMismatch("chol: block is not square");
  }
  if (block.rows() == 0) return Matrix(0, 0);
  Eigen::LLT<Matrix> llt(block);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite(block_index);
  Matrix lower = llt.matrixL();
  for (Eigen::Index i = 0; i < lower.rows(); ++i) {
    const double d = lower(i, i);
    if (!(d > 0.0) || !std::isfinite(d)) throw NotPositiveDefinite(block_index);
  }
  return lower;
}

/// In-place triangular solve with the lower-triangular `lower`:
///   Side::Left:  op(L) X = B
///   Side::Right: X op(L) = B
/// where op(L) is L or L^T. `rhs` holds B on entry and X on exit.
inline void tri_solve_in_place(const Matrix& lower, Matrix& rhs, Side side,
                               Trans trans) {
  const bool left = side == Side::Left;
  if (lower.rows() != lower.cols() ||
      (left ? rhs.rows() : rhs.cols()) != lower.rows()) {
    throw DimensionMismatch("tri_solve: incompatible operand shapes");
  }
  if (rhs.size() == 0) return;
  if (trans == Trans::No) {
    auto view = lower.triangularView<Eigen::Lower>();
    if (left) {
      view.solveInPlace<Eigen::OnTheLeft>(rhs);
    } else {
      view.solveInPlace<Eigen::OnTheRight>(rhs);
    }
  } else {
    auto view = lower.transpose().triangularView<Eigen::Upper>();
    if (left) {
      view.solveInPlace<Eigen::OnTheLeft>(rhs);
    } else {
      view.solveInPlace<Eigen::OnTheRight>(rhs);
    }
  }
}

inline Matrix tri_solve(const Matrix& lower, Matrix rhs, Side side,
                        Trans trans) {
  tri_solve_in_place(lower, rhs, side, trans);
  return rhs;
}

/// C += sign * op(A) * op(B)
inline void multiply_accumulate(Matrix& c, const Matrix& a, Trans ta,
                                const Matrix& b, Trans tb, double sign = 1.0) {
  const auto a_rows = ta == Trans::No ? a.rows() : a.cols();
  const auto a_cols = ta == Trans::No ? a.cols() : a.rows();
  const auto b_rows = tb == Trans::No ? b.rows() : b.cols();
  const auto b_cols = tb == Trans::No ? b.cols() : b.rows();
  if (a_cols != b_rows || c.rows() != a_rows || c.cols() != b_cols) {
    throw DimensionMismatch("multiply_accumulate: incompatible operand shapes");
  }
  if (c.size() == 0 || a_cols == 0) return;
  if (ta == Trans::No && tb == Trans::No) {
    c.noalias() += sign * (a * b);
  } else if (ta == Trans::No) {
    c.noalias() += sign * (a * b.transpose());
  } else if (tb == Trans::No) {
    c.noalias() += sign * (a.transpose() * b);
  } else {
    c.noalias() += sign * (a.transpose() * b.transpose());
  }
}

}  // namespace dense
}  // namespace btainla

#pragma once

// Dense reference routines used to check the structured code paths. Every
// routine works on the fully assembled matrix in extended precision and shares
// nothing with the block recursions.

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "btainla/bta.hpp"

namespace btainla::oracle {

using LongMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LongVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

inline LongMatrix widen(const Matrix& m) { return m.cast<long double>(); }
inline Matrix narrow(const LongMatrix& m) { return m.cast<double>(); }

inline Eigen::LLT<LongMatrix> dense_llt(const Matrix& q) {
  Eigen::LLT<LongMatrix> llt(widen(q));
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("dense oracle: matrix is not positive definite");
  }
  return llt;
}

inline Matrix dense_cholesky(const Matrix& q) {
  return narrow(dense_llt(q).matrixL());
}

inline double dense_logdet(const Matrix& q) {
  const auto llt = dense_llt(q);
  long double acc = 0.0L;
  const LongMatrix& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i) acc += std::log(l(i, i));
  return static_cast<double>(2.0L * acc);
}

/// log det as the sum of log-eigenvalues.
inline double dense_logdet_eigen(const Matrix& q) {
  Eigen::SelfAdjointEigenSolver<LongMatrix> es(widen(q), Eigen::EigenvaluesOnly);
  return static_cast<double>(es.eigenvalues().array().log().sum());
}

inline double condition_number(const Matrix& q) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(q, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return ev.maxCoeff() / ev.minCoeff();
}

inline Matrix dense_inverse(const Matrix& q) {
  const auto llt = dense_llt(q);
  return narrow(llt.solve(LongMatrix::Identity(q.rows(), q.cols())));
}

inline Vector dense_solve(const Matrix& q, const Vector& b) {
  const auto llt = dense_llt(q);
  return llt.solve(b.cast<long double>()).cast<double>();
}

/// C = A * B by the textbook triple loop.
inline Matrix naive_multiply(const Matrix& a, const Matrix& b) {
  Matrix c = Matrix::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  }
  return c;
}

inline double rel_frobenius(const Matrix& got, const Matrix& want) {
  const double denom = want.norm();
  const double diff = (got - want).norm();
  return denom > 0.0 ? diff / denom : diff;
}

namespace detail {

/// Random strictly diagonally dominant BTA matrix (eigenvalues >= 1).
template <class Rng>
BtaMatrix random_dominant_bta(const BtaLayout& lay, Rng& rng, double& max_row_sum) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto fill = [&](Matrix& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = unit(rng);
  };
  BtaMatrix q(lay);
  for (auto& d : q.D) {
    fill(d);
    d = 0.5 * (d + d.transpose()).eval();
  }
  for (auto& e : q.E) fill(e);
  for (auto& f : q.F) fill(f);
  fill(q.T);
  q.T = 0.5 * (q.T + q.T.transpose()).eval();

  Matrix full = to_dense(q);
  full.diagonal().setZero();
  const Vector row_abs = full.cwiseAbs().rowwise().sum();
  const auto ns = static_cast<Eigen::Index>(lay.n_s);
  for (std::size_t i = 0; i < lay.n_t; ++i) {
    q.D[i].diagonal() = row_abs.segment(static_cast<Eigen::Index>(i) * ns, ns).array() + 1.0;
  }
  q.T.diagonal() = row_abs.tail(static_cast<Eigen::Index>(lay.n_b)).array() + 1.0;
  max_row_sum = row_abs.size() > 0 ? row_abs.maxCoeff() : 0.0;
  return q;
}

/// S Q S with S = diag(10^(spread * e_i)).
inline BtaMatrix congruence_scale(const BtaMatrix& q, const Vector& exponents, double spread) {
  const auto& lay = q.layout;
  const Vector scale = (spread * exponents).unaryExpr([](double x) { return std::pow(10.0, x); });
  const auto ns = static_cast<Eigen::Index>(lay.n_s);
  const auto tip_off = ns * static_cast<Eigen::Index>(lay.n_t);
  BtaMatrix out = q;
  auto scale_block = [&](Matrix& m, Eigen::Index row_off, Eigen::Index col_off) {
    m = scale.segment(row_off, m.rows()).asDiagonal() * m * scale.segment(col_off, m.cols()).asDiagonal();
  };
  for (std::size_t i = 0; i < lay.n_t; ++i) {
    const auto off = static_cast<Eigen::Index>(i) * ns;
    scale_block(out.D[i], off, off);
    if (i + 1 < lay.n_t) scale_block(out.E[i], off + ns, off);
    scale_block(out.F[i], tip_off, off);
  }
  scale_block(out.T, tip_off, tip_off);
  return out;
}

template <class Rng>
Vector random_exponents(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector e(static_cast<Eigen::Index>(n));
  for (auto& v : e) v = u(rng);
  return e;
}

}  // namespace detail

/// Random SPD BTA matrix. A strictly diagonally dominant matrix (eigenvalues
/// >= 1) is congruence-scaled by a log-uniform diagonal whose spread is
/// chosen so the condition number lands near 10^log10_cond.
template <class Rng>
BtaMatrix random_spd_bta(const BtaLayout& lay, Rng& rng, double log10_cond) {
  double max_row = 0.0;
  const auto q = detail::random_dominant_bta(lay, rng, max_row);
  // Base condition is at most about 2 * max row sum; spend the remainder on
  // the diagonal scaling.
  const double base = std::log10(2.0 * max_row + 1.0);
  const double spread = std::max(0.0, log10_cond - base) / 2.0;
  return detail::congruence_scale(q, detail::random_exponents(lay.n(), rng), spread);
}

/// Like random_spd_bta, but the scaling spread is tuned against the measured
/// condition number so that log10(cond) lies in [log10_cond - 0.5, log10_cond]
/// whenever the unscaled matrix is not already worse conditioned.
template <class Rng>
BtaMatrix random_spd_bta_conditioned(const BtaLayout& lay, Rng& rng, double log10_cond) {
  double max_row = 0.0;
  const auto q = detail::random_dominant_bta(lay, rng, max_row);
  Vector e = detail::random_exponents(lay.n(), rng);
  if (e.size() >= 2) {
    e(0) = 0.0;
    e(e.size() - 1) = 1.0;
  }
  auto log_cond = [&](double spread) {
    return std::log10(condition_number(to_dense(detail::congruence_scale(q, e, spread))));
  };
  const double base = log_cond(0.0);
  if (base >= log10_cond || e.size() < 2) return q;
  // log cond grows close to linearly in the spread with slope about 2.
  double lo = 0.0, hi = log10_cond / 2.0 + 1.0;
  double spread = std::clamp((log10_cond - 0.25 - base) / 2.0, lo, hi);
  for (int it = 0; it < 30; ++it) {
    const double c = log_cond(spread);
    if (c <= log10_cond && c >= log10_cond - 0.5) break;
    if (c > log10_cond) hi = spread;
    else lo = spread;
    spread = 0.5 * (lo + hi);
  }
  if (log_cond(spread) > log10_cond) spread = lo;
  return detail::congruence_scale(q, e, spread);
}

}  // namespace btainla::oracle

#pragma once

// Dense reference implementation of the model and objective. Precisions are
// built with explicit Kronecker products, the projection is materialized and
// every factorization is a full dense Cholesky in extended precision.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

#include "btainla/inla/objective.hpp"
#include "btainla/model.hpp"
#include "btainla/oracle/dense_oracle.hpp"

namespace btainla::oracle {

inline Matrix dense_temporal(const TemporalOperator& j) {
  const auto nt = j.diagonal.size();
  Matrix m = Matrix::Zero(nt, nt);
  m.diagonal() = j.diagonal;
  for (Eigen::Index k = 0; k + 1 < nt; ++k) {
    m(k + 1, k) = j.off_diagonal(k);
    m(k, k + 1) = j.off_diagonal(k);
  }
  return m;
}

/// gamma_u (gamma_t J (x) C + I (x) (gamma_s^2 C + G)) with the fixed-effect
/// prior appended.
inline Matrix dense_prior_precision(const ModelSpec& spec, const HyperParameters& theta) {
  const auto ns = static_cast<Eigen::Index>(spec.layout.n_s);
  const auto nt = static_cast<Eigen::Index>(spec.layout.n_t);
  const auto nb = static_cast<Eigen::Index>(spec.layout.n_b);
  const Matrix c = spec.spatial.mass.asDiagonal();
  const Matrix g = Matrix(spec.spatial.stiffness);
  const Matrix j = dense_temporal(spec.temporal);
  const double gs2 = theta.gamma_s() * theta.gamma_s();
  const Matrix k = gs2 * c + g;
  const Matrix st = theta.gamma_u() * (theta.gamma_t() * Matrix(Eigen::kroneckerProduct(j, c)) +
                                       Matrix(Eigen::kroneckerProduct(Matrix::Identity(nt, nt), k)));
  Matrix q = Matrix::Zero(ns * nt + nb, ns * nt + nb);
  q.topLeftCorner(ns * nt, ns * nt) = st;
  q.bottomRightCorner(nb, nb) = spec.prior_precision_fixed * Matrix::Identity(nb, nb);
  return q;
}

/// A_tilde = [A, Z] as a dense n_o x n matrix.
inline Matrix dense_projection(const Dataset& data) {
  const auto& lay = data.layout();
  Matrix at = Matrix::Zero(static_cast<Eigen::Index>(data.n_obs()), static_cast<Eigen::Index>(lay.n()));
  for (const auto& t : data.a_triplets()) {
    at(static_cast<Eigen::Index>(t.row), static_cast<Eigen::Index>(t.col)) += t.value;
  }
  at.rightCols(static_cast<Eigen::Index>(lay.n_b)) = data.z();
  return at;
}

inline Matrix dense_conditional_precision(const ModelSpec& spec, const Dataset& data,
                                          const HyperParameters& theta) {
  const Matrix at = dense_projection(data);
  return dense_prior_precision(spec, theta) + theta.tau_y() * naive_multiply(at.transpose(), at);
}

/// f(theta) through the same decomposition as the structured objective, but
/// with dense matrices throughout.
inline double dense_objective(const InlaProblem& problem, const HyperParameters& theta) {
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  const double tau = theta.tau_y();
  const Matrix qx = dense_prior_precision(problem.spec, theta);
  const Matrix at = dense_projection(problem.data);
  const Matrix qxy = qx + tau * at.transpose() * at;
  const Vector b = tau * at.transpose() * problem.data.y();
  const Vector mode = dense_solve(qxy, b);
  const double n = static_cast<double>(qx.rows());
  const double n_obs = static_cast<double>(at.rows());
  const double lp_latent = -0.5 * n * log_2pi + 0.5 * dense_logdet(qx) - 0.5 * mode.dot(qx * mode);
  const double ll = -0.5 * n_obs * log_2pi + 0.5 * n_obs * theta.log_tau_y -
                    0.5 * tau * (problem.data.y() - at * mode).squaredNorm();
  const double lg = -0.5 * n * log_2pi + 0.5 * dense_logdet(qxy);
  return -(log_prior_theta(theta, problem.prior) + lp_latent + ll - lg);
}

/// -log p(theta) - log p(y|theta) with y ~ N(0, A_tilde Q_x^{-1} A_tilde^T + I/tau).
/// For a Gaussian likelihood this equals f(theta) exactly.
inline double marginal_likelihood_objective(const InlaProblem& problem,
                                            const HyperParameters& theta) {
  const Matrix at = dense_projection(problem.data);
  const Matrix cov_x = dense_inverse(dense_prior_precision(problem.spec, theta));
  Matrix cov_y = at * cov_x * at.transpose();
  cov_y.diagonal().array() += 1.0 / theta.tau_y();
  const double n_obs = static_cast<double>(at.rows());
  const Vector& y = problem.data.y();
  const double quad = n_obs > 0 ? y.dot(dense_solve(cov_y, y)) : 0.0;
  const double logdet = n_obs > 0 ? dense_logdet(cov_y) : 0.0;
  const double log_py = -0.5 * n_obs * std::log(2.0 * std::numbers::pi) - 0.5 * logdet - 0.5 * quad;
  return -(log_prior_theta(theta, problem.prior) + log_py);
}

struct DenseMarginals {
  Vector means;
  Vector sds;
};

/// Posterior of x given y by Gaussian conditioning in covariance form:
///   mean = S A^T (A S A^T + I/tau)^{-1} y,
///   cov  = S - S A^T (A S A^T + I/tau)^{-1} A S,   S = Q_x^{-1}.
inline DenseMarginals dense_conditioning(const InlaProblem& problem, const HyperParameters& theta) {
  const Matrix at = dense_projection(problem.data);
  const Matrix s = dense_inverse(dense_prior_precision(problem.spec, theta));
  DenseMarginals out;
  if (at.rows() == 0) {
    out.means = Vector::Zero(s.rows());
    out.sds = s.diagonal().cwiseSqrt();
    return out;
  }
  Matrix cov_y = at * s * at.transpose();
  cov_y.diagonal().array() += 1.0 / theta.tau_y();
  const Matrix sat = s * at.transpose();
  const auto llt = dense_llt(cov_y);
  const LongMatrix gain_t = llt.solve(widen(sat.transpose()));  // cov_y^{-1} A S
  out.means = sat * dense_solve(cov_y, problem.data.y());
  const Matrix post = s - narrow(widen(sat) * gain_t);
  out.sds = post.diagonal().cwiseSqrt();
  return out;
}

/// Random dataset whose rows each touch 1..max_nnz nodes of one time block.
template <class Rng>
Dataset random_dataset(const BtaLayout& lay, std::size_t n_obs, Rng& rng, std::size_t max_nnz = 3) {
  std::uniform_int_distribution<std::size_t> block_d(0, lay.n_t - 1);
  std::uniform_int_distribution<std::size_t> node_d(0, lay.n_s - 1);
  std::uniform_int_distribution<std::size_t> nnz_d(1, max_nnz);
  std::uniform_real_distribution<double> w(0.1, 1.0);
  std::normal_distribution<double> nd;
  std::vector<Triplet> a;
  for (std::size_t r = 0; r < n_obs; ++r) {
    const std::size_t t = block_d(rng);
    const std::size_t k = nnz_d(rng);
    for (std::size_t m = 0; m < k; ++m) a.push_back({r, t * lay.n_s + node_d(rng), w(rng)});
  }
  Matrix z(static_cast<Eigen::Index>(n_obs), static_cast<Eigen::Index>(lay.n_b));
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = nd(rng);
  if (z.cols() > 0) z.col(0).setOnes();
  Vector y(static_cast<Eigen::Index>(n_obs));
  for (auto& v : y) v = nd(rng);
  return Dataset(lay, std::move(y), std::move(a), std::move(z));
}

}  // namespace btainla::oracle

#pragma once

// Seeded families of structured-vs-dense comparisons. Each returns the worst
// error over the family so callers can apply their own tolerances.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "btainla/bta.hpp"
#include "btainla/inla/marginals.hpp"
#include "btainla/inla/objective.hpp"
#include "btainla/oracle/dense_oracle.hpp"
#include "btainla/oracle/dense_pipeline.hpp"

namespace btainla::oracle {

struct BtaCaseErrors {
  double condition = 0.0;
  double reconstruction = 0.0;  // |L L^T - Q|_F / |Q|_F
  double logdet = 0.0;          // relative
  double residual = 0.0;        // |Q x - b| / |b|
  double selinv = 0.0;          // worst block, relative Frobenius
  bool factor_untouched = true;  // selected inversion left L bitwise intact
};

inline void absorb(BtaCaseErrors& worst, const BtaCaseErrors& e) {
  worst.condition = std::max(worst.condition, e.condition);
  worst.reconstruction = std::max(worst.reconstruction, e.reconstruction);
  worst.logdet = std::max(worst.logdet, e.logdet);
  worst.residual = std::max(worst.residual, e.residual);
  worst.selinv = std::max(worst.selinv, e.selinv);
  worst.factor_untouched = worst.factor_untouched && e.factor_untouched;
}

namespace detail {

inline bool same_blocks(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols() || a[i] != b[i]) return false;
  }
  return true;
}

}  // namespace detail

template <class Rng>
BtaCaseErrors check_bta_case(const BtaMatrix& q, Rng& rng) {
  const auto& lay = q.layout;
  const auto ns = static_cast<Eigen::Index>(lay.n_s);
  const auto nb = static_cast<Eigen::Index>(lay.n_b);
  const auto tip = ns * static_cast<Eigen::Index>(lay.n_t);
  const Matrix dq = to_dense(q);

  BtaCaseErrors e;
  e.condition = condition_number(dq);
  const auto factor = bta_factorize(q);
  const Matrix l = to_dense(factor);
  e.reconstruction = rel_frobenius(naive_multiply(l, l.transpose()), dq);
  const double ld_ref = dense_logdet(dq);
  e.logdet = std::abs(bta_logdet(factor) - ld_ref) / std::abs(ld_ref);

  std::normal_distribution<double> nd;
  Vector b(dq.rows());
  for (auto& v : b) v = nd(rng);
  const Vector x = bta_solve(factor, b);
  e.residual = (dq * x - b).norm() / b.norm();

  const BtaFactor before = factor;
  const auto sel = bta_selected_inverse(factor);
  e.factor_untouched = detail::same_blocks(before.LD, factor.LD) &&
                       detail::same_blocks(before.LE, factor.LE) &&
                       detail::same_blocks(before.LF, factor.LF) && before.LT == factor.LT;
  e.factor_untouched = e.factor_untouched && sel.diag.size() == lay.n_t && sel.arrow.size() == lay.n_t;

  const Matrix inv = dense_inverse(dq);
  for (std::size_t i = 0; i < lay.n_t; ++i) {
    const auto off = static_cast<Eigen::Index>(i) * ns;
    e.selinv = std::max(e.selinv, rel_frobenius(sel.diag[i], inv.block(off, off, ns, ns)));
    if (nb > 0) e.selinv = std::max(e.selinv, rel_frobenius(sel.arrow[i], inv.block(tip, off, nb, ns)));
  }
  if (nb > 0) e.selinv = std::max(e.selinv, rel_frobenius(sel.tip, inv.block(tip, tip, nb, nb)));
  return e;
}

/// `count` random SPD BTA matrices with n_s <= max_ns, n_t <= max_nt,
/// n_b <= max_nb and condition number 10^c, c ~ U(0, max_log10_cond).
inline BtaCaseErrors check_bta_family(std::size_t count, std::uint64_t seed, std::size_t max_ns,
                                      std::size_t max_nt, std::size_t max_nb,
                                      double max_log10_cond) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> ns_d(1, max_ns), nt_d(1, max_nt), nb_d(0, max_nb);
  std::uniform_real_distribution<double> cond_d(0.0, max_log10_cond);
  BtaCaseErrors worst;
  for (std::size_t k = 0; k < count; ++k) {
    const BtaLayout lay(ns_d(rng), nt_d(rng), nb_d(rng));
    const auto q = random_spd_bta_conditioned(lay, rng, cond_d(rng));
    absorb(worst, check_bta_case(q, rng));
  }
  return worst;
}

/// Random lattice model and dataset with n = rows*cols*n_t + n_b <= max_n and
/// n_o <= max_obs.
template <class Rng>
InlaProblem random_problem(Rng& rng, std::size_t max_n, std::size_t max_obs) {
  std::uniform_int_distribution<std::size_t> side(1, 5), nt_d(1, 12), nb_d(0, 4);
  std::size_t rows = 0, cols = 0, nt = 0, nb = 0;
  do {
    rows = side(rng);
    cols = side(rng);
    nt = nt_d(rng);
    nb = nb_d(rng);
  } while (rows * cols * nt + nb > max_n);
  std::uniform_real_distribution<double> ppf(0.05, 2.0);
  auto spec = build_lattice_spec(rows, cols, nt, nb, ppf(rng));
  std::uniform_int_distribution<std::size_t> obs_d(0, max_obs);
  auto data = random_dataset(spec.layout, obs_d(rng), rng);
  std::uniform_real_distribution<double> pm(-0.5, 0.5), ps(0.5, 2.0);
  PriorConfig prior;
  for (std::size_t i = 0; i < 4; ++i) {
    prior.means[i] = pm(rng);
    prior.sds[i] = ps(rng);
  }
  return InlaProblem{std::move(spec), std::move(data), prior};
}

template <class Rng>
HyperParameters random_theta(Rng& rng, double half_width = 1.0) {
  std::uniform_real_distribution<double> u(-half_width, half_width);
  return {u(rng), u(rng), u(rng), u(rng)};
}

struct ObjectiveErrors {
  double vs_dense = 0.0;               // |f - dense f|
  double vs_marginal_likelihood = 0.0;  // |f - (-log p(theta) - log p(y|theta))|
  std::size_t max_n = 0;
  std::size_t max_obs = 0;
};

inline ObjectiveErrors check_objective_family(std::size_t count, std::uint64_t seed,
                                              std::size_t max_n, std::size_t max_obs) {
  std::mt19937_64 rng(seed);
  ObjectiveErrors worst;
  for (std::size_t k = 0; k < count; ++k) {
    const auto problem = random_problem(rng, max_n, max_obs);
    const auto theta = random_theta(rng);
    const double got = eval_objective(problem, theta).value;
    worst.vs_dense = std::max(worst.vs_dense, std::abs(got - dense_objective(problem, theta)));
    worst.vs_marginal_likelihood =
        std::max(worst.vs_marginal_likelihood, std::abs(got - marginal_likelihood_objective(problem, theta)));
    worst.max_n = std::max(worst.max_n, problem.spec.layout.n());
    worst.max_obs = std::max(worst.max_obs, problem.data.n_obs());
  }
  return worst;
}

struct LatentErrors {
  double means = 0.0;  // |got - want|_inf / |want|_inf
  double sds = 0.0;
};

inline double rel_inf(const Vector& got, const Vector& want) {
  const double denom = want.cwiseAbs().maxCoeff();
  const double diff = (got - want).cwiseAbs().maxCoeff();
  return denom > 0.0 ? diff / denom : diff;
}

inline LatentErrors check_latent_family(std::size_t count, std::uint64_t seed, std::size_t max_n,
                                        std::size_t max_obs) {
  std::mt19937_64 rng(seed);
  LatentErrors worst;
  for (std::size_t k = 0; k < count; ++k) {
    const auto problem = random_problem(rng, max_n, max_obs);
    const auto theta = random_theta(rng);
    const auto got = latent_marginals(problem, theta);
    const auto want = dense_conditioning(problem, theta);
    worst.means = std::max(worst.means, rel_inf(got.means, want.means));
    worst.sds = std::max(worst.sds, rel_inf(got.sds, want.sds));
  }
  return worst;
}

}  // namespace btainla::oracle

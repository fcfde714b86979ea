#pragma once

// Gaussian hyperparameter marginals from the Hessian at the mode, latent
// marginals at the mode (empirical Bayes), and the diagnostic ring of
// evaluation points around the mode.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "btainla/bta.hpp"
#include "btainla/dense.hpp"
#include "btainla/inla/objective.hpp"
#include "btainla/inla/optimize.hpp"
#include "btainla/model.hpp"

namespace btainla {

class HessianNotPD : public std::runtime_error {
 public:
  HessianNotPD() : std::runtime_error("negative Hessian at the mode is not positive definite") {}
};

struct MarginalSummary {
  double mean = 0.0;          // log scale
  double sd = 0.0;            // log scale
  double mean_natural = 0.0;  // exp(mean)
  double sd_natural = 0.0;    // delta method, exp(mean) * sd
};

using HyperMarginals = std::array<MarginalSummary, HyperParameters::dim>;

/// Covariance of theta approximated by the inverse negative Hessian; the
/// inverse comes from a Cholesky factorization, which also detects
/// indefiniteness.
template <std::size_t Dim>
std::array<MarginalSummary, Dim> hyperparam_marginals(const Point<Dim>& mode,
                                                      const SquareMatrix<Dim>& neg_hessian) {
  const Matrix h = neg_hessian;
  Matrix l;
  try {
    l = dense::chol(h);
  } catch (const NotPositiveDefinite&) {
    throw HessianNotPD();
  }
  // Sigma = L^{-T} L^{-1}; diag(Sigma)_i = |column i of L^{-1}|^2.
  Matrix linv = Matrix::Identity(h.rows(), h.cols());
  dense::tri_solve_in_place(l, linv, dense::Side::Left, dense::Trans::No);
  std::array<MarginalSummary, Dim> out;
  for (std::size_t i = 0; i < Dim; ++i) {
    auto& m = out[i];
    m.mean = mode[i];
    m.sd = linv.col(static_cast<Eigen::Index>(i)).norm();
    m.mean_natural = std::exp(m.mean);
    m.sd_natural = m.mean_natural * m.sd;
  }
  return out;
}

struct LatentMarginals {
  Vector means;
  Vector sds;
};

/// Means solve Q_{x|y} x = b; standard deviations come from the diagonal of
/// the selected inverse of Q_{x|y}.
inline LatentMarginals latent_marginals(const InlaProblem& problem, const HyperParameters& theta,
                                        StageTimers* timers = nullptr) {
  StageTimers local;
  StageTimers& t = timers != nullptr ? *timers : local;
  const auto q_cond = timed_stage(t, stage::assembly, [&] {
    return assemble_conditional_precision(assemble_prior_precision(problem.spec, theta),
                                          problem.data, theta);
  });
  const auto factor = timed_stage(t, stage::factorization_denominator,
                                  [&] { return bta_factorize(q_cond); });
  LatentMarginals out;
  out.means = timed_stage(t, stage::solve, [&] {
    return bta_solve(factor, conditional_mean_rhs(problem.data, theta));
  });
  const auto sel = timed_stage(t, stage::selected_inversion,
                               [&] { return bta_selected_inverse(factor); });
  out.sds = sel.diagonal().cwiseSqrt();
  return out;
}

template <std::size_t Dim>
struct GridPoint {
  Point<Dim> theta{};
  double value = 0.0;
};

/// Points theta* +/- r * delta_k * v_k for each eigenpair (lambda_k, v_k) of
/// the negative Hessian and ring r = 1..rings, with delta_k = 2/sqrt(lambda_k)
/// so that the Gaussian approximation predicts f - f* = 2 r^2. Values that
/// fail to evaluate are reported as +inf.
template <std::size_t Dim>
std::vector<GridPoint<Dim>> explore_theta_grid(const BatchObjective<Dim>& f,
                                               const Point<Dim>& mode,
                                               const SquareMatrix<Dim>& neg_hessian,
                                               std::size_t rings = 1) {
  Eigen::SelfAdjointEigenSolver<SquareMatrix<Dim>> es(neg_hessian);
  if (es.info() != Eigen::Success || !(es.eigenvalues().minCoeff() > 0.0)) {
    throw HessianNotPD();
  }
  std::vector<Point<Dim>> pts;
  for (std::size_t r = 1; r <= rings; ++r) {
    for (std::size_t k = 0; k < Dim; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      const double delta = static_cast<double>(r) * 2.0 / std::sqrt(es.eigenvalues()(kk));
      for (double sign : {1.0, -1.0}) {
        Point<Dim> p = mode;
        for (std::size_t i = 0; i < Dim; ++i) {
          p[i] += sign * delta * es.eigenvectors()(static_cast<Eigen::Index>(i), kk);
        }
        pts.push_back(p);
      }
    }
  }
  const auto vals = f(pts);
  std::vector<GridPoint<Dim>> out;
  out.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    out.push_back({pts[i], std::isfinite(vals[i]) ? vals[i] : std::numeric_limits<double>::infinity()});
  }
  return out;
}

}  // namespace btainla

#pragma once

// Negative log posterior of the hyperparameters for a Gaussian likelihood:
//
//   f(theta) = -[ log p(theta) + log p(x*|theta) + log p(y|x*,theta)
//                 - log p_G(x*|theta,y) ]
//
// evaluated at the conditional mode x*(theta). All 2*pi constants are kept,
// so f equals -log p(theta, y) exactly for this model class.

#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "btainla/bta.hpp"
#include "btainla/model.hpp"
#include "btainla/orchestrator.hpp"

namespace btainla {

/// Independent Gaussian priors on the log-scale hyperparameters.
struct PriorConfig {
  std::array<double, HyperParameters::dim> means{0.0, 0.0, 0.0, 0.0};
  std::array<double, HyperParameters::dim> sds{1.0, 1.0, 1.0, 1.0};
};

inline double normal_log_density(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

inline double log_prior_theta(const HyperParameters& theta, const PriorConfig& prior) {
  const auto t = theta.to_array();
  double acc = 0.0;
  for (std::size_t i = 0; i < HyperParameters::dim; ++i) {
    acc += normal_log_density(t[i], prior.means[i], prior.sds[i]);
  }
  return acc;
}

struct InlaProblem {
  ModelSpec spec;
  Dataset data;
  PriorConfig prior;
};

struct ObjectiveComponents {
  double log_prior_theta = 0.0;
  double log_prior_latent = 0.0;  // log p(x*|theta)
  double log_likelihood = 0.0;    // log p(y|x*,theta)
  double log_det_prior = 0.0;     // log det Q_x
  double log_det_conditional = 0.0;
  double quadratic_terms = 0.0;  // -x*'Q_x x*/2 - tau_y |y - A x*|^2/2
};

struct FactorizationFailure {
  enum class Matrix { Prior, Conditional };
  Matrix matrix = Matrix::Prior;
  std::size_t block_index = 0;
};

struct ObjectiveValue {
  double value = std::numeric_limits<double>::infinity();
  ObjectiveComponents components;
  std::optional<FactorizationFailure> failure;
  StageTimers timers;

  bool finite() const { return std::isfinite(value); }
};

namespace detail {

struct PriorPath {
  double log_det = 0.0;
  std::optional<std::size_t> failed_block;
  StageTimers timers;
};

struct ConditionalPath {
  double log_det = 0.0;
  Vector mode;
  std::optional<std::size_t> failed_block;
  StageTimers timers;
};

inline PriorPath run_prior_path(const BtaMatrix& q_prior) {
  PriorPath out;
  try {
    const auto factor = timed_stage(out.timers, stage::factorization_numerator,
                                    [&] { return bta_factorize(q_prior); });
    out.log_det = bta_logdet(factor);
  } catch (const NotPositiveDefinite& e) {
    out.failed_block = e.block_index();
  }
  return out;
}

inline ConditionalPath run_conditional_path(const InlaProblem& problem, const BtaMatrix& q_prior,
                                            const HyperParameters& theta) {
  ConditionalPath out;
  const auto q_cond = timed_stage(out.timers, stage::assembly, [&] {
    return assemble_conditional_precision(q_prior, problem.data, theta);
  });
  try {
    const auto factor = timed_stage(out.timers, stage::factorization_denominator,
                                    [&] { return bta_factorize(q_cond); });
    out.log_det = bta_logdet(factor);
    out.mode = timed_stage(out.timers, stage::solve, [&] {
      return bta_solve(factor, conditional_mean_rhs(problem.data, theta));
    });
  } catch (const NotPositiveDefinite& e) {
    out.failed_block = e.block_index();
  }
  return out;
}

}  // namespace detail

/// Evaluates f(theta). Factorization failures give value = +inf with the
/// failing matrix recorded; they never throw. With an orchestrator whose plan
/// enables the split, the prior and conditional factorizations run as two
/// subtasks on its pool.
inline ObjectiveValue eval_objective(const InlaProblem& problem, const HyperParameters& theta,
                                     Orchestrator* orchestrator = nullptr) {
  using Clock = std::chrono::steady_clock;
  ObjectiveValue out;
  const auto& lay = problem.spec.layout;
  const double n = static_cast<double>(lay.n());
  const double n_obs = static_cast<double>(problem.data.n_obs());
  const double log_2pi = std::log(2.0 * std::numbers::pi);

  if (!theta.finite()) return out;

  const auto q_prior = timed_stage(out.timers, stage::assembly,
                                   [&] { return assemble_prior_precision(problem.spec, theta); });

  detail::PriorPath prior_path;
  detail::ConditionalPath cond_path;
  if (orchestrator != nullptr && orchestrator->plan().layer2_split) {
    auto& pool = orchestrator->pool();
    auto prior_future = pool.submit([&] { return detail::run_prior_path(q_prior); });
    cond_path = detail::run_conditional_path(problem, q_prior, theta);
    prior_path = pool.wait(prior_future);
  } else {
    prior_path = detail::run_prior_path(q_prior);
    cond_path = detail::run_conditional_path(problem, q_prior, theta);
  }
  out.timers.merge(prior_path.timers);
  out.timers.merge(cond_path.timers);

  if (prior_path.failed_block) {
    out.failure = FactorizationFailure{FactorizationFailure::Matrix::Prior, *prior_path.failed_block};
  } else if (cond_path.failed_block) {
    out.failure = FactorizationFailure{FactorizationFailure::Matrix::Conditional,
                                       *cond_path.failed_block};
  }

  if (!out.failure) {
    const auto other_start = Clock::now();
    const Vector& mode = cond_path.mode;
    const double tau = theta.tau_y();
    const double prior_quad = mode.dot(bta_multiply(q_prior, mode));
    const double resid_sq = (problem.data.y() - problem.data.project(mode)).squaredNorm();

    auto& c = out.components;
    c.log_prior_theta = log_prior_theta(theta, problem.prior);
    c.log_det_prior = prior_path.log_det;
    c.log_det_conditional = cond_path.log_det;
    c.quadratic_terms = -0.5 * prior_quad - 0.5 * tau * resid_sq;
    c.log_prior_latent = -0.5 * n * log_2pi + 0.5 * prior_path.log_det - 0.5 * prior_quad;
    c.log_likelihood = -0.5 * n_obs * log_2pi + 0.5 * n_obs * theta.log_tau_y - 0.5 * tau * resid_sq;
    const double log_conditional_at_mode = -0.5 * n * log_2pi + 0.5 * cond_path.log_det;
    const double v =
        -(c.log_prior_theta + c.log_prior_latent + c.log_likelihood - log_conditional_at_mode);
    out.value = std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    out.timers.add(stage::other,
                   std::chrono::duration<double>(Clock::now() - other_start).count());
  }
  return out;
}

/// Evaluates every theta on the orchestrator's pool. Output order matches the
/// input and the values are identical to sequential evaluation. Stage timers
/// are merged into the orchestrator.
inline std::vector<ObjectiveValue> parallel_map_objective(const std::vector<HyperParameters>& thetas,
                                                          const InlaProblem& problem,
                                                          Orchestrator& orchestrator) {
  if (thetas.empty()) throw std::invalid_argument("parallel_map_objective: empty batch");
  auto results = orchestrator.pool().map(
      thetas, [&](const HyperParameters& t) { return eval_objective(problem, t, &orchestrator); });
  for (const auto& r : results) orchestrator.timers().merge(r.timers);
  return results;
}

}  // namespace btainla

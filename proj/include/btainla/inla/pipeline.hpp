#pragma once

// End-to-end inference: mode search, Hessian at the mode, hyperparameter
// marginals, latent marginals and the diagnostic ring around the mode.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <vector>

#include "btainla/inla/marginals.hpp"
#include "btainla/inla/objective.hpp"
#include "btainla/inla/optimize.hpp"
#include "btainla/orchestrator.hpp"

namespace btainla {

constexpr std::size_t kThetaDim = HyperParameters::dim;
using ThetaPoint = Point<kThetaDim>;
using ThetaMatrix = SquareMatrix<kThetaDim>;

/// Batch objective that evaluates f on the orchestrator's pool and counts
/// evaluations in `counter` when given.
inline BatchObjective<kThetaDim> make_batch_objective(const InlaProblem& problem,
                                                      Orchestrator& orchestrator,
                                                      std::shared_ptr<std::size_t> counter = {}) {
  return [&problem, &orchestrator, counter](const std::vector<ThetaPoint>& pts) {
    std::vector<HyperParameters> thetas;
    thetas.reserve(pts.size());
    for (const auto& p : pts) thetas.push_back(HyperParameters::from_array(p));
    const auto results = parallel_map_objective(thetas, problem, orchestrator);
    if (counter) *counter += results.size();
    std::vector<double> out;
    out.reserve(results.size());
    for (const auto& r : results) out.push_back(r.value);
    return out;
  };
}

inline GradientEstimate<kThetaDim> gradient_fd(const InlaProblem& problem,
                                               const HyperParameters& theta, double h,
                                               Orchestrator& orchestrator) {
  return gradient_fd<kThetaDim>(make_batch_objective(problem, orchestrator), theta.to_array(), h);
}

inline HessianEstimate<kThetaDim> hessian_fd(const InlaProblem& problem,
                                             const HyperParameters& theta, double h,
                                             Orchestrator& orchestrator) {
  return hessian_fd<kThetaDim>(make_batch_objective(problem, orchestrator), theta.to_array(), h);
}

inline BfgsResult<kThetaDim> bfgs_minimize(const InlaProblem& problem,
                                           const HyperParameters& theta0,
                                           const BfgsOptions& opts, Orchestrator& orchestrator) {
  return bfgs_minimize<kThetaDim>(make_batch_objective(problem, orchestrator), theta0.to_array(),
                                  opts);
}

struct InferenceOptions {
  BfgsOptions bfgs;
  double fd_step_hessian = 1e-3;
  std::size_t grid_rings = 1;
};

struct InferenceDiagnostics {
  std::size_t iterations = 0;
  std::size_t function_evaluations = 0;
  double final_gradient_norm = std::numeric_limits<double>::infinity();
  double wall_seconds = 0.0;
  StageTimers timers;  // summed over all tasks
};

struct InferenceReport {
  HyperParameters theta_mode;
  BfgsStatus status = BfgsStatus::InvalidStart;
  double objective_at_mode = std::numeric_limits<double>::infinity();
  ThetaMatrix neg_hessian = ThetaMatrix::Zero();
  bool hessian_pd = false;
  HyperMarginals hyper{};  // sd fields are NaN when the Hessian is not PD
  LatentMarginals latent;
  std::vector<GridPoint<kThetaDim>> grid;
  std::vector<BfgsTraceEntry> trace;
  InferenceDiagnostics diagnostics;
};

inline InferenceReport run_inference(const InlaProblem& problem, const HyperParameters& theta0,
                                     const InferenceOptions& opts, Orchestrator& orchestrator) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto counter = std::make_shared<std::size_t>(0);
  const auto f = make_batch_objective(problem, orchestrator, counter);

  InferenceReport report;
  const auto opt = bfgs_minimize<kThetaDim>(f, theta0.to_array(), opts.bfgs);
  report.theta_mode = HyperParameters::from_array(opt.x);
  report.status = opt.status;
  report.objective_at_mode = opt.value;
  report.trace = opt.trace;
  report.diagnostics.iterations = opt.iterations;
  report.diagnostics.final_gradient_norm = opt.grad_norm;

  if (opt.status != BfgsStatus::InvalidStart) {
    // f is the negative log posterior, so its Hessian is the negative Hessian
    // of log p(theta|y).
    const auto hess = hessian_fd<kThetaDim>(f, opt.x, opts.fd_step_hessian);
    report.neg_hessian = hess.hessian;
    report.hessian_pd = hess.ok && hess.positive_definite;

    if (report.hessian_pd) {
      report.hyper = hyperparam_marginals<kThetaDim>(opt.x, report.neg_hessian);
      if (opts.grid_rings > 0) {
        report.grid = explore_theta_grid<kThetaDim>(f, opt.x, report.neg_hessian, opts.grid_rings);
      }
    } else {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      for (std::size_t i = 0; i < kThetaDim; ++i) {
        report.hyper[i] = {opt.x[i], nan, std::exp(opt.x[i]), nan};
      }
    }
    report.latent = latent_marginals(problem, report.theta_mode, &orchestrator.timers());
  }
  report.diagnostics.function_evaluations = *counter;
  report.diagnostics.timers = orchestrator.timers();
  report.diagnostics.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

}  // namespace btainla

#pragma once

// Finite-difference derivatives and BFGS over a batched objective. A batch
// objective maps a list of points to their function values; callers decide
// whether the batch runs sequentially or on a worker pool. Every stencil is
// submitted as a single batch.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace btainla {

template <std::size_t Dim>
using Point = std::array<double, Dim>;

template <std::size_t Dim>
using BatchObjective = std::function<std::vector<double>(const std::vector<Point<Dim>>&)>;

template <std::size_t Dim>
using SquareMatrix = Eigen::Matrix<double, static_cast<int>(Dim), static_cast<int>(Dim)>;

namespace detail {

template <std::size_t Dim>
Point<Dim> shifted(Point<Dim> p, std::size_t i, double h) {
  p[i] += h;
  return p;
}

template <std::size_t Dim>
double norm(const Point<Dim>& p) {
  double s = 0.0;
  for (double v : p) s += v * v;
  return std::sqrt(s);
}

template <std::size_t Dim>
double dot(const Point<Dim>& a, const Point<Dim>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < Dim; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

template <std::size_t Dim>
struct GradientEstimate {
  double value = std::numeric_limits<double>::infinity();  // f at the centre
  Point<Dim> gradient{};
  bool ok = false;  // false if any stencil value was not finite
};

/// Central differences: (f(x + h e_i) - f(x - h e_i)) / (2h). The centre and
/// the 2*Dim shifted points are evaluated in one batch.
template <std::size_t Dim>
GradientEstimate<Dim> gradient_fd(const BatchObjective<Dim>& f, const Point<Dim>& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("gradient_fd: step must be positive");
  std::vector<Point<Dim>> pts;
  pts.reserve(2 * Dim + 1);
  pts.push_back(x);
  for (std::size_t i = 0; i < Dim; ++i) {
    pts.push_back(detail::shifted(x, i, h));
    pts.push_back(detail::shifted(x, i, -h));
  }
  const auto vals = f(pts);
  GradientEstimate<Dim> out;
  out.value = vals[0];
  out.ok = std::isfinite(vals[0]);
  for (std::size_t i = 0; i < Dim; ++i) {
    const double fp = vals[1 + 2 * i];
    const double fm = vals[2 + 2 * i];
    out.ok = out.ok && std::isfinite(fp) && std::isfinite(fm);
    out.gradient[i] = (fp - fm) / (2.0 * h);
  }
  return out;
}

template <std::size_t Dim>
struct HessianEstimate {
  SquareMatrix<Dim> hessian = SquareMatrix<Dim>::Zero();
  bool ok = false;                 // all stencil values finite
  bool positive_definite = false;  // every eigenvalue > 0
};

/// Second-order central differences. Diagonal entries use the 3-point
/// stencil, off-diagonal entries the 4-point cross stencil; the result is
/// symmetrized. All 1 + 2*Dim + 2*Dim*(Dim-1) points go in one batch.
template <std::size_t Dim>
HessianEstimate<Dim> hessian_fd(const BatchObjective<Dim>& f, const Point<Dim>& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("hessian_fd: step must be positive");
  std::vector<Point<Dim>> pts;
  pts.push_back(x);
  for (std::size_t i = 0; i < Dim; ++i) {
    pts.push_back(detail::shifted(x, i, h));
    pts.push_back(detail::shifted(x, i, -h));
  }
  for (std::size_t i = 0; i < Dim; ++i) {
    for (std::size_t j = i + 1; j < Dim; ++j) {
      for (double si : {1.0, -1.0}) {
        for (double sj : {1.0, -1.0}) {
          pts.push_back(detail::shifted(detail::shifted(x, i, si * h), j, sj * h));
        }
      }
    }
  }
  const auto vals = f(pts);
  HessianEstimate<Dim> out;
  out.ok = true;
  for (double v : vals) out.ok = out.ok && std::isfinite(v);

  const double f0 = vals[0];
  const double h2 = h * h;
  for (std::size_t i = 0; i < Dim; ++i) {
    out.hessian(i, i) = (vals[1 + 2 * i] - 2.0 * f0 + vals[2 + 2 * i]) / h2;
  }
  std::size_t k = 1 + 2 * Dim;
  for (std::size_t i = 0; i < Dim; ++i) {
    for (std::size_t j = i + 1; j < Dim; ++j) {
      const double fpp = vals[k], fpm = vals[k + 1], fmp = vals[k + 2], fmm = vals[k + 3];
      k += 4;
      out.hessian(i, j) = (fpp - fpm - fmp + fmm) / (4.0 * h2);
      out.hessian(j, i) = out.hessian(i, j);
    }
  }
  out.hessian = 0.5 * (out.hessian + out.hessian.transpose()).eval();
  if (out.ok) {
    Eigen::SelfAdjointEigenSolver<SquareMatrix<Dim>> es(out.hessian, Eigen::EigenvaluesOnly);
    out.positive_definite = es.eigenvalues().minCoeff() > 0.0;
  }
  return out;
}

struct BfgsOptions {
  double fd_step = 1e-5;
  double tol_grad = 1e-3;
  double tol_f_rel = 1e-7;
  std::size_t max_iter = 200;
  double c1 = 1e-4;  // sufficient decrease
  double c2 = 0.9;   // curvature
  std::size_t max_line_search = 30;
};

struct BfgsTraceEntry {
  std::size_t iter = 0;
  double f = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
};

enum class BfgsStatus { Converged, MaxIterations, LineSearchFailure, InvalidStart };

inline std::string to_string(BfgsStatus s) {
  switch (s) {
    case BfgsStatus::Converged: return "converged";
    case BfgsStatus::MaxIterations: return "max_iterations";
    case BfgsStatus::LineSearchFailure: return "line_search_failure";
    case BfgsStatus::InvalidStart: return "invalid_start";
  }
  return "unknown";
}

template <std::size_t Dim>
struct BfgsResult {
  Point<Dim> x{};
  double value = std::numeric_limits<double>::infinity();
  Point<Dim> gradient{};
  double grad_norm = std::numeric_limits<double>::infinity();
  BfgsStatus status = BfgsStatus::InvalidStart;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  std::vector<BfgsTraceEntry> trace;  // one entry per accepted step
};

/// BFGS on the inverse-Hessian approximation with finite-difference
/// gradients and a bisection line search for the weak Wolfe conditions.
/// A non-finite trial value counts as a failed sufficient-decrease test, so
/// the step is halved.
///
/// Convergence requires |grad| <= tol_grad together with a relative change of
/// f on the last accepted step <= tol_f_rel. If the gradient test already
/// holds and no further decrease can be found (zero direction or exhausted
/// line search), the point is also accepted as converged.
template <std::size_t Dim>
BfgsResult<Dim> bfgs_minimize(const BatchObjective<Dim>& f, const Point<Dim>& x0,
                              const BfgsOptions& opts) {
  using Vec = Eigen::Matrix<double, static_cast<int>(Dim), 1>;
  auto to_vec = [](const Point<Dim>& p) {
    Vec v;
    for (std::size_t i = 0; i < Dim; ++i) v(static_cast<Eigen::Index>(i)) = p[i];
    return v;
  };
  auto to_point = [](const Vec& v) {
    Point<Dim> p;
    for (std::size_t i = 0; i < Dim; ++i) p[i] = v(static_cast<Eigen::Index>(i));
    return p;
  };

  BfgsResult<Dim> res;
  auto est = gradient_fd(f, x0, opts.fd_step);
  res.evaluations += 2 * Dim + 1;
  res.x = x0;
  res.value = est.value;
  res.gradient = est.gradient;
  res.grad_norm = detail::norm(est.gradient);
  if (!est.ok) {
    res.status = BfgsStatus::InvalidStart;
    return res;
  }

  Vec x = to_vec(x0);
  Vec g = to_vec(est.gradient);
  double fx = est.value;
  SquareMatrix<Dim> hinv = SquareMatrix<Dim>::Identity();
  bool scaled = false;
  double last_rel_change = std::numeric_limits<double>::infinity();
  bool any_step = false;

  auto gradient_small = [&] { return g.norm() <= opts.tol_grad; };
  auto finish = [&](BfgsStatus status) {
    res.x = to_point(x);
    res.value = fx;
    res.gradient = to_point(g);
    res.grad_norm = g.norm();
    res.status = status;
    return res;
  };

  for (std::size_t iter = 1;; ++iter) {
    if (gradient_small() && (!any_step || last_rel_change <= opts.tol_f_rel)) {
      return finish(BfgsStatus::Converged);
    }
    if (iter > opts.max_iter) return finish(BfgsStatus::MaxIterations);

    Vec d = -hinv * g;
    if (!(g.dot(d) < 0.0)) {
      hinv.setIdentity();
      scaled = false;
      d = -g;
    }
    if (d.norm() == 0.0) {
      return finish(gradient_small() ? BfgsStatus::Converged : BfgsStatus::LineSearchFailure);
    }
    const double slope = g.dot(d);

    double alpha = scaled ? 1.0 : std::min(1.0, 1.0 / d.norm());
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    bool accepted = false;
    Vec x_new;
    GradientEstimate<Dim> trial;
    for (std::size_t ls = 0; ls < opts.max_line_search; ++ls) {
      x_new = x + alpha * d;
      trial = gradient_fd(f, to_point(x_new), opts.fd_step);
      res.evaluations += 2 * Dim + 1;
      const bool decrease =
          std::isfinite(trial.value) && trial.value <= fx + opts.c1 * alpha * slope;
      if (!decrease || !trial.ok) {
        hi = alpha;
        alpha = 0.5 * (lo + hi);
        continue;
      }
      if (to_vec(trial.gradient).dot(d) < opts.c2 * slope) {
        lo = alpha;
        alpha = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * alpha;
        continue;
      }
      accepted = true;
      break;
    }
    if (!accepted) {
      return finish(gradient_small() ? BfgsStatus::Converged : BfgsStatus::LineSearchFailure);
    }

    const Vec g_new = to_vec(trial.gradient);
    const Vec s = x_new - x;
    const Vec y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        hinv = (sy / y.dot(y)) * SquareMatrix<Dim>::Identity();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const SquareMatrix<Dim> eye = SquareMatrix<Dim>::Identity();
      hinv = (eye - rho * s * y.transpose()) * hinv * (eye - rho * y * s.transpose()) +
             rho * s * s.transpose();
    }
    last_rel_change =
        std::abs(fx - trial.value) / std::max({std::abs(fx), std::abs(trial.value), 1.0});
    any_step = true;
    x = x_new;
    g = g_new;
    fx = trial.value;
    res.iterations = iter;
    res.trace.push_back({iter, fx, g.norm(), alpha});
  }
}

}  // namespace btainla

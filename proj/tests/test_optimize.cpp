#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "btainla/inla/pipeline.hpp"
#include "btainla/oracle/dense_pipeline.hpp"

namespace btainla {
namespace {

template <std::size_t Dim, class F>
BatchObjective<Dim> batch(F f, std::size_t* batches = nullptr) {
  return [f, batches](const std::vector<Point<Dim>>& pts) {
    if (batches != nullptr) ++*batches;
    std::vector<double> out;
    for (const auto& p : pts) out.push_back(f(p));
    return out;
  };
}

double quadratic4(const Point<4>& x) {
  const double w[4] = {1.0, 2.0, 3.0, 4.0};
  double s = 0.0;
  for (std::size_t i = 0; i < 4; ++i) s += 0.5 * w[i] * (x[i] - 1.0) * (x[i] - 1.0);
  return s;
}

double rosenbrock4(const Point<4>& x) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < 4; ++i) {
    s += 100.0 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(1.0 - x[i], 2);
  }
  return s;
}

TEST(GradientFd, ExactOnQuadratic) {
  std::size_t batches = 0;
  const auto est = gradient_fd<4>(batch<4>(quadratic4, &batches), {0.0, 0.5, 2.0, -1.0}, 1e-5);
  EXPECT_EQ(batches, 1u);
  ASSERT_TRUE(est.ok);
  const double want[4] = {-1.0, -1.0, 3.0, -8.0};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(est.gradient[i], want[i], 1e-8);
}

TEST(GradientFd, FlagsNonFiniteStencil) {
  const auto f = batch<1>([](const Point<1>& x) {
    return x[0] > 0.0 ? std::numeric_limits<double>::infinity() : x[0] * x[0];
  });
  EXPECT_FALSE(gradient_fd<1>(f, {0.0}, 1e-3).ok);
  EXPECT_THROW(gradient_fd<1>(f, {0.0}, 0.0), std::invalid_argument);
}

TEST(HessianFd, QuadraticWithCoupling) {
  const auto f = batch<2>([](const Point<2>& x) { return 2.0 * x[0] * x[0] + x[0] * x[1] + 3.0 * x[1] * x[1]; });
  std::size_t count = 0;
  const auto counting = [&](const std::vector<Point<2>>& pts) {
    count = pts.size();
    return f(pts);
  };
  const auto est = hessian_fd<2>(counting, {0.3, -0.7}, 1e-3);
  EXPECT_EQ(count, 1u + 4u + 4u);
  EXPECT_NEAR(est.hessian(0, 0), 4.0, 1e-6);
  EXPECT_NEAR(est.hessian(1, 1), 6.0, 1e-6);
  EXPECT_NEAR(est.hessian(0, 1), 1.0, 1e-6);
  EXPECT_EQ(est.hessian(0, 1), est.hessian(1, 0));
  EXPECT_TRUE(est.ok);
  EXPECT_TRUE(est.positive_definite);
}

TEST(HessianFd, StencilSizeForFourParameters) {
  std::size_t count = 0;
  const BatchObjective<4> f = [&](const std::vector<Point<4>>& pts) {
    count = pts.size();
    return std::vector<double>(pts.size(), 0.0);
  };
  hessian_fd<4>(f, {}, 1e-3);
  EXPECT_EQ(count, 33u);
}

TEST(HessianFd, DetectsSaddle) {
  const auto f = batch<2>([](const Point<2>& x) { return x[0] * x[0] - x[1] * x[1]; });
  const auto est = hessian_fd<2>(f, {0.0, 0.0}, 1e-3);
  EXPECT_TRUE(est.ok);
  EXPECT_FALSE(est.positive_definite);
}

TEST(Bfgs, QuadraticInFewIterations) {
  const auto res = bfgs_minimize<4>(batch<4>(quadratic4), {0.0, 0.0, 0.0, 0.0}, BfgsOptions{});
  EXPECT_EQ(res.status, BfgsStatus::Converged);
  EXPECT_LE(res.iterations, 10u);
  for (double v : res.x) EXPECT_NEAR(v, 1.0, 1e-3);
  EXPECT_EQ(res.trace.size(), res.iterations);
}

TEST(Bfgs, Rosenbrock) {
  BfgsOptions opts;
  opts.tol_grad = 1e-6;
  opts.tol_f_rel = 1e-12;
  const auto res = bfgs_minimize<4>(batch<4>(rosenbrock4), {-1.2, 1.0, -1.2, 1.0}, opts);
  EXPECT_LE(res.iterations, 200u);
  EXPECT_LT(res.value, 1e-8);
  for (double v : res.x) EXPECT_NEAR(v, 1.0, 1e-3);
}

TEST(Bfgs, TraceIsMonotone) {
  const auto res = bfgs_minimize<4>(batch<4>(rosenbrock4), {-1.2, 1.0, -1.2, 1.0}, BfgsOptions{});
  ASSERT_FALSE(res.trace.empty());
  for (std::size_t k = 1; k < res.trace.size(); ++k) {
    EXPECT_LE(res.trace[k].f, res.trace[k - 1].f);
    EXPECT_EQ(res.trace[k].iter, res.trace[k - 1].iter + 1);
  }
}

TEST(Bfgs, InfiniteRegionHalvesStep) {
  // f is +inf beyond x = 2; the unit first step from 0 crosses it.
  const auto f = batch<1>([](const Point<1>& x) {
    return x[0] > 2.0 ? std::numeric_limits<double>::infinity() : (x[0] - 1.5) * (x[0] - 1.5);
  });
  const auto res = bfgs_minimize<1>(f, {-10.0}, BfgsOptions{});
  EXPECT_EQ(res.status, BfgsStatus::Converged);
  EXPECT_NEAR(res.x[0], 1.5, 1e-3);
}

TEST(Bfgs, InvalidStart) {
  const auto f = batch<1>([](const Point<1>&) { return std::numeric_limits<double>::infinity(); });
  EXPECT_EQ(bfgs_minimize<1>(f, {0.0}, BfgsOptions{}).status, BfgsStatus::InvalidStart);
}

TEST(Bfgs, MaxIterations) {
  BfgsOptions opts;
  opts.max_iter = 2;
  const auto res = bfgs_minimize<4>(batch<4>(rosenbrock4), {-1.2, 1.0, -1.2, 1.0}, opts);
  EXPECT_EQ(res.status, BfgsStatus::MaxIterations);
  EXPECT_EQ(res.iterations, 2u);
}

class RealObjective : public ::testing::Test {
 protected:
  RealObjective() : spec_(build_lattice_spec(3, 3, 4, 2, 0.1)) {
    std::mt19937_64 rng(404);
    problem_ = std::make_unique<InlaProblem>(InlaProblem{spec_, oracle::random_dataset(spec_.layout, 60, rng), {}});
  }
  double f(const ThetaPoint& p) const {
    return eval_objective(*problem_, HyperParameters::from_array(p)).value;
  }
  /// Richardson-extrapolated central difference of f along e_i.
  double richardson_grad(const ThetaPoint& x, std::size_t i, double h) const {
    auto d = [&](double s) {
      return (f(detail::shifted(x, i, s)) - f(detail::shifted(x, i, -s))) / (2.0 * s);
    };
    return (4.0 * d(h / 2.0) - d(h)) / 3.0;
  }
  ModelSpec spec_;
  std::unique_ptr<InlaProblem> problem_;
};

TEST_F(RealObjective, GradientAgreesWithRichardsonReference) {
  Orchestrator orch(TaskPlan{2, true});
  const ThetaPoint x{0.2, -0.3, 0.4, 0.1};
  const auto est = gradient_fd(*problem_, HyperParameters::from_array(x), 1e-5, orch);
  ASSERT_TRUE(est.ok);
  for (std::size_t i = 0; i < 4; ++i) {
    const double ref = richardson_grad(x, i, 1e-2);
    EXPECT_NEAR(est.gradient[i], ref, 1e-4 * std::max(1.0, std::abs(ref))) << i;
  }
}

TEST_F(RealObjective, HessianAgreesWithGradientDifferences) {
  Orchestrator orch(TaskPlan{1, false});
  const ThetaPoint x{0.2, -0.3, 0.4, 0.1};
  const auto est = hessian_fd(*problem_, HyperParameters::from_array(x), 1e-3, orch);
  ASSERT_TRUE(est.ok);
  const double h = 1e-2;
  ThetaMatrix ref;
  for (std::size_t j = 0; j < 4; ++j) {
    for (std::size_t i = 0; i < 4; ++i) {
      ref(i, j) = (richardson_grad(detail::shifted(x, j, h), i, 1e-2) -
                   richardson_grad(detail::shifted(x, j, -h), i, 1e-2)) /
                  (2.0 * h);
    }
  }
  ref = (0.5 * (ref + ref.transpose())).eval();
  const double scale = ref.cwiseAbs().maxCoeff();
  EXPECT_LE((est.hessian - ref).cwiseAbs().maxCoeff(), 2e-3 * scale);
}

TEST_F(RealObjective, EvaluationOrderDoesNotChangeResults) {
  Orchestrator wide(TaskPlan{3, true});
  Orchestrator narrow(TaskPlan{1, false});
  const auto a = bfgs_minimize(*problem_, HyperParameters{}, BfgsOptions{}, wide);
  const auto b = bfgs_minimize(*problem_, HyperParameters{}, BfgsOptions{}, narrow);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.iterations, b.iterations);
}

}  // namespace
}  // namespace btainla

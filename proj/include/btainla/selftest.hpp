#pragma once

// Bundled oracle comparisons at small sizes, runnable from the command line.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "btainla/bta_io.hpp"
#include "btainla/inla/pipeline.hpp"
#include "btainla/oracle/checks.hpp"
#include "btainla/simgen.hpp"

namespace btainla {

struct SelftestCase {
  std::string name;
  std::function<std::string()> run;  // returns a detail string; throws on failure
};

class SelftestFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(2) << v;
  return s.str();
}

inline void expect_below(const std::string& what, double value, double tol) {
  if (!(value <= tol)) throw SelftestFailure(what + " = " + sci(value) + " > " + sci(tol));
}

}  // namespace detail

inline std::vector<SelftestCase> selftest_cases() {
  using detail::expect_below;
  using detail::sci;
  std::vector<SelftestCase> cases;

  cases.push_back({"bta factorize/solve/selinv vs dense", [] {
    const auto e = oracle::check_bta_family(12, 101, 12, 8, 3, 8.0);
    expect_below("reconstruction", e.reconstruction, 1e-12);
    expect_below("logdet", e.logdet, 1e-9);
    expect_below("residual", e.residual, 1e-10);
    expect_below("selinv", e.selinv, 1e-10);
    if (!e.factor_untouched) throw SelftestFailure("selected inversion modified the factor");
    return "recon " + sci(e.reconstruction) + ", selinv " + sci(e.selinv);
  }});

  cases.push_back({"bta tridiagonal reduction (n_b = 0)", [] {
    const auto e = oracle::check_bta_family(6, 102, 10, 6, 0, 6.0);
    expect_below("reconstruction", e.reconstruction, 1e-12);
    expect_below("selinv", e.selinv, 1e-10);
    return "selinv " + sci(e.selinv);
  }});

  cases.push_back({"indefinite fixture raises NotPositiveDefinite", [] {
    const BtaLayout lay(3, 4, 2);
    std::mt19937_64 rng(103);
    auto q = oracle::random_spd_bta(lay, rng, 2.0);
    q.D[2] = -q.D[2];
    try {
      bta_factorize(q);
    } catch (const NotPositiveDefinite& e) {
      if (e.block_index() != 2) throw SelftestFailure("wrong block index " + std::to_string(e.block_index()));
      return std::string("expected failure at block 2");
    }
    throw SelftestFailure("indefinite matrix was factorized");
  }});

  cases.push_back({"bta text format round trip", [] {
    std::mt19937_64 rng(104);
    const auto q = oracle::random_spd_bta(BtaLayout(3, 3, 2), rng, 4.0);
    std::stringstream ss;
    write_bta(ss, q);
    const auto back = read_bta(ss);
    if (to_dense(back) != to_dense(q)) throw SelftestFailure("values changed");
    return std::string("bitwise");
  }});

  cases.push_back({"prior precision vs Kronecker form", [] {
    const auto spec = build_lattice_spec(2, 3, 4, 2, 0.5);
    std::mt19937_64 rng(105);
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      const auto theta = oracle::random_theta(rng, 2.0);
      const Matrix want = oracle::dense_prior_precision(spec, theta);
      const Matrix got = to_dense(assemble_prior_precision(spec, theta));
      worst = std::max(worst, (got - want).cwiseAbs().maxCoeff() / want.cwiseAbs().maxCoeff());
    }
    expect_below("max rel entry", worst, 1e-14);
    return sci(worst);
  }});

  cases.push_back({"conditional precision vs dense", [] {
    const auto spec = build_lattice_spec(2, 2, 3, 2, 0.7);
    std::mt19937_64 rng(106);
    const auto data = oracle::random_dataset(spec.layout, 24, rng);
    const auto theta = oracle::random_theta(rng);
    const Matrix want = oracle::dense_conditional_precision(spec, data, theta);
    const Matrix got = to_dense(assemble_conditional_precision(assemble_prior_precision(spec, theta), data, theta));
    const double err = (got - want).cwiseAbs().maxCoeff() / want.cwiseAbs().maxCoeff();
    expect_below("max rel entry", err, 1e-13);
    return sci(err);
  }});

  cases.push_back({"objective vs dense pipeline", [] {
    const auto e = oracle::check_objective_family(6, 107, 80, 150);
    expect_below("|f - dense|", e.vs_dense, 1e-8);
    expect_below("|f - marginal likelihood|", e.vs_marginal_likelihood, 1e-8);
    return sci(std::max(e.vs_dense, e.vs_marginal_likelihood));
  }});

  cases.push_back({"latent marginals vs dense conditioning", [] {
    const auto e = oracle::check_latent_family(5, 108, 80, 150);
    expect_below("means", e.means, 1e-8);
    expect_below("sds", e.sds, 1e-8);
    return "means " + sci(e.means) + ", sds " + sci(e.sds);
  }});

  cases.push_back({"hyperparameter sds vs explicit inverse", [] {
    std::mt19937_64 rng(109);
    std::normal_distribution<double> nd;
    SquareMatrix<4> b;
    for (Eigen::Index i = 0; i < 16; ++i) b.data()[i] = nd(rng);
    const SquareMatrix<4> h = b * b.transpose() + SquareMatrix<4>::Identity();
    const SquareMatrix<4> cov = Eigen::FullPivLU<SquareMatrix<4>>(h).inverse();
    const auto m = hyperparam_marginals<4>({}, h);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < 4; ++i) {
      worst = std::max(worst, std::abs(m[static_cast<std::size_t>(i)].sd - std::sqrt(cov(i, i))) / std::sqrt(cov(i, i)));
    }
    expect_below("rel sd", worst, 1e-12);
    return sci(worst);
  }});

  cases.push_back({"finite-difference gradient consistency", [] {
    std::mt19937_64 rng(110);
    const auto problem = oracle::random_problem(rng, 80, 120);
    const auto theta = oracle::random_theta(rng, 0.5);
    Orchestrator orch(TaskPlan{1, false});
    const auto g1 = gradient_fd(problem, theta, 1e-4, orch);
    const auto g2 = gradient_fd(problem, theta, 1e-5, orch);
    double worst = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      worst = std::max(worst, std::abs(g1.gradient[i] - g2.gradient[i]) / std::max(1.0, std::abs(g2.gradient[i])));
    }
    expect_below("rel difference", worst, 1e-3);
    return sci(worst);
  }});

  cases.push_back({"GMRF sample covariance vs inverse", [] {
    std::mt19937_64 rng(111);
    const auto q = oracle::random_spd_bta(BtaLayout(3, 3, 3), rng, 2.0);
    const auto factor = bta_factorize(q);
    const Matrix want = oracle::dense_inverse(to_dense(q));
    Matrix acc = Matrix::Zero(12, 12);
    const int draws = 100000;
    for (int k = 0; k < draws; ++k) {
      const Vector u = sample_gmrf(factor, rng);
      acc.noalias() += u * u.transpose();
    }
    acc /= draws;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < 12; ++i) worst = std::max(worst, std::abs(acc(i, i) - want(i, i)) / want(i, i));
    expect_below("rel diagonal", worst, 0.05);
    return sci(worst);
  }});

  cases.push_back({"simulated beta recovered by least squares", [] {
    SimConfig cfg;
    cfg.seed = 112;
    const auto sim = generate_dataset(cfg);
    Vector x = Vector::Zero(static_cast<Eigen::Index>(sim.spec.layout.n()));
    x.head(sim.truth.field.size()) = sim.truth.field;
    const Vector r = sim.data.y() - sim.data.project(x);
    const Matrix& z = sim.data.z();
    const Matrix ztz = z.transpose() * z;
    const Vector beta = ztz.ldlt().solve(z.transpose() * r);
    const Matrix cov = ztz.inverse() / cfg.theta_true.tau_y();
    double worst = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
      worst = std::max(worst, std::abs(beta(j) - sim.truth.beta(j)) / std::sqrt(cov(j, j)));
    }
    expect_below("standard errors", worst, 3.0);
    return sci(worst) + " se";
  }});

  return cases;
}

/// Runs every case, prints one row per case and returns the number of
/// failures.
inline std::size_t run_selftest(std::ostream& out, const std::vector<SelftestCase>& cases) {
  using Clock = std::chrono::steady_clock;
  std::size_t failures = 0;
  const auto start = Clock::now();
  out << std::left << std::setw(48) << "case" << std::setw(6) << "result" << "detail\n";
  for (const auto& c : cases) {
    std::string result = "PASS";
    std::string detail;
    try {
      detail = c.run();
    } catch (const std::exception& e) {
      result = "FAIL";
      detail = e.what();
      ++failures;
    }
    out << std::left << std::setw(48) << c.name << std::setw(6) << result << detail << '\n';
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  out << cases.size() - failures << "/" << cases.size() << " passed in " << std::fixed
      << std::setprecision(2) << secs << " s\n";
  return failures;
}

}  // namespace btainla

#pragma once

// Subcommand implementations. Each returns the process exit status; tables go
// to `out`, diagnostics to `err`.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "btainla/io.hpp"
#include "btainla/selftest.hpp"

namespace btainla::cli {

namespace exit_code {
constexpr int ok = 0;
constexpr int error = 1;
constexpr int max_iterations = 2;
}  // namespace exit_code

/// --workers, then BTA_INLA_WORKERS, then the config file, then
/// min(hardware threads, 2 * dim + 1).
inline std::size_t resolve_workers(std::optional<std::size_t> flag, std::size_t from_config) {
  if (flag) {
    if (*flag < 1) throw std::invalid_argument("--workers must be >= 1");
    return *flag;
  }
  if (const char* env = std::getenv("BTA_INLA_WORKERS"); env != nullptr && *env != '\0') {
    std::size_t v = 0;
    if (!text::parse_int(std::string_view(env), v) || v < 1) {
      throw std::invalid_argument("BTA_INLA_WORKERS must be a positive integer");
    }
    return v;
  }
  if (from_config > 0) return from_config;
  return default_worker_count(kThetaDim);
}

inline int cmd_simulate(const std::string& config_path, const std::string& out_dir, std::ostream& out,
                        std::ostream& err) {
  try {
    const auto cfg = io::RunConfig::load(config_path);
    const auto sim = generate_dataset(cfg.sim_config());
    io::write_dataset(out_dir, sim.data);
    io::write_truth(io::fs::path(out_dir) / "truth.csv", sim.truth);
    out << "wrote " << sim.data.n_obs() << " observations, n = " << sim.spec.layout.n() << " to "
        << out_dir << '\n';
    return exit_code::ok;
  } catch (const std::exception& e) {
    err << "simulate: " << e.what() << '\n';
    return exit_code::error;
  }
}

inline int cmd_fit(const std::string& config_path, const std::string& data_dir, const std::string& out_dir,
                   std::optional<std::size_t> workers_flag, std::ostream& out, std::ostream& err) {
  try {
    const auto cfg = io::RunConfig::load(config_path);
    if (!io::fs::is_directory(data_dir)) throw std::runtime_error("data directory " + data_dir + " not found");
    const std::size_t workers = resolve_workers(workers_flag, cfg.workers);
    auto spec = io::model_spec(cfg, io::fs::path(data_dir));
    auto data = io::read_dataset(data_dir, spec.layout);
    const InlaProblem problem{std::move(spec), std::move(data), cfg.prior};

    Orchestrator orch(TaskPlan{workers, true});
    const auto report = run_inference(problem, cfg.theta0, cfg.inference_options(), orch);
    io::write_report(out_dir, report, workers);

    out << "status " << to_string(report.status) << " after " << report.diagnostics.iterations
        << " iterations, f = " << text::format_double(report.objective_at_mode) << '\n';
    out << "name,mode_log,sd_log,mode_natural\n";
    for (std::size_t i = 0; i < kThetaDim; ++i) {
      out << HyperParameters::names[i] << ',' << text::format_double(report.hyper[i].mean) << ','
          << text::format_double(report.hyper[i].sd) << ','
          << text::format_double(report.hyper[i].mean_natural) << '\n';
    }
    if (!report.hessian_pd) err << "fit: negative Hessian at the mode is not positive definite\n";
    switch (report.status) {
      case BfgsStatus::Converged: return exit_code::ok;
      case BfgsStatus::MaxIterations: return exit_code::max_iterations;
      default:
        err << "fit: optimizer stopped with " << to_string(report.status) << '\n';
        return exit_code::error;
    }
  } catch (const std::exception& e) {
    err << "fit: " << e.what() << '\n';
    return exit_code::error;
  }
}

// ---------------------------------------------------------------------------
// Kernel benchmark

struct KernelTiming {
  std::size_t n_s = 0;
  std::size_t n_t = 0;
  std::size_t n = 0;
  std::size_t n_obs = 0;
  double median_factorize = 0.0;
  double median_selinv = 0.0;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// rows x cols with rows the largest divisor of n_s not above sqrt(n_s).
inline std::pair<std::size_t, std::size_t> lattice_shape(std::size_t n_s) {
  std::size_t rows = 1;
  for (std::size_t d = 1; d * d <= n_s; ++d) {
    if (n_s % d == 0) rows = d;
  }
  return {rows, n_s / rows};
}

/// Median wall time of factorization and selected inversion of Q_{x|y} for a
/// lattice model with n_obs random unit observations (n_obs = 0 uses Q_x).
inline KernelTiming time_kernels(std::size_t n_s, std::size_t n_t, std::size_t n_b, std::size_t n_obs,
                                 std::size_t repetitions, std::uint64_t seed) {
  using Clock = std::chrono::steady_clock;
  const auto [rows, cols] = lattice_shape(n_s);
  const auto spec = build_lattice_spec(rows, cols, n_t, n_b, 1e-3);
  const auto& lay = spec.layout;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> col_d(0, lay.n_latent_field() - 1);
  std::normal_distribution<double> nd;
  std::vector<Triplet> a;
  a.reserve(n_obs);
  for (std::size_t r = 0; r < n_obs; ++r) a.push_back({r, col_d(rng), 1.0});
  Matrix z(static_cast<Eigen::Index>(n_obs), static_cast<Eigen::Index>(n_b));
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = nd(rng);
  Vector y(static_cast<Eigen::Index>(n_obs));
  for (auto& v : y) v = nd(rng);
  const Dataset data(lay, std::move(y), std::move(a), std::move(z));

  const HyperParameters theta{};
  const auto q = assemble_conditional_precision(assemble_prior_precision(spec, theta), data, theta);

  std::vector<double> fac, sel;
  for (std::size_t r = 0; r < repetitions; ++r) {
    auto t0 = Clock::now();
    const auto factor = bta_factorize(q);
    auto t1 = Clock::now();
    const auto s = bta_selected_inverse(factor);
    auto t2 = Clock::now();
    if (!std::isfinite(s.tip.sum() + s.diag.back().sum())) throw std::runtime_error("non-finite inverse");
    fac.push_back(std::chrono::duration<double>(t1 - t0).count());
    sel.push_back(std::chrono::duration<double>(t2 - t1).count());
  }
  return {n_s, n_t, lay.n(), n_obs, median(fac), median(sel)};
}

inline void write_benchmark_header(std::ostream& out) {
  out << "n_s,n_t,n,n_o,median_seconds_factorize,median_seconds_selinv\n";
}

inline void write_benchmark_row(std::ostream& out, const KernelTiming& t) {
  out << t.n_s << ',' << t.n_t << ',' << t.n << ',' << t.n_obs << ','
      << text::format_double(t.median_factorize) << ',' << text::format_double(t.median_selinv) << '\n';
}

inline int cmd_benchmark(const std::string& config_path, const std::string& out_path, std::ostream& out,
                         std::ostream& err) {
  try {
    const auto cfg = io::BenchmarkConfig::load(config_path);
    std::ofstream file(out_path);
    if (!file) throw std::runtime_error("cannot open " + out_path + " for writing");
    write_benchmark_header(file);
    write_benchmark_header(out);
    for (auto ns : cfg.n_s) {
      for (auto nt : cfg.n_t) {
        for (double mult : cfg.obs_multipliers) {
          const auto n = ns * nt + cfg.n_b;
          const auto n_obs = static_cast<std::size_t>(std::llround(mult * static_cast<double>(n)));
          const auto row = time_kernels(ns, nt, cfg.n_b, n_obs, cfg.repetitions, cfg.seed);
          write_benchmark_row(file, row);
          write_benchmark_row(out, row);
        }
      }
    }
    return exit_code::ok;
  } catch (const std::bad_alloc&) {
    err << "benchmark: out of memory\n";
    return exit_code::error;
  } catch (const std::exception& e) {
    err << "benchmark: " << e.what() << '\n';
    return exit_code::error;
  }
}

inline int cmd_selftest(std::ostream& out) {
  return run_selftest(out, selftest_cases()) == 0 ? exit_code::ok : exit_code::error;
}

}  // namespace btainla::cli

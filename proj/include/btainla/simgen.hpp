#pragma once

// Seeded synthetic datasets y = Z beta + A u + eps on a lattice model.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "btainla/bta.hpp"
#include "btainla/model.hpp"

namespace btainla {

/// Draws u ~ N(0, Q^{-1}) from the factor L L^T = Q by solving L^T u = z.
template <class Rng>
Vector sample_gmrf(const BtaFactor& factor, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(static_cast<Eigen::Index>(factor.layout.n()));
  for (auto& v : z) v = normal(rng);
  return bta_backward_substitute(factor, std::move(z));
}

struct SimConfig {
  std::size_t rows = 8;
  std::size_t cols = 8;
  std::size_t n_t = 16;
  std::size_t n_b = 4;
  HyperParameters theta_true{std::numbers::ln2, 0.0, 0.0, 0.0};
  /// Drawn uniformly from [-5, 5] when empty.
  std::vector<double> beta_true;
  double obs_per_timestep_ratio = 2.0;
  std::uint64_t seed = 1;
  double prior_precision_fixed = 1e-3;

  /// Replaces the sampled latent field (length n_s * n_t) when set.
  std::optional<Vector> field_override;
  bool observation_noise = true;

  void validate() const {
    if (rows < 1 || cols < 1 || n_t < 1) throw std::invalid_argument("SimConfig: empty lattice");
    if (n_b < 1) throw std::invalid_argument("SimConfig: n_b must be >= 1 (intercept)");
    if (!(obs_per_timestep_ratio > 0.0)) throw std::invalid_argument("SimConfig: ratio must be > 0");
    if (!beta_true.empty() && beta_true.size() != n_b) {
      throw std::invalid_argument("SimConfig: beta_true must have n_b entries");
    }
    if (!theta_true.finite()) throw std::invalid_argument("SimConfig: theta_true must be finite");
  }

  std::size_t obs_per_timestep() const {
    return static_cast<std::size_t>(
        std::llround(obs_per_timestep_ratio * static_cast<double>(rows * cols)));
  }
};

struct SimTruth {
  HyperParameters theta;
  Vector beta;
  Vector field;  // u, length n_s * n_t
};

struct SimResult {
  ModelSpec spec;
  Dataset data;
  SimTruth truth;
};

namespace detail {

/// Covariate recipe for column j >= 1 at normalized site coordinates (x, y).
inline double covariate_feature(std::size_t j, double x, double y) {
  switch ((j - 1) % 6) {
    case 0: return x;
    case 1: return y;
    case 2: return std::sin(2.0 * std::numbers::pi * x);
    case 3: return std::sin(2.0 * std::numbers::pi * y);
    case 4: return x + y;
    default: return std::sin(std::numbers::pi * (x - y));
  }
}

}  // namespace detail

/// Samples u from the prior at theta_true, draws ratio * n_s observation
/// sites per time step uniformly (with replacement) among that step's nodes,
/// and builds Z = [1, standardized coordinate features + U(-0.1, 0.1)].
inline SimResult generate_dataset(const SimConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  const auto spec =
      build_lattice_spec(cfg.rows, cfg.cols, cfg.n_t, cfg.n_b, cfg.prior_precision_fixed);
  const auto& lay = spec.layout;
  const auto nst = static_cast<Eigen::Index>(lay.n_latent_field());
  const auto nb = static_cast<Eigen::Index>(lay.n_b);

  SimTruth truth;
  truth.theta = cfg.theta_true;
  truth.beta.resize(nb);
  if (cfg.beta_true.empty()) {
    std::uniform_real_distribution<double> beta_dist(-5.0, 5.0);
    for (auto& b : truth.beta) b = beta_dist(rng);
  } else {
    for (Eigen::Index i = 0; i < nb; ++i) truth.beta(i) = cfg.beta_true[static_cast<std::size_t>(i)];
  }

  const auto prior_factor = bta_factorize(assemble_prior_precision(spec, cfg.theta_true));
  const Vector sample = sample_gmrf(prior_factor, rng);
  if (cfg.field_override) {
    if (cfg.field_override->size() != nst) {
      throw std::invalid_argument("SimConfig: field_override must have n_s * n_t entries");
    }
    truth.field = *cfg.field_override;
  } else {
    truth.field = sample.head(nst);
  }

  const std::size_t per_step = cfg.obs_per_timestep();
  const std::size_t n_obs = per_step * lay.n_t;
  std::uniform_int_distribution<std::size_t> site_dist(0, lay.n_s - 1);
  std::vector<Triplet> a;
  a.reserve(n_obs);
  std::vector<std::size_t> sites(n_obs);
  for (std::size_t t = 0; t < lay.n_t; ++t) {
    for (std::size_t k = 0; k < per_step; ++k) {
      const std::size_t row = t * per_step + k;
      sites[row] = site_dist(rng);
      a.push_back({row, t * lay.n_s + sites[row], 1.0});
    }
  }

  const auto nobs = static_cast<Eigen::Index>(n_obs);
  Matrix z(nobs, nb);
  auto norm_coord = [](std::size_t v, std::size_t extent) {
    return extent > 1 ? static_cast<double>(v) / static_cast<double>(extent - 1) : 0.0;
  };
  for (Eigen::Index r = 0; r < nobs; ++r) {
    const std::size_t site = sites[static_cast<std::size_t>(r)];
    const double x = norm_coord(site % cfg.cols, cfg.cols);
    const double y = norm_coord(site / cfg.cols, cfg.rows);
    z(r, 0) = 1.0;
    for (Eigen::Index j = 1; j < nb; ++j) {
      z(r, j) = detail::covariate_feature(static_cast<std::size_t>(j), x, y);
    }
  }
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);
  for (Eigen::Index j = 1; j < nb; ++j) {
    auto col = z.col(j);
    if (nobs > 0) {
      const double mean = col.mean();
      col.array() -= mean;
      const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(nobs));
      if (sd > 0.0) col /= sd;
    }
    for (auto& v : col) v += jitter(rng);
  }

  Vector y = z * truth.beta;
  std::normal_distribution<double> noise(0.0, 1.0 / std::sqrt(cfg.theta_true.tau_y()));
  for (Eigen::Index r = 0; r < nobs; ++r) {
    y(r) += truth.field(static_cast<Eigen::Index>(a[static_cast<std::size_t>(r)].col));
    if (cfg.observation_noise) y(r) += noise(rng);
  }

  return SimResult{spec, Dataset(lay, std::move(y), std::move(a), std::move(z)), std::move(truth)};
}

}  // namespace btainla

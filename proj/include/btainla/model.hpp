#pragma once

// Spatial-temporal latent Gaussian model: hyperparameters, model operators,
// datasets, and assembly of the prior and conditional precision matrices in
// BTA form.
//
// The spatial-temporal prior precision is the Kronecker sum
//
//   Q_st(theta) = gamma_u * ( gamma_t * (J kron C) + I_nt kron (gamma_s^2 C + G) )
//
// with C a lumped mass (diagonal), G a stiffness / graph Laplacian and J the
// first-order random-walk precision in time. Fixed effects get independent
// Gaussian priors in the arrowhead tip.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Sparse>

#include "btainla/bta.hpp"

namespace btainla {

using SparseMatrix = Eigen::SparseMatrix<double>;
using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Hyperparameters on log scale.
struct HyperParameters {
  static constexpr std::size_t dim = 4;
  static constexpr std::array<std::string_view, dim> names{
      "log_tau_y", "log_gamma_s", "log_gamma_t", "log_gamma_u"};

  double log_tau_y = 0.0;    // observation noise precision
  double log_gamma_s = 0.0;  // spatial scale
  double log_gamma_t = 0.0;  // temporal scale
  double log_gamma_u = 0.0;  // overall field precision

  double tau_y() const { return std::exp(log_tau_y); }
  double gamma_s() const { return std::exp(log_gamma_s); }
  double gamma_t() const { return std::exp(log_gamma_t); }
  double gamma_u() const { return std::exp(log_gamma_u); }

  std::array<double, dim> to_array() const {
    return {log_tau_y, log_gamma_s, log_gamma_t, log_gamma_u};
  }

  static HyperParameters from_array(const std::array<double, dim>& a) {
    return {a[0], a[1], a[2], a[3]};
  }

  bool finite() const {
    for (double v : to_array()) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const HyperParameters&, const HyperParameters&) = default;
};

struct SpatialOperators {
  Vector mass;             // diagonal of C, strictly positive
  SparseMatrix stiffness;  // G, symmetric PSD with zero row sums
};

/// Symmetric tridiagonal temporal precision J.
struct TemporalOperator {
  Vector diagonal;      // n_t
  Vector off_diagonal;  // n_t - 1, entry k couples steps k and k+1
};

struct ModelSpec {
  /// Smoothness orders (alpha_t, alpha_s, alpha_e) of the space-time operator.
  static constexpr std::array<int, 3> smoothness_orders{1, 2, 1};

  BtaLayout layout;
  SpatialOperators spatial;
  TemporalOperator temporal;
  double prior_precision_fixed = 1.0;

  void validate() const {
    const auto ns = static_cast<Eigen::Index>(layout.n_s);
    const auto nt = static_cast<Eigen::Index>(layout.n_t);
    if (spatial.mass.size() != ns || spatial.stiffness.rows() != ns ||
        spatial.stiffness.cols() != ns) {
      throw DimensionMismatch("ModelSpec: spatial operators must be n_s x n_s");
    }
    if (temporal.diagonal.size() != nt || temporal.off_diagonal.size() != nt - 1) {
      throw DimensionMismatch("ModelSpec: temporal operator must be n_t x n_t");
    }
    if (!(spatial.mass.array() > 0.0).all() || !spatial.mass.allFinite()) {
      throw std::invalid_argument("ModelSpec: mass entries must be positive");
    }
    if (!(prior_precision_fixed > 0.0) || !std::isfinite(prior_precision_fixed)) {
      throw std::invalid_argument("ModelSpec: fixed-effect prior precision must be positive");
    }
    const SparseMatrix& g = spatial.stiffness;
    const double scale = 1.0 + g.norm();
    const SparseMatrix asym = g - SparseMatrix(g.transpose());
    const Vector row_sums_g = g * Vector::Ones(ns);
    if (asym.norm() > 1e-12 * scale ||
        (ns > 0 && row_sums_g.cwiseAbs().maxCoeff() > 1e-12 * scale)) {
      throw std::invalid_argument("ModelSpec: stiffness must be symmetric with zero row sums");
    }
    Vector row_sums = temporal.diagonal;
    row_sums.head(nt - 1) += temporal.off_diagonal;
    row_sums.tail(nt - 1) += temporal.off_diagonal;
    if (row_sums.cwiseAbs().maxCoeff() > 1e-12 * (1.0 + temporal.diagonal.cwiseAbs().maxCoeff())) {
      throw std::invalid_argument("ModelSpec: temporal operator must have zero row sums");
    }
  }
};

struct Triplet {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

class BandwidthViolation : public std::invalid_argument {
 public:
  explicit BandwidthViolation(std::size_t row)
      : std::invalid_argument("observation row " + std::to_string(row) +
                              " couples more than one time block"),
        row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// Observations y, projection A (n_o x n_s*n_t, sparse) and covariates Z
/// (n_o x n_b, dense).
class Dataset {
 public:
  Dataset(const BtaLayout& layout, Vector y, std::vector<Triplet> a, Matrix z)
      : layout_(layout), y_(std::move(y)), a_triplets_(std::move(a)), z_(std::move(z)) {
    const auto n_obs = y_.size();
    if (z_.rows() != n_obs || z_.cols() != static_cast<Eigen::Index>(layout_.n_b)) {
      throw DimensionMismatch("Dataset: Z must be n_o x n_b");
    }
    if (!y_.allFinite() || !z_.allFinite()) {
      throw std::invalid_argument("Dataset: non-finite values");
    }
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(a_triplets_.size());
    for (const auto& t : a_triplets_) {
      if (t.row >= static_cast<std::size_t>(n_obs) || t.col >= layout_.n_latent_field()) {
        throw DimensionMismatch("Dataset: A triplet (" + std::to_string(t.row) + "," +
                                std::to_string(t.col) + ") out of range");
      }
      if (!std::isfinite(t.value)) throw std::invalid_argument("Dataset: non-finite A value");
      trips.emplace_back(static_cast<int>(t.row), static_cast<int>(t.col), t.value);
    }
    a_.resize(n_obs, static_cast<Eigen::Index>(layout_.n_latent_field()));
    a_.setFromTriplets(trips.begin(), trips.end());
  }

  /// Dataset without observations.
  static Dataset empty(const BtaLayout& layout) {
    return Dataset(layout, Vector(0), {}, Matrix(0, static_cast<Eigen::Index>(layout.n_b)));
  }

  const BtaLayout& layout() const noexcept { return layout_; }
  std::size_t n_obs() const noexcept { return static_cast<std::size_t>(y_.size()); }
  const Vector& y() const noexcept { return y_; }
  const std::vector<Triplet>& a_triplets() const noexcept { return a_triplets_; }
  const SparseRowMatrix& a() const noexcept { return a_; }
  const Matrix& z() const noexcept { return z_; }

  /// A_tilde x = A u + Z beta for x = (u, beta).
  Vector project(const Vector& x) const {
    detail::check_vector(layout_, x);
    const auto nst = static_cast<Eigen::Index>(layout_.n_latent_field());
    Vector out = a_ * x.head(nst);
    if (z_.cols() > 0) out.noalias() += z_ * x.tail(z_.cols());
    return out;
  }

 private:
  BtaLayout layout_;
  Vector y_;
  std::vector<Triplet> a_triplets_;
  SparseRowMatrix a_;
  Matrix z_;
};

/// Q_x(theta): block tridiagonal spatial-temporal part, zero arrow blocks and
/// an isotropic fixed-effect tip.
inline BtaMatrix assemble_prior_precision(const ModelSpec& spec, const HyperParameters& theta) {
  const auto& lay = spec.layout;
  const double gu = theta.gamma_u();
  const double gt = theta.gamma_t();
  const double gs2 = theta.gamma_s() * theta.gamma_s();

  const Matrix g = Matrix(spec.spatial.stiffness);
  const auto& c = spec.spatial.mass;
  // gamma_u * (gamma_s^2 C + G), shared by every diagonal block.
  Matrix k = gu * g;
  k.diagonal() += gu * gs2 * c;

  BtaMatrix q(lay);
  for (std::size_t i = 0; i < lay.n_t; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    q.D[i] = k;
    q.D[i].diagonal() += (gu * gt * spec.temporal.diagonal(ii)) * c;
    if (i + 1 < lay.n_t) {
      q.E[i].diagonal() = (gu * gt * spec.temporal.off_diagonal(ii)) * c;
    }
  }
  q.T.diagonal().setConstant(spec.prior_precision_fixed);
  return q;
}

/// Q_{x|y} = Q_x + tau_y * A_tilde^T A_tilde with A_tilde = [A, Z]. A^T A
/// scatters into D blocks, Z^T A into F blocks and Z^T Z into the tip.
inline BtaMatrix assemble_conditional_precision(const BtaMatrix& prior, const Dataset& data,
                                                const HyperParameters& theta) {
  if (!(prior.layout == data.layout())) {
    throw DimensionMismatch("conditional precision: dataset layout differs from prior");
  }
  const auto& lay = prior.layout;
  const double tau = theta.tau_y();
  const auto& a = data.a();
  const auto& z = data.z();
  const std::size_t ns = lay.n_s;

  BtaMatrix q = prior;
  std::vector<std::pair<Eigen::Index, double>> entries;
  for (Eigen::Index r = 0; r < a.outerSize(); ++r) {
    entries.clear();
    std::size_t block = 0;
    for (SparseRowMatrix::InnerIterator it(a, r); it; ++it) {
      const auto col = static_cast<std::size_t>(it.col());
      if (entries.empty()) {
        block = col / ns;
      } else if (col / ns != block) {
        throw BandwidthViolation(static_cast<std::size_t>(r));
      }
      entries.emplace_back(static_cast<Eigen::Index>(col - block * ns), it.value());
    }
    if (entries.empty()) continue;
    Matrix& d = q.D[block];
    for (const auto& [ci, vi] : entries) {
      for (const auto& [cj, vj] : entries) d(ci, cj) += tau * vi * vj;
    }
    if (z.cols() > 0) {
      Matrix& f = q.F[block];
      for (const auto& [cj, vj] : entries) f.col(cj) += (tau * vj) * z.row(r).transpose();
    }
  }
  if (z.cols() > 0 && z.rows() > 0) q.T.noalias() += tau * (z.transpose() * z);
  return q;
}

/// b = tau_y * A_tilde^T y; the conditional mean solves Q_{x|y} x* = b.
inline Vector conditional_mean_rhs(const Dataset& data, const HyperParameters& theta) {
  const auto& lay = data.layout();
  const double tau = theta.tau_y();
  const auto nst = static_cast<Eigen::Index>(lay.n_latent_field());
  Vector b(static_cast<Eigen::Index>(lay.n()));
  b.head(nst) = tau * (data.a().transpose() * data.y());
  if (lay.n_b > 0) {
    b.tail(static_cast<Eigen::Index>(lay.n_b)) = tau * (data.z().transpose() * data.y());
  }
  return b;
}

/// Path-graph Laplacian on `n` nodes as a temporal operator.
inline TemporalOperator path_laplacian(std::size_t n) {
  TemporalOperator j;
  const auto nn = static_cast<Eigen::Index>(n);
  j.diagonal = Vector::Constant(nn, 2.0);
  j.off_diagonal = Vector::Constant(nn - 1, -1.0);
  j.diagonal(0) = 1.0;
  j.diagonal(nn - 1) = 1.0;
  if (n == 1) j.diagonal(0) = 0.0;
  return j;
}

/// 4-neighbour graph Laplacian of a rows x cols lattice, nodes numbered
/// row-major.
inline SparseMatrix lattice_laplacian(std::size_t rows, std::size_t cols) {
  const auto n = static_cast<int>(rows * cols);
  std::vector<Eigen::Triplet<double>> trips;
  Vector degree = Vector::Zero(n);
  auto link = [&](std::size_t a, std::size_t b) {
    trips.emplace_back(static_cast<int>(a), static_cast<int>(b), -1.0);
    trips.emplace_back(static_cast<int>(b), static_cast<int>(a), -1.0);
    degree(static_cast<Eigen::Index>(a)) += 1.0;
    degree(static_cast<Eigen::Index>(b)) += 1.0;
  };
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t node = r * cols + c;
      if (c + 1 < cols) link(node, node + 1);
      if (r + 1 < rows) link(node, node + cols);
    }
  }
  for (int i = 0; i < n; ++i) trips.emplace_back(i, i, degree(i));
  SparseMatrix g(n, n);
  g.setFromTriplets(trips.begin(), trips.end());
  return g;
}

/// Unit lumped mass, lattice Laplacian in space, path Laplacian in time.
inline ModelSpec build_lattice_spec(std::size_t rows, std::size_t cols, std::size_t n_t,
                                    std::size_t n_b, double prior_precision_fixed) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("lattice needs rows, cols >= 1");
  ModelSpec spec;
  spec.layout = BtaLayout(rows * cols, n_t, n_b);
  spec.spatial.mass = Vector::Ones(static_cast<Eigen::Index>(rows * cols));
  spec.spatial.stiffness = lattice_laplacian(rows, cols);
  spec.temporal = path_laplacian(n_t);
  spec.prior_precision_fixed = prior_precision_fixed;
  spec.validate();
  return spec;
}

}  // namespace btainla

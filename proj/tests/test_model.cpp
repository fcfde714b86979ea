#include <random>

#include <gtest/gtest.h>

#include "btainla/model.hpp"
#include "btainla/oracle/dense_pipeline.hpp"

namespace btainla {
namespace {

ModelSpec scalar_spec() {
  ModelSpec spec;
  spec.layout = BtaLayout(1, 1, 1);
  spec.spatial.mass = Vector::Ones(1);
  spec.spatial.stiffness = SparseMatrix(1, 1);
  spec.temporal = path_laplacian(1);
  spec.prior_precision_fixed = 1.0;
  spec.validate();
  return spec;
}

TEST(LatticeSpec, SmallLattices) {
  EXPECT_EQ(Matrix(lattice_laplacian(1, 1)), Matrix::Zero(1, 1));
  Matrix edge(2, 2);
  edge << 1, -1, -1, 1;
  EXPECT_EQ(Matrix(lattice_laplacian(1, 2)), edge);

  const Matrix g = Matrix(lattice_laplacian(3, 3));
  EXPECT_TRUE(g.rowwise().sum().isZero());
  Vector degrees(9);
  degrees << 2, 3, 2, 3, 4, 3, 2, 3, 2;
  EXPECT_EQ(Vector(g.diagonal()), degrees);
}

TEST(LatticeSpec, BuildsConsistentSpec) {
  const auto spec = build_lattice_spec(2, 3, 4, 2, 0.5);
  EXPECT_EQ(spec.layout, BtaLayout(6, 4, 2));
  EXPECT_EQ(Matrix(oracle::dense_temporal(spec.temporal)),
            Matrix((Matrix(4, 4) << 1, -1, 0, 0, -1, 2, -1, 0, 0, -1, 2, -1, 0, 0, -1, 1).finished()));
  EXPECT_THROW(build_lattice_spec(0, 3, 4, 2, 1.0), std::invalid_argument);
}

TEST(ModelSpec, ValidateRejectsBadOperators) {
  auto spec = build_lattice_spec(2, 2, 3, 1, 1.0);
  spec.spatial.mass(1) = 0.0;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  spec = build_lattice_spec(2, 2, 3, 1, 1.0);
  spec.temporal.diagonal(0) = 5.0;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  spec = build_lattice_spec(2, 2, 3, 1, 1.0);
  spec.temporal.off_diagonal.resize(1);
  EXPECT_THROW(spec.validate(), DimensionMismatch);
}

TEST(PriorPrecision, ScalarCase) {
  const auto q = assemble_prior_precision(scalar_spec(), HyperParameters{});
  EXPECT_EQ(to_dense(q), Matrix::Identity(2, 2));
}

TEST(PriorPrecision, VanishingTemporalScaleDecouplesTime) {
  const auto spec = build_lattice_spec(2, 2, 4, 1, 1.0);
  HyperParameters theta;
  theta.log_gamma_t = -1000.0;  // gamma_t underflows to exactly 0
  const auto q = assemble_prior_precision(spec, theta);
  for (const auto& e : q.E) EXPECT_TRUE(e.isZero(0.0));
  for (const auto& f : q.F) EXPECT_TRUE(f.isZero(0.0));
}

TEST(PriorPrecision, MatchesDenseKroneckerSum) {
  const auto spec = build_lattice_spec(1, 2, 3, 1, 2.5);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 10; ++trial) {
    const HyperParameters theta{u(rng), u(rng), u(rng), u(rng)};
    const Matrix got = to_dense(assemble_prior_precision(spec, theta));
    const Matrix want = oracle::dense_prior_precision(spec, theta);
    EXPECT_LE((got - want).cwiseAbs().maxCoeff(), 1e-14 * std::max(1.0, want.cwiseAbs().maxCoeff()));
  }
}

TEST(ConditionalPrecision, NoDataLeavesPriorUnchanged) {
  const auto spec = build_lattice_spec(2, 2, 3, 2, 1.0);
  const auto qx = assemble_prior_precision(spec, HyperParameters{});
  const auto qxy = assemble_conditional_precision(qx, Dataset::empty(spec.layout), HyperParameters{});
  EXPECT_EQ(to_dense(qxy), to_dense(qx));
}

TEST(ConditionalPrecision, UnitObservationIncrementsOneDiagonalEntry) {
  const auto spec = build_lattice_spec(2, 2, 3, 1, 1.0);
  const std::size_t j = 6;  // node 2 of time block 1
  const Dataset data(spec.layout, Vector::Ones(1), {{0, j, 1.0}}, Matrix::Zero(1, 1));
  const auto qx = assemble_prior_precision(spec, HyperParameters{});
  const Matrix diff = to_dense(assemble_conditional_precision(qx, data, HyperParameters{})) - to_dense(qx);
  Matrix want = Matrix::Zero(13, 13);
  want(6, 6) = 1.0;
  EXPECT_EQ(diff, want);
}

TEST(ConditionalPrecision, MatchesNaiveDenseAssembly) {
  const auto spec = build_lattice_spec(2, 2, 3, 2, 0.7);
  std::mt19937_64 rng(99);
  const auto data = oracle::random_dataset(spec.layout, 24, rng);
  const HyperParameters theta{0.3, -0.2, 0.5, 0.1};
  const Matrix got =
      to_dense(assemble_conditional_precision(assemble_prior_precision(spec, theta), data, theta));
  const Matrix want = oracle::dense_conditional_precision(spec, data, theta);
  EXPECT_LE((got - want).cwiseAbs().maxCoeff(), 1e-13 * std::max(1.0, want.cwiseAbs().maxCoeff()));
}

TEST(ConditionalPrecision, RowSpanningTwoTimeBlocksIsRejected) {
  const auto spec = build_lattice_spec(2, 2, 3, 1, 1.0);
  const Dataset data(spec.layout, Vector::Ones(2), {{0, 1, 1.0}, {1, 2, 1.0}, {1, 5, 1.0}},
                     Matrix::Ones(2, 1));
  const auto qx = assemble_prior_precision(spec, HyperParameters{});
  try {
    assemble_conditional_precision(qx, data, HyperParameters{});
    FAIL() << "expected BandwidthViolation";
  } catch (const BandwidthViolation& e) {
    EXPECT_EQ(e.row(), 1u);
  }
}

TEST(ConditionalPrecision, LayoutIndependentOfObservationCount) {
  const auto spec = build_lattice_spec(3, 2, 4, 2, 1.0);
  std::mt19937_64 rng(12);
  const auto qx = assemble_prior_precision(spec, HyperParameters{});
  const auto small = assemble_conditional_precision(qx, oracle::random_dataset(spec.layout, 20, rng), {});
  const auto large = assemble_conditional_precision(qx, oracle::random_dataset(spec.layout, 40, rng), {});
  EXPECT_EQ(small.layout, large.layout);
  EXPECT_EQ(small.D.size(), large.D.size());
  EXPECT_EQ(small.F[0].rows(), large.F[0].rows());
}

TEST(ConditionalPrecision, DiagonalMonotoneInNoisePrecision) {
  const auto spec = build_lattice_spec(3, 3, 3, 2, 1.0);
  std::mt19937_64 rng(5);
  const auto data = oracle::random_dataset(spec.layout, 30, rng);
  HyperParameters lo{-1.0, 0.0, 0.0, 0.0};
  HyperParameters hi{1.0, 0.0, 0.0, 0.0};
  const auto qx = assemble_prior_precision(spec, lo);
  const Vector d_lo = to_dense(assemble_conditional_precision(qx, data, lo)).diagonal();
  const Vector d_hi = to_dense(assemble_conditional_precision(qx, data, hi)).diagonal();
  EXPECT_TRUE(((d_hi - d_lo).array() >= 0.0).all());
}

// Structural nonzeros of A_tilde^T A_tilde never leave the BTA pattern.
TEST(ConditionalPrecision, DenseProductStaysInsideBtaPattern) {
  const auto spec = build_lattice_spec(2, 3, 4, 2, 1.0);
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const auto data = oracle::random_dataset(spec.layout, 50, rng);
    const Matrix at = oracle::dense_projection(data);
    const Matrix ata = at.transpose() * at;
    for (Eigen::Index r = 0; r < 24; ++r) {
      for (Eigen::Index c = 0; c < 24; ++c) {
        if (std::abs(r / 6 - c / 6) > 1) {
          EXPECT_EQ(ata(r, c), 0.0);
        }
      }
    }
  }
}

TEST(ConditionalMeanRhs, ZeroDataAndUnitObservation) {
  const auto spec = build_lattice_spec(2, 2, 2, 1, 1.0);
  std::mt19937_64 rng(1);
  const auto base = oracle::random_dataset(spec.layout, 6, rng);
  const Dataset zero_y(spec.layout, Vector::Zero(6), base.a_triplets(), base.z());
  EXPECT_TRUE(conditional_mean_rhs(zero_y, HyperParameters{}).isZero(0.0));

  const Dataset unit(spec.layout, Vector::Ones(1), {{0, 3, 1.0}}, Matrix::Zero(1, 1));
  Vector e = Vector::Zero(9);
  e(3) = 1.0;
  EXPECT_EQ(conditional_mean_rhs(unit, HyperParameters{}), e);
}

TEST(ConditionalMeanRhs, ModeMatchesDenseGaussianConditioning) {
  const auto spec = build_lattice_spec(2, 3, 3, 2, 0.5);
  std::mt19937_64 rng(31);
  const InlaProblem problem{spec, oracle::random_dataset(spec.layout, 30, rng), {}};
  const HyperParameters theta{0.4, 0.2, -0.3, 0.1};
  const auto factor = bta_factorize(
      assemble_conditional_precision(assemble_prior_precision(spec, theta), problem.data, theta));
  const Vector mode = bta_solve(factor, conditional_mean_rhs(problem.data, theta));
  const auto want = oracle::dense_conditioning(problem, theta);
  EXPECT_LE((mode - want.means).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Dataset, RejectsInconsistentInput) {
  const BtaLayout lay(2, 2, 1);
  EXPECT_THROW(Dataset(lay, Vector::Ones(2), {}, Matrix::Ones(3, 1)), DimensionMismatch);
  EXPECT_THROW(Dataset(lay, Vector::Ones(1), {{0, 4, 1.0}}, Matrix::Ones(1, 1)), DimensionMismatch);
  EXPECT_THROW(Dataset(lay, Vector::Ones(1), {{1, 0, 1.0}}, Matrix::Ones(1, 1)), DimensionMismatch);
  Vector bad = Vector::Ones(1);
  bad(0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(Dataset(lay, bad, {}, Matrix::Ones(1, 1)), std::invalid_argument);
}

TEST(ModelProperties, PrecisionsAreSpdAcrossTheta) {
  const auto spec = build_lattice_spec(3, 3, 4, 2, 1e-3);
  std::mt19937_64 rng(2718);
  const auto data = oracle::random_dataset(spec.layout, 60, rng);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    const HyperParameters theta{u(rng), u(rng), u(rng), u(rng)};
    const auto qx = assemble_prior_precision(spec, theta);
    EXPECT_NO_THROW(bta_factorize(qx));
    EXPECT_NO_THROW(bta_factorize(assemble_conditional_precision(qx, data, theta)));
  }
}

}  // namespace
}  // namespace btainla

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "btainla/io.hpp"
#include "btainla/oracle/dense_pipeline.hpp"

namespace btainla {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("btainla_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

io::KeyValueFile parse(const std::string& s) {
  std::istringstream in(s);
  return io::KeyValueFile::parse(in, "cfg");
}

TEST(KeyValueFile, CommentsBlankLinesAndLists) {
  const auto kv = parse("# header\n\nrows = 3  # trailing\ntheta0 = 0.1, -0.2 0.3 0.4\n");
  EXPECT_EQ(kv.get_size("rows", 0), 3u);
  EXPECT_EQ(*kv.get_doubles("theta0", 4), (std::vector<double>{0.1, -0.2, 0.3, 0.4}));
  EXPECT_EQ(kv.get_size("cols", 7), 7u);
}

TEST(KeyValueFile, ErrorsCarryLineNumbers) {
  try {
    parse("rows = 3\n\nbogus line\n");
    FAIL();
  } catch (const text::ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  try {
    io::RunConfig::from(parse("rows = 3\ncols = 2\nn_tt = 4\n"));
    FAIL();
  } catch (const text::ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("n_tt"), std::string::npos);
  }
  try {
    io::RunConfig::from(parse("rows = 3\ntheta0 = 1 2 3\n"));
    FAIL();
  } catch (const text::ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse("rows = 1\nrows = 2\n"), text::ParseError);
  EXPECT_THROW(io::RunConfig::from(parse("rows = -1\n")), text::ParseError);
  EXPECT_THROW(io::RunConfig::from(parse("dims = 10 16 4\n")), text::ParseError);
}

TEST(RunConfig, DefaultsAndOverrides) {
  const auto c = io::RunConfig::from(parse(
      "rows = 4\ncols = 5\nn_t = 6\nn_b = 2\ndims = 20 6 2\nmax_iter = 17\nprior_sds = 2 2 2 2\n"
      "workers = 3\nfd_step_hessian = 0.002\nbeta_true = 1 -1\n"));
  EXPECT_EQ(c.layout(), BtaLayout(20, 6, 2));
  EXPECT_EQ(c.inference_options().bfgs.max_iter, 17u);
  EXPECT_EQ(c.inference_options().bfgs.fd_step, 1e-5);
  EXPECT_EQ(c.inference_options().fd_step_hessian, 0.002);
  EXPECT_EQ(c.prior.sds[3], 2.0);
  EXPECT_EQ(c.workers, 3u);
  EXPECT_EQ(c.sim_config().beta_true, (std::vector<double>{1.0, -1.0}));
}

TEST(BenchmarkConfig, ParsesLadder) {
  const auto c = io::BenchmarkConfig::from(parse("n_s = 16\nn_t = 4, 8, 16\nrepetitions = 5\n"));
  EXPECT_EQ(c.n_t, (std::vector<std::size_t>{4, 8, 16}));
  EXPECT_THROW(io::BenchmarkConfig::from(parse("repetitions = 3\n")), text::ParseError);
  EXPECT_THROW(io::BenchmarkConfig::from(parse("rows = 3\n")), text::ParseError);
}

TEST(Csv, HeaderDetectionAndErrors) {
  std::istringstream with_header("a,b\n1,2\n\n3,4.5\n");
  const auto t = io::read_csv(with_header, "x");
  EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][1], 4.5);
  EXPECT_EQ(t.lines[1], 4u);

  std::istringstream bare("1,2\n3,4\n");
  EXPECT_TRUE(io::read_csv(bare, "x").header.empty());

  std::istringstream ragged("a,b\n1,2\n3\n");
  try {
    io::read_csv(ragged, "x");
    FAIL();
  } catch (const text::ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::istringstream bad("a,b\n1,2\n3,zz\n");
  EXPECT_THROW(io::read_csv(bad, "x"), text::ParseError);
}

TEST(DatasetFiles, RoundTripIsExact) {
  const auto spec = build_lattice_spec(3, 2, 4, 3, 1.0);
  std::mt19937_64 rng(19);
  const auto data = oracle::random_dataset(spec.layout, 37, rng);
  const auto dir = scratch("dataset");
  io::write_dataset(dir, data);
  const auto back = io::read_dataset(dir, spec.layout);
  EXPECT_EQ(back.y(), data.y());
  EXPECT_EQ(back.z(), data.z());
  ASSERT_EQ(back.a_triplets().size(), data.a_triplets().size());
  for (std::size_t k = 0; k < data.a_triplets().size(); ++k) {
    EXPECT_EQ(back.a_triplets()[k].row, data.a_triplets()[k].row);
    EXPECT_EQ(back.a_triplets()[k].col, data.a_triplets()[k].col);
    EXPECT_EQ(back.a_triplets()[k].value, data.a_triplets()[k].value);
  }
}

TEST(DatasetFiles, ReportsOffendingLine) {
  const auto spec = build_lattice_spec(2, 2, 2, 1, 1.0);
  std::mt19937_64 rng(2);
  const auto dir = scratch("bad_dataset");
  io::write_dataset(dir, oracle::random_dataset(spec.layout, 5, rng));
  {
    std::ofstream a(dir / "A.csv", std::ios::app);
    a << "2,99,1.0\n";
  }
  try {
    io::read_dataset(dir, spec.layout);
    FAIL();
  } catch (const text::ParseError& e) {
    EXPECT_GT(e.line(), 1u);
    EXPECT_NE(std::string(e.what()).find("A.csv"), std::string::npos);
  }
  io::write_dataset(dir, oracle::random_dataset(spec.layout, 5, rng));
  EXPECT_THROW(io::read_dataset(dir, BtaLayout(4, 2, 2)), text::ParseError);  // Z has 1 column
}

TEST(DatasetFiles, OptionalSpatialOperators) {
  const auto dir = scratch("operators");
  EXPECT_FALSE(io::read_spatial_operators(dir, 2).has_value());
  {
    std::ofstream c(dir / "C.csv");
    c << "row,col,value\n0,0,2\n1,1,3\n";
    std::ofstream g(dir / "G.csv");
    g << "row,col,value\n0,0,1\n0,1,-1\n1,0,-1\n1,1,1\n";
  }
  const auto ops = io::read_spatial_operators(dir, 2);
  ASSERT_TRUE(ops.has_value());
  EXPECT_EQ(ops->mass, Vector((Vector(2) << 2.0, 3.0).finished()));
  EXPECT_EQ(Matrix(ops->stiffness)(0, 1), -1.0);
  {
    std::ofstream c(dir / "C.csv");
    c << "0,1,2\n";
  }
  EXPECT_THROW(io::read_spatial_operators(dir, 2), std::runtime_error);
}

TEST(TruthFile, RoundTrip) {
  SimTruth truth;
  truth.theta = {0.1 / 3.0, -1.0, 2.0, std::acos(-1.0)};
  truth.beta = (Vector(3) << 1.0 / 7.0, -2.0, 1e-300).finished();
  const auto dir = scratch("truth");
  io::write_truth(dir / "truth.csv", truth);
  const auto back = io::read_truth(dir / "truth.csv");
  EXPECT_EQ(back.theta, truth.theta);
  EXPECT_EQ(back.beta, truth.beta);
}

TEST(TimingTable, AllStagesAndFractions) {
  StageTimers t;
  t.add(stage::assembly, 1.0);
  t.add(stage::factorization_denominator, 3.0, 2);
  std::ostringstream out;
  io::write_timing_table(out, t);
  const std::string s = out.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "stage,count,total_seconds,fraction");
  EXPECT_NE(s.find("assembly,1,1,0.25\n"), std::string::npos);
  EXPECT_NE(s.find("factorization_denominator,2,3,0.75\n"), std::string::npos);
  EXPECT_NE(s.find("selected_inversion,0,0,0\n"), std::string::npos);
}

}  // namespace
}  // namespace btainla

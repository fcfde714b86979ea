#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "btainla/cli.hpp"

namespace btainla {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("btainla_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream out(p);
  out << body;
}

std::size_t data_rows(const fs::path& p) {
  return io::load_csv(p).rows.size();
}

const char* kSmallConfig =
    "rows = 3\ncols = 3\nn_t = 4\nn_b = 2\nobs_ratio = 2\nseed = 5\n";

TEST(ResolveWorkers, Precedence) {
  ::unsetenv("BTA_INLA_WORKERS");
  EXPECT_EQ(cli::resolve_workers(3, 5), 3u);
  EXPECT_EQ(cli::resolve_workers(std::nullopt, 5), 5u);
  EXPECT_EQ(cli::resolve_workers(std::nullopt, 0), default_worker_count(4));
  ::setenv("BTA_INLA_WORKERS", "2", 1);
  EXPECT_EQ(cli::resolve_workers(std::nullopt, 5), 2u);
  EXPECT_EQ(cli::resolve_workers(7, 5), 7u);
  ::setenv("BTA_INLA_WORKERS", "zero", 1);
  EXPECT_THROW(cli::resolve_workers(std::nullopt, 0), std::invalid_argument);
  ::unsetenv("BTA_INLA_WORKERS");
}

TEST(Cli, SimulateThenFit) {
  const auto dir = scratch("fit");
  write_file(dir / "run.cfg", kSmallConfig);
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_simulate((dir / "run.cfg").string(), (dir / "data").string(), out, err), 0) << err.str();
  for (const char* f : {"y.csv", "A.csv", "Z.csv", "truth.csv"}) EXPECT_TRUE(fs::exists(dir / "data" / f)) << f;
  EXPECT_EQ(data_rows(dir / "data" / "y.csv"), 18u * 4u);

  const int code = cli::cmd_fit((dir / "run.cfg").string(), (dir / "data").string(), (dir / "report").string(), 2,
                                out, err);
  EXPECT_EQ(code, 0) << err.str();
  EXPECT_EQ(data_rows(dir / "report" / "latent.csv"), 9u * 4u + 2u);
  EXPECT_EQ(io::load_csv(dir / "report" / "latent.csv").header,
            (std::vector<std::string>{"index", "mean", "sd"}));
  EXPECT_TRUE(fs::exists(dir / "report" / "timing.txt"));
  EXPECT_GT(data_rows(dir / "report" / "trace.csv"), 0u);

  std::ifstream hyper(dir / "report" / "hyper.csv");
  std::string line;
  std::getline(hyper, line);
  EXPECT_EQ(line, "name,mode_log,sd_log,mode_natural");
  std::size_t rows = 0;
  while (std::getline(hyper, line)) rows += !line.empty();
  EXPECT_EQ(rows, 4u);
}

TEST(Cli, ZeroIterationsExitsWithTwo) {
  const auto dir = scratch("maxiter");
  write_file(dir / "run.cfg", std::string(kSmallConfig) + "max_iter = 0\ntheta0 = 0.25 0 0 0\n");
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_simulate((dir / "run.cfg").string(), (dir / "data").string(), out, err), 0);
  EXPECT_EQ(cli::cmd_fit((dir / "run.cfg").string(), (dir / "data").string(), (dir / "report").string(), 1, out,
                         err),
            2);
  EXPECT_EQ(data_rows(dir / "report" / "trace.csv"), 0u);
  std::ifstream hyper(dir / "report" / "hyper.csv");
  std::string header, first;
  std::getline(hyper, header);
  std::getline(hyper, first);
  EXPECT_EQ(first.substr(0, first.find(',', 10)), "log_tau_y,0.25");
}

TEST(Cli, MalformedInputsExitWithOne) {
  const auto dir = scratch("bad");
  write_file(dir / "run.cfg", "rows = 3\nunknown_key = 1\n");
  std::ostringstream out, err;
  EXPECT_EQ(cli::cmd_simulate((dir / "run.cfg").string(), (dir / "data").string(), out, err), 1);
  EXPECT_NE(err.str().find("run.cfg:2"), std::string::npos);

  write_file(dir / "ok.cfg", kSmallConfig);
  fs::create_directories(dir / "data");
  write_file(dir / "data" / "y.csv", "y\n1\nnot-a-number\n");
  err.str("");
  EXPECT_EQ(cli::cmd_fit((dir / "ok.cfg").string(), (dir / "data").string(), (dir / "r").string(), 1, out, err), 1);
  EXPECT_NE(err.str().find("y.csv:3"), std::string::npos);
}

TEST(Cli, BenchmarkOneRung) {
  const auto dir = scratch("bench");
  write_file(dir / "bench.cfg", "n_s = 9\nn_t = 4\nn_b = 2\nrepetitions = 5\n");
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_benchmark((dir / "bench.cfg").string(), (dir / "b.csv").string(), out, err), 0);
  const auto t = io::load_csv(dir / "b.csv");
  EXPECT_EQ(t.header.front(), "n_s");
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][2], 9.0 * 4.0 + 2.0);
  EXPECT_GT(t.rows[0][4], 0.0);
}

TEST(Cli, LatticeShape) {
  EXPECT_EQ(cli::lattice_shape(64), (std::pair<std::size_t, std::size_t>{8, 8}));
  EXPECT_EQ(cli::lattice_shape(12), (std::pair<std::size_t, std::size_t>{3, 4}));
  EXPECT_EQ(cli::lattice_shape(7), (std::pair<std::size_t, std::size_t>{1, 7}));
}

TEST(Cli, SelftestPasses) {
  std::ostringstream out;
  EXPECT_EQ(cli::cmd_selftest(out), 0) << out.str();
  EXPECT_NE(out.str().find("expected failure at block 2"), std::string::npos);
}

}  // namespace
}  // namespace btainla

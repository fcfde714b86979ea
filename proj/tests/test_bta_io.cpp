#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "btainla/bta_io.hpp"
#include "btainla/oracle/dense_oracle.hpp"

namespace btainla {
namespace {

TEST(BtaText, RoundTripIsLossless) {
  std::mt19937_64 rng(31);
  for (const BtaLayout lay : {BtaLayout(3, 4, 2), BtaLayout(2, 1, 0), BtaLayout(1, 3, 1)}) {
    const auto q = oracle::random_spd_bta(lay, rng, 6.0);
    std::stringstream ss;
    write_bta(ss, q);
    const auto back = read_bta(ss);
    EXPECT_EQ(back.layout, q.layout);
    EXPECT_EQ(to_dense(back), to_dense(q));
  }
}

TEST(BtaText, HeaderAndBlankLineLayout) {
  BtaMatrix q(BtaLayout(1, 2, 1));
  q.D[0](0, 0) = 2;
  q.D[1](0, 0) = 2;
  q.E[0](0, 0) = -1;
  q.F[1](0, 0) = 0.5;
  q.T(0, 0) = 3;
  std::stringstream ss;
  write_bta(ss, q);
  EXPECT_EQ(ss.str(), "bta 1 2 1\n2\n\n2\n\n-1\n\n0\n\n0.5\n\n3\n");
}

TEST(BtaText, ErrorsCarryLineNumbers) {
  std::stringstream bad_header("bta 2 x 1\n");
  EXPECT_THROW(read_bta(bad_header), text::ParseError);

  std::stringstream short_row("bta 2 1 0\n1 0\n0\n");
  try {
    read_bta(short_row, "m.bta");
    FAIL();
  } catch (const text::ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("m.bta:3"), std::string::npos);
  }

  std::stringstream truncated("bta 1 2 0\n1\n");
  EXPECT_THROW(read_bta(truncated), text::ParseError);

  std::stringstream bad_number("bta 1 1 0\n1.0.0\n");
  EXPECT_THROW(read_bta(bad_number), text::ParseError);
}

}  // namespace
}  // namespace btainla

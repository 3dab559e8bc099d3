#include "paramint/partition.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace paramint;

TEST(CellAnchor, Examples) {
  const Point a = cell_anchor(0, 1, 2);
  EXPECT_EQ(a[0], 0.0);
  EXPECT_EQ(a[1], 0.0);
  EXPECT_EQ(cell_anchor(1, 2, 1)[0], 0.5);
  const Point b = cell_anchor(1, 4, 2);
  EXPECT_EQ(b[0], 0.5);
  EXPECT_EQ(b[1], 0.5);
  // last axis fastest
  const Point c = cell_anchor(1, 2, 2);
  EXPECT_EQ(c[0], 0.0);
  EXPECT_EQ(c[1], 0.5);
}

TEST(CellAnchor, RejectsBadIndex) {
  EXPECT_THROW(cell_anchor(1, 0, 1), std::out_of_range);
  EXPECT_THROW(cell_anchor(1, 3, 1), std::out_of_range);
  EXPECT_THROW(cell_anchor(2, 17, 2), std::out_of_range);
}

TEST(SplitIndex, Examples) {
  EXPECT_EQ(split_index(1, 1, 1, 1), (std::pair<std::int64_t, std::int64_t>{1, 1}));
  EXPECT_EQ(split_index(3, 1, 1, 1), (std::pair<std::int64_t, std::int64_t>{2, 1}));
  for (int l = 0; l <= 3; ++l) {
    for (int d1 = 1; d1 <= 2; ++d1) {
      for (int d2 = 1; d2 <= 2; ++d2) {
        const auto last = split_index(cell_count(l, d1 + d2), l, d1, d2);
        EXPECT_EQ(last.first, cell_count(l, d1));
        EXPECT_EQ(last.second, cell_count(l, d2));
      }
    }
  }
  EXPECT_THROW(split_index(0, 1, 1, 1), std::out_of_range);
}

TEST(SplitIndex, RoundTripAndProductStructure) {
  for (int l = 0; l <= 3; ++l) {
    const int d1 = 2, d2 = 1;
    for (std::int64_t i = 1; i <= cell_count(l, d1 + d2); ++i) {
      const auto [i1, i2] = split_index(i, l, d1, d2);
      ASSERT_EQ(join_index(i1, i2, l, d2), i);
      const Point s = cell_anchor(l, i, d1 + d2);
      const Point s1 = cell_anchor(l, i1, d1);
      const Point s2 = cell_anchor(l, i2, d2);
      EXPECT_EQ(s[0], s1[0]);
      EXPECT_EQ(s[1], s1[1]);
      EXPECT_EQ(s[2], s2[0]);
    }
  }
}

TEST(Rescale, Examples) {
  const Point s{0.3, 0.7};
  const Point id = rescale_to_cell(0, 1, s);
  EXPECT_EQ(id[0], 0.3);
  EXPECT_EQ(id[1], 0.7);
  EXPECT_EQ(rescale_to_cell(1, 2, Point{0.5})[0], 0.75);
  const Point c = rescale_to_cell(2, 1, Point{1.0, 1.0});
  EXPECT_EQ(c[0], 0.25);
  EXPECT_EQ(c[1], 0.25);
}

TEST(Rescale, InverseRoundTrip) {
  Rng rng = make_rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 1 + trial % 3;
    const int l = trial % 6;
    const std::int64_t i = 1 + static_cast<std::int64_t>(rng() % cell_count(l, d));
    const Point s = fixtures::random_point(d, rng);
    const Point x = rescale_to_cell(l, i, s);
    const Point back = restrict_from_cell(l, i, x);
    // forward rounding is amplified by 2^l on the way back
    const double tol = std::max(1e-15, std::ldexp(1.0, l - 53));
    for (int a = 0; a < d; ++a) EXPECT_NEAR(back[a], s[a], tol);
  }
}

TEST(Locate, CoverageOfRandomPoints) {
  Rng rng = make_rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const int d = 1 + trial % 3;
    const int l = trial % 7;
    const Point x = fixtures::random_point(d, rng);
    const std::int64_t i = locate_cell(l, x);
    ASSERT_GE(i, 1);
    ASSERT_LE(i, cell_count(l, d));
    const Point s = cell_anchor(l, i, d);
    const double h = std::ldexp(1.0, -l);
    for (int a = 0; a < d; ++a) {
      EXPECT_LE(s[a], x[a]);
      EXPECT_LT(x[a], s[a] + h);
    }
  }
}

TEST(Locate, BoundaryOwnership) {
  EXPECT_EQ(locate_cell(1, Point{0.5}), 2);
  EXPECT_EQ(locate_cell(1, Point{1.0}), 2);
  EXPECT_EQ(locate_cell(2, Point{0.0}), 1);
  EXPECT_EQ(locate_cell(2, Point{1.0, 1.0}), 16);
  EXPECT_EQ(locate_cell(1, Point{0.5, 0.0}), 3);
}

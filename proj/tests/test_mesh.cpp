#include <gtest/gtest.h>

#include <cmath>

#include "qgrowth/mesh.hpp"

using namespace qgrowth;

TEST(IntervalGrid, UniformPartition) {
  auto g = build_interval_grid(0, 1, 4);
  ASSERT_EQ(g->size(), 5u);
  for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(g->x(i), 0.25 * i);
  const std::vector<int> interior(g->interior().begin(), g->interior().end());
  EXPECT_EQ(interior, (std::vector<int>{1, 2, 3}));
  EXPECT_TRUE(g->is_boundary(0));
  EXPECT_TRUE(g->is_boundary(4));
}

TEST(IntervalGrid, TooFewCellsRejected) {
  EXPECT_THROW(build_interval_grid(0, 1, 2), ConfigError);
  EXPECT_THROW(build_interval_grid(1, 0, 8), ConfigError);
}

TEST(IntervalGrid, DistanceToBoundary) {
  auto g = build_interval_grid(0, 1, 4);
  EXPECT_DOUBLE_EQ(g->distance_to_boundary(1), 0.25);
  EXPECT_DOUBLE_EQ(g->distance_to_boundary(2), 0.5);
  EXPECT_EQ(g->distance_to_boundary(0), 0.0);
}

TEST(PlanarGrid, RectangleInteriorCount) {
  auto g = build_planar_grid(PlanarDomain::rectangle(0, 1, 0, 1), 4);
  EXPECT_EQ(g->interior().size(), 9u);
  EXPECT_EQ(g->boundary().size(), 16u);
}

TEST(PlanarGrid, DiskBoundaryNearCircle) {
  auto g = build_planar_grid(PlanarDomain::disk(0, 0, 1), 16);
  const double h = g->hx();
  ASSERT_FALSE(g->boundary().empty());
  for (int i : g->boundary()) EXPECT_LE(std::abs(std::hypot(g->x(i), g->y(i)) - 1.0), h * std::sqrt(2.0) + 1e-12);
}

TEST(PlanarGrid, DegenerateDiskRejected) {
  EXPECT_THROW(build_planar_grid(PlanarDomain::disk(0, 0, 0), 16), ConfigError);
  EXPECT_THROW(build_planar_grid(PlanarDomain::rectangle(0, 0, 0, 1), 8), ConfigError);
}

class GridInvariants : public ::testing::TestWithParam<int> {};

GridPtr grid_case(int which) {
  switch (which) {
    case 0: return build_interval_grid(-1, 2, 17);
    case 1: return build_planar_grid(PlanarDomain::rectangle(0, 2, 0, 1), 12);
    default: return build_planar_grid(PlanarDomain::disk(0.5, -0.5, 0.75), 20);
  }
}

TEST_P(GridInvariants, KindsStencilsAndDistance) {
  auto g = grid_case(GetParam());
  std::size_t active = 0;
  for (std::size_t i = 0; i < g->size(); ++i) {
    if (!g->is_active(i)) continue;
    ++active;
    EXPECT_NE(g->is_interior(i), g->is_boundary(i));
    if (g->is_boundary(i)) {
      EXPECT_EQ(g->distance_to_boundary(i), 0.0);
    } else {
      EXPECT_GT(g->distance_to_boundary(i), 0.0);
      const auto& nb = g->neighbors(i);
      EXPECT_GE(nb[XP], 0);
      EXPECT_GE(nb[XM], 0);
      if (g->dimension() == 2)
        for (int s : {YP, YM, PP, PM, MP, MM}) {
          ASSERT_GE(nb[s], 0);
          EXPECT_TRUE(g->is_active(nb[s]));
        }
    }
  }
  EXPECT_EQ(active, g->interior().size() + g->boundary().size());
}

TEST_P(GridInvariants, InwardNeighbourPointsInside) {
  auto g = grid_case(GetParam());
  for (int i : g->boundary()) {
    const int j = g->inward_neighbor(i);
    ASSERT_GE(j, 0);
    EXPECT_TRUE(g->is_interior(j));
    const auto n = g->inward_normal(i);
    const double dx = g->x(j) - g->x(i), dy = g->y(j) - g->y(i);
    EXPECT_GT(dx * n[0] + dy * n[1], 0.0);
    EXPECT_NEAR(std::hypot(dx, dy), g->inward_step(i), 1e-12);
  }
}

INSTANTIATE_TEST_SUITE_P(Shapes, GridInvariants, ::testing::Values(0, 1, 2));

TEST(PlanarGrid, RefinementKeepsRectangleClassification) {
  auto coarse = build_planar_grid(PlanarDomain::rectangle(0, 1, 0, 1), 8);
  auto fine = build_planar_grid(PlanarDomain::rectangle(0, 1, 0, 1), 16);
  for (std::size_t i = 0; i < coarse->size(); ++i) {
    const int j = fine->nearest_node(coarse->x(i), coarse->y(i));
    EXPECT_NEAR(fine->x(j), coarse->x(i), 1e-14);
    EXPECT_EQ(fine->is_boundary(j), coarse->is_boundary(i));
  }
}

TEST(PlanarGrid, SecondDifferenceWeightsMatchSpacing) {
  auto g = build_planar_grid(PlanarDomain::rectangle(0, 2, 0, 1), 8);
  for (int i : g->interior()) {
    const auto& nb = g->neighbors(i);
    EXPECT_NEAR(g->x(nb[XP]) - g->x(i), g->hx(), 1e-14);
    EXPECT_NEAR(g->x(i) - g->x(nb[XM]), g->hx(), 1e-14);
    EXPECT_NEAR(g->y(nb[YP]) - g->y(i), g->hy(), 1e-14);
    EXPECT_NEAR(g->y(i) - g->y(nb[YM]), g->hy(), 1e-14);
  }
}

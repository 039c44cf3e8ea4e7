#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "xtal/error.hpp"
#include "xtal/periodic_graph.hpp"
#include "xtal/verify.hpp"

using namespace xtal;
using test::cubic;

TEST(MultiGraph, SingleAtomAxisImages) {
  const MultiGraph g = build_multigraph(test::single_atom(2.0), 2.5);
  ASSERT_EQ(g.edge_count(), 6u);
  for (const Edge& e : g.edges()) {
    EXPECT_EQ(e.i, 0);
    EXPECT_EQ(e.j, 0);
    EXPECT_EQ(e.k.cwiseAbs().sum(), 1);
    EXPECT_DOUBLE_EQ(e.d, 2.0);
  }
  EXPECT_EQ(distance_multiset(g), std::vector<double>(6, 2.0));
  EXPECT_EQ(neighbor_list(g, 0).size(), 6u);
}

TEST(MultiGraph, CutoffBelowLatticeIsEmpty) {
  const MultiGraph g = build_multigraph(test::single_atom(2.0), 1.9);
  EXPECT_TRUE(g.empty());
  EXPECT_TRUE(distance_multiset(g).empty());
  EXPECT_TRUE(neighbor_list(g, 0).empty());
}

TEST(MultiGraph, BodyCenteredCorners) {
  const Material m = test::from_frac({1, 1}, {Vec3(0, 0, 0), Vec3(0.5, 0.5, 0.5)}, cubic(2));
  const MultiGraph g = build_multigraph(m, 1.8);
  ASSERT_EQ(g.edge_count(), 16u);
  int forward = 0;
  for (const Edge& e : g.edges()) {
    EXPECT_NE(e.i, e.j);
    EXPECT_NEAR(e.d, std::sqrt(3.0), 1e-14);
    if (e.i == 0) ++forward;
  }
  EXPECT_EQ(forward, 8);
}

TEST(MultiGraph, ReverseClosure) {
  std::mt19937_64 rng(1);
  for (int c = 0; c < 20; ++c) {
    const MultiGraph g = build_multigraph(verify::random_material(rng), 4.0);
    const auto rev = g.reverse_index();
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
      const Edge& a = g.edges()[e];
      const Edge& b = g.edges()[rev[e]];
      EXPECT_EQ(a.i, b.j);
      EXPECT_EQ(a.j, b.i);
      EXPECT_EQ(a.k, -b.k);
      EXPECT_NEAR(a.d, b.d, 1e-12);
      EXPECT_LT((a.u + b.u).norm(), 1e-12);
      EXPECT_TRUE(g.find(b.i, b.j, b.k).has_value());
    }
  }
}

TEST(MultiGraph, MatchesBruteForceEnumeration) {
  const auto r = verify::check_multigraph_oracle(200, 21);
  EXPECT_TRUE(r.pass) << verify::format_result(r);
}

TEST(MultiGraph, DistanceMultisetInvariance) {
  const auto r = verify::check_distance_invariance(100, 22);
  EXPECT_TRUE(r.pass) << verify::format_result(r);
}

TEST(MultiGraph, UnitVectorsAreDistanceGradients) {
  const auto r = verify::check_unit_vector_gradient(50, 23);
  EXPECT_TRUE(r.pass) << verify::format_result(r);
}

TEST(MultiGraph, CoincidentAtomsProduceNoSelfEdge) {
  const Material m = test::from_frac({1, 1}, {Vec3(0, 0, 0), Vec3(0, 0, 0)}, cubic(3));
  const MultiGraph g = build_multigraph(m, 3.5);
  for (const Edge& e : g.edges()) EXPECT_GT(e.d, 1e-12);
  EXPECT_EQ(min_periodic_distance(m, 1.0), 0.0);
}

TEST(MultiGraph, RejectsBadCutoff) {
  EXPECT_THROW(build_multigraph(test::single_atom(2.0), 0.0), InvalidArgument);
  EXPECT_THROW(build_multigraph(test::single_atom(2.0), INFINITY), InvalidArgument);
}

TEST(MinPeriodicDistance, SelfImagesAndSearchRadius) {
  EXPECT_DOUBLE_EQ(min_periodic_distance(test::single_atom(3.0), 3.5), 3.0);
  EXPECT_TRUE(std::isinf(min_periodic_distance(test::single_atom(3.0), 2.0)));
}

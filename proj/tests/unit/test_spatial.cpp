#include <algorithm>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pathlet/errors.hpp"
#include "pathlet/rng.hpp"
#include "pathlet/spatial.hpp"

namespace pathlet {
namespace {

std::vector<UnitId> as_vector(std::span<const UnitId> s) { return {s.begin(), s.end()}; }

GraphSpec chain_abc() {
  return GraphSpec{{{"a", {"b"}}, {"b", {"c"}}, {"c", {}}}};
}

TEST(LoadDomain, Grid2x2IsFullyConnected) {
  const SpatialDomain dom = load_domain(GridSpec{2, 2});
  EXPECT_EQ(dom.size(), 4U);
  EXPECT_EQ(dom.kind(), DomainKind::grid);
  EXPECT_EQ(as_vector(dom.successors(0)), (std::vector<UnitId>{1, 2, 3}));
}

TEST(LoadDomain, ChainGraph) {
  const SpatialDomain dom = load_domain(chain_abc());
  EXPECT_EQ(dom.size(), 3U);
  const UnitId a = *dom.find("a");
  const UnitId b = *dom.find("b");
  EXPECT_EQ(as_vector(dom.successors(a)), (std::vector<UnitId>{b}));
  EXPECT_FALSE(dom.adjacent(b, a));
}

TEST(LoadDomain, DanglingSuccessorThrows) {
  EXPECT_THROW(load_domain(GraphSpec{{{"a", {"d"}}, {"b", {}}}}), DomainError);
}

TEST(LoadDomain, DuplicateIdThrows) {
  EXPECT_THROW(load_domain(GraphSpec{{{"a", {}}, {"a", {}}}}), DomainError);
}

TEST(LoadDomain, EmptyThrows) {
  EXPECT_THROW(load_domain(GridSpec{0, 3}), DomainError);
  EXPECT_THROW(load_domain(GraphSpec{}), DomainError);
}

TEST(LoadDomain, SelfSuccessorDropped) {
  const SpatialDomain dom = load_domain(GraphSpec{{{"a", {"a", "b"}}, {"b", {}}}});
  EXPECT_FALSE(dom.adjacent(0, 0));
  EXPECT_TRUE(dom.adjacent(0, 1));
}

TEST(LoadDomain, SpecRoundTrip) {
  const SpatialDomain g = load_domain(chain_abc());
  EXPECT_EQ(load_domain(g.spec()), g);
  const SpatialDomain grid = load_domain(GridSpec{3, 4});
  EXPECT_EQ(load_domain(grid.spec()), grid);
}

TEST(GridSpecText, ParsesBothForms) {
  const GridSpec a = parse_grid_spec("grid: rows=3 cols=5");
  EXPECT_EQ(a.rows, 3);
  EXPECT_EQ(a.cols, 5);
  const GridSpec b = parse_grid_spec("10x12");
  EXPECT_EQ(b.rows, 10);
  EXPECT_EQ(b.cols, 12);
  const GridSpec c = parse_grid_spec(format_grid_spec(a));
  EXPECT_EQ(c.rows, 3);
  EXPECT_EQ(c.cols, 5);
  EXPECT_THROW(parse_grid_spec("grid: rows=3"), DomainError);
  EXPECT_THROW(parse_grid_spec("3y4"), DomainError);
}

TEST(EdgeListCsv, SuccessorsFollowSharedVertex) {
  std::istringstream in("edge_id,tail_vertex,head_vertex\ne1,A,B\ne2,B,C\ne3,B,D\ne4,C,A\n");
  const SpatialDomain dom = load_domain(parse_edge_list_csv(in));
  const UnitId e1 = *dom.find("e1");
  const UnitId e2 = *dom.find("e2");
  const UnitId e3 = *dom.find("e3");
  const UnitId e4 = *dom.find("e4");
  EXPECT_TRUE(dom.adjacent(e1, e2));
  EXPECT_TRUE(dom.adjacent(e1, e3));
  EXPECT_TRUE(dom.adjacent(e4, e1));
  EXPECT_FALSE(dom.adjacent(e2, e1));
  EXPECT_EQ(as_vector(dom.predecessors(e1)), (std::vector<UnitId>{e4}));
}

TEST(EdgeListCsv, HeaderRequired) {
  std::istringstream in("e1,A,B\n");
  EXPECT_THROW(parse_edge_list_csv(in), DomainError);
}

TEST(Vectorize, Examples) {
  const SpatialDomain four = load_domain(GridSpec{2, 2});
  EXPECT_EQ(vectorize(Trajectory{{0, 2}, {}}, four).active_units(), (std::vector<UnitId>{0, 2}));
  const SpatialDomain three = load_domain(GridSpec{1, 3});
  const BinaryPathVector v = vectorize(Trajectory{{1, 1, 1}, {}}, three);
  EXPECT_EQ(v.count(), 1U);
  EXPECT_TRUE(v.test(1));
  EXPECT_EQ(vectorize(Trajectory{{0, 1, 3, 2}, {}}, four).count(), 4U);
}

TEST(Vectorize, OutOfRangeThrows) {
  const SpatialDomain dom = load_domain(GridSpec{2, 2});
  EXPECT_THROW(vectorize(Trajectory{{0, 4}, {}}, dom), DomainError);
  EXPECT_THROW(vectorize(Trajectory{{-1}, {}}, dom), DomainError);
}

TEST(Neighbors, Examples) {
  const SpatialDomain grid = load_domain(GridSpec{3, 3});
  EXPECT_EQ(as_vector(neighbors(0, grid)), (std::vector<UnitId>{1, 3, 4}));
  EXPECT_EQ(as_vector(neighbors(4, grid)), (std::vector<UnitId>{0, 1, 2, 3, 5, 6, 7, 8}));
  const SpatialDomain chain = load_domain(chain_abc());
  EXPECT_TRUE(neighbors(*chain.find("c"), chain).empty());
  EXPECT_THROW(neighbors(9, grid), DomainError);
}

TEST(Labels, GridAndGraph) {
  const SpatialDomain grid = load_domain(GridSpec{3, 4});
  EXPECT_EQ(grid.label(6), "1,2");
  const SpatialDomain chain = load_domain(chain_abc());
  EXPECT_EQ(chain.label(*chain.find("b")), "b");
  EXPECT_FALSE(chain.find("z").has_value());
}

TEST(ShortestBridge, FindsShortestWithinLimit) {
  const SpatialDomain grid = load_domain(GridSpec{1, 6});
  std::vector<bool> target(6, false);
  target[4] = true;
  const std::vector<UnitId> src{0, 1};
  EXPECT_EQ(shortest_bridge(grid, src, target, 3), (std::vector<UnitId>{1, 2, 3, 4}));
  EXPECT_TRUE(shortest_bridge(grid, src, target, 2).empty());
}

// Properties over random domains and trajectories.

TEST(SpatialProperty, GridAdjacencySymmetricAndIrreflexive) {
  for (int rows = 1; rows <= 6; ++rows) {
    for (int cols = 1; cols <= 6; ++cols) {
      const SpatialDomain dom = load_domain(GridSpec{rows, cols});
      ASSERT_EQ(dom.size(), static_cast<std::size_t>(rows * cols));
      for (UnitId u = 0; u < static_cast<UnitId>(dom.size()); ++u) {
        EXPECT_FALSE(dom.adjacent(u, u));
        for (UnitId v : neighbors(u, dom)) EXPECT_TRUE(dom.adjacent(v, u));
        EXPECT_TRUE(std::is_sorted(dom.successors(u).begin(), dom.successors(u).end()));
      }
    }
  }
}

TEST(SpatialProperty, GridAdjacencyMatchesChebyshevDistance) {
  const SpatialDomain dom = load_domain(GridSpec{5, 7});
  for (UnitId u = 0; u < 35; ++u) {
    for (UnitId v = 0; v < 35; ++v) {
      const int dr = std::abs(u / 7 - v / 7);
      const int dc = std::abs(u % 7 - v % 7);
      EXPECT_EQ(dom.adjacent(u, v), std::max(dr, dc) == 1);
    }
  }
}

TEST(SpatialProperty, VectorizeRoundTripAndOrderInsensitive) {
  const SpatialDomain dom = load_domain(GridSpec{6, 6});
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    Trajectory t{{static_cast<UnitId>(rng.uniform_index(36))}, {}};
    const int len = rng.uniform_int(1, 15);
    while (static_cast<int>(t.units.size()) < len) {
      const auto next = neighbors(t.units.back(), dom);
      t.units.push_back(next[rng.uniform_index(next.size())]);
    }
    ASSERT_TRUE(is_connected_walk(t, dom));
    const BinaryPathVector x = vectorize(t, dom);
    std::vector<UnitId> distinct = t.units;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    EXPECT_EQ(x.active_units(), distinct);
    EXPECT_LE(x.count(), t.units.size());

    Trajectory shuffled = t;
    for (std::size_t i = shuffled.units.size(); i > 1; --i) {
      std::swap(shuffled.units[i - 1], shuffled.units[rng.uniform_index(i)]);
    }
    EXPECT_EQ(vectorize(shuffled, dom), x);
  }
}

TEST(SpatialProperty, ShortestBridgeMatchesBfs) {
  const SpatialDomain dom = load_domain(GridSpec{7, 7});
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = static_cast<UnitId>(rng.uniform_index(49));
    const auto b = static_cast<UnitId>(rng.uniform_index(49));
    if (a == b) continue;
    std::vector<bool> target(49, false);
    target[static_cast<std::size_t>(b)] = true;
    const std::vector<UnitId> src{a};
    const std::vector<UnitId> bridge = shortest_bridge(dom, src, target, 10);
    const int d = testing::bfs_distance(dom, a, b);
    ASSERT_EQ(static_cast<int>(bridge.size()) - 1, d);
    EXPECT_EQ(bridge.front(), a);
    EXPECT_EQ(bridge.back(), b);
    EXPECT_TRUE(is_connected_walk(Trajectory{bridge, {}}, dom));
  }
}

}  // namespace
}  // namespace pathlet

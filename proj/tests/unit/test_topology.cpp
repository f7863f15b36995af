#include <doctest.h>

#include "evtrust/errors.hpp"
#include "evtrust/topology.hpp"

using namespace evtrust;

namespace {

void check_invariants(const TopologyGraph& g) {
  CHECK(g.is_symmetric());
  CHECK_FALSE(g.has_self_loops());
  CHECK(g.is_connected());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& n = g.neighbors(i);
    CHECK(std::is_sorted(n.begin(), n.end()));
    CHECK(std::adjacent_find(n.begin(), n.end()) == n.end());
  }
}

}  // namespace

TEST_CASE("ring") {
  const auto tri = ring(3);
  CHECK(tri.degree_histogram() == std::map<std::size_t, std::size_t>{{2, 3}});
  CHECK(ring(5).neighbors(0) == std::vector<std::size_t>{1, 4});
  CHECK(ring(30).edge_count() == 30);
  check_invariants(ring(12));
  CHECK_THROWS_AS(ring(2), ConfigError);
}

TEST_CASE("fully connected") {
  CHECK(fully_connected(2).edge_count() == 1);
  CHECK(fully_connected(4).edge_count() == 6);
  CHECK(fully_connected(30).edge_count() == 435);
  const auto g = fully_connected(7);
  for (std::size_t i = 0; i < 7; ++i) CHECK(g.degree(i) == 6);
  check_invariants(g);
  CHECK_THROWS_AS(fully_connected(1), ConfigError);
}

TEST_CASE("erdos_renyi") {
  CHECK(erdos_renyi(9, 1.0, 4) == fully_connected(9));
  CHECK(erdos_renyi(20, 0.3, 17) == erdos_renyi(20, 0.3, 17));
  for (std::uint64_t seed = 0; seed < 40; ++seed) check_invariants(erdos_renyi(15, 0.25, seed));

  double total_degree = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto g = erdos_renyi(20, 0.3, seed);
    total_degree += 2.0 * static_cast<double>(g.edge_count()) / 20.0;
  }
  const double mean_degree = total_degree / 200.0;
  CHECK(std::abs(mean_degree - 19 * 0.3) <= 0.15 * 19 * 0.3);

  CHECK_THROWS_AS(erdos_renyi(10, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(erdos_renyi(10, 1.5, 1), ConfigError);
  CHECK_THROWS_AS(erdos_renyi(1, 0.5, 1), ConfigError);
  // Far below the connectivity threshold every draw is disconnected.
  CHECK_THROWS_AS(erdos_renyi(60, 0.001, 1), GenerationError);
}

TEST_CASE("k_regular") {
  CHECK(k_regular(6, 5, 1) == fully_connected(6));
  const auto cycle = k_regular(6, 2, 3);
  for (std::size_t i = 0; i < 6; ++i) CHECK(cycle.degree(i) == 2);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto g = k_regular(10, 4, seed);
    CHECK(g.degree_histogram() == std::map<std::size_t, std::size_t>{{4, 10}});
    check_invariants(g);
  }
  CHECK(k_regular(30, 3, 8) == k_regular(30, 3, 8));
  CHECK_THROWS_AS(k_regular(5, 3, 1), ConfigError);
  CHECK_THROWS_AS(k_regular(5, 5, 1), ConfigError);
  CHECK_THROWS_AS(k_regular(5, 1, 1), ConfigError);
}

TEST_CASE("graph construction validates edges") {
  const std::vector<std::pair<std::size_t, std::size_t>> loop{{0, 0}};
  CHECK_THROWS_AS(TopologyGraph(2, loop), ConfigError);
  const std::vector<std::pair<std::size_t, std::size_t>> out_of_range{{0, 5}};
  CHECK_THROWS_AS(TopologyGraph(2, out_of_range), ConfigError);
  const std::vector<std::pair<std::size_t, std::size_t>> split{{0, 1}, {2, 3}, {1, 0}};
  const TopologyGraph g(4, split);
  CHECK(g.edge_count() == 2);
  CHECK(g.has_edge(1, 0));
  CHECK_FALSE(g.is_connected());
}

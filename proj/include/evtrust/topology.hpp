#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace evtrust {

/// Undirected, loop-free peer graph with sorted neighbour lists.
class TopologyGraph {
 public:
  TopologyGraph() = default;
  /// Builds from an edge list; throws ConfigError on self-loops or bad ids.
  TopologyGraph(std::size_t num_nodes, std::span<const std::pair<std::size_t, std::size_t>> edges);

  std::size_t size() const { return adjacency_.size(); }
  const std::vector<std::size_t>& neighbors(std::size_t node) const { return adjacency_.at(node); }
  std::size_t degree(std::size_t node) const { return neighbors(node).size(); }
  std::size_t edge_count() const;

  bool has_edge(std::size_t a, std::size_t b) const;
  bool is_symmetric() const;
  bool has_self_loops() const;
  bool is_connected() const;

  /// degree -> number of nodes with that degree.
  std::map<std::size_t, std::size_t> degree_histogram() const;

  bool operator==(const TopologyGraph&) const = default;

 private:
  std::vector<std::vector<std::size_t>> adjacency_;
};

/// Cycle 0-1-...-(n-1)-0. Requires n >= 3.
TopologyGraph ring(std::size_t n);

/// Complete graph. Requires n >= 2.
TopologyGraph fully_connected(std::size_t n);

/// G(n, p) redrawn with successive sub-seeds until connected (at most 100 draws).
TopologyGraph erdos_renyi(std::size_t n, double p, std::uint64_t seed);

/// Uniform-ish random k-regular simple connected graph from the pairing
/// model; invalid pairings are retried with successive sub-seeds (at most 100).
TopologyGraph k_regular(std::size_t n, std::size_t k, std::uint64_t seed);

}  // namespace evtrust

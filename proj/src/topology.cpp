#include "evtrust/topology.hpp"

#include <algorithm>
#include <optional>
#include <random>
#include <set>
#include <string>

#include "evtrust/errors.hpp"
#include "evtrust/seed.hpp"

namespace evtrust {

namespace {

constexpr int kMaxAttempts = 100;

using Edge = std::pair<std::size_t, std::size_t>;

}  // namespace

TopologyGraph::TopologyGraph(std::size_t num_nodes, std::span<const Edge> edges)
    : adjacency_(num_nodes) {
  for (const auto& [a, b] : edges) {
    if (a >= num_nodes || b >= num_nodes) throw ConfigError("edge references an unknown node");
    if (a == b) throw ConfigError("self-loop on node " + std::to_string(a));
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& list : adjacency_) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
}

std::size_t TopologyGraph::edge_count() const {
  std::size_t twice = 0;
  for (const auto& list : adjacency_) twice += list.size();
  return twice / 2;
}

bool TopologyGraph::has_edge(std::size_t a, std::size_t b) const {
  const auto& list = adjacency_.at(a);
  return std::binary_search(list.begin(), list.end(), b);
}

bool TopologyGraph::is_symmetric() const {
  for (std::size_t a = 0; a < adjacency_.size(); ++a) {
    for (std::size_t b : adjacency_[a]) {
      if (b >= adjacency_.size() || !has_edge(b, a)) return false;
    }
  }
  return true;
}

bool TopologyGraph::has_self_loops() const {
  for (std::size_t a = 0; a < adjacency_.size(); ++a) {
    if (has_edge(a, a)) return true;
  }
  return false;
}

bool TopologyGraph::is_connected() const {
  if (adjacency_.empty()) return true;
  std::vector<bool> seen(adjacency_.size(), false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t visited = 1;
  while (!stack.empty()) {
    const std::size_t node = stack.back();
    stack.pop_back();
    for (std::size_t next : adjacency_[node]) {
      if (!seen[next]) {
        seen[next] = true;
        ++visited;
        stack.push_back(next);
      }
    }
  }
  return visited == adjacency_.size();
}

std::map<std::size_t, std::size_t> TopologyGraph::degree_histogram() const {
  std::map<std::size_t, std::size_t> hist;
  for (const auto& list : adjacency_) ++hist[list.size()];
  return hist;
}

TopologyGraph ring(std::size_t n) {
  if (n < 3) throw ConfigError("ring topology needs n >= 3, got " + std::to_string(n));
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
  return TopologyGraph(n, edges);
}

TopologyGraph fully_connected(std::size_t n) {
  if (n < 2) throw ConfigError("fully connected topology needs n >= 2, got " + std::to_string(n));
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  }
  return TopologyGraph(n, edges);
}

TopologyGraph erdos_renyi(std::size_t n, double p, std::uint64_t seed) {
  if (n < 2) throw ConfigError("erdos_renyi needs n >= 2, got " + std::to_string(n));
  if (!(p > 0.0 && p <= 1.0)) {
    throw ConfigError("erdos_renyi edge probability must lie in (0, 1], got " + std::to_string(p));
  }
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(derive_seed(seed, seed_tag::kAttempt, static_cast<std::uint64_t>(attempt)));
    std::bernoulli_distribution coin(p);
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (coin(rng)) edges.emplace_back(i, j);
      }
    }
    TopologyGraph graph(n, edges);
    if (graph.is_connected()) return graph;
  }
  throw GenerationError("erdos_renyi: no connected graph after " + std::to_string(kMaxAttempts) +
                        " draws (n=" + std::to_string(n) + ", p=" + std::to_string(p) + ")");
}

namespace {

// One pairing-model draw. Stubs are paired at random, skipping pairs that
// would create a loop or a repeated edge; nullopt when the draw gets stuck.
std::optional<std::vector<Edge>> pair_stubs(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> stubs;
  stubs.reserve(n * k);
  for (std::size_t i = 0; i < n; ++i) stubs.insert(stubs.end(), k, i);

  std::set<Edge> edges;
  auto usable = [&](std::size_t a, std::size_t b) {
    return a != b && !edges.contains({std::min(a, b), std::max(a, b)});
  };
  auto take = [&](std::size_t i, std::size_t j) {
    const std::size_t a = stubs[i];
    const std::size_t b = stubs[j];
    edges.insert({std::min(a, b), std::max(a, b)});
    for (std::size_t idx : {std::max(i, j), std::min(i, j)}) {
      stubs[idx] = stubs.back();
      stubs.pop_back();
    }
  };

  constexpr int kRandomTries = 64;
  while (!stubs.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, stubs.size() - 1);
    bool paired = false;
    for (int tries = 0; tries < kRandomTries && !paired; ++tries) {
      const std::size_t i = pick(rng);
      const std::size_t j = pick(rng);
      if (i != j && usable(stubs[i], stubs[j])) {
        take(i, j);
        paired = true;
      }
    }
    if (paired) continue;
    std::vector<Edge> candidates;
    for (std::size_t i = 0; i < stubs.size(); ++i) {
      for (std::size_t j = i + 1; j < stubs.size(); ++j) {
        if (usable(stubs[i], stubs[j])) candidates.emplace_back(i, j);
      }
    }
    if (candidates.empty()) return std::nullopt;
    std::uniform_int_distribution<std::size_t> choose(0, candidates.size() - 1);
    const auto [i, j] = candidates[choose(rng)];
    take(i, j);
  }
  return std::vector<Edge>(edges.begin(), edges.end());
}

}  // namespace

TopologyGraph k_regular(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2 || k >= n) {
    throw ConfigError("k_regular needs 2 <= k < n, got n=" + std::to_string(n) +
                      ", k=" + std::to_string(k));
  }
  if ((n * k) % 2 != 0) {
    throw ConfigError("k_regular is infeasible: n*k = " + std::to_string(n * k) + " is odd");
  }
  if (k == n - 1) return fully_connected(n);
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(derive_seed(seed, seed_tag::kAttempt, static_cast<std::uint64_t>(attempt)));
    auto edges = pair_stubs(n, k, rng);
    if (!edges) continue;
    TopologyGraph graph(n, *edges);
    if (graph.is_connected()) return graph;
  }
  throw GenerationError("k_regular: no connected simple graph after " +
                        std::to_string(kMaxAttempts) + " draws (n=" + std::to_string(n) +
                        ", k=" + std::to_string(k) + ")");
}

}  // namespace evtrust

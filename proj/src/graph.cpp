#include "mpfusion/graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <string>

namespace mpfusion {

Topology::Topology(int node_count, std::vector<std::pair<int, int>> edges) : node_count_(node_count) {
  if (node_count < 1) throw std::invalid_argument("topology needs at least one node");

  for (auto& [a, b] : edges) {
    check_node(a);
    check_node(b);
    if (a == b) throw std::invalid_argument("self-loop on node " + std::to_string(a + 1));
    if (a > b) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
    throw std::invalid_argument("duplicate edge in topology");

  edges_.reserve(edges.size());
  for (const auto& [a, b] : edges) edges_.push_back({a, b});

  std::vector<std::vector<std::pair<int, int>>> in(static_cast<std::size_t>(node_count));
  arcs_.reserve(2 * edges_.size());
  for (int e = 0; e < static_cast<int>(edges_.size()); ++e) {
    const int forward = static_cast<int>(arcs_.size());
    arcs_.push_back({edges_[e].a, edges_[e].b, e, forward + 1});
    arcs_.push_back({edges_[e].b, edges_[e].a, e, forward});
    in[edges_[e].b].push_back({edges_[e].a, forward});
    in[edges_[e].a].push_back({edges_[e].b, forward + 1});
  }

  adjacency_offsets_.assign(static_cast<std::size_t>(node_count) + 1, 0);
  for (int n = 0; n < node_count; ++n) {
    auto& list = in[n];
    std::sort(list.begin(), list.end());
    adjacency_offsets_[n + 1] = adjacency_offsets_[n] + static_cast<int>(list.size());
    for (const auto& [neighbor, arc] : list) {
      adjacency_.push_back(neighbor);
      incoming_.push_back(arc);
    }
  }
}

Topology Topology::chain(int node_count) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < node_count; ++i) edges.emplace_back(i, i + 1);
  return Topology(node_count, std::move(edges));
}

Topology Topology::star(int leaves) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i <= leaves; ++i) edges.emplace_back(0, i);
  return Topology(leaves + 1, std::move(edges));
}

void Topology::check_node(int node) const {
  if (node < 0 || node >= node_count_)
    throw std::out_of_range("node " + std::to_string(node + 1) + " outside 1.." + std::to_string(node_count_));
}

std::span<const int> Topology::neighbors(int node) const {
  check_node(node);
  const auto begin = static_cast<std::size_t>(adjacency_offsets_[node]);
  const auto end = static_cast<std::size_t>(adjacency_offsets_[node + 1]);
  return std::span<const int>(adjacency_).subspan(begin, end - begin);
}

std::span<const int> Topology::incoming_arcs(int node) const {
  check_node(node);
  const auto begin = static_cast<std::size_t>(adjacency_offsets_[node]);
  const auto end = static_cast<std::size_t>(adjacency_offsets_[node + 1]);
  return std::span<const int>(incoming_).subspan(begin, end - begin);
}

std::vector<int> Topology::neighbors_except(int node, int excluded) const {
  check_node(excluded);
  std::vector<int> out;
  for (int n : neighbors(node))
    if (n != excluded) out.push_back(n);
  return out;
}

std::optional<int> Topology::edge_index(int i, int j) const {
  check_node(i);
  check_node(j);
  const auto nbrs = neighbors(i);
  const auto it = std::lower_bound(nbrs.begin(), nbrs.end(), j);
  if (it == nbrs.end() || *it != j) return std::nullopt;
  return arcs_[incoming_arcs(i)[static_cast<std::size_t>(it - nbrs.begin())]].edge;
}

int Topology::arc_index(int from, int to) const {
  const auto nbrs = neighbors(to);
  const auto it = std::lower_bound(nbrs.begin(), nbrs.end(), from);
  if (it == nbrs.end() || *it != from)
    throw std::invalid_argument("nodes " + std::to_string(from + 1) + " and " + std::to_string(to + 1) +
                                " are not adjacent");
  return incoming_arcs(to)[static_cast<std::size_t>(it - nbrs.begin())];
}

int Topology::max_degree() const {
  if (edges_.empty()) throw std::invalid_argument("max_degree undefined for an edgeless graph");
  int best = 0;
  for (int n = 0; n < node_count_; ++n) best = std::max(best, degree(n));
  return best;
}

int Topology::hop_distance(int i, int j) const {
  check_node(i);
  check_node(j);
  if (i == j) return 0;
  std::vector<int> dist(static_cast<std::size_t>(node_count_), kUnreachable);
  std::queue<int> frontier;
  dist[i] = 0;
  frontier.push(i);
  while (!frontier.empty()) {
    const int n = frontier.front();
    frontier.pop();
    for (int m : neighbors(n)) {
      if (dist[m] != kUnreachable) continue;
      dist[m] = dist[n] + 1;
      if (m == j) return dist[m];
      frontier.push(m);
    }
  }
  return kUnreachable;
}

std::vector<std::vector<int>> Topology::hop_matrix() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(node_count_));
  for (int i = 0; i < node_count_; ++i) {
    out[i].resize(static_cast<std::size_t>(node_count_));
    for (int j = 0; j < node_count_; ++j) out[i][j] = hop_distance(i, j);
  }
  return out;
}

MrfParams::MrfParams(const Topology& topology, std::vector<double> couplings) : couplings_(std::move(couplings)) {
  if (couplings_.size() != topology.edges().size())
    throw std::invalid_argument("expected one coupling per edge (" + std::to_string(topology.edges().size()) +
                                "), got " + std::to_string(couplings_.size()));
  for (double j : couplings_)
    if (!std::isfinite(j)) throw std::invalid_argument("coupling must be finite");
}

MrfParams MrfParams::uniform(const Topology& topology, double coupling) {
  return MrfParams(topology, std::vector<double>(topology.edges().size(), coupling));
}

}  // namespace mpfusion

#pragma once

#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace mpfusion {

/// Marker returned by Topology::hop_distance for nodes in different components.
inline constexpr int kUnreachable = std::numeric_limits<int>::max();

struct Edge {
  int a;
  int b;
};

/// A directed copy of an undirected edge. Messages live on arcs.
struct Arc {
  int from;
  int to;
  int edge;     // index of the undirected edge
  int reverse;  // index of the arc to -> from
};

/// Undirected sensing graph. Nodes are 0-based internally; configuration files
/// and reports use 1-based labels.
///
/// Immutable after construction. Neighbor lists are sorted ascending and the
/// arcs entering a node are stored in the same order as its neighbors.
class Topology {
 public:
  Topology() = default;
  Topology(int node_count, std::vector<std::pair<int, int>> edges);

  static Topology chain(int node_count);
  static Topology star(int leaves);  // node 0 is the hub

  int node_count() const { return node_count_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Arc>& arcs() const { return arcs_; }

  std::span<const int> neighbors(int node) const;
  std::vector<int> neighbors_except(int node, int excluded) const;

  /// Arcs n -> node, ordered like neighbors(node).
  std::span<const int> incoming_arcs(int node) const;

  std::optional<int> edge_index(int i, int j) const;
  /// Index of the arc from -> to; throws if the nodes are not adjacent.
  int arc_index(int from, int to) const;

  int degree(int node) const { return static_cast<int>(neighbors(node).size()); }
  int max_degree() const;

  int hop_distance(int i, int j) const;
  std::vector<std::vector<int>> hop_matrix() const;

  void check_node(int node) const;

 private:
  int node_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<Arc> arcs_;
  std::vector<int> adjacency_offsets_;
  std::vector<int> adjacency_;
  std::vector<int> incoming_;
};

/// How a configured coupling J enters the pairwise potential.
///
/// `raw`: psi(x_k, x_j) = exp(J x_k x_j), so a binary message swings by 2J.
/// `merged`: the factor of two is folded into J, i.e. psi = exp(J x_k x_j / 2)
/// and the message swing is J.
enum class CouplingConvention { merged, raw };

/// Coupling seen by the binary message update S(J_eff, .).
inline double effective_coupling(double coupling, CouplingConvention convention) {
  return convention == CouplingConvention::raw ? 2.0 * coupling : coupling;
}

/// Exponent multiplying x_k x_j in ln psi.
inline double pairwise_exponent(double coupling, CouplingConvention convention) {
  return convention == CouplingConvention::raw ? coupling : 0.5 * coupling;
}

/// Pairwise Ising couplings on the edges of a topology. Node fields are zero.
class MrfParams {
 public:
  MrfParams() = default;
  MrfParams(const Topology& topology, std::vector<double> couplings);

  static MrfParams uniform(const Topology& topology, double coupling);

  double coupling(int edge) const { return couplings_.at(static_cast<std::size_t>(edge)); }
  const std::vector<double>& couplings() const { return couplings_; }
  double theta(int /*node*/) const { return 0.0; }

 private:
  std::vector<double> couplings_;
};

}  // namespace mpfusion

#pragma once

// Friendship graph over a student roster, partitioned by school, and the
// node-, school- and identification-level network statistics computed on it.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "peerfx/student.hpp"

namespace peerfx {

using NodeIndex = std::size_t;
using SchoolIndex = std::size_t;

struct EdgeRow {
  std::string src;
  std::string dst;
  double weight = 1.0;
};

struct Neighbor {
  NodeIndex node;
  double weight;
};

// Directed weighted adjacency. Immutable once built; node order follows the
// roster, neighbor lists are sorted by node index.
class FriendshipGraph {
 public:
  std::size_t node_count() const noexcept { return ids_.size(); }
  std::size_t edge_count() const noexcept { return edge_count_; }
  std::size_t school_count() const noexcept { return school_names_.size(); }

  const std::string& id(NodeIndex i) const { return ids_.at(i); }
  std::optional<NodeIndex> find(std::string_view id) const;
  NodeIndex index_of(std::string_view id) const;  // throws UnknownNode

  SchoolIndex school_of(NodeIndex i) const { return school_of_.at(i); }
  const std::string& school_name(SchoolIndex s) const { return school_names_.at(s); }
  std::optional<SchoolIndex> find_school(std::string_view name) const;
  std::span<const NodeIndex> members(SchoolIndex s) const { return members_.at(s); }

  std::span<const Neighbor> out_neighbors(NodeIndex i) const { return out_.at(i); }
  std::span<const Neighbor> in_neighbors(NodeIndex i) const { return in_.at(i); }

  bool has_edge(NodeIndex src, NodeIndex dst) const;
  // Edge in either direction.
  bool adjacent(NodeIndex a, NodeIndex b) const { return has_edge(a, b) || has_edge(b, a); }
  std::optional<double> weight(NodeIndex src, NodeIndex dst) const;

  // Sorted neighbor set of the undirected projection.
  std::vector<NodeIndex> undirected_neighbors(NodeIndex i) const;

 private:
  friend FriendshipGraph build_graph(std::span<const EdgeRow>, std::span<const StudentRecord>);

  std::vector<std::string> ids_;
  std::unordered_map<std::string, NodeIndex> index_;
  std::vector<SchoolIndex> school_of_;
  std::vector<std::string> school_names_;
  std::unordered_map<std::string, SchoolIndex> school_index_;
  std::vector<std::vector<NodeIndex>> members_;
  std::vector<std::vector<Neighbor>> out_;
  std::vector<std::vector<Neighbor>> in_;
  std::size_t edge_count_ = 0;
};

// Nodes come from the roster (in order); schools are numbered by first
// appearance. Rejects self-loops, unknown ids, non-positive weights, duplicate
// (src, dst) pairs, duplicate roster ids and cross-school edges.
FriendshipGraph build_graph(std::span<const EdgeRow> edges, std::span<const StudentRecord> roster);

struct NodeMetrics {
  std::size_t degree = 0;  // indegree + outdegree
  std::size_t indegree = 0;
  std::size_t outdegree = 0;
  double strength = 0.0;  // sum of in- and out-edge weights
  double betweenness = 0.0;  // directed, within school, / ((n-1)(n-2))
  std::optional<double> local_transitivity;  // undirected; absent when degree < 2
};

std::vector<NodeMetrics> node_metrics(const FriendshipGraph& g);

// Brandes betweenness of every node on the directed graph, each school taken
// as its own reference graph, normalized by (n-1)(n-2).
std::vector<double> betweenness(const FriendshipGraph& g);

struct SchoolMetrics {
  std::string school;
  std::size_t n_students = 0;
  std::size_t edge_count = 0;
  std::optional<double> global_transitivity;  // absent when there are no connected triples
  std::uint64_t open_triangle_count = 0;
  std::size_t diameter = 0;  // over the largest component when disconnected
  bool connected = true;
};

// Open triangle: a centre j with i -> j -> k for some ordering of the
// endpoints, i != k, and no tie between i and k in either direction. Each
// (centre, unordered endpoint pair) counts once.
std::vector<SchoolMetrics> school_metrics(const FriendshipGraph& g);

// Friends of i are its out-neighbors. Mean over friends; absent when i names
// nobody. Throws MissingValue if a friend has no value.
std::vector<std::optional<double>> peer_mean(const FriendshipGraph& g, std::span<const double> values);

enum class MissingFriendPolicy { Error, Skip };

// Same, for partially observed values. With Skip, the mean runs over friends
// that have a value and is absent if none do.
std::vector<std::optional<double>> peer_mean(const FriendshipGraph& g,
                                             std::span<const std::optional<double>> values,
                                             MissingFriendPolicy policy);

// Share of i's friends with z = 1.
std::vector<std::optional<double>> treated_fraction(const FriendshipGraph& g,
                                                    std::span<const std::uint8_t> z);

// peer_mean of `values`, then z-scored with the mean and population sd taken
// over every node with a defined peer mean.
std::vector<std::optional<double>> standardized_peer_mean(const FriendshipGraph& g,
                                                          std::span<const double> values);
std::vector<std::optional<double>> standardized_peer_mean(
    const FriendshipGraph& g, std::span<const std::optional<double>> values,
    MissingFriendPolicy policy);

struct SchoolIdentification {
  std::string school;
  std::size_t n_students = 0;
  std::size_t rank = 0;
  std::uint64_t open_triangle_count = 0;
  std::size_t diameter = 0;
};

struct IdentificationReport {
  std::size_t rank = 0;       // numeric rank of the weighted adjacency matrix
  std::size_t full_rank = 0;  // node count
  std::size_t dependent_rows = 0;
  std::size_t diameter = 0;   // max over schools
  bool identified = false;    // diameter >= 3
  bool i_g_g2_independent = false;  // I, G, G^2 (row-normalized) linearly independent
  std::vector<SchoolIdentification> schools;
};

// Rank is the count of singular values above tolerance * largest, computed per
// school block and summed.
IdentificationReport identification_check(const FriendshipGraph& g, double tolerance = 1e-10);

}  // namespace peerfx

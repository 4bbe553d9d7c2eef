#include "peerfx/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include <Eigen/Dense>

#include "peerfx/error.hpp"

namespace peerfx {

std::optional<NodeIndex> FriendshipGraph::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeIndex FriendshipGraph::index_of(std::string_view id) const {
  if (auto i = find(id)) return *i;
  throw Error(ErrorKind::UnknownNode, "unknown node id '" + std::string(id) + "'");
}

std::optional<SchoolIndex> FriendshipGraph::find_school(std::string_view name) const {
  auto it = school_index_.find(std::string(name));
  if (it == school_index_.end()) return std::nullopt;
  return it->second;
}

namespace {

auto find_neighbor(std::span<const Neighbor> list, NodeIndex target) {
  return std::lower_bound(list.begin(), list.end(), target,
                          [](const Neighbor& n, NodeIndex t) { return n.node < t; });
}

}  // namespace

bool FriendshipGraph::has_edge(NodeIndex src, NodeIndex dst) const {
  auto list = out_neighbors(src);
  auto it = find_neighbor(list, dst);
  return it != list.end() && it->node == dst;
}

std::optional<double> FriendshipGraph::weight(NodeIndex src, NodeIndex dst) const {
  auto list = out_neighbors(src);
  auto it = find_neighbor(list, dst);
  if (it == list.end() || it->node != dst) return std::nullopt;
  return it->weight;
}

std::vector<NodeIndex> FriendshipGraph::undirected_neighbors(NodeIndex i) const {
  std::vector<NodeIndex> result;
  result.reserve(out_[i].size() + in_[i].size());
  for (const auto& n : out_[i]) result.push_back(n.node);
  for (const auto& n : in_[i]) result.push_back(n.node);
  std::sort(result.begin(), result.end());
  result.erase(std::unique(result.begin(), result.end()), result.end());
  return result;
}

FriendshipGraph build_graph(std::span<const EdgeRow> edges, std::span<const StudentRecord> roster) {
  FriendshipGraph g;
  const std::size_t n = roster.size();
  g.ids_.reserve(n);
  g.school_of_.reserve(n);
  for (const auto& rec : roster) {
    if (rec.id.empty()) throw Error(ErrorKind::InvalidInput, "empty student id in roster");
    if (!g.index_.emplace(rec.id, g.ids_.size()).second)
      throw Error(ErrorKind::InvalidInput, "duplicate student id '" + rec.id + "' in roster");
    auto [it, inserted] = g.school_index_.emplace(rec.school, g.school_names_.size());
    if (inserted) {
      g.school_names_.push_back(rec.school);
      g.members_.emplace_back();
    }
    g.members_[it->second].push_back(g.ids_.size());
    g.school_of_.push_back(it->second);
    g.ids_.push_back(rec.id);
  }

  g.out_.assign(n, {});
  g.in_.assign(n, {});
  for (const auto& e : edges) {
    const NodeIndex src = g.index_of(e.src);
    const NodeIndex dst = g.index_of(e.dst);
    if (src == dst) throw Error(ErrorKind::SelfLoop, "self-loop on node '" + e.src + "'");
    if (!(e.weight > 0.0) || !std::isfinite(e.weight))
      throw Error(ErrorKind::NonPositiveWeight,
                  "non-positive weight on edge " + e.src + " -> " + e.dst);
    if (g.school_of_[src] != g.school_of_[dst])
      throw Error(ErrorKind::InvalidInput,
                  "edge " + e.src + " -> " + e.dst + " crosses schools");
    g.out_[src].push_back({dst, e.weight});
    g.in_[dst].push_back({src, e.weight});
  }

  auto by_node = [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; };
  for (NodeIndex i = 0; i < n; ++i) {
    auto& out = g.out_[i];
    std::sort(out.begin(), out.end(), by_node);
    auto dup = std::adjacent_find(out.begin(), out.end(),
                                  [](const Neighbor& a, const Neighbor& b) { return a.node == b.node; });
    if (dup != out.end())
      throw Error(ErrorKind::DuplicateEdge,
                  "duplicate edge " + g.ids_[i] + " -> " + g.ids_[dup->node]);
    std::sort(g.in_[i].begin(), g.in_[i].end(), by_node);
  }
  g.edge_count_ = edges.size();
  return g;
}

namespace {

// Per-school view with local indices 0..n-1.
struct LocalSchool {
  std::vector<NodeIndex> global;         // local -> global
  std::vector<std::vector<std::size_t>> out;  // directed, local indices
  std::vector<std::vector<std::size_t>> in;
  std::vector<std::vector<std::size_t>> undirected;
  std::vector<std::uint8_t> adj;         // undirected adjacency, n*n

  std::size_t size() const { return global.size(); }
  bool adjacent(std::size_t a, std::size_t b) const { return adj[a * size() + b] != 0; }
};

LocalSchool local_school(const FriendshipGraph& g, SchoolIndex s) {
  LocalSchool ls;
  auto members = g.members(s);
  ls.global.assign(members.begin(), members.end());
  const std::size_t n = ls.global.size();
  std::unordered_map<NodeIndex, std::size_t> local;
  local.reserve(n);
  for (std::size_t i = 0; i < n; ++i) local.emplace(ls.global[i], i);
  ls.out.resize(n);
  ls.in.resize(n);
  ls.undirected.resize(n);
  ls.adj.assign(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& nb : g.out_neighbors(ls.global[i])) {
      const std::size_t j = local.at(nb.node);
      ls.out[i].push_back(j);
      ls.in[j].push_back(i);
      ls.adj[i * n + j] = 1;
      ls.adj[j * n + i] = 1;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      if (ls.adj[i * n + j]) ls.undirected[i].push_back(j);
  }
  return ls;
}

std::vector<double> brandes_directed(const LocalSchool& ls) {
  const std::size_t n = ls.size();
  std::vector<double> cb(n, 0.0);
  std::vector<double> sigma(n), delta(n);
  std::vector<long> dist(n);
  std::vector<std::vector<std::size_t>> pred(n);
  std::vector<std::size_t> order;
  order.reserve(n);
  std::deque<std::size_t> queue;
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    std::fill(dist.begin(), dist.end(), -1);
    for (auto& p : pred) p.clear();
    order.clear();
    sigma[s] = 1.0;
    dist[s] = 0;
    queue.push_back(s);
    while (!queue.empty()) {
      const std::size_t v = queue.front();
      queue.pop_front();
      order.push_back(v);
      for (std::size_t w : ls.out[v]) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue.push_back(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          pred[w].push_back(v);
        }
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const std::size_t w = *it;
      for (std::size_t v : pred[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) cb[w] += delta[w];
    }
  }
  if (n >= 3) {
    const double norm = static_cast<double>(n - 1) * static_cast<double>(n - 2);
    for (auto& c : cb) c /= norm;
  } else {
    std::fill(cb.begin(), cb.end(), 0.0);
  }
  return cb;
}

// BFS distances on the undirected projection; -1 when unreachable.
std::vector<long> bfs_undirected(const LocalSchool& ls, std::size_t source) {
  std::vector<long> dist(ls.size(), -1);
  std::deque<std::size_t> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    for (std::size_t w : ls.undirected[v]) {
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

struct DiameterResult {
  std::size_t diameter = 0;
  bool connected = true;
};

DiameterResult diameter_of(const LocalSchool& ls) {
  const std::size_t n = ls.size();
  if (n == 0) return {};
  std::vector<long> component(n, -1);
  std::vector<std::size_t> comp_size;
  for (std::size_t s = 0; s < n; ++s) {
    if (component[s] >= 0) continue;
    const long id = static_cast<long>(comp_size.size());
    auto dist = bfs_undirected(ls, s);
    std::size_t count = 0;
    for (std::size_t v = 0; v < n; ++v) {
      if (dist[v] >= 0) {
        component[v] = id;
        ++count;
      }
    }
    comp_size.push_back(count);
  }
  const long largest = static_cast<long>(
      std::max_element(comp_size.begin(), comp_size.end()) - comp_size.begin());
  DiameterResult result;
  result.connected = comp_size.size() == 1;
  for (std::size_t s = 0; s < n; ++s) {
    if (component[s] != largest) continue;
    auto dist = bfs_undirected(ls, s);
    for (long d : dist) result.diameter = std::max<std::size_t>(result.diameter, d < 0 ? 0 : d);
  }
  return result;
}

// Closed neighbor pairs per node on the undirected projection.
std::vector<std::uint64_t> closed_pairs(const LocalSchool& ls) {
  std::vector<std::uint64_t> closed(ls.size(), 0);
  for (std::size_t v = 0; v < ls.size(); ++v) {
    const auto& nb = ls.undirected[v];
    for (std::size_t a = 0; a < nb.size(); ++a)
      for (std::size_t b = a + 1; b < nb.size(); ++b)
        if (ls.adjacent(nb[a], nb[b])) ++closed[v];
  }
  return closed;
}

std::uint64_t open_triangles(const LocalSchool& ls) {
  const std::size_t n = ls.size();
  std::uint64_t total = 0;
  std::vector<std::uint64_t> pairs;
  for (std::size_t j = 0; j < n; ++j) {
    pairs.clear();
    for (std::size_t i : ls.in[j]) {
      for (std::size_t k : ls.out[j]) {
        if (i == k || ls.adjacent(i, k)) continue;
        const std::size_t lo = std::min(i, k), hi = std::max(i, k);
        pairs.push_back(static_cast<std::uint64_t>(lo) * n + hi);
      }
    }
    std::sort(pairs.begin(), pairs.end());
    total += static_cast<std::uint64_t>(std::unique(pairs.begin(), pairs.end()) - pairs.begin());
  }
  return total;
}

}  // namespace

std::vector<double> betweenness(const FriendshipGraph& g) {
  std::vector<double> result(g.node_count(), 0.0);
  for (SchoolIndex s = 0; s < g.school_count(); ++s) {
    const auto ls = local_school(g, s);
    const auto cb = brandes_directed(ls);
    for (std::size_t i = 0; i < ls.size(); ++i) result[ls.global[i]] = cb[i];
  }
  return result;
}

std::vector<NodeMetrics> node_metrics(const FriendshipGraph& g) {
  if (g.node_count() == 0) throw Error(ErrorKind::InvalidInput, "node_metrics on an empty graph");
  std::vector<NodeMetrics> metrics(g.node_count());
  for (NodeIndex i = 0; i < g.node_count(); ++i) {
    auto& m = metrics[i];
    m.outdegree = g.out_neighbors(i).size();
    m.indegree = g.in_neighbors(i).size();
    m.degree = m.indegree + m.outdegree;
    for (const auto& nb : g.out_neighbors(i)) m.strength += nb.weight;
    for (const auto& nb : g.in_neighbors(i)) m.strength += nb.weight;
  }
  for (SchoolIndex s = 0; s < g.school_count(); ++s) {
    const auto ls = local_school(g, s);
    const auto cb = brandes_directed(ls);
    const auto closed = closed_pairs(ls);
    for (std::size_t i = 0; i < ls.size(); ++i) {
      auto& m = metrics[ls.global[i]];
      m.betweenness = cb[i];
      const std::size_t k = ls.undirected[i].size();
      if (k >= 2) {
        m.local_transitivity = static_cast<double>(closed[i]) /
                               (static_cast<double>(k) * static_cast<double>(k - 1) / 2.0);
      }
    }
  }
  return metrics;
}

std::vector<SchoolMetrics> school_metrics(const FriendshipGraph& g) {
  if (g.node_count() == 0) throw Error(ErrorKind::InvalidInput, "school_metrics on an empty graph");
  std::vector<SchoolMetrics> result;
  result.reserve(g.school_count());
  for (SchoolIndex s = 0; s < g.school_count(); ++s) {
    const auto ls = local_school(g, s);
    SchoolMetrics m;
    m.school = g.school_name(s);
    m.n_students = ls.size();
    for (std::size_t i = 0; i < ls.size(); ++i) m.edge_count += ls.out[i].size();
    const auto closed = closed_pairs(ls);
    std::uint64_t closed_total = 0, triples = 0;
    for (std::size_t i = 0; i < ls.size(); ++i) {
      const std::uint64_t k = ls.undirected[i].size();
      closed_total += closed[i];
      triples += k * (k > 0 ? k - 1 : 0) / 2;
    }
    // closed_total already counts each triangle once per vertex (3 per triangle).
    if (triples > 0)
      m.global_transitivity = static_cast<double>(closed_total) / static_cast<double>(triples);
    m.open_triangle_count = open_triangles(ls);
    const auto d = diameter_of(ls);
    m.diameter = d.diameter;
    m.connected = d.connected;
    result.push_back(std::move(m));
  }
  return result;
}

namespace {

template <typename ValueAt>
std::vector<std::optional<double>> friend_mean(const FriendshipGraph& g, ValueAt value_at,
                                               MissingFriendPolicy policy) {
  std::vector<std::optional<double>> result(g.node_count());
  for (NodeIndex i = 0; i < g.node_count(); ++i) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& nb : g.out_neighbors(i)) {
      const std::optional<double> v = value_at(nb.node);
      if (!v) {
        if (policy == MissingFriendPolicy::Error)
          throw Error(ErrorKind::MissingValue, "no value for node '" + g.id(nb.node) +
                                                   "', a friend of '" + g.id(i) + "'");
        continue;
      }
      sum += *v;
      ++count;
    }
    if (count > 0) result[i] = sum / static_cast<double>(count);
  }
  return result;
}

void check_length(const FriendshipGraph& g, std::size_t n) {
  if (n != g.node_count())
    throw Error(ErrorKind::InvalidInput, "value vector length " + std::to_string(n) +
                                             " does not match node count " +
                                             std::to_string(g.node_count()));
}

}  // namespace

std::vector<std::optional<double>> peer_mean(const FriendshipGraph& g, std::span<const double> values) {
  check_length(g, values.size());
  return friend_mean(g, [&](NodeIndex j) -> std::optional<double> { return values[j]; },
                     MissingFriendPolicy::Error);
}

std::vector<std::optional<double>> peer_mean(const FriendshipGraph& g,
                                             std::span<const std::optional<double>> values,
                                             MissingFriendPolicy policy) {
  check_length(g, values.size());
  return friend_mean(g, [&](NodeIndex j) { return values[j]; }, policy);
}

std::vector<std::optional<double>> treated_fraction(const FriendshipGraph& g,
                                                    std::span<const std::uint8_t> z) {
  check_length(g, z.size());
  return friend_mean(
      g, [&](NodeIndex j) -> std::optional<double> { return z[j] ? 1.0 : 0.0; },
      MissingFriendPolicy::Error);
}

namespace {

void standardize_in_place(std::vector<std::optional<double>>& pm) {
  double sum = 0.0, sumsq = 0.0;
  std::size_t count = 0;
  for (const auto& v : pm) {
    if (!v) continue;
    sum += *v;
    ++count;
  }
  if (count == 0) return;
  const double mean = sum / static_cast<double>(count);
  for (const auto& v : pm)
    if (v) sumsq += (*v - mean) * (*v - mean);
  const double sd = std::sqrt(sumsq / static_cast<double>(count));
  if (!(sd > 0.0))
    throw Error(ErrorKind::Degenerate, "peer mean is constant; cannot standardize");
  for (auto& v : pm)
    if (v) v = (*v - mean) / sd;
}

}  // namespace

std::vector<std::optional<double>> standardized_peer_mean(const FriendshipGraph& g,
                                                          std::span<const double> values) {
  auto pm = peer_mean(g, values);
  standardize_in_place(pm);
  return pm;
}

std::vector<std::optional<double>> standardized_peer_mean(
    const FriendshipGraph& g, std::span<const std::optional<double>> values,
    MissingFriendPolicy policy) {
  auto pm = peer_mean(g, values, policy);
  standardize_in_place(pm);
  return pm;
}

IdentificationReport identification_check(const FriendshipGraph& g, double tolerance) {
  IdentificationReport report;
  if (g.node_count() == 0) return report;
  report.full_rank = g.node_count();
  const auto sm = school_metrics(g);
  Eigen::Matrix3d gram = Eigen::Matrix3d::Zero();
  for (SchoolIndex s = 0; s < g.school_count(); ++s) {
    auto members = g.members(s);
    const std::size_t n = members.size();
    std::unordered_map<NodeIndex, std::size_t> local;
    for (std::size_t i = 0; i < n; ++i) local.emplace(members[i], i);
    Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (const auto& nb : g.out_neighbors(members[i])) adj(i, local.at(nb.node)) = nb.weight;

    std::size_t rank = 0;
    if (n > 0) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(adj);
      const auto& sv = svd.singularValues();
      const double largest = sv.size() > 0 ? sv(0) : 0.0;
      if (largest > 0.0)
        for (Eigen::Index k = 0; k < sv.size(); ++k)
          if (sv(k) > tolerance * largest) ++rank;
    }

    // Row-normalized G for the I, G, G^2 independence check.
    Eigen::MatrixXd row_norm = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto deg = static_cast<double>(g.out_neighbors(members[i]).size());
      for (const auto& nb : g.out_neighbors(members[i])) row_norm(i, local.at(nb.node)) = 1.0 / deg;
    }
    const Eigen::MatrixXd sq = row_norm * row_norm;
    const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd* mats[3] = {&ident, &row_norm, &sq};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) gram(a, b) += mats[a]->cwiseProduct(*mats[b]).sum();

    report.rank += rank;
    report.diameter = std::max(report.diameter, sm[s].diameter);
    report.schools.push_back({sm[s].school, n, rank, sm[s].open_triangle_count, sm[s].diameter});
  }
  report.dependent_rows = report.full_rank - report.rank;
  report.identified = report.diameter >= 3;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(gram);
  const auto& ev = eig.eigenvalues();
  report.i_g_g2_independent = ev(2) > 0.0 && ev(0) > tolerance * ev(2);
  return report;
}

}  // namespace peerfx

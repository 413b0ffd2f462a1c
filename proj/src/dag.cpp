#include "qvf/dag.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>
#include <string>

namespace qvf {

namespace {

void check_node(Index v, Index p, const char* what) {
  if (v < 0 || v >= p) {
    throw std::invalid_argument(std::string(what) + " index " + std::to_string(v) +
                                " out of range for p=" + std::to_string(p));
  }
}

}  // namespace

void Dag::validate() const {
  if (p < 0) throw std::invalid_argument("negative node count");
  if (theta.rows() != p || theta.cols() != p) {
    throw std::invalid_argument("theta must be p x p");
  }
  if (!node_family_ids.empty() && node_family_ids.size() != static_cast<std::size_t>(p)) {
    throw std::invalid_argument("node_family_ids must be empty or length p");
  }
  for (const auto& [a, b] : edges) {
    check_node(a, p, "edge");
    check_node(b, p, "edge");
    if (a == b) throw std::invalid_argument("self-loop at node " + std::to_string(a));
  }
  for (Index j = 0; j < p; ++j) {
    for (Index k = 0; k < p; ++k) {
      if (j == k) continue;  // diagonal holds intercepts, not edges
      bool weighted = theta(j, k) != 0.0;
      bool listed = edges.count({k, j}) > 0;
      if (weighted != listed) {
        throw std::invalid_argument("theta(" + std::to_string(j) + "," + std::to_string(k) +
                                    ") disagrees with the edge set");
      }
    }
  }
  topological_order(*this);  // throws on a cycle
}

IndexList parents(const Dag& dag, Index j) {
  check_node(j, dag.p, "node");
  IndexList out;
  for (const auto& [a, b] : dag.edges) {
    if (b == j) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void UndirectedGraph::add_edge(Index a, Index b) {
  check_node(a, p, "edge");
  check_node(b, p, "edge");
  if (a == b) throw std::invalid_argument("self-loop at node " + std::to_string(a));
  adj[static_cast<std::size_t>(a)].insert(b);
  adj[static_cast<std::size_t>(b)].insert(a);
}

bool UndirectedGraph::has_edge(Index a, Index b) const {
  if (a < 0 || a >= p || b < 0 || b >= p) return false;
  return adj[static_cast<std::size_t>(a)].count(b) > 0;
}

std::set<std::pair<Index, Index>> UndirectedGraph::edge_set() const {
  std::set<std::pair<Index, Index>> out;
  for (Index a = 0; a < p; ++a) {
    for (Index b : adj[static_cast<std::size_t>(a)]) {
      if (a < b) out.insert({a, b});
    }
  }
  return out;
}

Index UndirectedGraph::edge_count() const {
  std::size_t deg = 0;
  for (const auto& s : adj) deg += s.size();
  return static_cast<Index>(deg / 2);
}

Index max_degree(const UndirectedGraph& g) {
  std::size_t best = 0;
  for (const auto& s : g.adj) best = std::max(best, s.size());
  return static_cast<Index>(best);
}

UndirectedGraph moralize(const Dag& dag) {
  UndirectedGraph g(dag.p);
  for (const auto& [a, b] : dag.edges) g.add_edge(a, b);
  for (Index j = 0; j < dag.p; ++j) {
    IndexList pa = parents(dag, j);
    for (std::size_t s = 0; s < pa.size(); ++s) {
      for (std::size_t t = s + 1; t < pa.size(); ++t) g.add_edge(pa[s], pa[t]);
    }
  }
  return g;
}

bool is_consistent_ordering(const Dag& dag, const Ordering& ordering) {
  if (ordering.nodes.size() != static_cast<std::size_t>(dag.p)) {
    throw std::invalid_argument("ordering length != p");
  }
  std::vector<Index> pos(static_cast<std::size_t>(dag.p), -1);
  for (std::size_t t = 0; t < ordering.nodes.size(); ++t) {
    Index v = ordering.nodes[t];
    check_node(v, dag.p, "ordering");
    if (pos[static_cast<std::size_t>(v)] != -1) {
      throw std::invalid_argument("ordering repeats node " + std::to_string(v));
    }
    pos[static_cast<std::size_t>(v)] = static_cast<Index>(t);
  }
  for (const auto& [a, b] : dag.edges) {
    if (pos[static_cast<std::size_t>(a)] > pos[static_cast<std::size_t>(b)]) return false;
  }
  return true;
}

IndexList topological_order(const Dag& dag) {
  std::vector<Index> indeg(static_cast<std::size_t>(dag.p), 0);
  for (const auto& e : dag.edges) indeg[static_cast<std::size_t>(e.second)]++;
  std::set<Index> ready;  // ascending-index tie break keeps the order deterministic
  for (Index j = 0; j < dag.p; ++j) {
    if (indeg[static_cast<std::size_t>(j)] == 0) ready.insert(j);
  }
  IndexList order;
  order.reserve(static_cast<std::size_t>(dag.p));
  while (!ready.empty()) {
    Index v = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(v);
    for (const auto& [a, b] : dag.edges) {
      if (a == v && --indeg[static_cast<std::size_t>(b)] == 0) ready.insert(b);
    }
  }
  if (order.size() != static_cast<std::size_t>(dag.p)) {
    throw std::invalid_argument("edge set has a cycle");
  }
  return order;
}

Dag random_dag(Index p, Index num_parents, double theta_lo, double theta_hi, double intercept,
               std::mt19937_64& rng) {
  if (p < 1) throw std::invalid_argument("p must be >= 1");
  if (num_parents < 1) throw std::invalid_argument("num_parents must be >= 1");
  if (theta_lo > theta_hi) throw std::invalid_argument("empty theta range");
  if (theta_lo == 0.0 && theta_hi == 0.0) {
    throw std::invalid_argument("theta range must allow nonzero weights");
  }
  Dag dag;
  dag.p = p;
  dag.theta = Matrix::Zero(p, p);
  dag.theta.diagonal().setConstant(intercept);
  dag.node_family_ids.assign(static_cast<std::size_t>(p), 0);
  std::uniform_real_distribution<double> wdist(theta_lo, theta_hi);
  auto draw_weight = [&] {
    double w;
    do {
      w = theta_lo == theta_hi ? theta_lo : wdist(rng);
    } while (w == 0.0);
    return w;
  };
  // Per node j ascending: backbone weight, then each extra parent (index, weight).
  std::vector<Index> pool;
  for (Index j = 1; j < p; ++j) {
    dag.edges.insert({j - 1, j});
    dag.theta(j, j - 1) = draw_weight();
    Index extra = std::min(j, num_parents) - 1;
    if (extra <= 0) continue;
    pool.resize(static_cast<std::size_t>(j - 1));
    for (Index v = 0; v < j - 1; ++v) pool[static_cast<std::size_t>(v)] = v;
    for (Index t = 0; t < extra; ++t) {
      std::uniform_int_distribution<Index> pick(t, j - 2);
      std::swap(pool[static_cast<std::size_t>(t)], pool[static_cast<std::size_t>(pick(rng))]);
      Index k = pool[static_cast<std::size_t>(t)];
      dag.edges.insert({k, j});
      dag.theta(j, k) = draw_weight();
    }
  }
  return dag;
}

}  // namespace qvf

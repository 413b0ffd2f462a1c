#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "qvf/types.hpp"

namespace qvf {

// Directed acyclic graph with edge weights. Node indices are 0-based
// everywhere (files, diagnostics, API).
//
// Invariants, checked by validate():
//   - theta is p x p; theta(j,k) != 0 iff (k,j) in edges (k is a parent of j);
//     theta(j,j) is node j's intercept and never encodes an edge
//   - edges contain no self-loops and form an acyclic graph
struct Dag {
  Index p = 0;
  std::set<std::pair<Index, Index>> edges;  // (a, b) means a -> b
  Matrix theta;                             // row = child, column = parent
  std::vector<int> node_family_ids;         // index into a caller-owned family table

  void validate() const;  // throws std::invalid_argument on any violation
};

// Parents of j, ascending.
IndexList parents(const Dag& dag, Index j);

// Symmetric adjacency, no self-loops.
struct UndirectedGraph {
  Index p = 0;
  std::vector<std::set<Index>> adj;

  explicit UndirectedGraph(Index p_ = 0) : p(p_), adj(static_cast<std::size_t>(p_)) {}
  void add_edge(Index a, Index b);
  bool has_edge(Index a, Index b) const;
  // Unordered pairs (a, b) with a < b, ascending.
  std::set<std::pair<Index, Index>> edge_set() const;
  Index edge_count() const;
};

Index max_degree(const UndirectedGraph& g);

// Undirected graph with an edge for every directed edge plus one between every
// pair of nodes sharing a child.
UndirectedGraph moralize(const Dag& dag);

// nodes[t] = node placed at position t.
struct Ordering {
  IndexList nodes;
};

// True iff every edge points forward in the ordering. Throws
// std::invalid_argument if `ordering` is not a permutation of 0..p-1.
bool is_consistent_ordering(const Dag& dag, const Ordering& ordering);

// One topological order (ascending-index Kahn). Throws std::invalid_argument
// if the edge set has a cycle.
IndexList topological_order(const Dag& dag);

// Random DAG over 0..p-1 ordered by index: the backbone edge (j-1) -> j is
// always present, and node j >= 2 gains parents sampled uniformly without
// replacement from {0..j-2} until it has min(j, num_parents) of them. Edge
// weights are drawn uniformly from [theta_lo, theta_hi]; diagonal entries get
// `intercept`. Draw order is fixed (backbone weight, then extra parents and
// their weights, per node ascending), so a seeded generator reproduces the
// same DAG.
Dag random_dag(Index p, Index num_parents, double theta_lo, double theta_hi, double intercept,
               std::mt19937_64& rng);

}  // namespace qvf

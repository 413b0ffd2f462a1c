#pragma once

#include <cstdint>
#include <vector>

#include "qvf/dag.hpp"
#include "qvf/family.hpp"
#include "qvf/types.hpp"

namespace qvf {

struct SampleOptions {
  double max_poisson_mean = 1e8;
  int num_threads = 0;  // <= 0: hardware concurrency
};

// Ancestral sampling: for each row i and node j (in topological order),
//   eta = theta(j,j) + sum over parents k of theta(j,k) * X[i,k]
//   X[i,j] = sample_node(fams[j], eta).
// Row i draws from a generator seeded with derive_seed(seed, i), so rows are
// independent streams and the result does not depend on how rows are scheduled
// across threads. Domain violations rethrow DomainError with row/node context.
CountMatrix sample_dataset(const Dag& dag, const std::vector<QvfFamily>& fams, Index n,
                           std::uint64_t seed, const SampleOptions& opts = {});

}  // namespace qvf

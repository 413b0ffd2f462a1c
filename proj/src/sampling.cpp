#include "qvf/sampling.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "qvf/parallel.hpp"
#include "qvf/rng.hpp"

namespace qvf {

CountMatrix sample_dataset(const Dag& dag, const std::vector<QvfFamily>& fams, Index n,
                           std::uint64_t seed, const SampleOptions& opts) {
  if (n < 0) throw std::invalid_argument("n must be >= 0");
  if (fams.size() != static_cast<std::size_t>(dag.p)) {
    throw std::invalid_argument("need one family per node");
  }
  for (const auto& f : fams) {
    if (!f.supports_sampling()) {
      throw UnsupportedSampling(f.name() + ": cannot sample a dataset");
    }
  }
  IndexList order = topological_order(dag);
  // Parent lists with weights, fixed once; eta accumulates in this order.
  std::vector<std::vector<std::pair<Index, double>>> pa(static_cast<std::size_t>(dag.p));
  for (const auto& [a, b] : dag.edges) {
    pa[static_cast<std::size_t>(b)].push_back({a, dag.theta(b, a)});
  }
  CountMatrix out(n, dag.p);
  constexpr Index kChunk = 1024;
  Index chunks = n == 0 ? 0 : (n + kChunk - 1) / kChunk;
  parallel_for(static_cast<std::size_t>(chunks), [&](std::size_t c) {
    Index lo = static_cast<Index>(c) * kChunk;
    Index hi = std::min(n, lo + kChunk);
    for (Index i = lo; i < hi; ++i) {
      // Rows are independent seed streams: scheduling cannot change the draw.
      std::mt19937_64 rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
      for (Index j : order) {
        double eta = dag.theta(j, j);
        for (const auto& [k, w] : pa[static_cast<std::size_t>(j)]) {
          eta += w * out(i, k);
        }
        try {
          out(i, j) = sample_node(fams[static_cast<std::size_t>(j)], eta, rng,
                                  opts.max_poisson_mean);
        } catch (const DomainError& e) {
          throw DomainError("row " + std::to_string(i) + " node " + std::to_string(j) + ": " +
                            e.what());
        }
      }
    }
  }, opts.num_threads);
  return out;
}

}  // namespace qvf

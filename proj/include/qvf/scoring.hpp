#pragma once

#include <cstddef>
#include <vector>

#include "qvf/dag.hpp"
#include "qvf/family.hpp"
#include "qvf/types.hpp"

namespace qvf {

// One conditioning cell: the exact value tuple of the conditioning columns,
// with moments of the target column inside the cell. variance uses the
// population normalizer (1/count) so that scores are invariant under row
// duplication; it is meaningful only when count >= 2.
struct ConditioningCell {
  std::vector<double> key;
  std::size_t count = 0;
  double mean = 0;
  double variance = 0;
};

struct CellPartition {
  std::vector<ConditioningCell> cells;   // sorted by key, lexicographic
  std::size_t retained_samples = 0;      // sum of retained cell counts
};

// Groups rows by exact value tuples over `conditioners` and keeps cells with
// count >= c0 * n. Empty `conditioners` yields one cell holding every row.
// Throws NoCellsRetained when nothing survives.
CellPartition truncated_cells(const CountMatrix& data, Index target,
                              const IndexList& conditioners, double c0);

// Diagnostics for one overdispersion score evaluation.
struct ScoreReport {
  Index node = -1;                 // candidate scored
  Index position = 0;              // ordering position the score was computed for
  IndexList candidate_parents;     // conditioning set actually used
  double score = 0;                // +inf when degenerate
  std::size_t cells_used = 0;
  std::size_t samples_used = 0;
  bool degenerate = false;         // no usable cells / undefined omega: excluded from argmin
  std::size_t degenerate_cells = 0;  // cells skipped for an undefined omega
};

// Marginal overdispersion of column k: omega^2 * var - omega * mean with
// omega = 1 / (beta0 + beta1 * mean), moments over all rows. Degenerate when
// n < 2 or omega is undefined.
ScoreReport score_first(const CountMatrix& data, Index k, const QvfFamily& fam,
                        double omega_eps = kDefaultOmegaEps);

// Conditional overdispersion of column k given the exact values of
// `candidates`: sum over retained cells x of
//   n(x)/n_S * [ omega(x)^2 * var(x) - omega(x) * mean(x) ],
// omega(x) evaluated at the cell mean. Cells with count < 2 and cells with an
// undefined omega are excluded from the sum and from n_S (so the weights used
// always total 1); the latter are counted in degenerate_cells. No usable cell
// leaves a degenerate report. Empty `candidates` delegates to score_first and
// is bit-identical to it.
ScoreReport score_at(const CountMatrix& data, Index position, Index k, const IndexList& candidates,
                     const QvfFamily& fam, double c0, double omega_eps = kDefaultOmegaEps);

enum class EmptyCandidatePolicy {
  widen_to_all_unordered,  // default: score every unordered node this round
  fail,                    // throw std::runtime_error instead
};

struct OrderingResult {
  Ordering ordering;
  std::vector<ScoreReport> reports;  // every candidate scored, grouped by position
  std::size_t degenerate_cells = 0;  // total omega-degenerate cells across reports
};

// Overdispersion-score ordering:
//   position 0: argmin over all nodes of score_first;
//   position t >= 1: candidates are the moral neighbors of the previously
//     placed node that are still unordered (widened per `policy` when empty),
//     each scored against candidate_parents = moral neighbors of the candidate
//     intersected with the placed prefix;
//   the last node is placed without scoring.
// Ties pick the lowest node index; degenerate scores rank last. Candidate
// scoring within a round is a parallel map; results do not depend on the
// schedule.
OrderingResult estimate_ordering(const CountMatrix& data, const UndirectedGraph& moral,
                                 const std::vector<QvfFamily>& fams, double c0,
                                 EmptyCandidatePolicy policy = EmptyCandidatePolicy::widen_to_all_unordered,
                                 int num_threads = 0, double omega_eps = kDefaultOmegaEps);

}  // namespace qvf

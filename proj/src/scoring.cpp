#include "qvf/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "qvf/parallel.hpp"

namespace qvf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Compensated accumulation keeps the score identities (duplication invariance,
// empty-conditioning delegation) at machine precision even for long columns.
struct KahanSum {
  double sum = 0, c = 0;
  void add(double x) {
    double y = x - c;
    double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

double kahan_mean(const CountMatrix& data, Index col, const std::vector<Index>& rows) {
  KahanSum s;
  for (Index i : rows) s.add(data(i, col));
  return s.sum / static_cast<double>(rows.size());
}

// Population-normalized second moment (1/count); exact zero for constant cells.
double kahan_variance(const CountMatrix& data, Index col, const std::vector<Index>& rows,
                      double mean) {
  KahanSum s;
  for (Index i : rows) {
    double d = data(i, col) - mean;
    s.add(d * d);
  }
  return s.sum / static_cast<double>(rows.size());
}

struct VecHash {
  std::size_t operator()(const std::vector<double>& v) const {
    std::size_t h = 0xcbf29ce484222325ULL;
    for (double x : v) {
      std::uint64_t bits;
      static_assert(sizeof(bits) == sizeof(x));
      std::memcpy(&bits, &x, sizeof(bits));
      h = (h ^ bits) * 0x100000001b3ULL;
      h = (h ^ (h >> 29)) * 0xff51afd7ed558ccdULL;
    }
    return h;
  }
};

ScoreReport degenerate_report(Index node, Index position, IndexList candidates,
                              std::size_t samples, std::size_t degenerate_cells) {
  ScoreReport r;
  r.node = node;
  r.position = position;
  r.candidate_parents = std::move(candidates);
  r.score = kInf;
  r.cells_used = 0;
  r.samples_used = samples;
  r.degenerate = true;
  r.degenerate_cells = degenerate_cells;
  return r;
}

}  // namespace

CellPartition truncated_cells(const CountMatrix& data, Index target,
                              const IndexList& conditioners, double c0) {
  const Index n = data.rows();
  const Index p = data.cols();
  if (target < 0 || target >= p) throw std::invalid_argument("target out of range");
  for (Index c : conditioners) {
    if (c < 0 || c >= p) throw std::invalid_argument("conditioner out of range");
    if (c == target) throw std::invalid_argument("target cannot condition on itself");
  }
  if (!(c0 >= 0)) throw std::invalid_argument("c0 must be >= 0");
  if (n == 0) throw NoCellsRetained("no rows");

  std::unordered_map<std::vector<double>, std::vector<Index>, VecHash> groups;
  groups.reserve(static_cast<std::size_t>(n) / 4 + 8);
  std::vector<double> key(conditioners.size());
  for (Index i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < conditioners.size(); ++c) {
      double v = data(i, conditioners[c]);
      key[c] = v == 0.0 ? 0.0 : v;  // fold -0.0 so bitwise hashing matches ==
    }
    groups[key].push_back(i);
  }

  const double threshold = c0 * static_cast<double>(n);
  CellPartition part;
  for (auto& [k, rows] : groups) {
    if (static_cast<double>(rows.size()) >= threshold) {
      ConditioningCell cell;
      cell.key = k;
      cell.count = rows.size();
      cell.mean = kahan_mean(data, target, rows);
      cell.variance = rows.size() >= 2 ? kahan_variance(data, target, rows, cell.mean) : 0.0;
      part.retained_samples += cell.count;
      part.cells.push_back(std::move(cell));
    }
  }
  if (part.cells.empty()) {
    throw NoCellsRetained("every cell fell below c0 * n = " + std::to_string(threshold));
  }
  std::sort(part.cells.begin(), part.cells.end(),
            [](const ConditioningCell& a, const ConditioningCell& b) { return a.key < b.key; });
  return part;
}

ScoreReport score_first(const CountMatrix& data, Index k, const QvfFamily& fam,
                        double omega_eps) {
  const Index n = data.rows();
  if (k < 0 || k >= data.cols()) throw std::invalid_argument("node out of range");
  if (n < 2) return degenerate_report(k, 0, {}, static_cast<std::size_t>(n), 0);
  std::vector<Index> rows(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
  double mean = kahan_mean(data, k, rows);
  double var = kahan_variance(data, k, rows, mean);
  double w;
  try {
    w = omega(fam, mean, omega_eps);
  } catch (const DegenerateOmega&) {
    return degenerate_report(k, 0, {}, static_cast<std::size_t>(n), 1);
  }
  ScoreReport r;
  r.node = k;
  r.position = 0;
  r.score = w * w * var - w * mean;
  r.cells_used = 1;
  r.samples_used = static_cast<std::size_t>(n);
  return r;
}

ScoreReport score_at(const CountMatrix& data, Index position, Index k, const IndexList& candidates,
                     const QvfFamily& fam, double c0, double omega_eps) {
  if (candidates.empty()) {
    // Delegation makes the empty-conditioning case bit-identical to score_first.
    ScoreReport r = score_first(data, k, fam, omega_eps);
    r.position = position;
    return r;
  }
  CellPartition part;
  try {
    part = truncated_cells(data, k, candidates, c0);
  } catch (const NoCellsRetained&) {
    return degenerate_report(k, position, candidates, 0, 0);
  }
  // Cells that cannot contribute a variance (count < 2) or an omega are
  // excluded from the numerator and from n_S, so the weights used total 1.
  std::size_t n_s = 0, used = 0, degenerate_cells = 0;
  std::vector<std::pair<std::size_t, double>> terms;
  terms.reserve(part.cells.size());
  for (const ConditioningCell& cell : part.cells) {
    if (cell.count < 2) continue;
    double w;
    try {
      w = omega(fam, cell.mean, omega_eps);
    } catch (const DegenerateOmega&) {
      ++degenerate_cells;
      continue;
    }
    terms.push_back({cell.count, w * w * cell.variance - w * cell.mean});
    n_s += cell.count;
    ++used;
  }
  if (used == 0) return degenerate_report(k, position, candidates, 0, degenerate_cells);
  KahanSum score;
  for (const auto& [count, term] : terms) {
    score.add(static_cast<double>(count) / static_cast<double>(n_s) * term);
  }
  ScoreReport r;
  r.node = k;
  r.position = position;
  r.candidate_parents = candidates;
  r.score = score.sum;
  r.cells_used = used;
  r.samples_used = n_s;
  r.degenerate_cells = degenerate_cells;
  return r;
}

OrderingResult estimate_ordering(const CountMatrix& data, const UndirectedGraph& moral,
                                 const std::vector<QvfFamily>& fams, double c0,
                                 EmptyCandidatePolicy policy, int num_threads,
                                 double omega_eps) {
  const Index p = data.cols();
  if (moral.p != p) throw std::invalid_argument("moral graph size != data columns");
  if (fams.size() != static_cast<std::size_t>(p)) {
    throw std::invalid_argument("need one family per node");
  }
  OrderingResult out;
  if (p == 0) return out;
  if (p == 1) {
    out.ordering.nodes = {0};
    return out;
  }

  std::vector<bool> placed(static_cast<std::size_t>(p), false);
  auto pick = [&](const std::vector<ScoreReport>& reports) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < reports.size(); ++i) {
      if (reports[i].score < reports[best].score) best = i;  // ties keep the lowest node index
    }
    return reports[best].node;
  };
  auto ingest = [&](std::vector<ScoreReport>&& reports) {
    for (auto& r : reports) {
      out.degenerate_cells += r.degenerate_cells;
      out.reports.push_back(std::move(r));
    }
  };

  // Position 0: marginal scores for every node.
  {
    std::vector<ScoreReport> reports(static_cast<std::size_t>(p));
    parallel_for(static_cast<std::size_t>(p), [&](std::size_t k) {
      reports[k] = score_first(data, static_cast<Index>(k), fams[k], omega_eps);
    }, num_threads);
    Index first = pick(reports);
    ingest(std::move(reports));
    out.ordering.nodes.push_back(first);
    placed[static_cast<std::size_t>(first)] = true;
  }

  for (Index t = 1; t < p - 1; ++t) {
    Index prev = out.ordering.nodes.back();
    IndexList cands;
    for (Index k : moral.adj[static_cast<std::size_t>(prev)]) {
      if (!placed[static_cast<std::size_t>(k)]) cands.push_back(k);
    }
    if (cands.empty()) {
      if (policy == EmptyCandidatePolicy::fail) {
        throw std::runtime_error("no unordered neighbors at position " + std::to_string(t));
      }
      for (Index k = 0; k < p; ++k) {
        if (!placed[static_cast<std::size_t>(k)]) cands.push_back(k);
      }
    }
    std::vector<ScoreReport> reports(cands.size());
    parallel_for(cands.size(), [&](std::size_t c) {
      Index k = cands[c];
      IndexList cond;
      for (Index v : moral.adj[static_cast<std::size_t>(k)]) {
        if (placed[static_cast<std::size_t>(v)]) cond.push_back(v);
      }
      reports[c] = score_at(data, t, k, cond, fams[static_cast<std::size_t>(k)], c0, omega_eps);
    }, num_threads);
    Index next = pick(reports);
    ingest(std::move(reports));
    out.ordering.nodes.push_back(next);
    placed[static_cast<std::size_t>(next)] = true;
  }

  for (Index k = 0; k < p; ++k) {
    if (!placed[static_cast<std::size_t>(k)]) out.ordering.nodes.push_back(k);
  }
  return out;
}

}  // namespace qvf

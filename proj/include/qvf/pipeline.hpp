#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qvf/dag.hpp"
#include "qvf/family.hpp"
#include "qvf/glm.hpp"
#include "qvf/scoring.hpp"
#include "qvf/types.hpp"

namespace qvf {

// Serializable family description; make() builds the QvfFamily.
struct FamilySpec {
  std::string name = "poisson";
  int trials = 4;        // binomial N
  int successes = 1;     // negative binomial R
  double alpha = 1;      // gamma shape
  double lambda2 = 0;    // generalized poisson dispersion

  QvfFamily make() const;  // throws std::invalid_argument for unknown names
};

// Everything one experiment needs: generation (p, n, num_parents, family,
// theta range, intercept, seed) and learning (lambdas, c0, symmetrization,
// fallback, variant flags).
struct OdsConfig {
  Index p = 2;
  Index n = 1000;
  Index num_parents = 1;
  FamilySpec family;
  double theta_lo = -1.0;
  double theta_hi = -0.5;
  double intercept = 0.0;
  std::optional<double> lambda;     // absent: family default rule
  std::optional<double> lambda_d;   // parent-selection penalty; absent: same rule
  double c0 = 0.005;
  SymmetrizationRule rule = SymmetrizationRule::any_direction;
  EmptyCandidatePolicy fallback = EmptyCandidatePolicy::widen_to_all_unordered;
  Index trials = 1;
  std::uint64_t seed = 0;
  bool oracle_moral_graph = false;  // use moralize(truth) instead of step 1
  bool literal_last_node = false;   // last node's parents = its whole moral neighborhood
  bool stable_timings = false;      // benchmark CSV writes 0 for step timings
  GlmOptions glm;
};

// Penalty rule used by the reference experiments: 0.75 / log(max(n, p)) for
// Poisson, 0.10 / log(max(n, p)) for binomial; other families have no rule and
// must set lambda explicitly.
std::optional<double> default_lambda(const QvfFamily& fam, Index n, Index p);
// cfg.lambda / cfg.lambda_d resolved against the rule; throws
// std::invalid_argument when absent with no rule available.
double resolve_lambda(const OdsConfig& cfg);
double resolve_lambda_d(const OdsConfig& cfg);

struct OdsResult {
  Ordering ordering;
  std::set<std::pair<Index, Index>> edges;  // (parent, child), always forward in `ordering`
  UndirectedGraph moral;
  std::vector<ScoreReport> reports;
  double step1_ms = 0;  // moral graph
  double step2_ms = 0;  // ordering
  double step3_ms = 0;  // parent selection
  std::size_t degenerate_cells = 0;
};

// Three steps end to end: moral graph (estimated, or moralize(*truth) when
// cfg.oracle_moral_graph), overdispersion-score ordering, then per-node l1
// parent selection against the full ordering prefix (the literal_last_node
// variant instead copies the last node's moral neighborhood). Timings wrap
// computation only. Errors from any step propagate tagged with the step name.
OdsResult ods_learn(const CountMatrix& data, const OdsConfig& cfg, const Dag* truth = nullptr);

// Skeleton mismatch count / C(p,2): undirected edge present in exactly one of
// the two graphs.
double skeleton_hamming(const std::set<std::pair<Index, Index>>& est,
                        const std::set<std::pair<Index, Index>>& truth, Index p);
// Directed mismatch count / (p*(p-1)): ordered pair present in exactly one
// edge set; a reversed edge counts twice.
double directed_hamming(const std::set<std::pair<Index, Index>>& est,
                        const std::set<std::pair<Index, Index>>& truth, Index p);

struct EvalMetrics {
  std::optional<bool> ordering_consistent;  // absent when no ordering was supplied
  double skeleton_hamming_norm = 0;
  double directed_hamming_norm = 0;
  std::size_t inserted = 0;  // est edges whose pair is absent from the truth entirely
  std::size_t removed = 0;   // truth edges absent from est in both directions
  std::size_t reversed = 0;  // est edges that are exact reversals of truth edges
};

EvalMetrics evaluate_structure(const std::set<std::pair<Index, Index>>& est,
                               const std::set<std::pair<Index, Index>>& truth, Index p);

struct TrialRecord {
  std::string family;
  Index p = 0, n = 0, num_parents = 0;
  Index trial = 0;
  bool failed = false;
  std::string error;  // step-tagged message when failed
  bool ordering_consistent = false;
  double skeleton_hamming_norm = 0;
  double directed_hamming_norm = 0;
  double step1_ms = 0, step2_ms = 0, step3_ms = 0;
  std::size_t degenerate_cells = 0;
  bool stable_timings = false;  // copied from the config; CSV writes 0 for the timings
};

struct GridSummary {
  std::string family;
  Index p = 0, n = 0, num_parents = 0, trials = 0, ok = 0;
  double ordering_rate = 0;
  double skeleton_mean = 0, skeleton_sd = 0;
  double directed_mean = 0, directed_sd = 0;
  double step1_mean_ms = 0, step2_mean_ms = 0, step3_mean_ms = 0;
  std::string to_line() const;
};

struct BenchmarkResult {
  std::vector<TrialRecord> rows;        // grid order, then trial order
  std::vector<GridSummary> summaries;   // one per grid point, failed trials excluded
};

// Monte-Carlo benchmark: per grid point and trial, draw a DAG and a dataset
// from seeds derived off cfg.seed, run ods_learn, and evaluate against the
// truth. Trials are a parallel map with per-trial seed streams, so results are
// reproducible for any thread count. A failing trial is recorded with its
// error and skipped by the aggregates.
BenchmarkResult run_benchmark(const std::vector<OdsConfig>& grid, int num_threads = 0);

}  // namespace qvf

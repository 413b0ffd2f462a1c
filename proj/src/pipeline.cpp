#include "qvf/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <stdexcept>

#include "qvf/parallel.hpp"
#include "qvf/rng.hpp"
#include "qvf/sampling.hpp"

namespace qvf {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Rethrows the current exception with a step tag, preserving the type for the
// error classes callers branch on.
[[noreturn]] void rethrow_tagged(const char* step) {
  try {
    throw;
  } catch (const DomainError& e) {
    throw DomainError(std::string(step) + ": " + e.what());
  } catch (const DegenerateOmega& e) {
    throw DegenerateOmega(std::string(step) + ": " + e.what());
  } catch (const NoCellsRetained& e) {
    throw NoCellsRetained(std::string(step) + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string(step) + ": " + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(step) + ": " + e.what());
  }
}

}  // namespace

QvfFamily FamilySpec::make() const {
  if (name == "poisson") return QvfFamily::poisson();
  if (name == "binomial") return QvfFamily::binomial(trials);
  if (name == "geometric") return QvfFamily::geometric();
  if (name == "negative_binomial") return QvfFamily::negative_binomial(successes);
  if (name == "exponential") return QvfFamily::exponential();
  if (name == "generalized_poisson") return QvfFamily::generalized_poisson(lambda2);
  if (name == "gamma") return QvfFamily::gamma(alpha);
  throw std::invalid_argument("unknown family '" + name + "'");
}

std::optional<double> default_lambda(const QvfFamily& fam, Index n, Index p) {
  double denom = std::log(static_cast<double>(std::max(n, p)));
  if (!(denom > 0)) return std::nullopt;
  switch (fam.kind()) {
    case FamilyKind::poisson: return 0.75 / denom;
    case FamilyKind::binomial: return 0.10 / denom;
    default: return std::nullopt;
  }
}

namespace {

double resolve(const std::optional<double>& given, const OdsConfig& cfg, const char* what) {
  if (given) {
    if (!(*given >= 0)) throw std::invalid_argument(std::string(what) + " must be >= 0");
    return *given;
  }
  auto rule = default_lambda(cfg.family.make(), cfg.n, cfg.p);
  if (!rule) {
    throw std::invalid_argument(std::string(what) + " must be set explicitly for family '" +
                                cfg.family.name + "'");
  }
  return *rule;
}

}  // namespace

double resolve_lambda(const OdsConfig& cfg) { return resolve(cfg.lambda, cfg, "lambda"); }
double resolve_lambda_d(const OdsConfig& cfg) { return resolve(cfg.lambda_d, cfg, "lambda_d"); }

OdsResult ods_learn(const CountMatrix& data, const OdsConfig& cfg, const Dag* truth) {
  const Index p = data.cols();
  std::vector<QvfFamily> fams(static_cast<std::size_t>(p), cfg.family.make());
  OdsResult res;

  OdsConfig local = cfg;
  local.p = p;
  local.n = data.rows();

  // Step 1: moral graph.
  auto t0 = Clock::now();
  try {
    if (cfg.oracle_moral_graph) {
      if (!truth) throw std::invalid_argument("oracle moral graph requested without a truth DAG");
      res.moral = moralize(*truth);
      if (res.moral.p != p) throw std::invalid_argument("truth DAG size != data columns");
    } else {
      res.moral = estimate_moral_graph(data, fams, resolve_lambda(local), cfg.rule, cfg.glm);
    }
  } catch (...) {
    rethrow_tagged("step 1 (moral graph)");
  }
  res.step1_ms = ms_since(t0);

  // Step 2: overdispersion-score ordering.
  t0 = Clock::now();
  try {
    OrderingResult ord = estimate_ordering(data, res.moral, fams, cfg.c0, cfg.fallback,
                                           cfg.glm.num_threads);
    res.ordering = std::move(ord.ordering);
    res.reports = std::move(ord.reports);
    res.degenerate_cells = ord.degenerate_cells;
  } catch (...) {
    rethrow_tagged("step 2 (ordering)");
  }
  res.step2_ms = ms_since(t0);

  // Step 3: parent selection against the ordering prefix. The literal variant
  // instead copies the last node's moral neighborhood (every other node
  // precedes it, so those edges still point forward).
  t0 = Clock::now();
  try {
    double lambda_d = resolve_lambda_d(local);
    const auto& nodes = res.ordering.nodes;
    std::vector<IndexList> chosen(nodes.size());
    parallel_for(nodes.size(), [&](std::size_t t) {
      Index node = nodes[t];
      if (cfg.literal_last_node && t + 1 == nodes.size()) {
        const auto& nb = res.moral.adj[static_cast<std::size_t>(node)];
        chosen[t] = IndexList(nb.begin(), nb.end());
        return;
      }
      IndexList prefix(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(t));
      std::sort(prefix.begin(), prefix.end());
      chosen[t] = parent_select(data, node, prefix, fams[static_cast<std::size_t>(node)],
                                lambda_d, cfg.glm);
    }, cfg.glm.num_threads);
    for (std::size_t t = 0; t < nodes.size(); ++t) {
      for (Index par : chosen[t]) res.edges.insert({par, nodes[t]});
    }
  } catch (...) {
    rethrow_tagged("step 3 (parent selection)");
  }
  res.step3_ms = ms_since(t0);
  return res;
}

namespace {

std::set<std::pair<Index, Index>> skeleton_of(const std::set<std::pair<Index, Index>>& edges) {
  std::set<std::pair<Index, Index>> out;
  for (const auto& [a, b] : edges) out.insert({std::min(a, b), std::max(a, b)});
  return out;
}

template <typename SetT>
std::size_t symmetric_difference_size(const SetT& a, const SetT& b) {
  std::size_t n = 0;
  for (const auto& e : a) n += b.count(e) == 0;
  for (const auto& e : b) n += a.count(e) == 0;
  return n;
}

}  // namespace

double skeleton_hamming(const std::set<std::pair<Index, Index>>& est,
                        const std::set<std::pair<Index, Index>>& truth, Index p) {
  if (p < 2) throw std::invalid_argument("p must be >= 2");
  double pairs = static_cast<double>(p) * static_cast<double>(p - 1) / 2.0;
  return static_cast<double>(symmetric_difference_size(skeleton_of(est), skeleton_of(truth))) /
         pairs;
}

double directed_hamming(const std::set<std::pair<Index, Index>>& est,
                        const std::set<std::pair<Index, Index>>& truth, Index p) {
  if (p < 2) throw std::invalid_argument("p must be >= 2");
  double pairs = static_cast<double>(p) * static_cast<double>(p - 1);
  return static_cast<double>(symmetric_difference_size(est, truth)) / pairs;
}

EvalMetrics evaluate_structure(const std::set<std::pair<Index, Index>>& est,
                               const std::set<std::pair<Index, Index>>& truth, Index p) {
  EvalMetrics m;
  m.skeleton_hamming_norm = skeleton_hamming(est, truth, p);
  m.directed_hamming_norm = directed_hamming(est, truth, p);
  for (const auto& [a, b] : est) {
    if (truth.count({a, b})) continue;
    if (truth.count({b, a})) {
      ++m.reversed;
    } else {
      ++m.inserted;
    }
  }
  for (const auto& [a, b] : truth) {
    if (!est.count({a, b}) && !est.count({b, a})) ++m.removed;
  }
  return m;
}

std::string GridSummary::to_line() const {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "family=%s p=%lld n=%lld parents=%lld trials=%lld ok=%lld "
                "ordering_rate=%.4f skeleton=%.4f(%.4f) directed=%.4f(%.4f) "
                "steps_ms=%.1f/%.1f/%.1f",
                family.c_str(), static_cast<long long>(p), static_cast<long long>(n),
                static_cast<long long>(num_parents), static_cast<long long>(trials),
                static_cast<long long>(ok), ordering_rate, skeleton_mean, skeleton_sd,
                directed_mean, directed_sd, step1_mean_ms, step2_mean_ms, step3_mean_ms);
  return buf;
}

BenchmarkResult run_benchmark(const std::vector<OdsConfig>& grid, int num_threads) {
  std::vector<std::size_t> offset(grid.size() + 1, 0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (grid[g].trials < 1) throw std::invalid_argument("trials must be >= 1");
    offset[g + 1] = offset[g] + static_cast<std::size_t>(grid[g].trials);
  }
  BenchmarkResult out;
  out.rows.resize(offset.back());
  std::mutex log_mutex;

  parallel_for(out.rows.size(), [&](std::size_t flat) {
    std::size_t g = 0;
    while (offset[g + 1] <= flat) ++g;
    const OdsConfig& cfg = grid[g];
    Index trial = static_cast<Index>(flat - offset[g]);
    TrialRecord& row = out.rows[flat];
    row.family = cfg.family.name;
    row.p = cfg.p;
    row.n = cfg.n;
    row.num_parents = cfg.num_parents;
    row.trial = trial;
    row.stable_timings = cfg.stable_timings;
    try {
      std::uint64_t trial_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(trial));
      auto rng = make_rng(derive_seed(trial_seed, 0));
      Dag dag = random_dag(cfg.p, cfg.num_parents, cfg.theta_lo, cfg.theta_hi, cfg.intercept,
                           rng);
      std::vector<QvfFamily> fams(static_cast<std::size_t>(cfg.p), cfg.family.make());
      SampleOptions sopts;
      sopts.num_threads = 1;  // trials are the parallel axis
      CountMatrix data = sample_dataset(dag, fams, cfg.n, derive_seed(trial_seed, 1), sopts);
      OdsResult res = ods_learn(data, cfg, &dag);
      row.ordering_consistent = is_consistent_ordering(dag, res.ordering);
      EvalMetrics m = evaluate_structure(res.edges, dag.edges, cfg.p);
      row.skeleton_hamming_norm = m.skeleton_hamming_norm;
      row.directed_hamming_norm = m.directed_hamming_norm;
      row.step1_ms = res.step1_ms;
      row.step2_ms = res.step2_ms;
      row.step3_ms = res.step3_ms;
      row.degenerate_cells = res.degenerate_cells;
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
      std::lock_guard<std::mutex> lock(log_mutex);
      std::fprintf(stderr, "trial failed: family=%s p=%lld n=%lld trial=%lld: %s\n",
                   cfg.family.name.c_str(), static_cast<long long>(cfg.p),
                   static_cast<long long>(cfg.n), static_cast<long long>(trial), e.what());
    }
  }, num_threads);

  for (std::size_t g = 0; g < grid.size(); ++g) {
    GridSummary s;
    s.family = grid[g].family.name;
    s.p = grid[g].p;
    s.n = grid[g].n;
    s.num_parents = grid[g].num_parents;
    s.trials = grid[g].trials;
    double sk = 0, sk2 = 0, dr = 0, dr2 = 0, t1 = 0, t2 = 0, t3 = 0;
    Index ok = 0, consistent = 0;
    for (std::size_t i = offset[g]; i < offset[g + 1]; ++i) {
      const TrialRecord& row = out.rows[i];
      if (row.failed) continue;
      ++ok;
      consistent += row.ordering_consistent ? 1 : 0;
      sk += row.skeleton_hamming_norm;
      sk2 += row.skeleton_hamming_norm * row.skeleton_hamming_norm;
      dr += row.directed_hamming_norm;
      dr2 += row.directed_hamming_norm * row.directed_hamming_norm;
      t1 += row.step1_ms;
      t2 += row.step2_ms;
      t3 += row.step3_ms;
    }
    s.ok = ok;
    if (ok > 0) {
      double dn = static_cast<double>(ok);
      s.ordering_rate = static_cast<double>(consistent) / dn;
      s.skeleton_mean = sk / dn;
      s.directed_mean = dr / dn;
      if (ok > 1) {
        s.skeleton_sd = std::sqrt(std::max(0.0, (sk2 - sk * sk / dn) / (dn - 1)));
        s.directed_sd = std::sqrt(std::max(0.0, (dr2 - dr * dr / dn) / (dn - 1)));
      }
      s.step1_mean_ms = grid[g].stable_timings ? 0 : t1 / dn;
      s.step2_mean_ms = grid[g].stable_timings ? 0 : t2 / dn;
      s.step3_mean_ms = grid[g].stable_timings ? 0 : t3 / dn;
    }
    out.summaries.push_back(std::move(s));
  }
  return out;
}

}  // namespace qvf

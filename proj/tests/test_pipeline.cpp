#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "qvf/dag.hpp"
#include "qvf/errors.hpp"
#include "qvf/pipeline.hpp"
#include "qvf/rng.hpp"
#include "qvf/sampling.hpp"

using namespace qvf;

namespace {

Dag chain_dag(Index p, double theta) {
  Dag dag;
  dag.p = p;
  dag.theta = Matrix::Zero(p, p);
  for (Index j = 1; j < p; ++j) {
    dag.edges.insert({j - 1, j});
    dag.theta(j, j - 1) = theta;
  }
  dag.node_family_ids.assign(static_cast<std::size_t>(p), 0);
  return dag;
}

}  // namespace

TEST_CASE("family specs build every family and reject unknown names") {
  FamilySpec spec;
  spec.name = "poisson";
  CHECK(spec.make().beta0() == 1.0);
  CHECK(spec.make().beta1() == 0.0);

  spec.name = "binomial";
  spec.trials = 6;
  CHECK(spec.make().beta1() == doctest::Approx(-1.0 / 6.0));

  spec.name = "geometric";
  CHECK(spec.make().beta1() == 1.0);

  spec.name = "negative_binomial";
  spec.successes = 5;
  CHECK(spec.make().beta1() == doctest::Approx(0.2));

  spec.name = "generalized_poisson";
  spec.lambda2 = 0.3;
  CHECK(spec.make().beta0() == doctest::Approx(1.0 / 0.49));

  spec.name = "exponential";
  CHECK(spec.make().beta0() == 0.0);
  CHECK(spec.make().beta1() == 1.0);

  spec.name = "gamma";
  spec.alpha = 2.0;
  CHECK(spec.make().beta1() == doctest::Approx(0.5));

  spec.name = "zeta";
  CHECK_THROWS_WITH_AS(spec.make(), doctest::Contains("zeta"), std::invalid_argument);
}

TEST_CASE("default penalty rule") {
  auto pois = default_lambda(QvfFamily::poisson(), 10000, 10);
  REQUIRE(pois.has_value());
  CHECK(*pois == doctest::Approx(0.0814302153568597).epsilon(1e-12));

  auto binom = default_lambda(QvfFamily::binomial(4), 100000, 10);
  REQUIRE(binom.has_value());
  CHECK(*binom == doctest::Approx(0.008685889638065).epsilon(1e-12));

  // max(n, p) drives the rule when p is the larger.
  auto wide = default_lambda(QvfFamily::poisson(), 100, 1000);
  CHECK(*wide == doctest::Approx(0.75 / std::log(1000.0)).epsilon(1e-12));

  CHECK_FALSE(default_lambda(QvfFamily::geometric(), 1000, 5).has_value());
  CHECK_FALSE(default_lambda(QvfFamily::gamma(1.0), 1000, 5).has_value());
}

TEST_CASE("lambda resolution prefers explicit values and falls back to the rule") {
  OdsConfig cfg;
  cfg.n = 10000;
  cfg.p = 10;
  CHECK(resolve_lambda(cfg) == doctest::Approx(0.0814302153568597));
  cfg.lambda = 0.3;
  CHECK(resolve_lambda(cfg) == 0.3);
  CHECK(resolve_lambda_d(cfg) == doctest::Approx(0.0814302153568597));  // separate knob
  cfg.lambda_d = 0.05;
  CHECK(resolve_lambda_d(cfg) == 0.05);

  cfg.lambda = -0.1;
  CHECK_THROWS_AS(resolve_lambda(cfg), std::invalid_argument);

  OdsConfig geo;
  geo.family.name = "geometric";
  CHECK_THROWS_WITH_AS(resolve_lambda(geo), doctest::Contains("geometric"),
                       std::invalid_argument);
}

TEST_CASE("end-to-end learning recovers a two-node chain") {
  Dag dag = chain_dag(2, -0.8);
  std::vector<QvfFamily> fams(2, QvfFamily::poisson());
  OdsConfig cfg;
  int exact = 0;
  for (int rep = 0; rep < 20; ++rep) {
    CountMatrix data = sample_dataset(dag, fams, 10000, 600 + static_cast<std::uint64_t>(rep));
    OdsResult res = ods_learn(data, cfg);
    if (res.edges == std::set<std::pair<Index, Index>>{{0, 1}}) ++exact;
    CHECK(res.moral.p == 2);
    CHECK_FALSE(res.reports.empty());
    CHECK(res.step1_ms >= 0.0);
  }
  CHECK(exact >= 18);
}

TEST_CASE("estimated edges always point forward in the ordering") {
  auto rng = make_rng(88);
  Dag dag = random_dag(6, 2, -1.0, -0.5, 0.0, rng);
  std::vector<QvfFamily> fams(6, QvfFamily::poisson());
  CountMatrix data = sample_dataset(dag, fams, 4000, 42);
  OdsConfig cfg;
  OdsResult res = ods_learn(data, cfg);

  std::vector<Index> position(6);
  for (Index t = 0; t < 6; ++t) {
    position[static_cast<std::size_t>(res.ordering.nodes[static_cast<std::size_t>(t)])] = t;
  }
  for (const auto& [a, b] : res.edges) {
    CHECK(position[static_cast<std::size_t>(a)] < position[static_cast<std::size_t>(b)]);
  }
}

TEST_CASE("oracle moral graph requires a truth DAG and then matches it") {
  Dag dag = chain_dag(3, -0.8);
  std::vector<QvfFamily> fams(3, QvfFamily::poisson());
  CountMatrix data = sample_dataset(dag, fams, 2000, 7);
  OdsConfig cfg;
  cfg.oracle_moral_graph = true;
  CHECK_THROWS_WITH_AS(ods_learn(data, cfg), doctest::Contains("step 1"),
                       std::invalid_argument);

  OdsResult res = ods_learn(data, cfg, &dag);
  CHECK(res.moral.edge_set() == moralize(dag).edge_set());
  CHECK(res.step1_ms >= 0.0);
}

TEST_CASE("literal last node copies its whole moral neighborhood") {
  Dag dag = chain_dag(4, -0.8);
  std::vector<QvfFamily> fams(4, QvfFamily::poisson());
  CountMatrix data = sample_dataset(dag, fams, 10000, 123);
  OdsConfig cfg;
  cfg.oracle_moral_graph = true;
  cfg.literal_last_node = true;
  OdsResult res = ods_learn(data, cfg, &dag);

  Index last = res.ordering.nodes.back();
  std::set<Index> expected(res.moral.adj[static_cast<std::size_t>(last)].begin(),
                           res.moral.adj[static_cast<std::size_t>(last)].end());
  std::set<Index> got;
  for (const auto& [a, b] : res.edges) {
    if (b == last) got.insert(a);
  }
  CHECK(got == expected);
}

TEST_CASE("independent columns give an empty edge set") {
  Dag dag;
  dag.p = 5;
  dag.theta = Matrix::Zero(5, 5);
  dag.node_family_ids.assign(5, 0);
  std::vector<QvfFamily> fams(5, QvfFamily::poisson());
  OdsConfig cfg;
  int empty = 0;
  for (int rep = 0; rep < 10; ++rep) {
    CountMatrix data = sample_dataset(dag, fams, 10000, 800 + static_cast<std::uint64_t>(rep));
    OdsResult res = ods_learn(data, cfg);
    if (res.edges.empty()) ++empty;
  }
  CHECK(empty >= 8);
}

TEST_CASE("hamming distances on frozen examples") {
  using Edges = std::set<std::pair<Index, Index>>;
  Edges truth = {{0, 1}};

  // A reversed edge: skeletons agree, both directed pairs mismatch.
  Edges reversed = {{1, 0}};
  CHECK(skeleton_hamming(reversed, truth, 10) == 0.0);
  CHECK(directed_hamming(reversed, truth, 10) == doctest::Approx(2.0 / 90.0));

  // One extra edge: a single mismatch under both readings.
  Edges extra = {{0, 1}, {2, 3}};
  CHECK(skeleton_hamming(extra, truth, 10) == doctest::Approx(1.0 / 45.0));
  CHECK(directed_hamming(extra, truth, 10) == doctest::Approx(1.0 / 90.0));

  CHECK(skeleton_hamming(truth, truth, 10) == 0.0);
  CHECK(directed_hamming(truth, truth, 10) == 0.0);
  CHECK_THROWS_AS(skeleton_hamming(truth, truth, 1), std::invalid_argument);
  CHECK_THROWS_AS(directed_hamming(truth, truth, 1), std::invalid_argument);
}

TEST_CASE("structural error counts") {
  using Edges = std::set<std::pair<Index, Index>>;
  Edges truth = {{0, 1}, {6, 7}};
  Edges est = {{1, 0}, {2, 3}, {4, 5}};
  EvalMetrics m = evaluate_structure(est, truth, 8);
  CHECK(m.reversed == 1);   // (1,0) flips (0,1)
  CHECK(m.inserted == 2);   // (2,3) and (4,5) touch no truth pair
  CHECK(m.removed == 1);    // (6,7) vanished entirely
  CHECK_FALSE(m.ordering_consistent.has_value());
  CHECK(m.skeleton_hamming_norm == doctest::Approx(3.0 / 28.0));
  CHECK(m.directed_hamming_norm == doctest::Approx(5.0 / 56.0));
}

TEST_CASE("benchmark runs are reproducible and thread-count invariant") {
  OdsConfig cfg;
  cfg.p = 4;
  cfg.n = 2000;
  cfg.num_parents = 1;
  cfg.trials = 3;
  cfg.seed = 9001;

  BenchmarkResult a = run_benchmark({cfg}, 1);
  REQUIRE(a.rows.size() == 3);
  REQUIRE(a.summaries.size() == 1);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const TrialRecord& r = a.rows[i];
    CHECK(r.family == "poisson");
    CHECK(r.p == 4);
    CHECK(r.n == 2000);
    CHECK(r.num_parents == 1);
    CHECK(r.trial == static_cast<Index>(i));
    CHECK_FALSE(r.failed);
  }

  BenchmarkResult b = run_benchmark({cfg}, 4);
  REQUIRE(b.rows.size() == a.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].ordering_consistent == b.rows[i].ordering_consistent);
    CHECK(a.rows[i].skeleton_hamming_norm == b.rows[i].skeleton_hamming_norm);
    CHECK(a.rows[i].directed_hamming_norm == b.rows[i].directed_hamming_norm);
    CHECK(a.rows[i].degenerate_cells == b.rows[i].degenerate_cells);
    CHECK(a.rows[i].failed == b.rows[i].failed);
  }

  const GridSummary& s = a.summaries[0];
  CHECK(s.ok == 3);
  std::string line = s.to_line();
  CHECK(line.find("family=poisson") != std::string::npos);
  CHECK(line.find("p=4") != std::string::npos);
  CHECK(line.find("ok=3") != std::string::npos);

  // Distinct trials draw distinct parameters: with one parent per node the
  // backbone edges repeat, but the weights come from fresh per-trial streams.
  std::vector<Matrix> thetas;
  for (Index trial = 0; trial < 3; ++trial) {
    std::uint64_t trial_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(trial));
    auto rng = make_rng(derive_seed(trial_seed, 0));
    thetas.push_back(random_dag(cfg.p, cfg.num_parents, cfg.theta_lo, cfg.theta_hi,
                                cfg.intercept, rng).theta);
  }
  CHECK(thetas[0] != thetas[1]);
  CHECK(thetas[1] != thetas[2]);

  OdsConfig no_trials;
  no_trials.trials = 0;
  CHECK_THROWS_AS(run_benchmark({no_trials}), std::invalid_argument);
}

TEST_CASE("failing trials are recorded with a step-tagged error") {
  OdsConfig cfg;
  cfg.family.name = "geometric";  // no penalty rule and no explicit lambda
  cfg.p = 3;
  cfg.n = 500;
  cfg.num_parents = 1;
  cfg.intercept = -0.5;  // keeps the natural parameter strictly negative
  cfg.trials = 2;
  cfg.seed = 11;

  BenchmarkResult res = run_benchmark({cfg}, 1);
  REQUIRE(res.rows.size() == 2);
  for (const auto& row : res.rows) {
    CHECK(row.failed);
    CHECK(row.error.find("step 1") != std::string::npos);
  }
  CHECK(res.summaries[0].ok == 0);
  CHECK(res.summaries[0].to_line().find("ok=0") != std::string::npos);
}

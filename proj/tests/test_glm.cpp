#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "qvf/errors.hpp"
#include "qvf/glm.hpp"
#include "qvf/rng.hpp"
#include "qvf/sampling.hpp"

using namespace qvf;

namespace {

double soft(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

// n x q design with zero-mean columns and (1/n) X^T X = I: center a random
// matrix, take the thin Q of its QR, scale by sqrt(n). Centered columns are
// orthogonal to the all-ones vector, and Q keeps their span.
Matrix orthonormal_design(Index n, Index q, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix x(n, q);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < q; ++j) x(i, j) = gauss(rng);
  }
  x.rowwise() -= x.colwise().mean();
  Eigen::HouseholderQR<Matrix> qr(x);
  Matrix thin = qr.householderQ() * Matrix::Identity(n, q);
  return thin * std::sqrt(static_cast<double>(n));
}

Matrix count_design(Index n, Index q, std::mt19937_64& rng) {
  Matrix x(n, q);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < q; ++j) x(i, j) = sample_node(QvfFamily::poisson(), 0.0, rng);
  }
  return x;
}

}  // namespace

TEST_CASE("gaussian fit on an orthonormal design matches soft-thresholding") {
  auto rng = make_rng(101);
  const Index n = 400, q = 6;
  Matrix x = orthonormal_design(n, q, rng);
  Vector b_true(q);
  b_true << 1.5, -0.9, 0.4, 0.0, 0.0, 0.05;
  std::normal_distribution<double> noise(0.0, 0.5);
  Vector y = x * b_true;
  for (Index i = 0; i < n; ++i) y[i] += 2.0 + noise(rng);

  const double lambda = 0.2;
  GlmProblem prob{x, y, GlmFamily::gaussian(), lambda};
  GlmFit fit = fit_l1_glm(prob);
  CHECK(fit.converged);

  const double ybar = y.mean();
  CHECK(fit.intercept == doctest::Approx(ybar).epsilon(1e-9));
  for (Index k = 0; k < q; ++k) {
    double z = x.col(k).dot(y) / static_cast<double>(n);
    CHECK(std::abs(fit.coefficients[k] - soft(z, lambda)) < 1e-6);
  }
}

TEST_CASE("lambda at or above lambda_max zeroes every coefficient") {
  auto rng = make_rng(77);
  const Index n = 300;
  Matrix x = count_design(n, 4, rng);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    y[i] = sample_node(QvfFamily::poisson(), -0.5 + 0.3 * x(i, 0) - 0.2 * x(i, 2), rng);
  }
  const double lmax = lambda_max(x, y);
  for (auto family : {GlmFamily::gaussian(), GlmFamily::of(QvfFamily::poisson())}) {
    GlmProblem prob{x, y, family, lmax * 1.0001};
    GlmFit fit = fit_l1_glm(prob);
    CHECK(fit.support.empty());
    CHECK(fit.coefficients.cwiseAbs().maxCoeff() == 0.0);
  }
  GlmProblem below{x, y, GlmFamily::of(QvfFamily::poisson()), lmax * 0.8};
  CHECK_FALSE(fit_l1_glm(below).support.empty());
}

TEST_CASE("poisson fit matches the exhaustive lattice oracle") {
  auto rng = make_rng(2718);
  const Index n = 150;
  Matrix x = count_design(n, 2, rng);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    y[i] = sample_node(QvfFamily::poisson(), -0.3 + 0.45 * x(i, 0) - 0.35 * x(i, 1), rng);
  }
  for (double lambda : {0.02, 0.25}) {
    CAPTURE(lambda);
    oracles::PoissonLatticeOracle oracle(x, y, lambda);
    auto ref = oracle.minimize();
    CHECK(ref.interior);

    GlmProblem prob{x, y, GlmFamily::of(QvfFamily::poisson()), lambda};
    GlmFit fit = fit_l1_glm(prob);
    CHECK(fit.converged);
    CHECK(std::abs(fit.coefficients[0] - ref.b1) <= 1e-3);
    CHECK(std::abs(fit.coefficients[1] - ref.b2) <= 1e-3);
    CHECK(std::abs(fit.intercept - ref.b0) <= 2e-3);
    // The solver optimizes over the continuum, so it can only undercut the
    // lattice; and the fine lattice can only undercut it by a sliver.
    CHECK(fit.objective <= ref.objective + 1e-9);
    CHECK(ref.objective - fit.objective <= 1e-5);
  }
}

TEST_CASE("KKT residuals hold at convergence across families") {
  auto rng = make_rng(4040);
  struct Case {
    QvfFamily gen;
    GlmFamily family;
  };
  std::vector<Case> cases = {{QvfFamily::poisson(), GlmFamily::of(QvfFamily::poisson())},
                             {QvfFamily::binomial(4), GlmFamily::of(QvfFamily::binomial(4))},
                             {QvfFamily::geometric(), GlmFamily::of(QvfFamily::geometric())}};
  for (const auto& c : cases) {
    for (int rep = 0; rep < 4; ++rep) {
      const Index n = 250;
      Matrix x = count_design(n, 3, rng);
      Vector y(n);
      for (Index i = 0; i < n; ++i) {
        double eta = -0.8 - 0.25 * x(i, 0) - 0.1 * x(i, 1);
        y[i] = sample_node(c.gen, eta, rng);
      }
      GlmProblem prob{x, y, c.family, 0.02};
      GlmFit fit = fit_l1_glm(prob);
      CHECK(fit.converged);
      CHECK(kkt_violation(prob, fit.intercept, fit.coefficients) <= 1e-6);
    }
  }
}

TEST_CASE("smooth gradient matches central finite differences") {
  auto rng = make_rng(515);
  std::vector<GlmFamily> fams = {GlmFamily::gaussian(),
                                 GlmFamily::of(QvfFamily::poisson()),
                                 GlmFamily::of(QvfFamily::binomial(4)),
                                 GlmFamily::of(QvfFamily::geometric()),
                                 GlmFamily::of(QvfFamily::negative_binomial(3)),
                                 GlmFamily::of(QvfFamily::exponential()),
                                 GlmFamily::of(QvfFamily::gamma(2.0))};
  std::uniform_real_distribution<double> small(-0.2, 0.0);
  const Index n = 60, q = 3;
  for (const auto& family : fams) {
    for (int rep = 0; rep < 10; ++rep) {
      Matrix x = count_design(n, q, rng);
      Vector y = Vector::Constant(n, 0.5);  // any positive response works for every family
      GlmProblem prob{x, y, family, 0.0};
      Vector b(q);
      for (Index k = 0; k < q; ++k) b[k] = small(rng);
      double b0 = -1.0;
      Vector g = smooth_gradient(prob, b0, b);
      const double h = 1e-6;
      for (Index k = 0; k < q; ++k) {
        Vector bp = b, bm = b;
        bp[k] += h;
        bm[k] -= h;
        double fd = (glm_objective(prob, b0, bp) - glm_objective(prob, b0, bm)) / (2 * h);
        CHECK(std::abs(g[k] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
      }
      double fd0 =
          (glm_objective(prob, b0 + h, b) - glm_objective(prob, b0 - h, b)) / (2 * h);
      CHECK(std::abs(intercept_gradient(prob, b0, b) - fd0) <= 1e-5 * std::max(1.0, std::abs(fd0)));
    }
  }
}

TEST_CASE("fit is invariant under predictor permutation") {
  auto rng = make_rng(909);
  const Index n = 300, q = 4;
  Matrix x = count_design(n, q, rng);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    y[i] = sample_node(QvfFamily::poisson(), -0.4 + 0.35 * x(i, 1) - 0.3 * x(i, 3), rng);
  }
  GlmProblem prob{x, y, GlmFamily::of(QvfFamily::poisson()), 0.03};
  GlmFit fit = fit_l1_glm(prob);

  IndexList perm = {2, 0, 3, 1};  // new column c holds old column perm[c]
  Matrix xp(n, q);
  for (Index c = 0; c < q; ++c) xp.col(c) = x.col(perm[static_cast<std::size_t>(c)]);
  GlmProblem prob_p{xp, y, prob.family, prob.lambda};
  GlmFit fit_p = fit_l1_glm(prob_p);

  CHECK(fit_p.intercept == doctest::Approx(fit.intercept).epsilon(1e-7));
  for (Index c = 0; c < q; ++c) {
    CHECK(fit_p.coefficients[c] ==
          doctest::Approx(fit.coefficients[perm[static_cast<std::size_t>(c)]]).epsilon(1e-6));
  }
}

TEST_CASE("objective never increases with more reweighting iterations") {
  auto rng = make_rng(321);
  const Index n = 200;
  Matrix x = count_design(n, 3, rng);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    y[i] = sample_node(QvfFamily::poisson(), -0.2 + 0.3 * x(i, 0), rng);
  }
  GlmProblem prob{x, y, GlmFamily::of(QvfFamily::poisson()), 0.05};
  double prev = std::numeric_limits<double>::infinity();
  for (int iters = 1; iters <= 6; ++iters) {
    GlmOptions opts;
    opts.max_iter = iters;
    GlmFit fit = fit_l1_glm(prob, opts);
    CHECK(fit.objective <= prev + 1e-12 * (1.0 + std::abs(prev)));
    prev = fit.objective;
  }
}

TEST_CASE("negative-domain families stay inside eta < 0") {
  auto rng = make_rng(818);
  const Index n = 250;
  Matrix x = count_design(n, 2, rng);
  Vector y(n);
  std::exponential_distribution<double> expo(0.1);  // large responses push eta toward 0
  for (Index i = 0; i < n; ++i) y[i] = expo(rng) + 0.05;
  GlmProblem prob{x, y, GlmFamily::of(QvfFamily::exponential()), 0.01};
  GlmFit fit = fit_l1_glm(prob);
  Vector eta = (x * fit.coefficients).array() + fit.intercept;
  CHECK(eta.maxCoeff() < 0.0);
  CHECK(std::isfinite(fit.objective));
  CHECK(glm_objective(prob, fit.intercept, fit.coefficients) == doctest::Approx(fit.objective));
  // Pushing eta out of the domain makes the objective infinite, not NaN.
  CHECK(glm_objective(prob, 1.0, Vector::Zero(2)) ==
        std::numeric_limits<double>::infinity());
}

TEST_CASE("standardization reports coefficients on the original scale") {
  auto rng = make_rng(626);
  const Index n = 500;
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix x(n, 2);
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = 1000.0 * gauss(rng);  // wildly different column scales
    x(i, 1) = 0.5 * gauss(rng);
  }
  Vector y(n);
  for (Index i = 0; i < n; ++i) y[i] = 0.002 * x(i, 0) + 1.5 * x(i, 1) + 0.2 * gauss(rng);
  GlmOptions opts;
  opts.standardize = true;
  GlmProblem prob{x, y, GlmFamily::gaussian(), 0.01};
  GlmFit fit = fit_l1_glm(prob, opts);
  CHECK(fit.converged);
  CHECK(fit.coefficients[0] == doctest::Approx(0.002).epsilon(0.05));
  CHECK(fit.coefficients[1] == doctest::Approx(1.5).epsilon(0.05));
}

TEST_CASE("glm family mapping mirrors the count families") {
  CHECK(GlmFamily::of(QvfFamily::poisson()).name() == "poisson");
  // A geometric response is a negative binomial with one success.
  GlmFamily geo = GlmFamily::of(QvfFamily::geometric());
  GlmFamily nb1 = GlmFamily::of(QvfFamily::negative_binomial(1));
  for (double eta : {-1.5, -0.3}) {
    CHECK(geo.log_partition(eta) == doctest::Approx(nb1.log_partition(eta)).epsilon(1e-14));
    CHECK(geo.mean(eta) == doctest::Approx(nb1.mean(eta)).epsilon(1e-14));
    CHECK(geo.curvature(eta) == doctest::Approx(nb1.curvature(eta)).epsilon(1e-14));
  }
  CHECK(GlmFamily::of(QvfFamily::binomial(5)).mean_upper() == 5.0);
  CHECK_THROWS_AS(GlmFamily::of(QvfFamily::generalized_poisson(0.2)), DomainError);
  for (const auto& fam : {QvfFamily::poisson(), QvfFamily::binomial(5), QvfFamily::geometric(),
                          QvfFamily::negative_binomial(2), QvfFamily::exponential(),
                          QvfFamily::gamma(1.5)}) {
    GlmFamily g = GlmFamily::of(fam);
    for (double eta : {-2.0, -0.7, -0.1}) {
      CHECK(g.mean(eta) == doctest::Approx(mean_from_eta(fam, eta)).epsilon(1e-12));
      CHECK(g.curvature(eta) == doctest::Approx(variance_from_eta(fam, eta)).epsilon(1e-12));
      CHECK(g.log_partition(eta) == doctest::Approx(log_partition(fam, eta)).epsilon(1e-12));
    }
    CHECK(g.eta_upper() == eta_upper_bound(fam));
  }
}

TEST_CASE("neighborhood selection recovers a chain's neighborhoods") {
  Dag dag;
  dag.p = 3;
  dag.edges = {{0, 1}, {1, 2}};
  dag.theta = Matrix::Zero(3, 3);
  dag.theta(1, 0) = -0.8;
  dag.theta(2, 1) = -0.7;
  dag.node_family_ids = {0, 0, 0};
  std::vector<QvfFamily> fams(3, QvfFamily::poisson());
  const Index n = 5000;
  const double lambda = 0.75 / std::log(static_cast<double>(n));
  int hits = 0;
  for (int rep = 0; rep < 5; ++rep) {
    CountMatrix data = sample_dataset(dag, fams, n, 1000 + static_cast<std::uint64_t>(rep));
    IndexList nb = neighborhood_select(data, 1, fams[1], lambda);
    if (nb == IndexList{0, 2}) ++hits;
  }
  CHECK(hits >= 4);

  CountMatrix data = sample_dataset(dag, fams, 500, 5);
  CHECK(neighborhood_select(data, 0, fams[0], 50.0).empty());
  CHECK_THROWS_AS(neighborhood_select(data, 9, fams[0], 0.1), std::invalid_argument);
}

TEST_CASE("moral graph estimation on a chain") {
  Dag dag;
  dag.p = 3;
  dag.edges = {{0, 1}, {1, 2}};
  dag.theta = Matrix::Zero(3, 3);
  dag.theta(1, 0) = -0.8;
  dag.theta(2, 1) = -0.7;
  dag.node_family_ids = {0, 0, 0};
  std::vector<QvfFamily> fams(3, QvfFamily::poisson());
  const Index n = 5000;
  const double lambda = 0.75 / std::log(static_cast<double>(n));
  int exact = 0;
  for (int rep = 0; rep < 5; ++rep) {
    CountMatrix data = sample_dataset(dag, fams, n, 2000 + static_cast<std::uint64_t>(rep));
    UndirectedGraph g = estimate_moral_graph(data, fams, lambda);
    if (g.edge_set() == moralize(dag).edge_set()) ++exact;
    // AND-rule edges are always a subset of OR-rule edges.
    UndirectedGraph g_and =
        estimate_moral_graph(data, fams, lambda, SymmetrizationRule::both_directions);
    for (const auto& e : g_and.edge_set()) CHECK(g.edge_set().count(e) == 1);
  }
  CHECK(exact >= 4);

  CountMatrix data = sample_dataset(dag, fams, 100, 1);
  CHECK_THROWS_AS(estimate_moral_graph(data, std::vector<QvfFamily>(2, fams[0]), lambda),
                  std::invalid_argument);
}

TEST_CASE("parent selection against an ordering prefix") {
  Dag dag;
  dag.p = 5;
  dag.edges = {{0, 1}, {1, 2}, {2, 3}, {3, 4}};
  dag.theta = Matrix::Zero(5, 5);
  for (const auto& [a, b] : dag.edges) dag.theta(b, a) = -0.8;
  dag.node_family_ids.assign(5, 0);
  std::vector<QvfFamily> fams(5, QvfFamily::poisson());
  const Index n = 10000;
  const double lambda = 0.75 / std::log(static_cast<double>(n));
  int hits = 0, total = 0;
  for (int rep = 0; rep < 10; ++rep) {
    CountMatrix data = sample_dataset(dag, fams, n, 3000 + static_cast<std::uint64_t>(rep));
    for (Index j = 1; j < 5; ++j) {
      IndexList prefix;
      for (Index k = 0; k < j; ++k) prefix.push_back(k);
      ++total;
      if (parent_select(data, j, prefix, fams[static_cast<std::size_t>(j)], lambda) ==
          IndexList{j - 1}) {
        ++hits;
      }
    }
  }
  CHECK(hits >= total - 2);  // the chain parent, recovered almost always

  CountMatrix data = sample_dataset(dag, fams, 200, 9);
  CHECK(parent_select(data, 0, {}, fams[0], lambda).empty());
  CHECK(parent_select(data, 4, {0, 1, 2, 3}, fams[4], 25.0).empty());
  CHECK_THROWS_AS(parent_select(data, 2, {2}, fams[2], lambda), std::invalid_argument);
}

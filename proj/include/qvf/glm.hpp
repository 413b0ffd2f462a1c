#pragma once

#include <string>
#include <vector>

#include "qvf/dag.hpp"
#include "qvf/family.hpp"
#include "qvf/types.hpp"

namespace qvf {

// Response model for the l1 solver: log-partition A with mean A' and
// curvature A''. Separate from QvfFamily so non-count responses (gaussian
// least squares, the standard sanity case for the solver) fit the same code
// path; QvfFamily converts via of().
class GlmFamily {
 public:
  GlmFamily();                  // gaussian, so a default GlmProblem is usable
  static GlmFamily gaussian();  // A = eta^2 / 2
  // Throws DomainError for families with no natural-parameter form.
  static GlmFamily of(const QvfFamily& fam);

  double log_partition(double eta) const;
  double mean(double eta) const;       // A'
  double curvature(double eta) const;  // A''
  double eta_from_mean(double m) const;
  // Exclusive upper bound of the mean range: N for binomial, +inf otherwise.
  double mean_upper() const;
  // Exclusive upper bound of the natural domain (0 or +inf); lower end is -inf.
  double eta_upper() const { return eta_upper_; }
  bool in_domain(double eta) const { return eta < eta_upper_; }
  const std::string& name() const { return name_; }

 private:
  enum class Kind { gaussian, poisson, binomial, neg_binomial, exponential, gamma } kind_ =
      Kind::gaussian;
  double trials_ = 0;     // binomial N
  double successes_ = 0;  // negative binomial R (geometric: 1)
  double alpha_ = 0;      // gamma shape
  double eta_upper_ = 0;
  std::string name_;
};

// min over (intercept, coef) of
//   (1/n) * sum_i [ -y_i * eta_i + A(eta_i) ] + lambda * ||coef||_1,
//   eta_i = intercept + <coef, design.row(i)>.
// The intercept is never penalized.
struct GlmProblem {
  Matrix design;    // n x q, raw counts by default (see GlmOptions.standardize)
  Vector response;  // n
  GlmFamily family;
  double lambda = 0;
};

struct GlmOptions {
  int max_iter = 100;        // reweighting iterations
  double tol = 1e-8;         // max coordinate change (intercept included) declaring convergence
  double kkt_tol = 5e-7;     // stationarity slack also required before reporting convergence
  double support_tol = 1e-6; // |coef| > support_tol joins the support
  int max_sweeps = 1000;     // coordinate sweeps per reweighting
  int max_halvings = 30;     // step halvings when a candidate leaves the domain or raises the objective
  double weight_floor = 1e-8;
  bool standardize = false;  // scale columns to unit variance internally; report on the original scale
  int num_threads = 0;       // used by the neighborhood/moral-graph drivers
};

struct GlmFit {
  double intercept = 0;
  Vector coefficients;   // exact zeros where soft-thresholding zeroed a coordinate
  IndexList support;     // ascending indices with |coef| > support_tol
  double objective = 0;  // penalized objective at the returned iterate
  int iterations = 0;    // reweighting iterations performed
  bool converged = false;
};

// Iteratively reweighted quadratic approximations solved by cyclic coordinate
// descent with soft-thresholding. The penalized objective never increases
// across accepted iterates (step halving enforces descent); convergence is
// declared when the largest coordinate change falls below tol and the KKT
// residual below kkt_tol. Hitting max_iter returns the best iterate with
// converged = false. Throws DomainError only if step halving cannot re-enter
// the family domain.
GlmFit fit_l1_glm(const GlmProblem& prob, const GlmOptions& opts = {});

// Penalized objective at an arbitrary iterate (+inf outside the domain).
double glm_objective(const GlmProblem& prob, double intercept, const Vector& coef);

// Gradient of the unpenalized part w.r.t. coef: (1/n) * X^T (A'(eta) - y).
Vector smooth_gradient(const GlmProblem& prob, double intercept, const Vector& coef);
double intercept_gradient(const GlmProblem& prob, double intercept, const Vector& coef);

// Max KKT violation at (intercept, coef): for zero coordinates
// max(0, |g_k| - lambda), for nonzero |g_k + lambda * sign|, plus the
// intercept stationarity |g_0|.
double kkt_violation(const GlmProblem& prob, double intercept, const Vector& coef);

// Smallest lambda with an all-zero coefficient vector:
// max_k |<design.col(k), mean(y) - y>| / n. Family-free because the
// intercept-only fit matches the response mean for every family.
double lambda_max(const Matrix& design, const Vector& response);

// l1-penalized regression of column `node` on all other columns; returns the
// selected node indices, ascending.
IndexList neighborhood_select(const CountMatrix& data, Index node, const QvfFamily& fam,
                              double lambda, const GlmOptions& opts = {});

enum class SymmetrizationRule {
  any_direction,   // OR: edge if either node selects the other
  both_directions, // AND
};

// Per-node neighborhood selection (parallel map) symmetrized into a moral
// graph estimate.
UndirectedGraph estimate_moral_graph(const CountMatrix& data, const std::vector<QvfFamily>& fams,
                                     double lambda, SymmetrizationRule rule = SymmetrizationRule::any_direction,
                                     const GlmOptions& opts = {});

// l1-penalized regression of `node` on `predecessors` only; empty
// predecessors return an empty set without fitting.
IndexList parent_select(const CountMatrix& data, Index node, const IndexList& predecessors,
                        const QvfFamily& fam, double lambda, const GlmOptions& opts = {});

}  // namespace qvf

#pragma once

#include <random>
#include <string>

#include "qvf/errors.hpp"

namespace qvf {

// Quadratic-variance exponential families for count models:
// Var(X | parents) = beta0 * mu + beta1 * mu^2 where mu = E(X | parents).
enum class FamilyKind {
  poisson,
  binomial,
  geometric,
  negative_binomial,
  exponential,
  generalized_poisson,
  gamma,
};

inline constexpr double kDefaultOmegaEps = 1e-8;

// Value type; construct through the named factories, which pin (beta0, beta1)
// to the family and reject parameters that would push beta1 to -1 or below.
class QvfFamily {
 public:
  static QvfFamily poisson();                             // (1, 0)
  static QvfFamily binomial(int trials);                  // (1, -1/N), N >= 2
  static QvfFamily geometric();                           // (1, 1)
  static QvfFamily negative_binomial(int successes);      // (1, 1/R), R >= 1
  static QvfFamily exponential();                         // (0, 1)
  static QvfFamily generalized_poisson(double lambda2);   // (1/(1-l2)^2, 0), 0 <= l2 < 1
  static QvfFamily gamma(double alpha);                   // (0, 1/alpha), alpha > 0

  FamilyKind kind() const { return kind_; }
  double beta0() const { return beta0_; }
  double beta1() const { return beta1_; }
  int trials() const { return trials_; }          // binomial N
  int successes() const { return successes_; }    // negative binomial R
  double alpha() const { return alpha_; }         // gamma shape
  double lambda2() const { return lambda2_; }     // generalized poisson dispersion

  std::string name() const;

  // Generalized Poisson is quadratic-variance but not a natural exponential
  // family; it supports omega only.
  bool has_natural_form() const { return kind_ != FamilyKind::generalized_poisson; }
  bool supports_sampling() const {
    return kind_ != FamilyKind::generalized_poisson && kind_ != FamilyKind::gamma;
  }

 private:
  QvfFamily() = default;
  FamilyKind kind_ = FamilyKind::poisson;
  double beta0_ = 1, beta1_ = 0;
  int trials_ = 0, successes_ = 0;
  double alpha_ = 0, lambda2_ = 0;
};

// Variance-stabilizing weight omega = 1 / (beta0 + beta1 * mean): after
// scaling by omega, conditional variance equals conditional mean. Throws
// DegenerateOmega when |beta0 + beta1 * mean| < eps.
double omega(const QvfFamily& fam, double mean, double eps = kDefaultOmegaEps);

// Exclusive upper end of the natural-parameter domain: 0 for the eta < 0
// families (geometric, negative binomial, exponential, gamma), +inf otherwise.
double eta_upper_bound(const QvfFamily& fam);

// Log-partition A(eta). Throws DomainError outside the domain, and for the
// generalized Poisson family (no natural form).
double log_partition(const QvfFamily& fam, double eta);

// A'(eta) = E(X | eta) and A''(eta) = Var(X | eta).
double mean_from_eta(const QvfFamily& fam, double eta);
double variance_from_eta(const QvfFamily& fam, double eta);

// Inverse of mean_from_eta. Throws DomainError when `mean` is outside the open
// mean range (e.g. Poisson mean <= 0, binomial mean outside (0, N)).
double eta_from_mean(const QvfFamily& fam, double mean);

// One draw at natural parameter eta. Discrete families return exact integers
// (as doubles); exponential returns a positive real. Throws UnsupportedSampling
// for generalized Poisson and gamma, DomainError outside the domain or when a
// Poisson rate exceeds max_poisson_mean.
double sample_node(const QvfFamily& fam, double eta, std::mt19937_64& rng,
                   double max_poisson_mean = 1e8);

}  // namespace qvf

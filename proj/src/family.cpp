#include "qvf/family.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace qvf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void domain_fail(const QvfFamily& fam, double eta, const char* why) {
  throw DomainError(fam.name() + ": eta=" + std::to_string(eta) + " " + why);
}

void require_negative_eta(const QvfFamily& fam, double eta) {
  if (!(eta < 0)) domain_fail(fam, eta, "outside the natural domain (eta < 0)");
}

void require_natural_form(const QvfFamily& fam) {
  if (!fam.has_natural_form()) {
    throw DomainError(fam.name() + ": no natural-parameter form");
  }
}

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

QvfFamily QvfFamily::poisson() {
  QvfFamily f;
  f.kind_ = FamilyKind::poisson;
  f.beta0_ = 1;
  f.beta1_ = 0;
  return f;
}

QvfFamily QvfFamily::binomial(int trials) {
  // N = 1 would give beta1 = -1 (Bernoulli variance collapses); reject it.
  if (trials < 2) throw std::invalid_argument("binomial needs trials >= 2");
  QvfFamily f;
  f.kind_ = FamilyKind::binomial;
  f.trials_ = trials;
  f.beta0_ = 1;
  f.beta1_ = -1.0 / trials;
  return f;
}

QvfFamily QvfFamily::geometric() {
  QvfFamily f;
  f.kind_ = FamilyKind::geometric;
  f.beta0_ = 1;
  f.beta1_ = 1;
  f.successes_ = 1;
  return f;
}

QvfFamily QvfFamily::negative_binomial(int successes) {
  if (successes < 1) throw std::invalid_argument("negative binomial needs successes >= 1");
  QvfFamily f;
  f.kind_ = FamilyKind::negative_binomial;
  f.successes_ = successes;
  f.beta0_ = 1;
  f.beta1_ = 1.0 / successes;
  return f;
}

QvfFamily QvfFamily::exponential() {
  QvfFamily f;
  f.kind_ = FamilyKind::exponential;
  f.beta0_ = 0;
  f.beta1_ = 1;
  return f;
}

QvfFamily QvfFamily::generalized_poisson(double lambda2) {
  if (!(lambda2 >= 0 && lambda2 < 1)) {
    throw std::invalid_argument("generalized poisson needs 0 <= lambda2 < 1");
  }
  QvfFamily f;
  f.kind_ = FamilyKind::generalized_poisson;
  f.lambda2_ = lambda2;
  double s = 1.0 - lambda2;
  f.beta0_ = 1.0 / (s * s);
  f.beta1_ = 0;
  return f;
}

QvfFamily QvfFamily::gamma(double alpha) {
  if (!(alpha > 0)) throw std::invalid_argument("gamma needs alpha > 0");
  QvfFamily f;
  f.kind_ = FamilyKind::gamma;
  f.alpha_ = alpha;
  f.beta0_ = 0;
  f.beta1_ = 1.0 / alpha;
  return f;
}

std::string QvfFamily::name() const {
  switch (kind_) {
    case FamilyKind::poisson: return "poisson";
    case FamilyKind::binomial: return "binomial";
    case FamilyKind::geometric: return "geometric";
    case FamilyKind::negative_binomial: return "negative_binomial";
    case FamilyKind::exponential: return "exponential";
    case FamilyKind::generalized_poisson: return "generalized_poisson";
    case FamilyKind::gamma: return "gamma";
  }
  return "unknown";
}

double omega(const QvfFamily& fam, double mean, double eps) {
  double denom = fam.beta0() + fam.beta1() * mean;
  if (std::abs(denom) < eps) {
    throw DegenerateOmega(fam.name() + ": beta0 + beta1 * mean = " + std::to_string(denom) +
                          " at mean " + std::to_string(mean));
  }
  return 1.0 / denom;
}

double eta_upper_bound(const QvfFamily& fam) {
  switch (fam.kind()) {
    case FamilyKind::geometric:
    case FamilyKind::negative_binomial:
    case FamilyKind::exponential:
    case FamilyKind::gamma:
      return 0.0;
    default:
      return kInf;
  }
}

double log_partition(const QvfFamily& fam, double eta) {
  require_natural_form(fam);
  switch (fam.kind()) {
    case FamilyKind::poisson:
      return std::exp(eta);
    case FamilyKind::binomial:
      // N * log(1 + e^eta), stable on both tails
      return eta >= 0 ? fam.trials() * (eta + std::log1p(std::exp(-eta)))
                      : fam.trials() * std::log1p(std::exp(eta));
    case FamilyKind::geometric:
    case FamilyKind::negative_binomial:
      require_negative_eta(fam, eta);
      return -static_cast<double>(fam.successes()) * std::log1p(-std::exp(eta));
    case FamilyKind::exponential:
      require_negative_eta(fam, eta);
      return -std::log(-eta);
    case FamilyKind::gamma:
      require_negative_eta(fam, eta);
      return -fam.alpha() * std::log(-eta);
    default:
      break;
  }
  throw DomainError(fam.name() + ": no log partition");
}

double mean_from_eta(const QvfFamily& fam, double eta) {
  require_natural_form(fam);
  switch (fam.kind()) {
    case FamilyKind::poisson:
      return std::exp(eta);
    case FamilyKind::binomial:
      return fam.trials() * sigmoid(eta);
    case FamilyKind::geometric:
    case FamilyKind::negative_binomial:
      require_negative_eta(fam, eta);
      // R * e^eta / (1 - e^eta) = R / (e^-eta - 1)
      return static_cast<double>(fam.successes()) / std::expm1(-eta);
    case FamilyKind::exponential:
      require_negative_eta(fam, eta);
      return -1.0 / eta;
    case FamilyKind::gamma:
      require_negative_eta(fam, eta);
      return -fam.alpha() / eta;
    default:
      break;
  }
  throw DomainError(fam.name() + ": no mean function");
}

double variance_from_eta(const QvfFamily& fam, double eta) {
  // A'' equals the quadratic variance function evaluated at A'.
  double m = mean_from_eta(fam, eta);
  return fam.beta0() * m + fam.beta1() * m * m;
}

double eta_from_mean(const QvfFamily& fam, double mean) {
  require_natural_form(fam);
  switch (fam.kind()) {
    case FamilyKind::poisson:
      if (!(mean > 0)) throw DomainError("poisson: mean must be > 0");
      return std::log(mean);
    case FamilyKind::binomial:
      if (!(mean > 0 && mean < fam.trials())) {
        throw DomainError("binomial: mean must lie in (0, N)");
      }
      return std::log(mean / (fam.trials() - mean));
    case FamilyKind::geometric:
    case FamilyKind::negative_binomial:
      if (!(mean > 0)) throw DomainError(fam.name() + ": mean must be > 0");
      return std::log(mean / (fam.successes() + mean));
    case FamilyKind::exponential:
      if (!(mean > 0)) throw DomainError("exponential: mean must be > 0");
      return -1.0 / mean;
    case FamilyKind::gamma:
      if (!(mean > 0)) throw DomainError("gamma: mean must be > 0");
      return -fam.alpha() / mean;
    default:
      break;
  }
  throw DomainError(fam.name() + ": no inverse mean function");
}

double sample_node(const QvfFamily& fam, double eta, std::mt19937_64& rng,
                   double max_poisson_mean) {
  if (!fam.supports_sampling()) {
    throw UnsupportedSampling(fam.name() + ": sampling not supported");
  }
  switch (fam.kind()) {
    case FamilyKind::poisson: {
      double rate = std::exp(eta);
      if (!(rate <= max_poisson_mean)) {
        domain_fail(fam, eta, "rate exceeds the sampling guard");
      }
      std::poisson_distribution<long long> d(rate);
      return static_cast<double>(d(rng));
    }
    case FamilyKind::binomial: {
      std::binomial_distribution<int> d(fam.trials(), sigmoid(eta));
      return static_cast<double>(d(rng));
    }
    case FamilyKind::geometric: {
      require_negative_eta(fam, eta);
      // success probability 1 - e^eta; -expm1 keeps it positive near eta = 0-
      double ps = -std::expm1(eta);
      if (!(ps > 0)) domain_fail(fam, eta, "success probability underflowed");
      std::geometric_distribution<long long> d(std::min(ps, 1.0 - 1e-16));
      return static_cast<double>(d(rng));
    }
    case FamilyKind::negative_binomial: {
      require_negative_eta(fam, eta);
      double ps = -std::expm1(eta);
      if (!(ps > 0)) domain_fail(fam, eta, "success probability underflowed");
      std::negative_binomial_distribution<long long> d(fam.successes(),
                                                       std::min(ps, 1.0 - 1e-16));
      return static_cast<double>(d(rng));
    }
    case FamilyKind::exponential: {
      require_negative_eta(fam, eta);
      std::exponential_distribution<double> d(-eta);
      return d(rng);
    }
    default:
      break;
  }
  throw UnsupportedSampling(fam.name() + ": sampling not supported");
}

}  // namespace qvf

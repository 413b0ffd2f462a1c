#include "qvf/glm.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qvf/parallel.hpp"

namespace qvf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  double e = std::exp(t);
  return e / (1.0 + e);
}

double soft_threshold(double u, double t) {
  if (u > t) return u - t;
  if (u < -t) return u + t;
  return 0.0;
}

}  // namespace

GlmFamily::GlmFamily() : eta_upper_(kInf), name_("gaussian") {}

GlmFamily GlmFamily::gaussian() { return GlmFamily(); }

GlmFamily GlmFamily::of(const QvfFamily& fam) {
  GlmFamily f;
  f.name_ = fam.name();
  switch (fam.kind()) {
    case FamilyKind::poisson:
      f.kind_ = Kind::poisson;
      f.eta_upper_ = kInf;
      return f;
    case FamilyKind::binomial:
      f.kind_ = Kind::binomial;
      f.trials_ = fam.trials();
      f.eta_upper_ = kInf;
      return f;
    case FamilyKind::geometric:
    case FamilyKind::negative_binomial:
      f.kind_ = Kind::neg_binomial;
      f.successes_ = fam.successes();
      f.eta_upper_ = 0;
      return f;
    case FamilyKind::exponential:
      f.kind_ = Kind::exponential;
      f.eta_upper_ = 0;
      return f;
    case FamilyKind::gamma:
      f.kind_ = Kind::gamma;
      f.alpha_ = fam.alpha();
      f.eta_upper_ = 0;
      return f;
    default:
      throw DomainError(fam.name() + ": no natural-parameter form");
  }
}

double GlmFamily::log_partition(double eta) const {
  switch (kind_) {
    case Kind::gaussian: return 0.5 * eta * eta;
    case Kind::poisson: return std::exp(eta);
    case Kind::binomial:
      return eta >= 0 ? trials_ * (eta + std::log1p(std::exp(-eta)))
                      : trials_ * std::log1p(std::exp(eta));
    case Kind::neg_binomial: return -successes_ * std::log1p(-std::exp(eta));
    case Kind::exponential: return -std::log(-eta);
    case Kind::gamma: return -alpha_ * std::log(-eta);
  }
  return 0;
}

double GlmFamily::mean(double eta) const {
  switch (kind_) {
    case Kind::gaussian: return eta;
    case Kind::poisson: return std::exp(eta);
    case Kind::binomial: return trials_ * sigmoid(eta);
    case Kind::neg_binomial: return successes_ / std::expm1(-eta);
    case Kind::exponential: return -1.0 / eta;
    case Kind::gamma: return -alpha_ / eta;
  }
  return 0;
}

double GlmFamily::curvature(double eta) const {
  switch (kind_) {
    case Kind::gaussian: return 1.0;
    case Kind::poisson: return std::exp(eta);
    case Kind::binomial: {
      double s = sigmoid(eta);
      return trials_ * s * (1.0 - s);
    }
    case Kind::neg_binomial: {
      double m = successes_ / std::expm1(-eta);
      return m * (1.0 + m / successes_);
    }
    case Kind::exponential: return 1.0 / (eta * eta);
    case Kind::gamma: return alpha_ / (eta * eta);
  }
  return 0;
}

double GlmFamily::eta_from_mean(double m) const {
  switch (kind_) {
    case Kind::gaussian: return m;
    case Kind::poisson:
      if (!(m > 0)) throw DomainError("poisson: mean must be > 0");
      return std::log(m);
    case Kind::binomial:
      if (!(m > 0 && m < trials_)) throw DomainError("binomial: mean must lie in (0, N)");
      return std::log(m / (trials_ - m));
    case Kind::neg_binomial:
      if (!(m > 0)) throw DomainError(name_ + ": mean must be > 0");
      return std::log(m / (successes_ + m));
    case Kind::exponential:
      if (!(m > 0)) throw DomainError("exponential: mean must be > 0");
      return -1.0 / m;
    case Kind::gamma:
      if (!(m > 0)) throw DomainError("gamma: mean must be > 0");
      return -alpha_ / m;
  }
  return 0;
}

double GlmFamily::mean_upper() const {
  return kind_ == Kind::binomial ? trials_ : kInf;
}

namespace {

// Initial intercept: match the response mean, nudged inside the open mean
// range when it sits on a boundary (e.g. an all-zero count column).
double initial_intercept(const GlmFamily& fam, const Vector& y) {
  double m = y.mean();
  try {
    return fam.eta_from_mean(m);
  } catch (const DomainError&) {
    const double margin = 1e-8;
    double hi = fam.mean_upper();
    m = std::isfinite(hi) ? std::clamp(m, margin, hi - margin) : std::max(m, margin);
    return fam.eta_from_mean(m);
  }
}

double penalty(const Vector& coef, double lambda) {
  return lambda * coef.cwiseAbs().sum();
}

// (1/n) sum(-y*eta + A(eta)) for a given eta vector; +inf outside the domain.
double smooth_loss(const GlmFamily& fam, const Vector& y, const Vector& eta) {
  const Index n = y.size();
  double acc = 0;
  for (Index i = 0; i < n; ++i) {
    if (!fam.in_domain(eta[i])) return kInf;
    acc += -y[i] * eta[i] + fam.log_partition(eta[i]);
  }
  double v = acc / static_cast<double>(n);
  return std::isfinite(v) ? v : kInf;
}

}  // namespace

double glm_objective(const GlmProblem& prob, double intercept, const Vector& coef) {
  Vector eta = (prob.design * coef).array() + intercept;
  double l = smooth_loss(prob.family, prob.response, eta);
  return l == kInf ? kInf : l + penalty(coef, prob.lambda);
}

Vector smooth_gradient(const GlmProblem& prob, double intercept, const Vector& coef) {
  const Index n = prob.design.rows();
  Vector eta = (prob.design * coef).array() + intercept;
  Vector mu(n);
  for (Index i = 0; i < n; ++i) mu[i] = prob.family.mean(eta[i]);
  return prob.design.transpose() * (mu - prob.response) / static_cast<double>(n);
}

double intercept_gradient(const GlmProblem& prob, double intercept, const Vector& coef) {
  const Index n = prob.design.rows();
  Vector eta = (prob.design * coef).array() + intercept;
  double acc = 0;
  for (Index i = 0; i < n; ++i) acc += prob.family.mean(eta[i]) - prob.response[i];
  return acc / static_cast<double>(n);
}

namespace {

// Shared by the public wrapper and the solver's convergence check (where the
// design may be the internally standardized copy).
double kkt_max(const Matrix& X, const Vector& y, const GlmFamily& fam, double lambda,
               double intercept, const Vector& coef) {
  const Index n = X.rows();
  Vector eta = (X * coef).array() + intercept;
  Vector resid(n);
  for (Index i = 0; i < n; ++i) resid[i] = fam.mean(eta[i]) - y[i];
  double worst = std::abs(resid.sum() / static_cast<double>(n));
  for (Index k = 0; k < coef.size(); ++k) {
    double g = X.col(k).dot(resid) / static_cast<double>(n);
    if (coef[k] == 0.0) {
      worst = std::max(worst, std::max(0.0, std::abs(g) - lambda));
    } else {
      worst = std::max(worst, std::abs(g + lambda * (coef[k] > 0 ? 1.0 : -1.0)));
    }
  }
  return worst;
}

}  // namespace

double kkt_violation(const GlmProblem& prob, double intercept, const Vector& coef) {
  return kkt_max(prob.design, prob.response, prob.family, prob.lambda, intercept, coef);
}

double lambda_max(const Matrix& design, const Vector& response) {
  const Index n = design.rows();
  if (n == 0 || design.cols() == 0) return 0.0;
  Vector centered = Vector::Constant(n, response.mean()) - response;
  return (design.transpose() * centered).cwiseAbs().maxCoeff() / static_cast<double>(n);
}

GlmFit fit_l1_glm(const GlmProblem& prob, const GlmOptions& opts) {
  const Index n = prob.design.rows();
  const Index q = prob.design.cols();
  if (prob.response.size() != n) throw std::invalid_argument("design/response size mismatch");
  if (n < 1) throw std::invalid_argument("empty problem");
  if (!(prob.lambda >= 0)) throw std::invalid_argument("lambda must be >= 0");
  const GlmFamily& fam = prob.family;

  // Optional unit-variance scaling; coefficients are mapped back afterwards.
  Vector scale = Vector::Ones(q);
  Matrix scaled;
  if (opts.standardize && q > 0) {
    scaled = prob.design;
    for (Index k = 0; k < q; ++k) {
      double m = scaled.col(k).mean();
      double sd = std::sqrt((scaled.col(k).array() - m).square().sum() / static_cast<double>(n));
      if (sd > 0) {
        scale[k] = sd;
        scaled.col(k) /= sd;
      }
    }
  }
  const Matrix& X = opts.standardize && q > 0 ? scaled : prob.design;

  double b0 = initial_intercept(fam, prob.response);
  Vector b = Vector::Zero(q);
  Vector eta = Vector::Constant(n, b0);
  double obj = smooth_loss(fam, prob.response, eta);  // penalty is zero at b = 0
  assert(obj < kInf);

  GlmFit fit;
  fit.converged = false;
  Vector mu(n), w(n), z(n), r(n), v(q);
  Vector b_prev(q);
  const double inner_tol = std::max(opts.tol * 0.1, 1e-13);

  int iter = 0;
  while (iter < opts.max_iter) {
    ++iter;
    double b0_prev = b0;
    b_prev = b;
    double obj_prev = obj;

    // Quadratic approximation at the current iterate.
    for (Index i = 0; i < n; ++i) {
      mu[i] = fam.mean(eta[i]);
      w[i] = std::max(fam.curvature(eta[i]), opts.weight_floor);
      z[i] = eta[i] + (prob.response[i] - mu[i]) / w[i];
    }
    double sw = w.sum() / static_cast<double>(n);
    for (Index k = 0; k < q; ++k) {
      v[k] = w.dot(X.col(k).cwiseProduct(X.col(k))) / static_cast<double>(n);
    }

    // Cyclic coordinate descent on the weighted least-squares surrogate,
    // warm-started at the current iterate: r = z - eta.
    r = z - eta;
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
#ifndef NDEBUG
      double surrogate_before =
          0.5 * r.cwiseProduct(r).dot(w) / static_cast<double>(n) + penalty(b, prob.lambda);
#endif
      double sweep_delta = 0;
      for (Index k = 0; k < q; ++k) {
        if (v[k] < 1e-14) continue;  // constant or zero-weight column stays put
        double u = X.col(k).cwiseProduct(w).dot(r) / static_cast<double>(n) + v[k] * b[k];
        double bk = soft_threshold(u, prob.lambda) / v[k];
        double d = bk - b[k];
        if (d != 0.0) {
          r -= X.col(k) * d;
          b[k] = bk;
          sweep_delta = std::max(sweep_delta, std::abs(d));
        }
      }
      double d0 = w.dot(r) / static_cast<double>(n) / sw;
      if (d0 != 0.0) {
        b0 += d0;
        r.array() -= d0;
        sweep_delta = std::max(sweep_delta, std::abs(d0));
      }
#ifndef NDEBUG
      double surrogate_after =
          0.5 * r.cwiseProduct(r).dot(w) / static_cast<double>(n) + penalty(b, prob.lambda);
      assert(surrogate_after <= surrogate_before + 1e-10 * (1.0 + std::abs(surrogate_before)));
#endif
      if (sweep_delta < inner_tol) break;
    }

    // Step halving toward the surrogate solution keeps the true objective
    // non-increasing and eta inside the family domain.
    double cand0 = b0;
    Vector cand = b;
    bool accepted = false;
    bool domain_ok_somewhere = false;
    double t = 1.0;
    for (int h = 0; h <= opts.max_halvings; ++h) {
      b0 = b0_prev + t * (cand0 - b0_prev);
      b = b_prev + t * (cand - b_prev);
      eta = (X * b).array() + b0;
      double l = smooth_loss(fam, prob.response, eta);
      if (l < kInf) {
        domain_ok_somewhere = true;
        double o = l + penalty(b, prob.lambda);
        if (o <= obj_prev + 1e-12 * (1.0 + std::abs(obj_prev))) {
          obj = o;
          accepted = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!accepted) {
      b0 = b0_prev;
      b = b_prev;
      eta = (X * b).array() + b0;
      obj = obj_prev;
      if (!domain_ok_somewhere) {
        throw DomainError(fam.name() + ": step halving could not re-enter the domain");
      }
      break;  // no descent available: the iterate is already at the numerical floor
    }
    assert(obj <= obj_prev + 1e-12 * (1.0 + std::abs(obj_prev)));

    double delta = std::abs(b0 - b0_prev);
    for (Index k = 0; k < q; ++k) delta = std::max(delta, std::abs(b[k] - b_prev[k]));
    if (delta < opts.tol) {
      if (kkt_max(X, prob.response, fam, prob.lambda, b0, b) <= opts.kkt_tol) {
        fit.converged = true;
        break;
      }
      // Coordinates stalled but stationarity lags: keep reweighting.
    }
  }
  if (!fit.converged &&
      kkt_max(X, prob.response, fam, prob.lambda, b0, b) <= opts.kkt_tol) {
    fit.converged = true;
  }

  fit.intercept = b0;
  fit.coefficients = b.cwiseQuotient(scale);
  fit.iterations = iter;
  fit.objective = glm_objective(prob, fit.intercept, fit.coefficients);
  for (Index k = 0; k < q; ++k) {
    if (std::abs(fit.coefficients[k]) > opts.support_tol) fit.support.push_back(k);
  }
  return fit;
}

IndexList neighborhood_select(const CountMatrix& data, Index node, const QvfFamily& fam,
                              double lambda, const GlmOptions& opts) {
  const Index p = data.cols();
  if (node < 0 || node >= p) throw std::invalid_argument("node out of range");
  GlmProblem prob;
  prob.design.resize(data.rows(), p - 1);
  for (Index c = 0, d = 0; c < p; ++c) {
    if (c == node) continue;
    prob.design.col(d++) = data.col(c);
  }
  prob.response = data.col(node);
  prob.family = GlmFamily::of(fam);
  prob.lambda = lambda;
  GlmFit fit = fit_l1_glm(prob, opts);
  IndexList out;
  for (Index k : fit.support) out.push_back(k < node ? k : k + 1);
  return out;
}

UndirectedGraph estimate_moral_graph(const CountMatrix& data, const std::vector<QvfFamily>& fams,
                                     double lambda, SymmetrizationRule rule,
                                     const GlmOptions& opts) {
  const Index p = data.cols();
  if (fams.size() != static_cast<std::size_t>(p)) {
    throw std::invalid_argument("need one family per node");
  }
  std::vector<IndexList> hoods(static_cast<std::size_t>(p));
  if (p > 1) {
    parallel_for(static_cast<std::size_t>(p), [&](std::size_t j) {
      hoods[j] = neighborhood_select(data, static_cast<Index>(j), fams[j], lambda, opts);
    }, opts.num_threads);
  }
  std::vector<std::set<Index>> sel(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) {
    sel[static_cast<std::size_t>(j)].insert(hoods[static_cast<std::size_t>(j)].begin(),
                                            hoods[static_cast<std::size_t>(j)].end());
  }
  UndirectedGraph g(p);
  for (Index a = 0; a < p; ++a) {
    for (Index bb = a + 1; bb < p; ++bb) {
      bool ab = sel[static_cast<std::size_t>(a)].count(bb) > 0;
      bool ba = sel[static_cast<std::size_t>(bb)].count(a) > 0;
      bool keep = rule == SymmetrizationRule::any_direction ? (ab || ba) : (ab && ba);
      if (keep) g.add_edge(a, bb);
    }
  }
  return g;
}

IndexList parent_select(const CountMatrix& data, Index node, const IndexList& predecessors,
                        const QvfFamily& fam, double lambda, const GlmOptions& opts) {
  if (node < 0 || node >= data.cols()) throw std::invalid_argument("node out of range");
  if (predecessors.empty()) return {};
  for (Index k : predecessors) {
    if (k < 0 || k >= data.cols() || k == node) {
      throw std::invalid_argument("bad predecessor index " + std::to_string(k));
    }
  }
  GlmProblem prob;
  prob.design.resize(data.rows(), static_cast<Index>(predecessors.size()));
  for (std::size_t c = 0; c < predecessors.size(); ++c) {
    prob.design.col(static_cast<Index>(c)) = data.col(predecessors[c]);
  }
  prob.response = data.col(node);
  prob.family = GlmFamily::of(fam);
  prob.lambda = lambda;
  GlmFit fit = fit_l1_glm(prob, opts);
  IndexList out;
  for (Index k : fit.support) out.push_back(predecessors[static_cast<std::size_t>(k)]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace qvf

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "mcptest/trec.hpp"

namespace mcptest {

// Logistic model of relevance by rank position: h(p) = 1/(1+e^{-t0-t1*p}).
struct TopicRegressor {
  double theta0 = 0.0;
  double theta1 = 0.0;

  friend bool operator==(const TopicRegressor&, const TopicRegressor&) = default;
};

namespace detail {

// log(1/(1+e^-z)) without overflow for any z.
inline double log_sigmoid(double z) {
  return z < 0.0 ? z - std::log1p(std::exp(z)) : -std::log1p(std::exp(-z));
}

}  // namespace detail

inline double relevance_probability(const TopicRegressor& reg, std::size_t position) {
  if (position < 1) throw std::invalid_argument("relevance_probability: position is 1-based");
  const double z = reg.theta0 + reg.theta1 * static_cast<double>(position);
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct FitOptions {
  double l2_penalty = 1e-6;
  double gradient_tolerance = 1e-8;
  std::size_t max_iterations = 100;
};

class FitError : public std::runtime_error {
 public:
  FitError(std::string message, TopicRegressor last)
      : std::runtime_error(std::move(message)), last_(last) {}

  // Best iterate reached before giving up.
  TopicRegressor last_iterate() const { return last_; }

 private:
  TopicRegressor last_;
};

// Bernoulli log-likelihood of the ranking under the regressor, minus the
// l2 penalty lambda*(theta0^2 + theta1^2). The fit maximizes this.
inline double fit_objective(const BinaryRanking& r, const TopicRegressor& reg,
                            double l2_penalty = 1e-6) {
  long double ll = 0.0L;
  for (std::size_t p = 1; p <= r.size(); ++p) {
    const double z = reg.theta0 + reg.theta1 * static_cast<double>(p);
    ll += detail::log_sigmoid(r[p - 1] ? z : -z);
  }
  ll -= static_cast<long double>(l2_penalty) *
        (static_cast<long double>(reg.theta0) * reg.theta0 +
         static_cast<long double>(reg.theta1) * reg.theta1);
  return static_cast<double>(ll);
}

// Damped Newton ascent on the penalized likelihood. The penalty keeps the
// problem strictly concave, so separable rankings (all relevant on top, or
// all zero) still have a finite optimum.
inline TopicRegressor fit_regressor(const BinaryRanking& r, const FitOptions& options = {}) {
  if (r.size() < 2) throw std::invalid_argument("fit_regressor: need at least 2 positions");
  const double lambda = options.l2_penalty;
  TopicRegressor theta;
  double objective = fit_objective(r, theta, lambda);
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    long double g0 = 0.0L, g1 = 0.0L;
    long double h00 = 0.0L, h01 = 0.0L, h11 = 0.0L;
    for (std::size_t p = 1; p <= r.size(); ++p) {
      const double pos = static_cast<double>(p);
      const double h = relevance_probability(theta, p);
      const double resid = static_cast<double>(r[p - 1]) - h;
      const double w = h * (1.0 - h);
      g0 += resid;
      g1 += resid * pos;
      h00 += w;
      h01 += w * pos;
      h11 += w * pos * pos;
    }
    g0 -= 2.0L * lambda * theta.theta0;
    g1 -= 2.0L * lambda * theta.theta1;
    if (std::max(std::fabs(static_cast<double>(g0)), std::fabs(static_cast<double>(g1))) <=
        options.gradient_tolerance)
      return theta;
    // Newton direction solves (-Hessian) d = gradient; -Hessian is positive
    // definite thanks to the penalty term.
    const long double a = h00 + 2.0L * lambda;
    const long double b = h01;
    const long double c = h11 + 2.0L * lambda;
    const long double det = a * c - b * b;
    const double d0 = static_cast<double>((c * g0 - b * g1) / det);
    const double d1 = static_cast<double>((a * g1 - b * g0) / det);
    // Once the predicted gain drops below the objective's floating-point
    // resolution, a line search can no longer tell progress from rounding
    // noise. The quadratic model is trustworthy there (positive definite
    // curvature bounds the step), so take the full Newton step.
    const double predicted = 0.5 * (static_cast<double>(g0) * d0 + static_cast<double>(g1) * d1);
    if (predicted <= 1e-12 * (1.0 + std::fabs(objective))) {
      theta.theta0 += d0;
      theta.theta1 += d1;
      objective = fit_objective(r, theta, lambda);
      continue;
    }
    double step = 1.0;
    bool moved = false;
    for (int halving = 0; halving < 60; ++halving) {
      TopicRegressor candidate{theta.theta0 + step * d0, theta.theta1 + step * d1};
      const double candidate_objective = fit_objective(r, candidate, lambda);
      if (std::isfinite(candidate_objective) && candidate_objective >= objective) {
        theta = candidate;
        objective = candidate_objective;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved)
      throw FitError("fit_regressor: line search stalled before reaching tolerance", theta);
  }
  throw FitError("fit_regressor: no convergence within " +
                     std::to_string(options.max_iterations) + " iterations",
                 theta);
}

// Makes the system modeled by `reg` better: each parameter moves in the
// direction that raises theta0 + theta1*p for every p >= 0. Zero parameters
// stay zero.
inline TopicRegressor perturb(const TopicRegressor& reg, double prop) {
  if (!(prop > 0.0)) throw std::invalid_argument("perturb: prop must be positive");
  auto shift = [prop](double theta) {
    if (theta > 0.0) return theta * (1.0 + prop);
    if (theta < 0.0) return theta / (1.0 + prop);
    return 0.0;
  };
  return {shift(reg.theta0), shift(reg.theta1)};
}

}  // namespace mcptest

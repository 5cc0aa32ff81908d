#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace mcptest {

inline double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

namespace detail {

// Continued fraction for the incomplete beta, modified Lentz algorithm.
// See Numerical Recipes 6.4; converges fast for x < (a+1)/(a+b+2).
inline double ibeta_continued_fraction(double x, double a, double b) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double regularized_incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete beta: a, b must be > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * detail::ibeta_continued_fraction(x, a, b) / a;
  return 1.0 - front * detail::ibeta_continued_fraction(1.0 - x, b, a) / b;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::acos(-1.0));
}

// Student's t CDF through the incomplete beta.
inline double t_cdf(double t, double df) {
  if (!(df >= 1.0)) throw std::invalid_argument("t_cdf: df must be >= 1");
  if (t == 0.0) return 0.5;
  const double tail = 0.5 * regularized_incomplete_beta(df / (df + t * t), 0.5 * df, 0.5);
  return t > 0.0 ? 1.0 - tail : tail;
}

namespace detail {

// Gauss-Legendre nodes/weights on [-1, 1], computed once by Newton iteration
// on the Legendre recurrence.
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendreRule(int order) : nodes(order), weights(order) {
    const double pi = std::acos(-1.0);
    for (int i = 0; i < (order + 1) / 2; ++i) {
      double x = std::cos(pi * (i + 0.75) / (order + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0, p1 = x;
        for (int n = 2; n <= order; ++n) {
          const double p2 = ((2.0 * n - 1.0) * x * p1 - (n - 1.0) * p0) / n;
          p0 = p1;
          p1 = p2;
        }
        dp = order * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::fabs(dx) < 1e-15) break;
      }
      nodes[i] = -x;
      nodes[order - 1 - i] = x;
      weights[i] = weights[order - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }
};

inline const GaussLegendreRule& gl20() {
  static const GaussLegendreRule rule(20);
  return rule;
}

// Integrates f over [a, b] split into `panels` equal Gauss-Legendre panels.
template <typename F>
double integrate_panels(F&& f, double a, double b, int panels) {
  const auto& rule = gl20();
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
      acc += rule.weights[i] * f(mid + 0.5 * h * rule.nodes[i]);
    total += acc * 0.5 * h;
  }
  return total;
}

}  // namespace detail

// CDF of the range (max - min) of k independent standard normals:
//   F(w) = k * Int phi(u) * [Phi(u+w) - Phi(u)]^(k-1) du
// (condition on which variable is the minimum and where it falls).
inline double normal_range_cdf(double w, int k) {
  if (k < 2) throw std::invalid_argument("normal_range_cdf: k must be >= 2");
  if (w <= 0.0) return 0.0;
  auto integrand = [w, k](double u) {
    const double span = normal_cdf(u + w) - normal_cdf(u);
    return normal_pdf(u) * std::pow(span, k - 1);
  };
  const double v = k * detail::integrate_panels(integrand, -8.75, 8.75, 28);
  return std::min(1.0, std::max(0.0, v));
}

// CDF of the studentized range Q = range(k normals) / S with nu * S^2 ~ chi^2_nu,
// independent. Outer integral over the scale density, inner is the normal
// range CDF. Pass df = infinity for the pure normal-range limit.
inline double studentized_range_cdf(double q, int k, double df) {
  if (k < 2) throw std::invalid_argument("studentized_range_cdf: k must be >= 2");
  if (q <= 0.0) return 0.0;
  if (std::isinf(df)) return normal_range_cdf(q, k);
  if (!(df >= 1.0)) throw std::invalid_argument("studentized_range_cdf: df must be >= 1");
  // S = chi_nu / sqrt(nu); log density avoids overflow for large nu.
  const double log_norm =
      std::log(2.0) + 0.5 * df * std::log(0.5 * df) - std::lgamma(0.5 * df);
  auto integrand = [&](double s) {
    if (s <= 0.0) return 0.0;
    const double logf = log_norm + (df - 1.0) * std::log(s) - 0.5 * df * s * s;
    return std::exp(logf) * normal_range_cdf(q * s, k);
  };
  const double spread = 7.5 / std::sqrt(df);
  const double lo = std::max(0.0, 1.0 - spread);
  const double hi = 1.0 + spread;
  const int panels = std::max(24, static_cast<int>(8.0 * (hi - lo)));
  const double v = detail::integrate_panels(integrand, lo, hi, panels);
  return std::min(1.0, std::max(0.0, v));
}

}  // namespace mcptest

#pragma once

#include "volexp/curve.hpp"
#include "volexp/payoff.hpp"
#include "volexp/polynomials.hpp"
#include "volexp/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace volexp {

// Base law of the zeroth-order log-price: X_T = x + Y - sigma_T/2 with
// Y ~ N(0, sigma_T), sigma_T the integrated variance over [0, T].
struct BaseLaw {
  double x = 0.0;
  double sigma_T = 0.0;
  double T = 0.0;

  BaseLaw(double x_, double sigma_T_, double T_) : x(x_), sigma_T(sigma_T_), T(T_) {
    if (!(sigma_T > 0.0)) throw std::domain_error("BaseLaw: sigma_T must be > 0");
    if (!(T > 0.0)) throw std::domain_error("BaseLaw: T must be > 0");
  }
};

inline double total_variance(const Curve& u, double T) {
  if (!(T > 0.0)) throw std::domain_error("total_variance: T must be > 0");
  return u.integral(T);
}

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
inline double norm_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846);
}

// Undiscounted Black-Scholes values on the forward e^x with total variance
// sigma_T (cross-check formulas; the engine itself integrates).
inline double black_call(double x, double strike, double sigma_T) {
  const double s = std::sqrt(sigma_T);
  const double d1 = (x - std::log(strike) + 0.5 * sigma_T) / s;
  return std::exp(x) * norm_cdf(d1) - strike * norm_cdf(d1 - s);
}
inline double black_put(double x, double strike, double sigma_T) {
  const double s = std::sqrt(sigma_T);
  const double d1 = (x - std::log(strike) + 0.5 * sigma_T) / s;
  return strike * norm_cdf(s - d1) - std::exp(x) * norm_cdf(-d1);
}
inline double black_digital(double x, double strike, double sigma_T) {
  const double s = std::sqrt(sigma_T);
  const double d2 = (x - std::log(strike) - 0.5 * sigma_T) / s;
  return norm_cdf(d2);
}
inline double black_call_delta_x(double x, double strike, double sigma_T) {
  const double s = std::sqrt(sigma_T);
  const double d1 = (x - std::log(strike) + 0.5 * sigma_T) / s;
  return std::exp(x) * norm_cdf(d1);  // d/dx of the undiscounted call
}

namespace detail {

// Integration window in z-space. Kinked payoffs are integrated on the side
// where they are non-zero so the integrand stays smooth; plain Gauss-Hermite
// would lose most of its accuracy across the kink.
struct ZDomain {
  double a, b;
  bool use_hermite;
};

inline ZDomain z_domain(const BaseLaw& law, const Payoff& payoff) {
  const double s = std::sqrt(law.sigma_T);
  const auto kink = payoff.kink_log_price();
  if (!kink) return {0.0, 0.0, true};
  const double zs = (*kink - law.x + 0.5 * law.sigma_T) / s;
  const double tail = 12.0 + s;
  switch (payoff.kind()) {
    case Payoff::Kind::call:
    case Payoff::Kind::digital: {
      // support is z > zs; clip both ends where the Gaussian mass is < 1e-19
      const double a = std::max(zs, -tail);
      double b = std::max(zs, s) + tail;
      if (zs > 4.0) b = std::min(b, zs + 44.0 / std::max(1.0, zs - s) + s);
      return {a, b, false};
    }
    case Payoff::Kind::put: {
      const double b = std::min(zs, tail);
      double a = std::min(zs, 0.0) - tail;
      if (zs < -4.0) a = std::max(a, zs - 44.0 / std::max(1.0, -zs));
      return {a, b, false};
    }
    default:
      return {0.0, 0.0, true};
  }
}

}  // namespace detail

// E[f(X_T)] under the base law, Gauss quadrature with n_nodes points.
inline double base_price(const BaseLaw& law, const Payoff& payoff, int n_nodes = 128) {
  const double s = std::sqrt(law.sigma_T);
  const auto map_x = [&](double z) { return law.x + s * z - 0.5 * law.sigma_T; };
  const auto dom = detail::z_domain(law, payoff);
  if (dom.use_hermite) {
    const auto& r = quad::gauss_hermite_normal(n_nodes);
    double acc = 0.0;
    for (size_t i = 0; i < r.x.size(); ++i) acc += r.w[i] * payoff(map_x(r.x[i]));
    return acc;
  }
  if (!(dom.b > dom.a)) return 0.0;
  return quad::integrate(
      [&](double z) { return payoff(map_x(z)) * norm_pdf(z); }, dom.a, dom.b, n_nodes);
}

// F^l = d^l/dx^l E[f(X_T)] via the Hermite representation
// F^l = l!/sigma_T^l * E[f(X_T) H_l(Y, sigma_T)]. Stable for l <= 12.
inline double log_spot_derivative(const BaseLaw& law, const Payoff& payoff, int order,
                                  int n_nodes = 128) {
  if (order < 0) throw std::domain_error("log_spot_derivative: order must be >= 0");
  if (order > 12)
    throw std::domain_error("log_spot_derivative: orders above 12 are unsupported");
  if (order == 0) return base_price(law, payoff, n_nodes);

  const double s = std::sqrt(law.sigma_T);
  double fact = 1.0;
  for (int i = 2; i <= order; ++i) fact *= i;
  const double scale = fact / std::pow(law.sigma_T, order);

  std::vector<double> h(static_cast<size_t>(order + 1));
  const auto integrand = [&](double z) {
    hermite_all(order, s * z, law.sigma_T, h);
    const double x = law.x + s * z - 0.5 * law.sigma_T;
    return payoff(x) * h[static_cast<size_t>(order)];
  };

  const auto dom = detail::z_domain(law, payoff);
  double acc = 0.0;
  if (dom.use_hermite) {
    const auto& r = quad::gauss_hermite_normal(n_nodes);
    for (size_t i = 0; i < r.x.size(); ++i) acc += r.w[i] * integrand(r.x[i]);
  } else {
    if (!(dom.b > dom.a)) return 0.0;
    acc = quad::integrate([&](double z) { return integrand(z) * norm_pdf(z); }, dom.a,
                          dom.b, n_nodes);
  }
  return scale * acc;
}

// F^0 .. F^max_order in one pass.
inline std::vector<double> log_spot_derivatives(const BaseLaw& law, const Payoff& payoff,
                                                int max_order, int n_nodes = 128) {
  std::vector<double> out(static_cast<size_t>(max_order + 1));
  for (int l = 0; l <= max_order; ++l)
    out[static_cast<size_t>(l)] = log_spot_derivative(law, payoff, l, n_nodes);
  return out;
}

}  // namespace volexp

#pragma once

#include "volexp/model.hpp"
#include "volexp/quadrature.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace volexp {

// Node counts for the nested coefficient quadratures. Smooth kernels use
// Gauss-Legendre; power kernels switch the singular axes to tanh-sinh.
struct QuadConfig {
  int gl_nodes = 64;
  int ts_halfpoints = 48;

  QuadConfig doubled() const { return {2 * gl_nodes, 2 * ts_halfpoints}; }
};

namespace detail {

// ∫_0^L f dx where f may carry an x^-gamma factor at 0 (power kernels).
// f receives (offset from 0, offset from L).
template <class F>
double axis_integral(const Kernel& g, double L, const QuadConfig& cfg, F&& f) {
  if (!(L > 0.0)) return 0.0;
  if (g.singular_at_zero()) return quad::integrate_ts(f, L, cfg.ts_halfpoints);
  return quad::integrate([&](double x) { return f(x, L - x); }, 0.0, L, cfg.gl_nodes);
}

// Same, split at interior breakpoints (curve kinks degrade a global rule).
template <class F>
double axis_integral_split(const Kernel& g, double L, const QuadConfig& cfg,
                           std::vector<double> breaks, F&& f) {
  if (!(L > 0.0)) return 0.0;
  breaks.erase(std::remove_if(breaks.begin(), breaks.end(),
                              [L](double b) { return !(b > 0.0 && b < L); }),
               breaks.end());
  std::sort(breaks.begin(), breaks.end());
  if (breaks.empty()) return axis_integral(g, L, cfg, f);
  double acc = 0.0;
  double lo = 0.0;
  breaks.push_back(L);
  for (double hi : breaks) {
    if (!(hi > lo)) continue;
    if (lo == 0.0 && g.singular_at_zero())
      acc += quad::integrate_ts(
          [&](double x, double) { return f(x, L - x); }, hi, cfg.ts_halfpoints);
    else
      acc += quad::integrate([&](double x) { return f(x, L - x); }, lo, hi,
                             cfg.gl_nodes);
    lo = hi;
  }
  return acc;
}

// SF(t, c) = ∫_0^c Sigma(u_t^0)(x) dx. Closed form through the kernel
// antiderivative whenever the curve factor is constant along x.
inline double sigma0_field_integral(const ModelSpec& m, double t, double c,
                                    const QuadConfig& cfg) {
  if (c <= 0.0) return 0.0;
  if (m.cls() == ModelSpec::Class::affine_drift)
    return m.sigma_tilde()(m.curve()(t)) * m.kernel().integral(c);
  if (m.curve().is_flat()) return m.curve().flat_level() * m.kernel().integral(c);
  if (!m.kernel().singular_at_zero())
    return quad::adaptive_simpson(
        [&](double x) { return m.curve()(t + x) * m.kernel()(x); }, 0.0, c, 1e-13);
  return axis_integral(m.kernel(), c, cfg, [&](double x, double) {
    return m.curve()(t + x) * m.kernel()(x);
  });
}

}  // namespace detail

// C0_xu = rho ∫_0^T ∫_0^t1 Sigma(u_t2^0)(t1 - t2) sqrt(u(t2)) dt2 dt1,
// reordered as rho ∫_0^T sqrt(u(t)) SF(t, T - t) dt.
inline double c0_xu(const ModelSpec& m, double T, const QuadConfig& cfg = {}) {
  if (!(T > 0.0)) throw std::domain_error("c0_xu: T must be > 0");
  if (m.rho() == 0.0) return 0.0;
  std::vector<double> breaks;
  for (double k : m.curve().knot_times(T)) breaks.push_back(T - k);
  const double v = detail::axis_integral_split(
      m.kernel(), T, cfg, std::move(breaks), [&](double tau, double t) {
        // tau = T - t, measured from the kinked corner at t -> T
        return std::sqrt(m.curve()(t)) * detail::sigma0_field_integral(m, t, tau, cfg);
      });
  return m.rho() * v;
}

// C0_uu = 2 ∫∫∫_{t3<t2<t1<T} Sigma(u_t3^0)(t1-t3) Sigma(u_t3^0)(t2-t3) dt3 dt2 dt1.
// For fixed t3 the (t1, t2) integral is half the square of SF(t3, T - t3).
inline double c0_uu(const ModelSpec& m, double T, const QuadConfig& cfg = {}) {
  if (!(T > 0.0)) throw std::domain_error("c0_uu: T must be > 0");
  return detail::axis_integral_split(
      m.kernel(), T, cfg, m.curve().knot_times(T), [&](double t3, double rem) {
        const double sf = detail::sigma0_field_integral(m, t3, rem, cfg);
        return sf * sf;
      });
}

// C0_mu = rho^2 (S1 + S2/2) in chain coordinates t3, x2 = t2-t3, x1 = t1-t2.
//
// S1 integrand: [dSigma(u_t2^0)(h)](t1 - t2) sqrt(u(t3)) sqrt(u(t2)) with
// direction h the field of t3 shifted to t2. Affine drift reduces the inner
// x1 integral to the kernel antiderivative; Bergomi keeps the full tensor.
inline double c0_mu(const ModelSpec& m, double T, const QuadConfig& cfg = {}) {
  if (!(T > 0.0)) throw std::domain_error("c0_mu: T must be > 0");
  if (m.rho() == 0.0) return 0.0;
  const Kernel& g = m.kernel();
  const Curve& u = m.curve();
  const auto w = [&](double t) { return std::sqrt(u(t)); };

  double s1 = 0.0;
  if (m.cls() == ModelSpec::Class::affine_drift) {
    // sigma~'(u(t2)) Sigma(u_t3^0)(x2) g(x1) w(t2) w(t3)
    s1 = detail::axis_integral_split(g, T, cfg, u.knot_times(T), [&](double t3,
                                                                    double rem0) {
      const double wt3 = w(t3);
      const double st3 = m.sigma_tilde()(u(t3));
      return wt3 * detail::axis_integral(g, rem0, cfg, [&](double x2, double rem1) {
        const double t2 = t3 + x2;
        return m.sigma_tilde().derivative(1, u(t2)) * st3 * g(x2) * w(t2) *
               g.integral(rem1);
      });
    });
  } else {
    // Sigma(u_t3^0)(x1 + x2) g(x1) w(t2) w(t3), with Sigma(u_t3^0)(y) = u(t3+y) g(y)
    s1 = detail::axis_integral_split(g, T, cfg, u.knot_times(T), [&](double t3,
                                                                    double rem0) {
      const double wt3 = w(t3);
      return wt3 * detail::axis_integral(g, rem0, cfg, [&](double x2, double rem1) {
        const double t2 = t3 + x2;
        const double wt2 = w(t2);
        return wt2 * detail::axis_integral(g, rem1, cfg, [&](double x1, double) {
          const double y = x1 + x2;
          return u(t3 + y) * g(y) * g(x1);
        });
      });
    });
  }

  // S2 integrand: [Sigma(u_t2^0)(x1) / sqrt(u(t2))] Sigma(u_t3^0)(x2) sqrt(u(t3))
  const double s2 = detail::axis_integral_split(g, T, cfg, u.knot_times(T), [&](
                                                    double t3, double rem0) {
    const double wt3 = w(t3);
    return wt3 * detail::axis_integral(g, rem0, cfg, [&](double x2, double rem1) {
      const double t2 = t3 + x2;
      const double sf_t3_x2 = m.sigma0_coeff(t3, t2) * g(x2);
      return sf_t3_x2 / w(t2) * detail::sigma0_field_integral(m, t2, rem1, cfg);
    });
  });

  return m.rho() * m.rho() * (s1 + 0.5 * s2);
}

// Deterministic coefficient table for the expansion at order 1 or 2.
// f_weights[l] multiplies F^l inside the eps^order/order! bracket.
struct CoeffTable {
  int order = 2;
  double c_xu = 0.0;
  double c_uu = 0.0;
  double c_mu = 0.0;
  std::map<int, double> f_weights;
};

// F^l weights of the first- and second-order brackets as functions of the
// integrated covariance coefficients.
inline std::map<int, double> first_order_weights(double c_xu) {
  return {{2, -0.5 * c_xu}, {3, 0.5 * c_xu}};
}

inline std::map<int, double> second_order_weights(double c_xu, double c_uu,
                                                  double c_mu) {
  const double cx2 = c_xu * c_xu;
  return {{2, 0.25 * c_uu},
          {3, -c_mu - 0.5 * c_uu},
          {4, c_mu + 0.25 * c_uu + 0.25 * cx2},
          {5, -0.125 * cx2},
          {6, 0.25 * cx2}};
}

inline CoeffTable coeff_table(const ModelSpec& m, double T, int order,
                              const QuadConfig& cfg = {}) {
  if (order != 1 && order != 2)
    throw std::domain_error("coeff_table: quadrature tables exist for orders 1 and 2");
  CoeffTable t;
  t.order = order;
  t.c_xu = c0_xu(m, T, cfg);
  if (order == 1) {
    t.f_weights = first_order_weights(t.c_xu);
    return t;
  }
  t.c_uu = c0_uu(m, T, cfg);
  t.c_mu = c0_mu(m, T, cfg);
  t.f_weights = second_order_weights(t.c_xu, t.c_uu, t.c_mu);
  return t;
}

inline CoeffTable second_order_coeff_table(const ModelSpec& m, double T,
                                           const QuadConfig& cfg = {}) {
  return coeff_table(m, T, 2, cfg);
}

// First-order implied volatility sigma(0) + eps sigma(1)(k, T), where
// sigma(1)(k, T) = (1/2 - k/sigma_T) C0_xu / (2 sqrt(T sigma_T)).
inline double implied_vol_first_order(const ModelSpec& m, double k, double T,
                                      double eps, const QuadConfig& cfg = {}) {
  if (!(T > 0.0)) throw std::domain_error("implied_vol_first_order: T must be > 0");
  const double sig_T = m.curve().integral(T);
  const double sigma0 = std::sqrt(sig_T / T);
  const double cxu = c0_xu(m, T, cfg);
  const double sigma1 = (0.5 - k / sig_T) * cxu / (2.0 * std::sqrt(T * sig_T));
  return sigma0 + eps * sigma1;
}

// First-order ATM skew term structure for a flat unit curve:
// psi(T) = | rho sigma(1) ∫∫ g / (2 T^2) |.
inline double atm_skew(const ModelSpec& m, double T, const QuadConfig& = {}) {
  if (!(T > 0.0)) throw std::domain_error("atm_skew: T must be > 0");
  if (!m.curve().is_flat() || std::abs(m.curve().flat_level() - 1.0) > 1e-12)
    throw ConfigError("model.curve", "atm_skew requires the flat unit curve");
  const double sigma1 =
      m.cls() == ModelSpec::Class::affine_drift ? m.sigma_tilde()(1.0) : 1.0;
  return std::abs(m.rho() * sigma1 * double_kernel_integral(m.kernel(), T) /
                  (2.0 * T * T));
}

}  // namespace volexp

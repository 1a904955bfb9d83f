#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace volexp::quad {

struct Rule {
  std::vector<double> x;
  std::vector<double> w;
};

namespace detail {

// Golub-Welsch: nodes/weights from the symmetric Jacobi matrix of the
// orthogonal-polynomial recurrence.
inline Rule golub_welsch(const std::vector<double>& offdiag, double mu0) {
  const int n = static_cast<int>(offdiag.size()) + 1;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    J(i, i + 1) = offdiag[static_cast<size_t>(i)];
    J(i + 1, i) = offdiag[static_cast<size_t>(i)];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Rule r;
  r.x.resize(static_cast<size_t>(n));
  r.w.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    r.x[static_cast<size_t>(i)] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    r.w[static_cast<size_t>(i)] = mu0 * v0 * v0;
  }
  return r;
}

inline const Rule& cached(std::map<int, Rule>& cache, std::mutex& m, int n,
                          const std::function<Rule(int)>& make) {
  std::lock_guard<std::mutex> lock(m);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make(n)).first;
  return it->second;
}

}  // namespace detail

// Gauss-Legendre on [-1, 1].
inline const Rule& gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  static std::map<int, Rule> cache;
  static std::mutex m;
  return detail::cached(cache, m, n, [](int k) {
    std::vector<double> b(static_cast<size_t>(k - 1));
    for (int i = 1; i < k; ++i)
      b[static_cast<size_t>(i - 1)] = i / std::sqrt(4.0 * i * i - 1.0);
    return detail::golub_welsch(b, 2.0);
  });
}

// Gauss-Hermite for the standard normal weight: E[f(Z)] ~ sum w_i f(x_i).
inline const Rule& gauss_hermite_normal(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite_normal: n must be >= 1");
  static std::map<int, Rule> cache;
  static std::mutex m;
  return detail::cached(cache, m, n, [](int k) {
    std::vector<double> b(static_cast<size_t>(k - 1));
    for (int i = 1; i < k; ++i) b[static_cast<size_t>(i - 1)] = std::sqrt(double(i));
    return detail::golub_welsch(b, 1.0);
  });
}

// ∫_a^b f(x) dx by n-point Gauss-Legendre.
template <class F>
double integrate(F&& f, double a, double b, int n) {
  const Rule& r = gauss_legendre(n);
  const double h = 0.5 * (b - a);
  const double c = 0.5 * (b + a);
  double s = 0.0;
  for (size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * f(c + h * r.x[i]);
  return h * s;
}

// tanh-sinh nodes on (0, 1), stored as (distance-from-0, distance-from-1, weight).
// Robust for integrable endpoint singularities; node offsets are computed from
// exponentials so they never collapse onto an endpoint.
struct TanhSinhRule {
  std::vector<double> from_a;
  std::vector<double> from_b;
  std::vector<double> w;
};

inline const TanhSinhRule& tanh_sinh(int m) {
  if (m < 4) throw std::invalid_argument("tanh_sinh: m must be >= 4");
  static std::map<int, TanhSinhRule> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(m);
  if (it == cache.end()) {
    constexpr double t_max = 3.8;
    const double h = t_max / m;
    TanhSinhRule r;
    const double pi = 3.14159265358979323846;
    for (int k = -m; k <= m; ++k) {
      const double t = k * h;
      const double u = pi * std::sinh(t);           // 2 * (pi/2) sinh t
      const double sp = 1.0 / (1.0 + std::exp(-u)); // sigma(t)  in (0,1)
      const double sm = 1.0 / (1.0 + std::exp(u));  // 1 - sigma(t)
      const double w = h * pi * 0.5 * std::cosh(t) * sp * sm * 2.0;
      if (w < 1e-300 || sp < 1e-300 || sm < 1e-300) continue;
      r.from_a.push_back(sp);
      r.from_b.push_back(sm);
      r.w.push_back(w);
    }
    it = cache.emplace(m, std::move(r)).first;
  }
  return it->second;
}

// ∫_0^L f dx by tanh-sinh; f receives (offset from 0, offset from L), both > 0.
// Handles algebraic endpoint singularities (x^-q, q < 1) accurately.
template <class F>
double integrate_ts(F&& f, double L, int m) {
  if (L <= 0.0) return 0.0;
  const TanhSinhRule& r = tanh_sinh(m);
  double s = 0.0;
  for (size_t i = 0; i < r.w.size(); ++i)
    s += r.w[i] * f(L * r.from_a[i], L * r.from_b[i]);
  return L * s;
}

namespace detail {

template <class F>
double adaptive_simpson_rec(F& f, double a, double b, double fa, double fm, double fb,
                            double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Classic adaptive Simpson with absolute tolerance.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol, int max_depth = 40) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

}  // namespace volexp::quad

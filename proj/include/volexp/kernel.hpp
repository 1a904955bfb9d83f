#pragma once

#include "volexp/errors.hpp"
#include "volexp/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace volexp {

// Volatility kernel g. Exponential phi*exp(-b x), power phi*x^-gamma
// (gamma in (0, 1/2), singular at 0, square integrable), exponential sums,
// and tabulated values with linear interpolation.
class Kernel {
 public:
  enum class Type { exponential, power, exp_sum, tabulated };

  static Kernel exponential(double phi, double b) {
    if (!(phi > 0.0)) throw ConfigError("kernel.phi", "must be > 0");
    if (!(b > 0.0)) throw ConfigError("kernel.b", "must be > 0");
    Kernel k;
    k.type_ = Type::exponential;
    k.phi_ = phi;
    k.b_ = b;
    return k;
  }

  static Kernel power(double phi, double gamma) {
    if (!(phi > 0.0)) throw ConfigError("kernel.phi", "must be > 0");
    if (!(gamma > 0.0 && gamma < 0.5))
      throw ConfigError("kernel.gamma", "must lie in (0, 1/2)");
    Kernel k;
    k.type_ = Type::power;
    k.phi_ = phi;
    k.gamma_ = gamma;
    k.singular_ = true;
    return k;
  }

  // terms: (weight, rate). Weights may be negative (least-squares lifts),
  // rates must be positive.
  static Kernel exp_sum(std::vector<std::pair<double, double>> terms) {
    if (terms.empty()) throw ConfigError("kernel.terms", "need at least one term");
    for (const auto& t : terms)
      if (!(t.second > 0.0)) throw ConfigError("kernel.terms", "rates must be > 0");
    Kernel k;
    k.type_ = Type::exp_sum;
    k.terms_ = std::move(terms);
    return k;
  }

  static Kernel tabulated(std::vector<double> grid, std::vector<double> values,
                          bool singular_at_zero = false) {
    if (grid.size() < 2 || grid.size() != values.size())
      throw ConfigError("kernel.grid", "need matching grid/values with >= 2 points");
    for (size_t i = 1; i < grid.size(); ++i)
      if (!(grid[i] > grid[i - 1]))
        throw ConfigError("kernel.grid", "grid must be strictly increasing");
    if (grid.front() < 0.0) throw ConfigError("kernel.grid", "grid must start at >= 0");
    if (singular_at_zero && grid.front() <= 0.0)
      throw ConfigError("kernel.grid", "singular tabulated kernel needs grid[0] > 0");
    Kernel k;
    k.type_ = Type::tabulated;
    k.grid_ = std::move(grid);
    k.values_ = std::move(values);
    k.singular_ = singular_at_zero;
    return k;
  }

  Type type() const noexcept { return type_; }
  bool singular_at_zero() const noexcept { return singular_; }
  double phi() const noexcept { return phi_; }
  double b() const noexcept { return b_; }
  double gamma() const noexcept { return gamma_; }
  const std::vector<std::pair<double, double>>& terms() const noexcept { return terms_; }

  double operator()(double x) const {
    switch (type_) {
      case Type::exponential:
        if (x < 0.0) throw std::domain_error("Kernel: x must be >= 0");
        return phi_ * std::exp(-b_ * x);
      case Type::power:
        if (x <= 0.0)
          throw SingularKernelError("power kernel is singular at x = 0");
        return phi_ * std::pow(x, -gamma_);
      case Type::exp_sum: {
        if (x < 0.0) throw std::domain_error("Kernel: x must be >= 0");
        double s = 0.0;
        for (const auto& t : terms_) s += t.first * std::exp(-t.second * x);
        return s;
      }
      case Type::tabulated: {
        if (singular_ && x <= 0.0)
          throw SingularKernelError("tabulated kernel flagged singular at x = 0");
        if (x < 0.0) throw std::domain_error("Kernel: x must be >= 0");
        return eval_tab(x);
      }
    }
    return 0.0;
  }

  // ∫_0^c g(x) dx, closed form where available.
  double integral(double c) const {
    if (c <= 0.0) return 0.0;
    switch (type_) {
      case Type::exponential:
        return phi_ * (-std::expm1(-b_ * c)) / b_;
      case Type::power:
        return phi_ * std::pow(c, 1.0 - gamma_) / (1.0 - gamma_);
      case Type::exp_sum: {
        double s = 0.0;
        for (const auto& t : terms_)
          s += t.first * (-std::expm1(-t.second * c)) / t.second;
        return s;
      }
      case Type::tabulated:
        return quad::adaptive_simpson([this](double x) { return eval_tab(x); },
                                      grid_.front(), std::max(c, grid_.front()), 1e-12) +
               (singular_ ? 0.0 : eval_tab(grid_.front()) * std::min(c, grid_.front()));
    }
    return 0.0;
  }

  // ∫_0^T g(x)^2 dx (square-integrability bookkeeping).
  double l2_norm_sq(double T) const {
    if (T <= 0.0) return 0.0;
    switch (type_) {
      case Type::exponential:
        return phi_ * phi_ * (-std::expm1(-2.0 * b_ * T)) / (2.0 * b_);
      case Type::power:
        return phi_ * phi_ * std::pow(T, 1.0 - 2.0 * gamma_) / (1.0 - 2.0 * gamma_);
      case Type::exp_sum: {
        double s = 0.0;
        for (const auto& a : terms_)
          for (const auto& b2 : terms_)
            s += a.first * b2.first * (-std::expm1(-(a.second + b2.second) * T)) /
                 (a.second + b2.second);
        return s;
      }
      case Type::tabulated: {
        const double lo = grid_.front();
        double head = singular_ ? 0.0 : eval_tab(lo) * eval_tab(lo) * std::min(T, lo);
        if (T <= lo) return head * (T / std::max(lo, 1e-300));
        return head + quad::adaptive_simpson(
                          [this](double x) {
                            const double v = eval_tab(x);
                            return v * v;
                          },
                          lo, T, 1e-12);
      }
    }
    return 0.0;
  }

 private:
  Kernel() = default;

  double eval_tab(double x) const {
    if (x <= grid_.front()) return values_.front();
    if (x >= grid_.back()) return values_.back();
    auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
    const size_t hi = static_cast<size_t>(it - grid_.begin());
    const size_t lo = hi - 1;
    const double w = (x - grid_[lo]) / (grid_[hi] - grid_[lo]);
    return values_[lo] + w * (values_[hi] - values_[lo]);
  }

  Type type_ = Type::exponential;
  bool singular_ = false;
  double phi_ = 0.0, b_ = 0.0, gamma_ = 0.0;
  std::vector<std::pair<double, double>> terms_;
  std::vector<double> grid_, values_;
};

// ∫_0^T ∫_0^t1 g(t1 - t2) dt2 dt1 = ∫_0^T (∫_0^x g) dx.
inline double double_kernel_integral(const Kernel& g, double T) {
  if (!(T > 0.0)) throw std::domain_error("double_kernel_integral: T must be > 0");
  switch (g.type()) {
    case Kernel::Type::exponential:
      return g.phi() * (T + std::expm1(-g.b() * T) / g.b()) / g.b();
    case Kernel::Type::power:
      return g.phi() * std::pow(T, 2.0 - g.gamma()) /
             ((1.0 - g.gamma()) * (2.0 - g.gamma()));
    case Kernel::Type::exp_sum: {
      double s = 0.0;
      for (const auto& t : g.terms())
        s += t.first * (T + std::expm1(-t.second * T) / t.second) / t.second;
      return s;
    }
    case Kernel::Type::tabulated:
      return quad::adaptive_simpson([&g](double x) { return g.integral(x); }, 0.0, T,
                                    1e-12);
  }
  return 0.0;
}

// Exponential-sum approximation of a power kernel in L2([0, T]): geometric
// rates with a span that grows exponentially in n (the singular head forces
// the largest rate to ~10^{0.65 n} before a 1e-1 relative error is even
// reachable), weights by least squares in the L2([0, T]) inner product
// discretized on a log-spaced grid.
inline Kernel markovian_lift(const Kernel& g, int n, double T = 1.0) {
  if (n < 1) throw std::domain_error("markovian_lift: n must be >= 1");
  if (!(T > 0.0)) throw std::domain_error("markovian_lift: T must be > 0");
  if (g.type() == Kernel::Type::exponential)
    return Kernel::exp_sum({{g.phi(), g.b()}});  // already in the class, exact
  if (g.type() == Kernel::Type::exp_sum) return g;
  if (g.type() != Kernel::Type::power)
    throw std::invalid_argument("markovian_lift: kernel must be power or exponential");

  std::vector<double> rates(static_cast<size_t>(n));
  const double r0 = 0.25 / T;
  const double r1 = std::pow(10.0, std::max(2.0, 0.65 * n)) / T;
  if (n == 1) {
    rates[0] = 1.0 / T;
  } else {
    for (int j = 0; j < n; ++j)
      rates[static_cast<size_t>(j)] =
          r0 * std::pow(r1 / r0, double(j) / double(n - 1));
  }

  // rows sqrt(q_i) e^{-r_j x_i}, rhs sqrt(q_i) g(x_i); log-spaced nodes with
  // the L2 cell weight q = x dln x resolve every rate in the dictionary
  const int m = 400 + 40 * n;
  const double x_lo = 1e-16 * T;
  const double dl = std::log(T / x_lo) / m;
  Eigen::MatrixXd A(m, n);
  Eigen::VectorXd rhs(m);
  for (int i = 0; i < m; ++i) {
    const double x = x_lo * std::exp((i + 0.5) * dl);
    const double sq = std::sqrt(x * dl);
    for (int j = 0; j < n; ++j)
      A(i, j) = sq * std::exp(-rates[static_cast<size_t>(j)] * x);
    rhs(i) = sq * g(x);
  }
  Eigen::VectorXd w = A.colPivHouseholderQr().solve(rhs);

  std::vector<std::pair<double, double>> terms(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j)
    terms[static_cast<size_t>(j)] = {w(j), rates[static_cast<size_t>(j)]};
  return Kernel::exp_sum(std::move(terms));
}

// L2([0,T]) distance between two kernels, graded quadrature near 0.
inline double kernel_l2_distance(const Kernel& a, const Kernel& b, double T,
                                 int m = 60) {
  const double v = quad::integrate_ts(
      [&](double x, double) {
        const double d = a(x) - b(x);
        return d * d;
      },
      T, m);
  return std::sqrt(std::max(v, 0.0));
}

}  // namespace volexp

#pragma once

#include "volexp/errors.hpp"
#include "volexp/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace volexp {

// Deterministic initial forward-variance curve u. Strictly positive and
// bounded on [0, t_max]; immutable after construction.
class Curve {
 public:
  enum class Type { flat, piecewise_linear, analytic };

  static Curve flat(double level, double t_max = 100.0) {
    if (!(level > 0.0)) throw ConfigError("curve.level", "must be strictly positive");
    if (!(t_max > 0.0)) throw ConfigError("curve.t_max", "must be positive");
    Curve c;
    c.type_ = Type::flat;
    c.level_ = level;
    c.t_max_ = t_max;
    return c;
  }

  // Knots (time, variance), strictly increasing times, values > 0.
  // Constant extrapolation outside the knot range keeps u bounded and positive.
  static Curve piecewise_linear(std::vector<std::pair<double, double>> knots,
                                double t_max = 100.0) {
    if (knots.empty()) throw ConfigError("curve.knots", "need at least one knot");
    for (size_t i = 0; i < knots.size(); ++i) {
      if (!(knots[i].second > 0.0))
        throw ConfigError("curve.knots", "variance values must be strictly positive");
      if (knots[i].first < 0.0)
        throw ConfigError("curve.knots", "knot times must be >= 0");
      if (i > 0 && !(knots[i].first > knots[i - 1].first))
        throw ConfigError("curve.knots", "knot times must be strictly increasing");
    }
    if (!(t_max > 0.0)) throw ConfigError("curve.t_max", "must be positive");
    Curve c;
    c.type_ = Type::piecewise_linear;
    c.knots_ = std::move(knots);
    c.t_max_ = t_max;
    return c;
  }

  // Positivity of a callback curve is checked on a dense sample of [0, t_max].
  static Curve analytic(std::function<double(double)> f, double t_max) {
    if (!f) throw ConfigError("curve.callback", "missing evaluation callback");
    if (!(t_max > 0.0)) throw ConfigError("curve.t_max", "must be positive");
    constexpr int probes = 2048;
    for (int i = 0; i <= probes; ++i) {
      const double t = t_max * i / probes;
      const double v = f(t);
      if (!(v > 0.0) || !std::isfinite(v))
        throw ConfigError("curve.callback", "curve must be strictly positive and finite");
    }
    Curve c;
    c.type_ = Type::analytic;
    c.fn_ = std::move(f);
    c.t_max_ = t_max;
    return c;
  }

  Type type() const noexcept { return type_; }
  double t_max() const noexcept { return t_max_; }
  bool is_flat() const noexcept { return type_ == Type::flat; }

  // interior kink locations in (0, T), for quadratures that split there
  std::vector<double> knot_times(double T) const {
    std::vector<double> out;
    if (type_ == Type::piecewise_linear)
      for (const auto& k : knots_)
        if (k.first > 0.0 && k.first < T) out.push_back(k.first);
    return out;
  }
  double flat_level() const {
    if (type_ != Type::flat) throw std::logic_error("flat_level: curve is not flat");
    return level_;
  }

  double operator()(double t) const {
    if (t < 0.0 || t > t_max_)
      throw std::domain_error("Curve: evaluation time outside [0, t_max]");
    switch (type_) {
      case Type::flat:
        return level_;
      case Type::piecewise_linear:
        return eval_pwl(t);
      case Type::analytic:
        return fn_(t);
    }
    return level_;
  }

  // ∫_0^T u(t) dt. Exact for flat and piecewise-linear curves.
  double integral(double T) const {
    if (T < 0.0 || T > t_max_)
      throw std::domain_error("Curve: integral horizon outside [0, t_max]");
    switch (type_) {
      case Type::flat:
        return level_ * T;
      case Type::piecewise_linear:
        return integral_pwl(T);
      case Type::analytic:
        return quad::integrate([this](double t) { return fn_(t); }, 0.0, T, 128);
    }
    return level_ * T;
  }

 private:
  Curve() = default;

  double eval_pwl(double t) const {
    const auto& k = knots_;
    if (t <= k.front().first) return k.front().second;
    if (t >= k.back().first) return k.back().second;
    auto it = std::upper_bound(
        k.begin(), k.end(), t,
        [](double v, const std::pair<double, double>& p) { return v < p.first; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double w = (t - lo.first) / (hi.first - lo.first);
    return lo.second + w * (hi.second - lo.second);
  }

  double integral_pwl(double T) const {
    // trapezoid over knot cells, constant extension outside
    double acc = 0.0;
    double prev_t = 0.0;
    const auto& k = knots_;
    if (T <= k.front().first) return k.front().second * T;
    acc += k.front().second * k.front().first;
    prev_t = k.front().first;
    for (size_t i = 0; i + 1 < k.size(); ++i) {
      const double t0 = k[i].first, t1 = k[i + 1].first;
      if (T <= t1) {
        const double va = eval_pwl(prev_t), vb = eval_pwl(T);
        acc += 0.5 * (va + vb) * (T - prev_t);
        return acc;
      }
      acc += 0.5 * (k[i].second + k[i + 1].second) * (t1 - t0);
      prev_t = t1;
    }
    acc += k.back().second * (T - prev_t);
    return acc;
  }

  Type type_ = Type::flat;
  double level_ = 0.0;
  double t_max_ = 0.0;
  std::vector<std::pair<double, double>> knots_;
  std::function<double(double)> fn_;
};

}  // namespace volexp

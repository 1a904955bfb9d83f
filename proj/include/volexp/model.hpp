#pragma once

#include "volexp/curve.hpp"
#include "volexp/errors.hpp"
#include "volexp/kernel.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <utility>

namespace volexp {

// Volatility function sigma~ of the spot variance for affine-drift models,
// with the derivatives the higher-order machinery needs. sqrt gives the
// rough-Heston-type class, linear the GARCH-type class.
class SigmaTilde {
 public:
  enum class Builtin { sqrt_vol, linear, custom };

  static SigmaTilde sqrt_vol() {
    SigmaTilde s;
    s.kind_ = Builtin::sqrt_vol;
    return s;
  }
  static SigmaTilde linear() {
    SigmaTilde s;
    s.kind_ = Builtin::linear;
    return s;
  }
  // derivatives beyond those supplied are rejected when requested
  static SigmaTilde custom(std::function<double(double)> f,
                           std::function<double(double)> d1 = nullptr,
                           std::function<double(double)> d2 = nullptr,
                           std::function<double(double)> d3 = nullptr) {
    if (!f) throw ConfigError("model.sigma_tilde", "missing callback");
    SigmaTilde s;
    s.kind_ = Builtin::custom;
    s.f_ = std::move(f);
    s.d1_ = std::move(d1);
    s.d2_ = std::move(d2);
    s.d3_ = std::move(d3);
    return s;
  }

  Builtin kind() const noexcept { return kind_; }

  // d^order/dx^order sigma~(x), order in 0..3
  double derivative(int order, double x) const {
    switch (kind_) {
      case Builtin::sqrt_vol: {
        if (order == 0) {
          if (x < 0.0) throw std::domain_error("sigma_tilde sqrt: argument must be >= 0");
          return std::sqrt(x);
        }
        if (!(x > 0.0))
          throw std::domain_error("sigma_tilde sqrt: derivatives need argument > 0");
        switch (order) {
          case 0: return std::sqrt(x);
          case 1: return 0.5 / std::sqrt(x);
          case 2: return -0.25 * std::pow(x, -1.5);
          case 3: return 0.375 * std::pow(x, -2.5);
        }
        break;
      }
      case Builtin::linear:
        switch (order) {
          case 0: return x;
          case 1: return 1.0;
          case 2: return 0.0;
          case 3: return 0.0;
        }
        break;
      case Builtin::custom: {
        const std::function<double(double)>* fn = nullptr;
        switch (order) {
          case 0: fn = &f_; break;
          case 1: fn = &d1_; break;
          case 2: fn = &d2_; break;
          case 3: fn = &d3_; break;
        }
        if (!fn || !*fn)
          throw ConfigError("model.sigma_tilde",
                            "derivative of order " + std::to_string(order) +
                                " not supplied by callback");
        return (*fn)(x);
      }
    }
    throw std::domain_error("sigma_tilde: derivative order must be in 0..3");
  }

  double operator()(double x) const { return derivative(0, x); }

 private:
  Builtin kind_ = Builtin::sqrt_vol;
  std::function<double(double)> f_, d1_, d2_, d3_;
};

// Forward-variance model: class (affine drift with sigma~, or Bergomi),
// kernel g, initial curve u and spot/vol correlation rho.
class ModelSpec {
 public:
  enum class Class { affine_drift, bergomi };

  static ModelSpec affine(SigmaTilde st, Kernel kernel, Curve curve, double rho) {
    return ModelSpec(Class::affine_drift, std::move(st), std::move(kernel),
                     std::move(curve), rho);
  }
  static ModelSpec bergomi(Kernel kernel, Curve curve, double rho) {
    return ModelSpec(Class::bergomi, SigmaTilde::linear(), std::move(kernel),
                     std::move(curve), rho);
  }

  Class cls() const noexcept { return cls_; }
  const SigmaTilde& sigma_tilde() const noexcept { return st_; }
  const Kernel& kernel() const noexcept { return kernel_; }
  const Curve& curve() const noexcept { return curve_; }
  double rho() const noexcept { return rho_; }

  // Sigma(u_t^0)(x): the volatility field along the deterministic flow.
  // Affine drift: sigma~(u(t)) g(x); Bergomi: u(t + x) g(x).
  double sigma0_field(double t, double x) const {
    return sigma0_coeff(t, t + x) * kernel_(x);
  }

  // multiplier c with Sigma(u_s^0)(t - s) = c * g(t - s); affine depends on s,
  // Bergomi on t
  double sigma0_coeff(double s, double t) const {
    if (cls_ == Class::affine_drift) return st_(curve_(s));
    return curve_(t);
  }

  bool is_rough() const noexcept { return kernel_.singular_at_zero(); }

 private:
  ModelSpec(Class cls, SigmaTilde st, Kernel kernel, Curve curve, double rho)
      : cls_(cls),
        st_(std::move(st)),
        kernel_(std::move(kernel)),
        curve_(std::move(curve)),
        rho_(rho) {
    if (!(rho >= -1.0 && rho <= 1.0))
      throw ConfigError("model.rho", "must lie in [-1, 1]");
  }

  Class cls_;
  SigmaTilde st_;
  Kernel kernel_;
  Curve curve_;
  double rho_;
};

}  // namespace volexp

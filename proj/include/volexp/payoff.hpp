#pragma once

#include "volexp/errors.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>

namespace volexp {

// Payoff f acting on the terminal log-price. Calls and puts are kinked at
// log(strike), digitals jump there; the kink location lets the pricing
// quadrature split the integration domain.
class Payoff {
 public:
  enum class Kind { call, put, digital, smooth };

  static Payoff call(double strike) { return vanilla(Kind::call, strike, true); }
  static Payoff put(double strike) { return vanilla(Kind::put, strike, true); }
  // cash-or-nothing call
  static Payoff digital(double strike) { return vanilla(Kind::digital, strike, false); }

  // Smooth payoff with at most exponential-in-x growth; faster growth is not
  // representable against the Gaussian base law and is rejected up front.
  static Payoff smooth(std::function<double(double)> f, bool lipschitz) {
    if (!f) throw ConfigError("payoff.callback", "missing payoff callback");
    for (double x : {-30.0, -15.0, 15.0, 30.0}) {
      const double v = f(x);
      if (!std::isfinite(v) || std::abs(v) > 1e6 * std::exp(2.0 * std::abs(x)))
        throw ConfigError("payoff.callback", "growth exceeds representable bound");
    }
    Payoff p;
    p.kind_ = Kind::smooth;
    p.fn_ = std::move(f);
    p.lipschitz_ = lipschitz;
    return p;
  }

  Kind kind() const noexcept { return kind_; }
  double strike() const noexcept { return strike_; }
  bool lipschitz() const noexcept { return lipschitz_; }

  // log-price at which the payoff is kinked / jumps; nullopt for smooth payoffs
  std::optional<double> kink_log_price() const {
    if (kind_ == Kind::smooth) return std::nullopt;
    return std::log(strike_);
  }

  double operator()(double x) const {
    switch (kind_) {
      case Kind::call:
        return std::max(std::exp(x) - strike_, 0.0);
      case Kind::put:
        return std::max(strike_ - std::exp(x), 0.0);
      case Kind::digital:
        return std::exp(x) > strike_ ? 1.0 : 0.0;
      case Kind::smooth:
        return fn_(x);
    }
    return 0.0;
  }

 private:
  static Payoff vanilla(Kind kind, double strike, bool lipschitz) {
    if (!(strike > 0.0)) throw ConfigError("payoff.strike", "must be > 0");
    Payoff p;
    p.kind_ = kind;
    p.strike_ = strike;
    p.lipschitz_ = lipschitz;
    return p;
  }

  Kind kind_ = Kind::call;
  double strike_ = 1.0;
  bool lipschitz_ = true;
  std::function<double(double)> fn_;
};

}  // namespace volexp

#pragma once

#include "volexp/gaussian_volterra.hpp"
#include "volexp/grid.hpp"
#include "volexp/model.hpp"
#include "volexp/parallel.hpp"
#include "volexp/polynomials.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace volexp {

inline constexpr int kMaxExpansionOrder = 4;

// Terminal values of one simulated path at eps = 0: the Gaussian martingale
// part Y_T of the base log-price and the derivative processes X^(1..p).
struct TerminalState {
  double Y = 0.0;
  double u1_T = 0.0;  // terminal value of u^(1)(0)
  std::array<double, kMaxExpansionOrder> X{};  // X[m-1] = X^(m)
  int order = 0;

  std::span<const double> x_span(int count) const {
    return {X.data(), static_cast<size_t>(count)};
  }
};

namespace detail {

// d^m/de^m sqrt(u^eps(0)) at eps = 0 from the spot derivatives z = (u^(1..m))
// and u = u(t) > 0. Hardcoded chain rule for m <= 4 (hot path; checked against
// the Bell-polynomial route in tests).
inline double sqrt_u_derivative(int m, double u, const double* z) {
  const double su = std::sqrt(u);
  const double a1 = 0.5 / su;
  switch (m) {
    case 1:
      return a1 * z[0];
    case 2:
      return a1 * z[1] - 0.25 * z[0] * z[0] / (u * su);
    case 3:
      return a1 * z[2] - 0.75 * z[0] * z[1] / (u * su) +
             0.375 * z[0] * z[0] * z[0] / (u * u * su);
    case 4: {
      const double z0sq = z[0] * z[0];
      return a1 * z[3] - 0.25 * (3.0 * z[1] * z[1] + 4.0 * z[0] * z[2]) / (u * su) +
             2.25 * z0sq * z[1] / (u * u * su) -
             0.9375 * z0sq * z0sq / (u * u * u * su);
    }
  }
  return 0.0;
}

// d^{m-1}/de^{m-1} sigma~(u^eps(0)) at eps = 0; st[k] = sigma~^(k)(u(t)).
inline double sigma_tilde_chain(int m, const double* st, const double* z) {
  switch (m) {
    case 2:
      return st[1] * z[0];
    case 3:
      return st[1] * z[1] + st[2] * z[0] * z[0];
    case 4:
      return st[1] * z[2] + 3.0 * st[2] * z[0] * z[1] + st[3] * z[0] * z[0] * z[0];
  }
  return 0.0;
}

}  // namespace detail

// Joint pathwise simulation of u^(m), sqrt(U)^(m) and X^(m) for m <= order.
// u^(1) is sampled exactly as a Gaussian process jointly with the Brownian
// increments; higher orders are left-point Euler sums (exponential kernels
// collapse to O(N) recursions). All discrete objects live in one Gaussian
// pool with the chaos grading of their continuous counterparts, so moment
// identities that rest on chaos orthogonality hold exactly on the grid.
class DerivativeEngine {
 public:
  DerivativeEngine(ModelSpec model, PathGrid grid, int order)
      : model_(std::move(model)), grid_(grid), order_(order) {
    if (order_ < 1 || order_ > kMaxExpansionOrder)
      throw std::domain_error("DerivativeEngine: order must be in 1..4");
    const int N = grid_.n_steps;
    const double dt = grid_.dt();
    u_.resize(static_cast<size_t>(N) + 1);
    w_.resize(static_cast<size_t>(N) + 1);
    for (int i = 0; i <= N; ++i) {
      u_[static_cast<size_t>(i)] = model_.curve()(grid_.time(i));
      w_[static_cast<size_t>(i)] = std::sqrt(u_[static_cast<size_t>(i)]);
    }
    sigma_disc_ = 0.0;
    for (int i = 0; i < N; ++i) sigma_disc_ += u_[static_cast<size_t>(i)] * dt;

    gk_.assign(static_cast<size_t>(N) + 1, 0.0);
    for (int k = 1; k <= N; ++k) gk_[static_cast<size_t>(k)] = model_.kernel()(k * dt);

    if (model_.cls() == ModelSpec::Class::affine_drift) {
      for (int d = 0; d <= 3; ++d) {
        auto& tab = st_[static_cast<size_t>(d)];
        tab.resize(static_cast<size_t>(N) + 1);
        for (int i = 0; i <= N; ++i)
          tab[static_cast<size_t>(i)] =
              d < order_ ? model_.sigma_tilde().derivative(d, u_[static_cast<size_t>(i)])
                         : 0.0;
      }
      sampler_ = std::make_unique<GaussianVolterraSampler>(
          model_.kernel(), grid_,
          [this](double s) { return model_.sigma_tilde()(model_.curve()(s)); },
          model_.curve().is_flat());
      bergomi_scale_ = false;
    } else {
      sampler_ = std::make_unique<GaussianVolterraSampler>(model_.kernel(), grid_);
      bergomi_scale_ = true;
    }
    fast_exponential_ = model_.kernel().type() == Kernel::Type::exponential;
  }

  double sigma_disc() const noexcept { return sigma_disc_; }
  const PathGrid& grid() const noexcept { return grid_; }
  int order() const noexcept { return order_; }
  const ModelSpec& model() const noexcept { return model_; }

  using Eval = std::function<void(const TerminalState&, std::span<double>)>;

  // Per-path statistics: eval() fills K values from a terminal state; values
  // are averaged over the antithetic twin when enabled.
  std::vector<MCEstimate> run_statistics(const MCRunConfig& cfg, size_t K,
                                         const Eval& eval) const {
    return run_chunked(cfg, K, [this, K, &eval, &cfg]() {
      auto ws = std::make_shared<Workspace>(make_workspace());
      return [this, K, &eval, ws, antithetic = cfg.antithetic](
                 Philox& rng, std::span<double> out) {
        simulate_sample(rng, *ws);
        auto& tmp = ws->stat_a;
        auto& tmp2 = ws->stat_b;
        tmp.assign(K, 0.0);
        eval(ws->plus, tmp);
        if (antithetic) {
          tmp2.assign(K, 0.0);
          eval(ws->minus, tmp2);
          for (size_t k = 0; k < K; ++k) out[k] = 0.5 * (tmp[k] + tmp2[k]);
        } else {
          for (size_t k = 0; k < K; ++k) out[k] = tmp[k];
        }
      };
    });
  }

  // E[B_{i,k}(X^(1),...) H_{l-k}(Y_T, Sigma_T)] with l the derivative index of
  // the expansion term (Hermite order l - k). Indices beyond the expansion
  // range l <= i + 2k are allowed for diagnostics of vanishing moments.
  MCEstimate estimate_coefficient(int i, int k, int l, const MCRunConfig& cfg) const {
    check_indices(i, k, l);
    const int h = l - k;
    const BellEvaluator bell_ik(i, k);
    auto est = run_statistics(
        cfg, 1, [&bell_ik, i, k, h, this](const TerminalState& t, std::span<double> out) {
          out[0] = bell_ik(t.x_span(i - k + 1)) * hermite(h, t.Y, sigma_disc_);
        });
    return est[0];
  }

  // H_l(Y_T, Sigma_T) evaluated from a path's terminal state
  double hermite_terminal(const TerminalState& t, int l) const {
    if (l < 0 || l > 14)
      throw std::domain_error("hermite_terminal: order must be in 0..14");
    return hermite(l, t.Y, sigma_disc_);
  }

  void check_indices(int i, int k, int l) const {
    if (k < 1 || k > i || i > order_)
      throw std::domain_error("estimate_coefficient: need 1 <= k <= i <= order");
    if (l < k || l - k > 12)
      throw std::domain_error("estimate_coefficient: need k <= l with l - k <= 12");
  }

 private:
  struct Workspace {
    std::vector<double> z;
    std::vector<double> dbw1, dbw2, dbw;
    std::vector<double> v1;                     // exact u^(1) spot values
    std::array<std::vector<double>, 3> u_high;  // u^(2..4) spot values
    std::array<std::vector<double>, 3> psi_x;   // affine generic scratch
    std::vector<double> stat_a, stat_b;
    TerminalState plus, minus;
  };

  Workspace make_workspace() const {
    Workspace ws;
    const size_t N = static_cast<size_t>(grid_.n_steps);
    ws.z.resize(sampler_->normals_needed() + N);
    ws.dbw1.resize(N);
    ws.dbw2.resize(N);
    ws.dbw.resize(N);
    ws.v1.resize(N + 1);
    for (auto& v : ws.u_high) v.resize(N + 1);
    for (auto& v : ws.psi_x) v.resize(N);
    ws.plus.order = ws.minus.order = order_;
    return ws;
  }

  void higher_orders_exponential(Workspace& ws) const {
    const int N = grid_.n_steps;
    const double phi = model_.kernel().phi();
    const double b = model_.kernel().b();
    const double dt = grid_.dt();
    if (model_.cls() == ModelSpec::Class::affine_drift) {
      const double decay = std::exp(-b * dt);
      double D[3] = {0.0, 0.0, 0.0};  // u^(m) = m * phi * D_{m}
      double um[kMaxExpansionOrder];
      double st[4];
      for (int i = 0; i <= N; ++i) {
        for (int m = 2; m <= order_; ++m)
          ws.u_high[static_cast<size_t>(m - 2)][static_cast<size_t>(i)] = m * phi * D[m - 2];
        if (i == N) break;
        um[0] = ws.v1[static_cast<size_t>(i)];
        for (int m = 2; m <= order_; ++m)
          um[m - 1] = ws.u_high[static_cast<size_t>(m - 2)][static_cast<size_t>(i)];
        for (int d = 0; d <= 3; ++d) st[d] = st_[static_cast<size_t>(d)][static_cast<size_t>(i)];
        const double x = ws.dbw1[static_cast<size_t>(i)];
        for (int m = 2; m <= order_; ++m)
          D[m - 2] = decay * (D[m - 2] + detail::sigma_tilde_chain(m, st, um) * x);
      }
    } else {
      // u^(m)_i = m! u(t_i) phi^m R_m with nested OU recursions over dW^1
      const double d2 = std::exp(-2.0 * b * dt);
      const double d3 = std::exp(-3.0 * b * dt);
      const double d4 = std::exp(-4.0 * b * dt);
      const double d1 = std::exp(-b * dt);
      double R1 = 0.0, R2 = 0.0, R3 = 0.0, R4 = 0.0;
      const double c2 = 2.0 * phi * phi;
      const double c3 = 6.0 * phi * phi * phi;
      const double c4 = 24.0 * phi * phi * phi * phi;
      for (int i = 0; i <= N; ++i) {
        const double ui = u_[static_cast<size_t>(i)];
        if (order_ >= 2) ws.u_high[0][static_cast<size_t>(i)] = c2 * ui * R2;
        if (order_ >= 3) ws.u_high[1][static_cast<size_t>(i)] = c3 * ui * R3;
        if (order_ >= 4) ws.u_high[2][static_cast<size_t>(i)] = c4 * ui * R4;
        if (i == N) break;
        const double x = ws.dbw1[static_cast<size_t>(i)];
        R4 = d4 * (R4 + R3 * x);
        R3 = d3 * (R3 + R2 * x);
        R2 = d2 * (R2 + R1 * x);
        R1 = d1 * (R1 + x);
      }
    }
  }

  void higher_orders_generic(Workspace& ws) const {
    const int N = grid_.n_steps;
    if (model_.cls() == ModelSpec::Class::affine_drift) {
      double um[kMaxExpansionOrder];
      double st[4];
      for (int i = 0; i <= N; ++i) {
        for (int m = 2; m <= order_; ++m) {
          const auto& px = ws.psi_x[static_cast<size_t>(m - 2)];
          double acc = 0.0;
          for (int j = 1; j < i; ++j)
            acc += px[static_cast<size_t>(j)] * gk_[static_cast<size_t>(i - j)];
          ws.u_high[static_cast<size_t>(m - 2)][static_cast<size_t>(i)] = m * acc;
        }
        if (i == N) break;
        um[0] = ws.v1[static_cast<size_t>(i)];
        for (int m = 2; m <= order_; ++m)
          um[m - 1] = ws.u_high[static_cast<size_t>(m - 2)][static_cast<size_t>(i)];
        for (int d = 0; d <= 3; ++d) st[d] = st_[static_cast<size_t>(d)][static_cast<size_t>(i)];
        const double x = ws.dbw1[static_cast<size_t>(i)];
        for (int m = 2; m <= order_; ++m)
          ws.psi_x[static_cast<size_t>(m - 2)][static_cast<size_t>(i)] =
              detail::sigma_tilde_chain(m, st, um) * x;
      }
    } else {
      // u^(m)_i = m! u(t_i) P_m(i) with nested prefix sums per maturity i
      for (int m = 2; m <= order_; ++m) ws.u_high[static_cast<size_t>(m - 2)][0] = 0.0;
      for (int i = 1; i <= N; ++i) {
        double p1 = 0.0, p2 = 0.0, p3 = 0.0, p4 = 0.0;
        for (int j = 0; j < i; ++j) {
          const double e =
              gk_[static_cast<size_t>(i - j)] * ws.dbw1[static_cast<size_t>(j)];
          p4 += p3 * e;
          p3 += p2 * e;
          p2 += p1 * e;
          p1 += e;
        }
        const double ui = u_[static_cast<size_t>(i)];
        if (order_ >= 2) ws.u_high[0][static_cast<size_t>(i)] = 2.0 * ui * p2;
        if (order_ >= 3) ws.u_high[1][static_cast<size_t>(i)] = 6.0 * ui * p3;
        if (order_ >= 4) ws.u_high[2][static_cast<size_t>(i)] = 24.0 * ui * p4;
      }
    }
  }

  void simulate_sample(Philox& rng, Workspace& ws) const {
    const int N = grid_.n_steps;
    const double dt = grid_.dt();
    const double sdt = std::sqrt(dt);
    const double rho = model_.rho();
    const double rho_bar = std::sqrt(std::max(0.0, 1.0 - rho * rho));

    rng.fill_normals(ws.z);
    const size_t nz = sampler_->normals_needed();
    sampler_->sample(std::span<const double>(ws.z.data(), nz), ws.dbw1, ws.v1);
    if (bergomi_scale_)
      for (int i = 0; i <= N; ++i)
        ws.v1[static_cast<size_t>(i)] *= u_[static_cast<size_t>(i)];
    for (int i = 0; i < N; ++i) {
      ws.dbw2[static_cast<size_t>(i)] = sdt * ws.z[nz + static_cast<size_t>(i)];
      ws.dbw[static_cast<size_t>(i)] = rho * ws.dbw1[static_cast<size_t>(i)] +
                                       rho_bar * ws.dbw2[static_cast<size_t>(i)];
    }

    if (order_ >= 2) {
      if (fast_exponential_)
        higher_orders_exponential(ws);
      else
        higher_orders_generic(ws);
    }

    // X^(m) = sum_i sqrtU^(m)_i dB_i - 1/2 trapz(u^(m)); the antithetic twin
    // follows from parity, u^(m) and sqrtU^(m) both carry (-1)^m.
    double mart[kMaxExpansionOrder] = {};
    double drift[kMaxExpansionOrder] = {};
    double um[kMaxExpansionOrder];
    double y = 0.0;
    for (int i = 0; i <= N; ++i) {
      um[0] = ws.v1[static_cast<size_t>(i)];
      for (int m = 2; m <= order_; ++m)
        um[m - 1] = ws.u_high[static_cast<size_t>(m - 2)][static_cast<size_t>(i)];
      const double trapz = (i == 0 || i == N) ? 0.5 * dt : dt;
      for (int m = 1; m <= order_; ++m) drift[m - 1] += trapz * um[m - 1];
      if (i == N) break;
      const double x = ws.dbw[static_cast<size_t>(i)];
      y += w_[static_cast<size_t>(i)] * x;
      if (i > 0) {
        const double ui = u_[static_cast<size_t>(i)];
        for (int m = 1; m <= order_; ++m)
          mart[m - 1] += detail::sqrt_u_derivative(m, ui, um) * x;
      }
    }

    ws.plus.Y = y;
    ws.minus.Y = -y;
    ws.plus.u1_T = ws.v1[static_cast<size_t>(N)];
    ws.minus.u1_T = -ws.plus.u1_T;
    for (int m = 1; m <= order_; ++m) {
      const double sm = (m % 2 == 0) ? 1.0 : -1.0;  // parity of u^(m)
      ws.plus.X[static_cast<size_t>(m - 1)] = mart[m - 1] - 0.5 * drift[m - 1];
      ws.minus.X[static_cast<size_t>(m - 1)] =
          -sm * mart[m - 1] - 0.5 * sm * drift[m - 1];
    }
  }

  ModelSpec model_;
  PathGrid grid_;
  int order_;
  std::vector<double> u_, w_, gk_;
  std::array<std::vector<double>, 4> st_;
  std::unique_ptr<GaussianVolterraSampler> sampler_;
  bool bergomi_scale_ = false;
  bool fast_exponential_ = false;
  double sigma_disc_ = 0.0;
};

}  // namespace volexp

#pragma once

#include "volexp/bs_engine.hpp"
#include "volexp/config.hpp"
#include "volexp/expansion.hpp"
#include "volexp/identities.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace volexp {

struct CheckResult {
  std::string suite;
  std::string name;
  bool pass = false;
  double metric = 0.0;  // the measured quantity (error, |z|, ...)
  double limit = 0.0;   // the bound it must stay under
};

namespace valdetail {

inline void add(std::vector<CheckResult>& out, const std::string& suite,
                const std::string& name, double metric, double limit) {
  out.push_back({suite, name, metric <= limit, metric, limit});
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(1e-300, std::abs(b));
}

}  // namespace valdetail

// Aggregated invariant suite behind the `validate` subcommand. Path counts
// are tuned for interactive latency; the acceptance binary runs the full-size
// versions of the statistical criteria.
inline std::vector<CheckResult> run_validation_suite(const RunConfig& cfg) {
  using valdetail::add;
  using valdetail::rel_err;
  std::vector<CheckResult> out;

  // -- curves & kernels -----------------------------------------------------
  {
    const Kernel ge = Kernel::exponential(1.5, 1.0);
    const double numeric = quad::integrate_ts(
        [&](double x, double) {
          return quad::integrate_ts([&](double y, double) { return ge(y); }, x, 40);
        },
        1.0, 40);
    add(out, "kernels", "double_integral_exponential",
        rel_err(double_kernel_integral(ge, 1.0), numeric), 1e-8);

    const Kernel gp = Kernel::power(1.0, 0.4);
    const double numeric_p = quad::integrate_ts(
        [&](double x, double) {
          return quad::integrate_ts([&](double y, double) { return gp(y); }, x, 40);
        },
        1.0, 40);
    add(out, "kernels", "double_integral_power",
        rel_err(double_kernel_integral(gp, 1.0), numeric_p), 1e-6);

    double prev = 1e300;
    bool monotone = true;
    double last = 0.0;
    for (int n : {1, 2, 4, 8}) {
      const Kernel lift = markovian_lift(gp, n, 1.0);
      last = kernel_l2_distance(lift, gp, 1.0);
      if (last > prev * (1.0 + 1e-12)) monotone = false;
      prev = last;
    }
    add(out, "kernels", "lift_error_monotone", monotone ? 0.0 : 1.0, 0.5);
    add(out, "kernels", "lift_error_n8_small",
        last / std::sqrt(gp.l2_norm_sq(1.0)), 0.10);

    bool positive = true;
    Philox rng(7, 0);
    for (int i = 0; i < 10000; ++i)
      if (!(cfg.model.curve()(rng.uniform() * cfg.T) > 0.0)) positive = false;
    add(out, "curves", "positivity_sampled", positive ? 0.0 : 1.0, 0.5);
  }

  // -- polynomials ------------------------------------------------------------
  {
    Philox rng(11, 0);
    double worst = 0.0;
    for (int n = 1; n <= 8; ++n) {
      const double x = 2.0 * rng.normal();
      const double s = 0.5 + rng.uniform();
      const double h = 1e-5;
      const double fd = (hermite(n, x + h, s) - hermite(n, x - h, s)) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - hermite(n - 1, x, s)));
    }
    add(out, "polynomials", "hermite_derivative_identity", worst, 1e-7);

    // Bell recurrence B_{n,k} = sum_m C(n-1, m-1) x_m B_{n-m, k-1}
    double worst_bell = 0.0;
    std::vector<double> xs = {0.7, -1.3, 0.4, 2.1, -0.6, 0.9, 1.7, -0.2};
    auto choose = [](int n, int k) {
      double c = 1.0;
      for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
      return c;
    };
    for (int n = 1; n <= 6; ++n)
      for (int k = 1; k <= n; ++k) {
        double rec = 0.0;
        for (int m = 1; m <= n - k + 1; ++m)
          rec += choose(n - 1, m - 1) * xs[static_cast<size_t>(m - 1)] *
                 bell(n - m, k - 1, xs);
        worst_bell = std::max(worst_bell, rel_err(bell(n, k, xs), rec));
      }
    add(out, "polynomials", "bell_recurrence", worst_bell, 1e-12);
  }

  // -- Black-Scholes engine ---------------------------------------------------
  {
    Philox rng(13, 0);
    double worst_parity = 0.0;
    for (int i = 0; i < 50; ++i) {
      const double x = 0.4 * rng.normal();
      const double K = std::exp(x + 0.5 * rng.normal());
      const double sig = 0.01 + rng.uniform() * 0.5;
      const BaseLaw law(x, sig, 1.0);
      const double call = base_price(law, Payoff::call(K));
      const double put = base_price(law, Payoff::put(K));
      worst_parity = std::max(worst_parity,
                              std::abs(call - put - (std::exp(x) - K)));
    }
    add(out, "bs_engine", "put_call_parity", worst_parity, 1e-12);

    const BaseLaw law(0.0, 0.04, 1.0);
    add(out, "bs_engine", "call_matches_closed_form",
        rel_err(base_price(law, Payoff::call(1.0)), black_call(0.0, 1.0, 0.04)),
        1e-12);
    add(out, "bs_engine", "delta_matches_closed_form",
        rel_err(log_spot_derivative(law, Payoff::call(1.0), 1),
                black_call_delta_x(0.0, 1.0, 0.04)),
        1e-8);
    add(out, "bs_engine", "node_doubling",
        std::abs(base_price(law, Payoff::call(1.0), 128) -
                 base_price(law, Payoff::call(1.0), 256)),
        1e-10);
  }

  // -- coefficient identities (quick MC) --------------------------------------
  {
    MCRunConfig mc;
    mc.n_paths = 1u << 15;
    mc.seed = cfg.mc.seed;
    mc.threads = cfg.mc.threads;
    const PathGrid grid(1.0, 256);
    const auto berg = ModelSpec::bergomi(Kernel::exponential(1.5, 1.0),
                                         Curve::flat(0.04), -0.7);
    double worst_z = 0.0;
    for (const auto& c : coefficient_identity_checks(berg, 1.0, grid, mc))
      worst_z = std::max(worst_z, std::abs(c.z()));
    add(out, "coefficients", "identities_bergomi_z", worst_z, 4.0);

    const auto aff = ModelSpec::affine(SigmaTilde::sqrt_vol(),
                                       Kernel::exponential(1.5, 1.0),
                                       Curve::flat(0.04), -0.7);
    worst_z = 0.0;
    for (const auto& c : coefficient_identity_checks(aff, 1.0, grid, mc))
      worst_z = std::max(worst_z, std::abs(c.z()));
    add(out, "coefficients", "identities_affine_sqrt_z", worst_z, 4.0);

    // quadrature self-convergence under node doubling
    const QuadConfig q1;
    const QuadConfig q2 = q1.doubled();
    const auto& m = cfg.model;
    add(out, "coefficients", "c_xu_self_convergence",
        rel_err(c0_xu(m, cfg.T, q1), c0_xu(m, cfg.T, q2)), 1e-6);
    add(out, "coefficients", "c_uu_self_convergence",
        rel_err(c0_uu(m, cfg.T, q1), c0_uu(m, cfg.T, q2)), 1e-6);
    if (m.rho() != 0.0)
      add(out, "coefficients", "c_mu_self_convergence",
          rel_err(c0_mu(m, cfg.T, q1), c0_mu(m, cfg.T, q2)), 1e-6);

    // ATM skew power law
    const auto skew_model =
        ModelSpec::bergomi(Kernel::power(1.0, 0.4), Curve::flat(1.0), -0.7);
    std::vector<double> lt, lp;
    for (double T : {0.1, 0.2, 0.5, 1.0, 2.0}) {
      lt.push_back(std::log(T));
      lp.push_back(std::log(atm_skew(skew_model, T)));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < lt.size(); ++i) {
      sx += lt[i];
      sy += lp[i];
      sxx += lt[i] * lt[i];
      sxy += lt[i] * lp[i];
    }
    const double n = static_cast<double>(lt.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    add(out, "coefficients", "skew_power_law_gamma04", std::abs(slope + 0.4), 1e-3);
  }

  // -- MC engine ---------------------------------------------------------------
  {
    MCRunConfig mc;
    mc.n_paths = 1u << 15;
    mc.seed = cfg.mc.seed + 1;
    mc.threads = cfg.mc.threads;
    const PathGrid grid(1.0, 256);
    const auto berg = ModelSpec::bergomi(Kernel::exponential(1.5, 1.0),
                                         Curve::flat(0.04), -0.7);
    double worst_z = 0.0;
    for (const auto& v : vanishing_moment_suite(berg, grid, 2, mc))
      worst_z = std::max(worst_z, v.z());
    add(out, "mc_engine", "vanishing_moments_z", worst_z, 4.0);

    // Ito isometry of u^(1): Var = phi^2 u (1 - e^{-2bT}) / (2b) for the
    // flat Bergomi curve (coefficient u g(T-s))
    DerivativeEngine engine(berg, grid, 1);
    auto est = engine.run_statistics(
        mc, 1, [](const TerminalState& t, std::span<double> o) { o[0] = t.Y * t.Y; });
    add(out, "mc_engine", "Y_variance_z",
        std::abs(est[0].mean - engine.sigma_disc()) / est[0].stderror, 4.0);
  }

  // -- full model ----------------------------------------------------------------
  {
    MCRunConfig mc;
    mc.n_paths = 1u << 14;
    mc.seed = cfg.mc.seed + 2;
    mc.threads = cfg.mc.threads;
    const PathGrid grid(1.0, 256);
    const auto berg = ModelSpec::bergomi(Kernel::exponential(1.5, 1.0),
                                         Curve::flat(0.04), -0.7);
    FullModelPricer pricer(berg, grid);
    const int N = grid.n_steps;
    auto est = pricer.run_path_statistics(
        0.3, mc, 1,
        [N](const FullModelPricer::PathView& pv, std::span<double> o) {
          o[0] = pv.v[static_cast<size_t>(N)];
        });
    add(out, "full_model", "martingale_Ev_z",
        std::abs(est[0].mean - 0.04) / est[0].stderror, 4.0);

    const auto p0 = pricer.price(Payoff::call(1.0), 0.0, mc);
    const double bs = black_call(0.0, 1.0, 0.04);
    add(out, "full_model", "eps0_matches_bs_z",
        std::abs(p0.mean - bs) / p0.stderror, 4.0);
  }

  // -- expansion -------------------------------------------------------------------
  {
    McParams mp;
    mp.grid = PathGrid(1.0, 256);
    mp.run.n_paths = 1u << 15;
    mp.run.seed = cfg.mc.seed + 3;
    mp.run.threads = cfg.mc.threads;
    const auto berg = ModelSpec::bergomi(Kernel::exponential(1.5, 1.0),
                                         Curve::flat(0.04), -0.7);
    const Payoff call = Payoff::call(1.0);
    const std::vector<double> eps = {0.3};
    const auto quad_res = expand_price(berg, call, 1.0, eps, 2, false);
    const auto mc_res = expand_price(berg, call, 1.0, eps, 2, true, &mp);
    const double gap = std::abs(quad_res.price[0] - mc_res.price[0]);
    add(out, "expansion", "mode_equivalence_z",
        gap / std::max(mc_res.price_stderr[0], 1e-300), 3.0);
  }

  // -- reproducibility ----------------------------------------------------------
  {
    MCRunConfig mc;
    mc.n_paths = 1u << 13;
    mc.seed = 9001;
    const PathGrid grid(1.0, 128);
    const auto berg = ModelSpec::bergomi(Kernel::exponential(1.5, 1.0),
                                         Curve::flat(0.04), -0.7);
    FullModelPricer pricer(berg, grid);
    MCRunConfig mc1 = mc;
    mc1.threads = 1;
    MCRunConfig mc2 = mc;
    mc2.threads = 2;
    const auto a = pricer.price(Payoff::call(1.0), 0.3, mc1);
    const auto b = pricer.price(Payoff::call(1.0), 0.3, mc2);
    add(out, "reproducibility", "thread_count_invariance",
        a.mean == b.mean && a.stderror == b.stderror ? 0.0 : 1.0, 0.5);
  }

  return out;
}

}  // namespace volexp

#pragma once

#include "volexp/coefficients.hpp"
#include "volexp/mc_engine.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace volexp {

// Pathwise Monte Carlo estimates of the first/second-order coefficient
// brackets next to their quadrature values. Each bracket is evaluated per
// path (so correlated pieces get one correct standard error).
struct IdentityCheck {
  std::string name;
  double mc = 0.0;
  double se = 0.0;
  double quadrature = 0.0;

  double z() const { return se > 0.0 ? (mc - quadrature) / se : 0.0; }
};

inline std::vector<IdentityCheck> coefficient_identity_checks(
    const ModelSpec& model, double T, const PathGrid& grid, const MCRunConfig& mc,
    int order = 2, const QuadConfig& qcfg = {}) {
  if (order != 1 && order != 2)
    throw std::domain_error("coefficient_identity_checks: order must be 1 or 2");
  DerivativeEngine engine(model, grid, order);
  const double sig = engine.sigma_disc();

  const size_t K = order == 1 ? 2 : 7;
  auto est = engine.run_statistics(
      mc, K, [order, sig](const TerminalState& t, std::span<double> out) {
        double h[5];
        hermite_all(4, t.Y, sig, h);
        const double x1 = t.X[0];
        out[0] = x1 * h[1];
        out[1] = x1 * h[2];
        if (order == 2) {
          const double x2 = t.X[1];
          const double x1sq = x1 * x1;
          out[2] = x2 * h[1] + x1sq;
          out[3] = x2 * h[2] + x1sq * h[1];
          out[4] = x2 * h[3] + x1sq * h[2];
          out[5] = x1sq * h[3];
          out[6] = x1sq * h[4];
        }
      });

  const double cxu = c0_xu(model, T, qcfg);
  std::vector<IdentityCheck> checks;
  checks.push_back({"w1_f2", est[0].mean, est[0].stderror, -0.5 * cxu});
  checks.push_back({"w1_f3", est[1].mean, est[1].stderror, 0.5 * cxu});
  if (order == 2) {
    const double cuu = c0_uu(model, T, qcfg);
    const double cmu = c0_mu(model, T, qcfg);
    const double cx2 = cxu * cxu;
    checks.push_back({"w2_f2", est[2].mean, est[2].stderror, 0.25 * cuu});
    checks.push_back({"w2_f3", est[3].mean, est[3].stderror, -cmu - 0.5 * cuu});
    checks.push_back(
        {"w2_f4", est[4].mean, est[4].stderror, cmu + 0.25 * cuu + 0.25 * cx2});
    checks.push_back({"w2_f5", est[5].mean, est[5].stderror, -0.125 * cx2});
    checks.push_back({"w2_f6", est[6].mean, est[6].stderror, 0.25 * cx2});
  }
  return checks;
}

// Estimates of E[B_{n,k} H_h] for Hermite orders h past the vanishing bound
// h > n + k; all should be zero within noise.
struct VanishingMoment {
  int n = 0, k = 0, h = 0;
  MCEstimate est;

  double z() const {
    return est.stderror > 0.0 ? std::abs(est.mean) / est.stderror : 0.0;
  }
};

inline std::vector<VanishingMoment> vanishing_moment_suite(const ModelSpec& model,
                                                           const PathGrid& grid,
                                                           int max_n,
                                                           const MCRunConfig& mc) {
  if (max_n < 1 || max_n > kMaxExpansionOrder)
    throw std::domain_error("vanishing_moment_suite: max_n must be in 1..4");
  DerivativeEngine engine(model, grid, max_n);
  const double sig = engine.sigma_disc();

  struct Slot {
    int n, k, h;
    BellEvaluator bell;
  };
  std::vector<Slot> slots;
  int hmax = 0;
  for (int n = 1; n <= max_n; ++n)
    for (int k = 1; k <= n; ++k)
      for (int h = n + k + 1; h <= n + 2 * k + 2; ++h) {
        slots.push_back({n, k, h, BellEvaluator(n, k)});
        hmax = std::max(hmax, h);
      }

  auto est = engine.run_statistics(
      mc, slots.size(),
      [&slots, sig, hmax](const TerminalState& t, std::span<double> out) {
        double h[16];
        hermite_all(hmax, t.Y, sig, h);
        for (size_t q = 0; q < slots.size(); ++q)
          out[q] = slots[q].bell(t.x_span(slots[q].n - slots[q].k + 1)) *
                   h[slots[q].h];
      });

  std::vector<VanishingMoment> out;
  for (size_t q = 0; q < slots.size(); ++q)
    out.push_back({slots[q].n, slots[q].k, slots[q].h, est[q]});
  return out;
}

}  // namespace volexp

#pragma once

#include "volexp/bs_engine.hpp"
#include "volexp/coefficients.hpp"
#include "volexp/full_model.hpp"
#include "volexp/mc_engine.hpp"
#include "volexp/model.hpp"
#include "volexp/payoff.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace volexp {

// Assembled weak Taylor expansion
//   price(eps) = sum_{i=0}^p eps^i/i! sum_{k,l} E[B_{i,k} H_{l-k}] F^l.
// Coefficients come from quadrature (p <= 2) or Monte Carlo (p <= 4).
struct ExpansionTerm {
  int i = 0, k = 0, l = 0;   // eps order, Bell block count, derivative index
  double value = 0.0;
  double stderror = 0.0;
};

struct ExpansionResult {
  int order = 1;
  bool mc_mode = false;
  double base = 0.0;                  // F^0
  std::vector<double> f;              // F^0..F^{3p}
  std::vector<ExpansionTerm> terms;   // coefficient table, i >= 1
  std::optional<CoeffTable> coeffs;   // quadrature mode
  uint64_t mc_paths = 0;
  uint64_t mc_seed = 0;

  // eps-grid assembly produced by expand_price
  std::vector<double> eps;
  std::vector<double> price;
  std::vector<double> price_stderr;

  double price_at(double e) const {
    double p = base;
    // per (i, l): weight w_il = sum_k E[B_{i,k} H_{l-k}]
    std::map<std::pair<int, int>, double> w;
    for (const auto& t : terms) w[{t.i, t.l}] += t.value;
    for (const auto& [key, wv] : w) {
      const auto [i, l] = key;
      double fi = 1.0;
      for (int r = 2; r <= i; ++r) fi *= r;
      p += std::pow(e, i) / fi * wv * f[static_cast<size_t>(l)];
    }
    return p;
  }
};

struct McParams {
  PathGrid grid;
  MCRunConfig run;
};

// Quadrature-mode expansion (p <= 2): CoeffTable weights on F^2..F^6.
inline ExpansionResult expand_price_quadrature(const ModelSpec& model,
                                               const Payoff& payoff, double T,
                                               std::span<const double> eps, int p,
                                               double x0 = 0.0,
                                               const QuadConfig& qcfg = {}) {
  if (p < 1 || p > 2)
    throw std::domain_error("expand_price: quadrature mode supports order 1 or 2");
  ExpansionResult res;
  res.order = p;
  res.mc_mode = false;
  const BaseLaw law(x0, total_variance(model.curve(), T), T);
  res.f = log_spot_derivatives(law, payoff, 3 * p);
  res.base = res.f[0];

  const CoeffTable t1 = coeff_table(model, T, 1, qcfg);
  for (const auto& [l, wv] : t1.f_weights) res.terms.push_back({1, 1, l, wv, 0.0});
  if (p == 2) {
    const CoeffTable t2 = coeff_table(model, T, 2, qcfg);
    res.coeffs = t2;
    for (const auto& [l, wv] : t2.f_weights) res.terms.push_back({2, 0, l, wv, 0.0});
  } else {
    res.coeffs = t1;
  }

  for (double e : eps) {
    res.eps.push_back(e);
    res.price.push_back(res.price_at(e));
    res.price_stderr.push_back(0.0);
  }
  return res;
}

// Monte Carlo mode (p <= 4): every admissible (i, k, l) with k <= l <= i+2k
// is estimated, including the l = k terms whose expectation vanishes in
// theory; they stay in the assembly as a live consistency check.
inline ExpansionResult expand_price_mc(const ModelSpec& model, const Payoff& payoff,
                                       double T, std::span<const double> eps, int p,
                                       const McParams& mc, double x0 = 0.0) {
  if (p < 1 || p > kMaxExpansionOrder)
    throw std::domain_error("expand_price: mc mode supports order 1..4");
  if (std::abs(mc.grid.T - T) > 1e-12)
    throw std::invalid_argument("expand_price: grid.T must match T");
  ExpansionResult res;
  res.order = p;
  res.mc_mode = true;
  const BaseLaw law(x0, total_variance(model.curve(), T), T);
  res.f = log_spot_derivatives(law, payoff, 3 * p);
  res.base = res.f[0];

  DerivativeEngine engine(model, mc.grid, p);
  struct Key {
    int i, k, l;
  };
  std::vector<Key> keys;
  std::vector<BellEvaluator> bells;
  for (int i = 1; i <= p; ++i)
    for (int k = 1; k <= i; ++k)
      for (int l = k; l <= i + 2 * k; ++l) {
        keys.push_back({i, k, l});
        bells.emplace_back(i, k);
      }

  const size_t nk = keys.size();
  const size_t ne = eps.size();
  std::vector<double> eps_v(eps.begin(), eps.end());
  const double sig = engine.sigma_disc();

  // per-eps weight of coefficient product q in the assembled correction
  std::vector<double> wq(ne * nk);
  for (size_t e = 0; e < ne; ++e)
    for (size_t q = 0; q < nk; ++q) {
      double fi = 1.0;
      for (int r = 2; r <= keys[q].i; ++r) fi *= r;
      wq[e * nk + q] = std::pow(eps_v[e], keys[q].i) / fi *
                       res.f[static_cast<size_t>(keys[q].l)];
    }

  // per-path: every coefficient product, then the assembled correction per eps
  const int hmax = 2 * p;
  auto est = engine.run_statistics(
      mc.run, nk + ne,
      [&](const TerminalState& t, std::span<double> out) {
        double h[9];
        hermite_all(hmax, t.Y, sig, h);
        for (size_t q = 0; q < nk; ++q) {
          const auto& key = keys[q];
          out[q] = bells[q](t.x_span(key.i - key.k + 1)) * h[key.l - key.k];
        }
        for (size_t e = 0; e < ne; ++e) {
          double acc = 0.0;
          const double* we = wq.data() + e * nk;
          for (size_t q = 0; q < nk; ++q) acc += we[q] * out[q];
          out[nk + e] = acc;
        }
      });

  for (size_t q = 0; q < nk; ++q)
    res.terms.push_back(
        {keys[q].i, keys[q].k, keys[q].l, est[q].mean, est[q].stderror});
  res.mc_paths = mc.run.n_paths;
  res.mc_seed = mc.run.seed;
  for (size_t e = 0; e < ne; ++e) {
    res.eps.push_back(eps_v[e]);
    res.price.push_back(res.base + est[nk + e].mean);
    res.price_stderr.push_back(est[nk + e].stderror);
  }
  return res;
}

inline ExpansionResult expand_price(const ModelSpec& model, const Payoff& payoff,
                                    double T, std::span<const double> eps, int p,
                                    bool mc_mode, const McParams* mc = nullptr,
                                    double x0 = 0.0) {
  if (!mc_mode) return expand_price_quadrature(model, payoff, T, eps, p, x0);
  if (!mc) throw std::invalid_argument("expand_price: mc mode needs parameters");
  return expand_price_mc(model, payoff, T, eps, p, *mc, x0);
}

// eps-convergence study against the full-model oracle under common random
// numbers. Points whose gap is noise-dominated (error <= 3 stderr) are
// excluded from the log-log fit.
struct ConvergenceRow {
  double eps = 0.0;
  double mc_price = 0.0;
  double mc_stderr = 0.0;
  double expansion_price = 0.0;
  double abs_error = 0.0;
  bool used_in_fit = false;
};

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  double slope = 0.0;
  bool conclusive = false;
};

inline ConvergenceStudy convergence_study(const ModelSpec& model, const Payoff& payoff,
                                          double T, std::span<const double> eps_grid,
                                          int p, const McParams& oracle,
                                          bool mc_coefficients = false,
                                          double x0 = 0.0) {
  if (eps_grid.size() < 4)
    throw std::invalid_argument("convergence_study: need at least 4 eps points");
  for (double e : eps_grid)
    if (!(e > 0.0 && e <= 0.5))
      throw std::domain_error("convergence_study: eps must lie in (0, 0.5]");

  FullModelPricer::Options fo;
  fo.x0 = x0;
  FullModelPricer pricer(model, oracle.grid, fo);
  const auto prices = pricer.price_sweep(payoff, eps_grid, oracle.run);
  const auto exp_res =
      expand_price(model, payoff, T, eps_grid, p, mc_coefficients, &oracle, x0);

  ConvergenceStudy out;
  std::vector<double> lx, ly;
  for (size_t e = 0; e < eps_grid.size(); ++e) {
    ConvergenceRow row;
    row.eps = eps_grid[e];
    row.mc_price = prices[e].mean;
    row.mc_stderr = prices[e].stderror;
    row.expansion_price = exp_res.price[e];
    row.abs_error = std::abs(row.mc_price - row.expansion_price);
    row.used_in_fit = row.abs_error > 3.0 * row.mc_stderr;
    if (row.used_in_fit) {
      lx.push_back(std::log(row.eps));
      ly.push_back(std::log(row.abs_error));
    }
    out.rows.push_back(row);
  }
  if (lx.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(lx.size());
    for (size_t i = 0; i < lx.size(); ++i) {
      sx += lx[i];
      sy += ly[i];
      sxx += lx[i] * lx[i];
      sxy += lx[i] * ly[i];
    }
    out.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    out.conclusive = true;
  }
  return out;
}

}  // namespace volexp

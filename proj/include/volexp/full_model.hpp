#pragma once

#include "volexp/gaussian_volterra.hpp"
#include "volexp/grid.hpp"
#include "volexp/model.hpp"
#include "volexp/parallel.hpp"
#include "volexp/payoff.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace volexp {

// Full eps-model simulation of the spot variance and log-price.
//
// Bergomi: the linear field integrates to an exact lognormal spot,
//   v_t = u(t) exp(eps G_t - eps^2/2 Var G_t),  G_t = ∫_0^t g(t-s) dW_s,
// with G sampled exactly (OU recursion or Cholesky). Affine drift: left-point
// Volterra-Euler with full truncation (sigma~ evaluated at max(v, 0)).
struct FullModelOptions {
  bool force_cholesky = false;
  double x0 = 0.0;
};

class FullModelPricer {
 public:
  using Options = FullModelOptions;

  FullModelPricer(ModelSpec model, PathGrid grid,
                  FullModelOptions opt = FullModelOptions())
      : model_(std::move(model)), grid_(grid), opt_(opt) {
    const int N = grid_.n_steps;
    const double dt = grid_.dt();
    u_.resize(static_cast<size_t>(N) + 1);
    for (int i = 0; i <= N; ++i) u_[static_cast<size_t>(i)] = model_.curve()(grid_.time(i));
    if (model_.cls() == ModelSpec::Class::bergomi) {
      GaussianVolterraSampler::Options so;
      so.force_cholesky = opt_.force_cholesky;
      sampler_ = std::make_unique<GaussianVolterraSampler>(model_.kernel(), grid_,
                                                           nullptr, true, so);
      gvar_.resize(static_cast<size_t>(N) + 1);
      for (int i = 0; i <= N; ++i)
        gvar_[static_cast<size_t>(i)] = model_.kernel().l2_norm_sq(grid_.time(i));
    } else {
      fast_exponential_ = model_.kernel().type() == Kernel::Type::exponential;
      gk_.assign(static_cast<size_t>(N) + 1, 0.0);
      for (int k = 1; k <= N; ++k) gk_[static_cast<size_t>(k)] = model_.kernel()(k * dt);
    }
  }

  const ModelSpec& model() const noexcept { return model_; }
  const PathGrid& grid() const noexcept { return grid_; }

  MCEstimate price(const Payoff& payoff, double eps, const MCRunConfig& cfg) const {
    return price_sweep(payoff, std::vector<double>{eps}, cfg)[0];
  }

  // Common-random-number sweep: the same Brownian increments drive every eps,
  // so the expansion error is smooth in eps and slope-fittable.
  std::vector<MCEstimate> price_sweep(const Payoff& payoff,
                                      std::span<const double> eps_list,
                                      const MCRunConfig& cfg) const {
    const size_t E = eps_list.size();
    std::vector<double> eps(eps_list.begin(), eps_list.end());
    return run_chunked(cfg, E, [this, eps, &payoff, &cfg]() {
      auto ws = std::make_shared<Workspace>(make_workspace());
      return [this, eps, &payoff, antithetic = cfg.antithetic, ws](
                 Philox& rng, std::span<double> out) {
        draw(rng, *ws);
        for (size_t e = 0; e < eps.size(); ++e) {
          spot_path(eps[e], /*flip=*/false, *ws);
          double val = payoff(log_price(*ws, /*flip=*/false));
          if (antithetic) {
            spot_path(eps[e], /*flip=*/true, *ws);
            val = 0.5 * (val + payoff(log_price(*ws, /*flip=*/true)));
          }
          out[e] = val;
        }
      };
    });
  }

  // Spot-variance diagnostics: eval sees the v-path (t_0..t_N), the log-price
  // and the driving increments of one path.
  struct PathView {
    std::span<const double> v;
    std::span<const double> dbw1;
    std::span<const double> dbw;
    double x_T = 0.0;
  };

  std::vector<MCEstimate> run_path_statistics(
      double eps, const MCRunConfig& cfg, size_t K,
      const std::function<void(const PathView&, std::span<double>)>& eval) const {
    return run_chunked(cfg, K, [this, eps, K, &eval, &cfg]() {
      auto ws = std::make_shared<Workspace>(make_workspace());
      return [this, eps, K, &eval, antithetic = cfg.antithetic, ws](
                 Philox& rng, std::span<double> out) {
        draw(rng, *ws);
        auto& tmp = ws->stat_a;
        auto& tmp2 = ws->stat_b;
        spot_path(eps, false, *ws);
        tmp.assign(K, 0.0);
        eval(view(*ws, false), tmp);
        if (antithetic) {
          spot_path(eps, true, *ws);
          tmp2.assign(K, 0.0);
          eval(view(*ws, true), tmp2);
          for (size_t k = 0; k < K; ++k) out[k] = 0.5 * (tmp[k] + tmp2[k]);
        } else {
          for (size_t k = 0; k < K; ++k) out[k] = tmp[k];
        }
      };
    });
  }

 private:
  struct Workspace {
    std::vector<double> z;
    std::vector<double> dbw1, dbw2, g;  // g: exact Gaussian G_t (Bergomi)
    std::vector<double> v;              // spot variance at t_0..t_N
    std::vector<double> dbw1_cur, dbw_cur;
    std::vector<double> stat_a, stat_b;
  };

  Workspace make_workspace() const {
    Workspace ws;
    const size_t N = static_cast<size_t>(grid_.n_steps);
    const size_t nz = sampler_ ? sampler_->normals_needed() : N;
    ws.z.resize(nz + N);
    ws.dbw1.resize(N);
    ws.dbw2.resize(N);
    ws.g.resize(N + 1);
    ws.v.resize(N + 1);
    ws.dbw1_cur.resize(N);
    ws.dbw_cur.resize(N);
    return ws;
  }

  void draw(Philox& rng, Workspace& ws) const {
    const int N = grid_.n_steps;
    const double sdt = std::sqrt(grid_.dt());
    rng.fill_normals(ws.z);
    size_t nz;
    if (sampler_) {
      nz = sampler_->normals_needed();
      sampler_->sample(std::span<const double>(ws.z.data(), nz), ws.dbw1, ws.g);
    } else {
      nz = static_cast<size_t>(N);
      for (int i = 0; i < N; ++i)
        ws.dbw1[static_cast<size_t>(i)] = sdt * ws.z[static_cast<size_t>(i)];
    }
    for (int i = 0; i < N; ++i)
      ws.dbw2[static_cast<size_t>(i)] = sdt * ws.z[nz + static_cast<size_t>(i)];
  }

  // fills ws.v (and ws.dbw1_cur / ws.dbw_cur for the requested sign)
  void spot_path(double eps, bool flip, Workspace& ws) const {
    const int N = grid_.n_steps;
    const double sgn = flip ? -1.0 : 1.0;
    const double rho = model_.rho();
    const double rho_bar = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    for (int i = 0; i < N; ++i) {
      const double b1 = sgn * ws.dbw1[static_cast<size_t>(i)];
      ws.dbw1_cur[static_cast<size_t>(i)] = b1;
      ws.dbw_cur[static_cast<size_t>(i)] =
          rho * b1 + rho_bar * sgn * ws.dbw2[static_cast<size_t>(i)];
    }
    if (model_.cls() == ModelSpec::Class::bergomi) {
      for (int i = 0; i <= N; ++i)
        ws.v[static_cast<size_t>(i)] =
            u_[static_cast<size_t>(i)] *
            std::exp(eps * sgn * ws.g[static_cast<size_t>(i)] -
                     0.5 * eps * eps * gvar_[static_cast<size_t>(i)]);
      return;
    }
    // affine drift: left-point Volterra-Euler, sigma~ at v^+
    ws.v[0] = u_[0];
    if (fast_exponential_) {
      const double phi = model_.kernel().phi();
      const double decay = std::exp(-model_.kernel().b() * grid_.dt());
      double A = 0.0;
      for (int i = 0; i < N; ++i) {
        const double vp = std::max(ws.v[static_cast<size_t>(i)], 0.0);
        A = decay * (A + model_.sigma_tilde()(vp) * ws.dbw1_cur[static_cast<size_t>(i)]);
        ws.v[static_cast<size_t>(i + 1)] = u_[static_cast<size_t>(i + 1)] + eps * phi * A;
      }
    } else {
      for (int i = 1; i <= N; ++i) {
        double acc = 0.0;
        for (int j = 0; j < i; ++j) {
          const double vp = std::max(ws.v[static_cast<size_t>(j)], 0.0);
          acc += gk_[static_cast<size_t>(i - j)] * model_.sigma_tilde()(vp) *
                 ws.dbw1_cur[static_cast<size_t>(j)];
        }
        ws.v[static_cast<size_t>(i)] = u_[static_cast<size_t>(i)] + eps * acc;
      }
    }
  }

  double log_price(const Workspace& ws, bool /*flip*/) const {
    const int N = grid_.n_steps;
    const double dt = grid_.dt();
    double x = opt_.x0;
    for (int i = 0; i < N; ++i) {
      const double vp = std::max(ws.v[static_cast<size_t>(i)], 0.0);
      x += -0.5 * vp * dt + std::sqrt(vp) * ws.dbw_cur[static_cast<size_t>(i)];
    }
    return x;
  }

  PathView view(const Workspace& ws, bool flip) const {
    PathView pv;
    pv.v = std::span<const double>(ws.v);
    pv.dbw1 = std::span<const double>(ws.dbw1_cur);
    pv.dbw = std::span<const double>(ws.dbw_cur);
    pv.x_T = log_price(ws, flip);
    return pv;
  }

  ModelSpec model_;
  PathGrid grid_;
  Options opt_;
  std::vector<double> u_, gvar_, gk_;
  std::unique_ptr<GaussianVolterraSampler> sampler_;
  bool fast_exponential_ = false;
};

// Forest-expansion diamond term for affine-drift models:
//   (X <> M)_0(T) = eps rho ∫_0^T E[sigma~(v_t) sqrt(v_t)] Gbar(t) dt,
// Gbar(t) = ∫_t^T g(s - t) ds, estimated from full-model spot paths. The
// bracket (the estimate without the eps rho prefactor) is exposed separately;
// at eps = 0 it is deterministic and matches the quadrature value.
struct ForestTerm {
  MCEstimate diamond;
  MCEstimate bracket;
  double eps = 0.0;
};

inline ForestTerm forest_term_xm(const ModelSpec& model, double eps,
                                 const PathGrid& grid, const MCRunConfig& cfg) {
  if (model.cls() != ModelSpec::Class::affine_drift)
    throw ConfigError("model.class", "forest term requires the affine-drift class");
  if (!(std::abs(eps) <= 1.0))
    throw std::domain_error("forest_term_xm: need |eps| <= 1");
  FullModelPricer pricer(model, grid);
  const int N = grid.n_steps;
  const double dt = grid.dt();
  std::vector<double> gbar(static_cast<size_t>(N) + 1);
  for (int i = 0; i <= N; ++i)
    gbar[static_cast<size_t>(i)] = model.kernel().integral(grid.T - grid.time(i));

  auto est = pricer.run_path_statistics(
      eps, cfg, 1,
      [&](const FullModelPricer::PathView& pv, std::span<double> out) {
        double acc = 0.0;
        for (int i = 0; i <= N; ++i) {
          const double vp = std::max(pv.v[static_cast<size_t>(i)], 0.0);
          const double w = (i == 0 || i == N) ? 0.5 * dt : dt;
          acc += w * model.sigma_tilde()(vp) * std::sqrt(vp) *
                 gbar[static_cast<size_t>(i)];
        }
        out[0] = acc;
      });

  ForestTerm ft;
  ft.eps = eps;
  ft.bracket = est[0];
  ft.diamond = est[0];
  ft.diamond.mean *= eps * model.rho();
  ft.diamond.stderror *= std::abs(eps * model.rho());
  return ft;
}

// Bergomi prices for a family of kernels under one Brownian pool (common
// random numbers): every kernel is sampled through the Cholesky route with
// the same normals, so pathwise price differences against the first kernel
// are low-noise. diffs[j] estimates price(kernels[0]) - price(kernels[j+1]).
struct KernelFamilyPrices {
  std::vector<MCEstimate> prices;
  std::vector<MCEstimate> diffs;
};

inline KernelFamilyPrices bergomi_kernel_family_prices(
    const Curve& curve, double rho, const std::vector<Kernel>& kernels,
    const Payoff& payoff, double eps, const PathGrid& grid, const MCRunConfig& cfg,
    double x0 = 0.0) {
  if (kernels.size() < 2 || kernels.size() > 16)
    throw std::invalid_argument("bergomi_kernel_family_prices: need 2..16 kernels");
  const size_t M = kernels.size();
  const int N = grid.n_steps;
  const double dt = grid.dt();

  std::vector<std::shared_ptr<GaussianVolterraSampler>> samplers;
  std::vector<std::vector<double>> gvar(M);
  GaussianVolterraSampler::Options so;
  so.force_cholesky = true;
  for (size_t m = 0; m < M; ++m) {
    samplers.push_back(
        std::make_shared<GaussianVolterraSampler>(kernels[m], grid, nullptr, true, so));
    gvar[m].resize(static_cast<size_t>(N) + 1);
    for (int i = 0; i <= N; ++i)
      gvar[m][static_cast<size_t>(i)] = kernels[m].l2_norm_sq(grid.time(i));
  }
  std::vector<double> u(static_cast<size_t>(N) + 1);
  for (int i = 0; i <= N; ++i) u[static_cast<size_t>(i)] = curve(grid.time(i));
  const double rho_bar = std::sqrt(std::max(0.0, 1.0 - rho * rho));

  const size_t K = 2 * M - 1;
  auto est = run_chunked(cfg, K, [&, M, N]() {
    struct Ws {
      std::vector<double> z, dbw1, dbw2, g, dbw;
      std::vector<std::vector<double>> gk;
    };
    auto ws = std::make_shared<Ws>();
    ws->z.resize(samplers[0]->normals_needed() + static_cast<size_t>(N));
    ws->dbw1.resize(static_cast<size_t>(N));
    ws->dbw2.resize(static_cast<size_t>(N));
    ws->dbw.resize(static_cast<size_t>(N));
    ws->g.resize(static_cast<size_t>(N) + 1);
    ws->gk.assign(M, std::vector<double>(static_cast<size_t>(N) + 1));
    return [&, ws, M, N](Philox& rng, std::span<double> out) {
      rng.fill_normals(ws->z);
      const size_t nz = samplers[0]->normals_needed();
      for (size_t m = 0; m < M; ++m) {
        samplers[m]->sample(std::span<const double>(ws->z.data(), nz), ws->dbw1,
                            ws->gk[m]);
      }
      const double sdt = std::sqrt(dt);
      for (int i = 0; i < N; ++i)
        ws->dbw2[static_cast<size_t>(i)] = sdt * ws->z[nz + static_cast<size_t>(i)];

      double f[2][16];  // [sign][kernel]
      for (int sign = 0; sign < (cfg.antithetic ? 2 : 1); ++sign) {
        const double sg = sign == 0 ? 1.0 : -1.0;
        for (int i = 0; i < N; ++i)
          ws->dbw[static_cast<size_t>(i)] =
              sg * (rho * ws->dbw1[static_cast<size_t>(i)] +
                    rho_bar * ws->dbw2[static_cast<size_t>(i)]);
        for (size_t m = 0; m < M; ++m) {
          double x = x0;
          for (int i = 0; i < N; ++i) {
            const double v =
                u[static_cast<size_t>(i)] *
                std::exp(eps * sg * ws->gk[m][static_cast<size_t>(i)] -
                         0.5 * eps * eps * gvar[m][static_cast<size_t>(i)]);
            x += -0.5 * v * dt + std::sqrt(v) * ws->dbw[static_cast<size_t>(i)];
          }
          f[sign][m] = payoff(x);
        }
      }
      for (size_t m = 0; m < M; ++m) {
        const double val =
            cfg.antithetic ? 0.5 * (f[0][m] + f[1][m]) : f[0][m];
        out[m] = val;
      }
      for (size_t m = 1; m < M; ++m) out[M + m - 1] = out[0] - out[m];
    };
  });

  KernelFamilyPrices out;
  out.prices.assign(est.begin(), est.begin() + static_cast<long>(M));
  out.diffs.assign(est.begin() + static_cast<long>(M), est.end());
  return out;
}

}  // namespace volexp

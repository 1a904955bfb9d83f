// Acceptance suite: one pass/fail line per criterion, exit code 0 only if
// every requested criterion passes. Usage: acceptance [N | all]

#include "volexp/bs_engine.hpp"
#include "volexp/expansion.hpp"
#include "volexp/identities.hpp"

#include "support/oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

using namespace volexp;

namespace {

struct Criterion {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
  void note(const std::string& s) {
    if (!detail.empty()) detail += "; ";
    detail += s;
  }
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

ModelSpec bergomi_exp(double rho = -0.7) {
  return ModelSpec::bergomi(Kernel::exponential(1.5, 1.0), Curve::flat(0.04), rho);
}
ModelSpec affine_exp(SigmaTilde st) {
  return ModelSpec::affine(std::move(st), Kernel::exponential(1.5, 1.0),
                           Curve::flat(0.04), -0.7);
}

MCRunConfig mc_cfg(uint64_t paths, uint64_t seed) {
  MCRunConfig mc;
  mc.n_paths = paths;
  mc.seed = seed;
  return mc;
}

// 1. Remainder order of the expansion: fitted log-log error slopes against
//    the full-model price under common random numbers.
Criterion criterion_1() {
  Criterion c;
  const auto model = bergomi_exp();
  const Payoff call = Payoff::call(1.0);
  const std::vector<double> eps_grid = {0.05, 0.1, 0.2, 0.3, 0.4};
  McParams oracle_params;
  oracle_params.grid = PathGrid(1.0, 512);
  oracle_params.run = mc_cfg(1u << 20, 20260101);

  const auto s1 = convergence_study(model, call, 1.0, eps_grid, 1, oracle_params);
  c.require(s1.conclusive, "p=1 study inconclusive");
  if (s1.conclusive) {
    c.note("p=1 slope " + num(s1.slope) + " (need >= 1.7)");
    c.require(s1.slope >= 1.7, "p=1 slope below 1.7");
  }
  const auto s2 = convergence_study(model, call, 1.0, eps_grid, 2, oracle_params);
  c.require(s2.conclusive, "p=2 study inconclusive");
  if (s2.conclusive) {
    c.note("p=2 slope " + num(s2.slope) + " (need >= 2.5)");
    c.require(s2.slope >= 2.5, "p=2 slope below 2.5");
  }
  return c;
}

// 2. Vanishing moments E[B_{n,k} H_h] = 0 for h > n + k, all three classes.
Criterion criterion_2() {
  Criterion c;
  const PathGrid grid(1.0, 512);
  const auto mc = mc_cfg(1u << 19, 20260202);
  const std::pair<const char*, ModelSpec> models[] = {
      {"bergomi", bergomi_exp()},
      {"affine_sqrt", affine_exp(SigmaTilde::sqrt_vol())},
      {"affine_linear", affine_exp(SigmaTilde::linear())}};
  double worst = 0.0;
  for (const auto& [name, model] : models) {
    for (const auto& v : vanishing_moment_suite(model, grid, 3, mc)) {
      worst = std::max(worst, v.z());
      c.require(v.z() <= 4.0, std::string(name) + " (n=" + std::to_string(v.n) +
                                  ",k=" + std::to_string(v.k) +
                                  ",h=" + std::to_string(v.h) + ") |z|=" + num(v.z()));
    }
  }
  c.note("worst |z| " + num(worst) + " (need <= 4)");
  return c;
}

// 3. Coefficient identities: MC brackets match quadrature to 3 combined
//    standard errors; first-order identities additionally on the rough kernel.
Criterion criterion_3() {
  Criterion c;
  const PathGrid grid(1.0, 512);
  const auto mc = mc_cfg(1u << 19, 20260303);
  const std::pair<const char*, ModelSpec> models[] = {
      {"bergomi", bergomi_exp()},
      {"affine_sqrt", affine_exp(SigmaTilde::sqrt_vol())},
      {"affine_linear", affine_exp(SigmaTilde::linear())}};
  double worst = 0.0;
  for (const auto& [name, model] : models) {
    for (const auto& chk : coefficient_identity_checks(model, 1.0, grid, mc)) {
      worst = std::max(worst, std::abs(chk.z()));
      c.require(std::abs(chk.z()) <= 3.0,
                std::string(name) + " " + chk.name + " z=" + num(chk.z()));
    }
  }
  c.note("worst exponential-kernel |z| " + num(worst));

  const auto rough =
      ModelSpec::bergomi(Kernel::power(1.0, 0.4), Curve::flat(0.04), -0.7);
  double worst_rough = 0.0;
  for (const auto& chk : coefficient_identity_checks(
           rough, 1.0, PathGrid(1.0, 256), mc_cfg(1u << 19, 20260304), 1)) {
    worst_rough = std::max(worst_rough, std::abs(chk.z()));
    c.require(std::abs(chk.z()) <= 3.0,
              std::string("rough ") + chk.name + " z=" + num(chk.z()));
  }
  c.note("worst rough-kernel |z| " + num(worst_rough) + " (need <= 3)");
  return c;
}

// 4. ATM skew term structure follows T^-gamma to 1e-3 in the fitted exponent.
Criterion criterion_4() {
  Criterion c;
  const std::vector<double> ts = {0.1, 0.2, 0.5, 1.0, 2.0};
  for (double gamma : {0.1, 0.25, 0.4}) {
    const auto model =
        ModelSpec::bergomi(Kernel::power(1.0, gamma), Curve::flat(1.0), -0.7);
    auto fit = [&](bool numeric_route) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (double T : ts) {
        double dki;
        if (numeric_route) {
          // independent quadrature route for the double kernel integral
          dki = quad::integrate_ts(
              [&](double x, double) {
                return quad::integrate_ts(
                    [&](double y, double) { return model.kernel()(y); }, x, 60);
              },
              T, 60);
        } else {
          dki = double_kernel_integral(model.kernel(), T);
        }
        const double psi = std::abs(-0.7 * dki / (2.0 * T * T));
        const double lx = std::log(T), ly = std::log(psi);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
      }
      const double n = static_cast<double>(ts.size());
      return (n * sxy - sx * sy) / (n * sxx - sx * sx);
    };
    const double slope_closed = fit(false);
    const double slope_quad = fit(true);
    c.require(std::abs(slope_closed + gamma) <= 1e-3,
              "gamma=" + num(gamma) + " closed-form slope " + num(slope_closed));
    c.require(std::abs(slope_quad + gamma) <= 1e-3,
              "gamma=" + num(gamma) + " quadrature slope " + num(slope_quad));
    if (gamma == 0.4)
      c.note("gamma=0.4 fitted exponent " + num(slope_quad) + " -> H~" +
             num(0.5 + slope_quad));
  }
  return c;
}

// 5. The diamond term equals eps * C0_xu exactly for the square-root class
//    and detectably differs for the linear class.
Criterion criterion_5() {
  Criterion c;
  const PathGrid grid(1.0, 2048);
  {
    const auto model = affine_exp(SigmaTilde::sqrt_vol());
    const auto ft = forest_term_xm(model, 0.3, grid, mc_cfg(1u << 19, 20260505));
    const double target = 0.3 * c0_xu(model, 1.0);
    const double z = (ft.diamond.mean - target) / ft.diamond.stderror;
    c.note("sqrt class z " + num(z) + " (need |z| <= 3)");
    c.require(std::abs(z) <= 3.0, "affine equality violated");
  }
  {
    const auto model = affine_exp(SigmaTilde::linear());
    const auto ft = forest_term_xm(model, 0.5, grid, mc_cfg(1u << 19, 20260506));
    const double target = 0.5 * c0_xu(model, 1.0);
    const double z = (ft.diamond.mean - target) / ft.diamond.stderror;
    c.note("linear class z " + num(z) + " (need |z| > 5)");
    c.require(std::abs(z) > 5.0, "linear class not separated");
  }
  return c;
}

// 6. Hermite-representation derivatives match Richardson finite differences
//    of the closed-form call to relative 1e-5 for l <= 6.
Criterion criterion_6() {
  Criterion c;
  double worst = 0.0;
  for (double sig : {0.01, 0.04, 0.25}) {
    const BaseLaw law(0.0, sig, 1.0);
    for (int l = 1; l <= 6; ++l) {
      const double fd = oracle::call_derivative_fd(0.0, 1.0, sig, l);
      const double direct = log_spot_derivative(law, Payoff::call(1.0), l);
      const double rel = std::abs(direct - fd) / std::abs(fd);
      worst = std::max(worst, rel);
      c.require(rel <= 1e-5, "sigma_T=" + num(sig) + " l=" + std::to_string(l) +
                                 " rel err " + num(rel));
    }
  }
  c.note("worst relative error " + num(worst) + " (need <= 1e-5)");
  return c;
}

// 7. Prices under Markovian lifts approach the rough-kernel price
//    monotonically in the lift size under common random numbers.
Criterion criterion_7() {
  Criterion c;
  const Kernel power = Kernel::power(1.0, 0.4);
  std::vector<Kernel> kernels = {power};
  for (int n : {2, 4, 8, 16}) kernels.push_back(markovian_lift(power, n, 1.0));
  const auto res = bergomi_kernel_family_prices(
      Curve::flat(0.04), -0.7, kernels, Payoff::call(1.0), 0.3, PathGrid(1.0, 256),
      mc_cfg(1u << 19, 20260707));
  std::string seq;
  double prev = 1e300;
  for (size_t j = 0; j < res.diffs.size(); ++j) {
    const double d = std::abs(res.diffs[j].mean);
    seq += (j ? ", " : "") + num(d);
    c.require(d <= prev, "difference increased at lift " + std::to_string(j));
    prev = d;
  }
  c.note("|price gap| over lifts {2,4,8,16}: " + seq);
  return c;
}

// 8. Bit-identical Monte Carlo across reruns and worker counts.
Criterion criterion_8() {
  Criterion c;
  const auto model = bergomi_exp();
  const PathGrid grid(1.0, 256);
  FullModelPricer pricer(model, grid);
  auto once = [&](int threads) {
    MCRunConfig mc = mc_cfg(1u << 16, 20260808);
    mc.threads = threads;
    return pricer.price(Payoff::call(1.0), 0.3, mc);
  };
  const auto a = once(1);
  const auto b = once(2);
  const auto a2 = once(1);
  c.require(a.mean == b.mean && a.stderror == b.stderror,
            "price differs across worker counts");
  c.require(a.mean == a2.mean && a.stderror == a2.stderror,
            "price differs across reruns");

  DerivativeEngine engine(model, grid, 2);
  auto coeff = [&](int threads) {
    MCRunConfig mc = mc_cfg(1u << 16, 20260809);
    mc.threads = threads;
    return engine.estimate_coefficient(2, 1, 3, mc);
  };
  const auto ca = coeff(1);
  const auto cb = coeff(2);
  c.require(ca.mean == cb.mean && ca.stderror == cb.stderror,
            "coefficient estimate differs across worker counts");
  c.note("all runs bit-identical");
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string which = argc > 1 ? argv[1] : "all";
  using Fn = Criterion (*)();
  const Fn criteria[] = {criterion_1, criterion_2, criterion_3, criterion_4,
                         criterion_5, criterion_6, criterion_7, criterion_8};
  const char* names[] = {
      "remainder order of the expansion",
      "vanishing moments beyond the chaos bound",
      "coefficient identities (MC vs quadrature)",
      "ATM skew power law",
      "affine characterization of the diamond term",
      "Black-Scholes derivative engine",
      "Markovian lift price convergence",
      "bit-exact reproducibility"};

  bool all_pass = true;
  for (int i = 0; i < 8; ++i) {
    if (which != "all" && which != std::to_string(i + 1)) continue;
    const auto start = std::chrono::steady_clock::now();
    const Criterion c = criteria[i]();
    const auto secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
    std::printf("criterion %d: %s — %s (%s) [%.1fs]\n", i + 1,
                c.pass ? "PASS" : "FAIL", names[i],
                c.detail.empty() ? "ok" : c.detail.c_str(), secs);
    std::fflush(stdout);
    all_pass = all_pass && c.pass;
  }
  return all_pass ? 0 : 1;
}

#include "volexp/bs_engine.hpp"
#include "volexp/coefficients.hpp"
#include "volexp/full_model.hpp"

#include "support/oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

using namespace volexp;

namespace {

ModelSpec bergomi_exp() {
  return ModelSpec::bergomi(Kernel::exponential(1.5, 1.0), Curve::flat(0.04), -0.7);
}

MCRunConfig quick_mc(uint64_t paths, uint64_t seed) {
  MCRunConfig mc;
  mc.n_paths = paths;
  mc.seed = seed;
  return mc;
}

// Euler-Maruyama on the mild curve equation for the linear (Bergomi) field:
// the whole curve is advanced on the grid, u_{i+1}(x) = u_i(x + dt)(1 + eps
// g(x + dt) dW). Test-only oracle for the exact lognormal spot.
struct CurveEulerOracle {
  double T;
  int N;
  Kernel g;
  double u0;

  // returns terminal spot variance of one path driven by dbw
  double terminal_spot(const std::vector<double>& dbw) const {
    const double dt = T / N;
    std::vector<double> curve(static_cast<size_t>(2 * N + 1));
    for (int x = 0; x <= 2 * N; ++x) curve[static_cast<size_t>(x)] = u0;
    for (int i = 0; i < N; ++i) {
      const int remaining = 2 * N - i;
      for (int x = 0; x < remaining; ++x) {
        const double shifted = curve[static_cast<size_t>(x + 1)];
        curve[static_cast<size_t>(x)] =
            shifted + shifted * g((x + 1) * dt) * dbw[static_cast<size_t>(i)];
      }
    }
    return curve[0];
  }
};

}  // namespace

TEST_CASE("deterministic flow at eps = 0", "[full_model]") {
  for (const auto& model :
       {bergomi_exp(), ModelSpec::affine(SigmaTilde::sqrt_vol(),
                                         Kernel::exponential(1.5, 1.0),
                                         Curve::flat(0.04), -0.7)}) {
    FullModelPricer pricer(model, PathGrid(1.0, 64));
    auto est = pricer.run_path_statistics(
        0.0, quick_mc(32, 3), 1,
        [&](const FullModelPricer::PathView& pv, std::span<double> out) {
          double worst = 0.0;
          for (size_t i = 0; i < pv.v.size(); ++i)
            worst = std::max(worst, std::abs(pv.v[i] - 0.04));
          out[0] = worst;
        });
    CHECK(est[0].mean == 0.0);
  }
}

TEST_CASE("spot variance stays a martingale", "[full_model]") {
  const PathGrid grid(1.0, 256);
  const auto mc = quick_mc(1 << 14, 11);
  SECTION("Bergomi exact lognormal") {
    FullModelPricer pricer(bergomi_exp(), grid);
    auto est = pricer.run_path_statistics(
        0.3, mc, 1, [&](const FullModelPricer::PathView& pv, std::span<double> out) {
          out[0] = pv.v[static_cast<size_t>(grid.n_steps)];
        });
    CHECK(std::abs(est[0].mean - 0.04) <= 4.0 * est[0].stderror);
  }
  SECTION("affine sqrt Volterra-Euler") {
    const auto m = ModelSpec::affine(SigmaTilde::sqrt_vol(),
                                     Kernel::exponential(1.5, 1.0), Curve::flat(0.04),
                                     -0.7);
    FullModelPricer pricer(m, grid);
    auto est = pricer.run_path_statistics(
        0.3, mc, 1, [&](const FullModelPricer::PathView& pv, std::span<double> out) {
          out[0] = pv.v[static_cast<size_t>(grid.n_steps)];
        });
    CHECK(std::abs(est[0].mean - 0.04) <= 4.0 * est[0].stderror);
  }
}

TEST_CASE("constant payoff prices to one", "[full_model]") {
  FullModelPricer pricer(bergomi_exp(), PathGrid(1.0, 32));
  const Payoff one = Payoff::smooth([](double) { return 1.0; }, true);
  const auto est = pricer.price(one, 0.3, quick_mc(256, 5));
  CHECK(est.mean == 1.0);
  CHECK(est.stderror == 0.0);
}

TEST_CASE("zero vol-of-vol reproduces the base price", "[full_model]") {
  FullModelPricer pricer(bergomi_exp(), PathGrid(1.0, 128));
  const auto est = pricer.price(Payoff::call(1.0), 0.0, quick_mc(1 << 14, 21));
  const double bs = black_call(0.0, 1.0, 0.04);
  INFO(est.mean << " +- " << est.stderror << " vs " << bs);
  CHECK(std::abs(est.mean - bs) <= 4.0 * est.stderror);
}

TEST_CASE("negative correlation lowers out-of-the-money calls", "[full_model]") {
  FullModelPricer pricer(bergomi_exp(), PathGrid(1.0, 128));
  // same Brownian pool across both eps keeps the difference low-noise
  const std::vector<double> eps = {0.0, 0.3};
  const auto prices = pricer.price_sweep(Payoff::call(1.1), eps, quick_mc(1 << 15, 31));
  // sign check only (skew direction under rho < 0)
  CHECK(prices[1].mean < prices[0].mean);
}

TEST_CASE("Bergomi exponential form agrees with the curve Euler scheme",
          "[full_model]") {
  const double T = 1.0;
  const int N = 512;
  const double eps = 0.3;
  const Kernel g = Kernel::exponential(1.5, 1.0);
  const CurveEulerOracle oracle{T, N, g, 0.04};

  // oracle moments from an independent driver
  const int n_paths = 1 << 13;
  Philox rng(606, 0);
  double sum = 0.0, sumsq = 0.0;
  std::vector<double> dbw(static_cast<size_t>(N));
  const double sdt = std::sqrt(T / N);
  for (int p = 0; p < n_paths; ++p) {
    for (auto& d : dbw) d = eps * sdt * rng.normal();
    const double v = oracle.terminal_spot(dbw);
    sum += v;
    sumsq += v * v;
  }
  const double mean_euler = sum / n_paths;
  const double var_euler = sumsq / n_paths - mean_euler * mean_euler;
  const double se_mean_euler =
      std::sqrt(var_euler / n_paths);

  FullModelPricer pricer(bergomi_exp(), PathGrid(T, N));
  auto est = pricer.run_path_statistics(
      eps, quick_mc(1 << 14, 607), 2,
      [&](const FullModelPricer::PathView& pv, std::span<double> out) {
        const double v = pv.v[static_cast<size_t>(N)];
        out[0] = v;
        out[1] = v * v;
      });
  const double mean_exact = est[0].mean;
  const double var_exact = est[1].mean - mean_exact * mean_exact;

  INFO("mean " << mean_exact << " vs Euler " << mean_euler);
  CHECK(std::abs(mean_exact - mean_euler) <=
        4.0 * std::hypot(est[0].stderror, se_mean_euler));

  // variance of the variance estimator ~ sqrt((m4 - var^2)/n); compare loosely
  const double se_var = var_exact * std::sqrt(2.0 / n_paths) * 3.0;
  INFO("var " << var_exact << " vs Euler " << var_euler);
  CHECK(std::abs(var_exact - var_euler) <= 4.0 * se_var + 4.0 / N * var_exact);
}

TEST_CASE("eps symmetry at zero correlation", "[full_model]") {
  const auto m = ModelSpec::bergomi(Kernel::exponential(1.5, 1.0), Curve::flat(0.04),
                                    0.0);
  FullModelPricer pricer(m, PathGrid(1.0, 128));
  MCRunConfig mc = quick_mc(1 << 14, 41);
  mc.antithetic = false;  // the antithetic pool would make both sides identical
  const auto up = pricer.price(Payoff::call(1.0), 0.25, mc);
  const auto dn = pricer.price(Payoff::call(1.0), -0.25, mc);
  const double combined = std::hypot(up.stderror, dn.stderror);
  CHECK(std::abs(up.mean - dn.mean) <= 2.0 * combined);
}

TEST_CASE("forest term matches the integrated covariance for the affine class",
          "[full_model]") {
  const auto sqrt_model = ModelSpec::affine(SigmaTilde::sqrt_vol(),
                                            Kernel::exponential(1.5, 1.0),
                                            Curve::flat(0.04), -0.7);
  const PathGrid grid(1.0, 512);

  SECTION("deterministic at eps = 0") {
    const auto ft = forest_term_xm(sqrt_model, 0.0, grid, quick_mc(128, 51));
    CHECK(ft.diamond.mean == 0.0);
    CHECK(ft.bracket.stderror <= 1e-8 * std::abs(ft.bracket.mean));
    const double quad = c0_xu(sqrt_model, 1.0) / sqrt_model.rho();
    CHECK(ft.bracket.mean == Catch::Approx(quad).epsilon(1e-5));
  }
  SECTION("affine equality at eps = 0.3") {
    const auto ft = forest_term_xm(sqrt_model, 0.3, grid, quick_mc(1 << 15, 52));
    const double expected = 0.3 * c0_xu(sqrt_model, 1.0);
    INFO(ft.diamond.mean << " +- " << ft.diamond.stderror << " vs " << expected);
    CHECK(std::abs(ft.diamond.mean - expected) <= 3.0 * ft.diamond.stderror);
  }
  SECTION("strict inequality for the linear class") {
    const auto garch = ModelSpec::affine(SigmaTilde::linear(),
                                         Kernel::exponential(1.5, 1.0),
                                         Curve::flat(0.04), -0.7);
    const auto ft = forest_term_xm(garch, 0.5, grid, quick_mc(1 << 15, 53));
    const double bg = 0.5 * c0_xu(garch, 1.0);
    INFO(ft.diamond.mean << " +- " << ft.diamond.stderror << " vs " << bg);
    CHECK(std::abs(ft.diamond.mean - bg) > 5.0 * ft.diamond.stderror);
  }
  SECTION("rejected for the Bergomi class") {
    CHECK_THROWS_AS(forest_term_xm(bergomi_exp(), 0.3, grid, quick_mc(64, 1)),
                    ConfigError);
  }
}

TEST_CASE("kernel family prices under one Brownian pool", "[full_model]") {
  const Kernel power = Kernel::power(1.0, 0.4);
  std::vector<Kernel> kernels = {power, markovian_lift(power, 2, 1.0),
                                 markovian_lift(power, 8, 1.0)};
  const auto res = bergomi_kernel_family_prices(
      Curve::flat(0.04), -0.7, kernels, Payoff::call(1.0), 0.3, PathGrid(1.0, 64),
      quick_mc(1 << 12, 61));
  REQUIRE(res.prices.size() == 3);
  REQUIRE(res.diffs.size() == 2);
  // a richer lift should track the target kernel more closely
  CHECK(std::abs(res.diffs[1].mean) <= std::abs(res.diffs[0].mean));
}

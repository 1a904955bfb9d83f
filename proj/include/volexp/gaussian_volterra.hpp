#pragma once

#include "volexp/errors.hpp"
#include "volexp/grid.hpp"
#include "volexp/kernel.hpp"
#include "volexp/quadrature.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace volexp {

// Exact joint sampler for a Gaussian Volterra process and its driving
// Brownian increments:
//
//   V_{t_i} = ∫_0^{t_i} c(s) g(t_i - s) dW_s  together with  ΔW_0..ΔW_{N-1}.
//
// Exponential / exponential-sum kernels with a constant coefficient use exact
// per-step Ornstein-Uhlenbeck recursions; everything else goes through a
// Cholesky factor of the joint covariance, which sidesteps the slow strong
// convergence of Euler schemes on singular kernels. The map z -> (dW, V) is
// linear, so negating the input normals negates both outputs.
struct VolterraSamplerOptions {
  bool force_cholesky = false;
  int build_ts_points = 40;  // tanh-sinh half-points for covariance cells
  int max_cholesky_steps = 4096;
};

class GaussianVolterraSampler {
 public:
  enum class Mode { ou_recursion, cholesky, euler };
  using Options = VolterraSamplerOptions;

  GaussianVolterraSampler(Kernel g, PathGrid grid,
                          std::function<double(double)> coeff = nullptr,
                          bool coeff_constant = true,
                          VolterraSamplerOptions opt = VolterraSamplerOptions())
      : g_(std::move(g)), grid_(grid), coeff_(std::move(coeff)),
        coeff_constant_(coeff_constant), opt_(opt) {
    const int N = grid_.n_steps;
    const bool ou_capable = (g_.type() == Kernel::Type::exponential ||
                             g_.type() == Kernel::Type::exp_sum) &&
                            coeff_constant_ && !opt_.force_cholesky;
    const int n_terms =
        g_.type() == Kernel::Type::exp_sum ? static_cast<int>(g_.terms().size()) : 1;
    if (ou_capable && n_terms <= kMaxOuTerms) {
      mode_ = Mode::ou_recursion;
      build_ou();
    } else if (N <= opt_.max_cholesky_steps) {
      mode_ = Mode::cholesky;
      build_cholesky();
    } else {
      mode_ = Mode::euler;
      build_euler_tables();
    }
  }

  Mode mode() const noexcept { return mode_; }

  size_t normals_needed() const {
    const size_t N = static_cast<size_t>(grid_.n_steps);
    switch (mode_) {
      case Mode::ou_recursion: return N * (1 + rates_.size());
      case Mode::cholesky: return 2 * N;
      case Mode::euler: return N;
    }
    return 0;
  }

  // dbw: N increments of W; v: N+1 values with v[0] = 0.
  void sample(std::span<const double> z, std::span<double> dbw,
              std::span<double> v) const {
    const size_t N = static_cast<size_t>(grid_.n_steps);
    if (z.size() < normals_needed() || dbw.size() < N || v.size() < N + 1)
      throw std::invalid_argument("GaussianVolterraSampler: buffer too small");
    switch (mode_) {
      case Mode::ou_recursion: sample_ou(z, dbw, v); break;
      case Mode::cholesky: sample_cholesky(z, dbw, v); break;
      case Mode::euler: sample_euler(z, dbw, v); break;
    }
  }

 private:
  double coeff_at(double s) const { return coeff_ ? coeff_(s) : 1.0; }

  // --- OU recursions -------------------------------------------------------
  void build_ou() {
    const double dt = grid_.dt();
    if (g_.type() == Kernel::Type::exponential) {
      rates_ = {g_.b()};
      weights_ = {g_.phi()};
    } else {
      for (const auto& t : g_.terms()) {
        weights_.push_back(t.first);
        rates_.push_back(t.second);
      }
    }
    const int J = static_cast<int>(rates_.size());
    Eigen::MatrixXd M(J + 1, J + 1);
    M(0, 0) = dt;
    for (int j = 0; j < J; ++j) {
      const double rj = rates_[static_cast<size_t>(j)];
      M(0, j + 1) = M(j + 1, 0) = (1.0 - std::exp(-rj * dt)) / rj;
      for (int k = 0; k <= j; ++k) {
        const double rk = rates_[static_cast<size_t>(k)];
        M(j + 1, k + 1) = M(k + 1, j + 1) =
            (1.0 - std::exp(-(rj + rk) * dt)) / (rj + rk);
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() != Eigen::Success) {
      M.diagonal().array() += 1e-14 * M.diagonal().maxCoeff();
      llt.compute(M);
      if (llt.info() != Eigen::Success)
        throw NumericalError("step covariance factorization failed");
    }
    step_chol_ = llt.matrixL();
    decay_.resize(rates_.size());
    for (size_t j = 0; j < rates_.size(); ++j) decay_[j] = std::exp(-rates_[j] * dt);
  }

  static constexpr int kMaxOuTerms = 32;

  void sample_ou(std::span<const double> z, std::span<double> dbw,
                 std::span<double> v) const {
    const int N = grid_.n_steps;
    const int J = static_cast<int>(rates_.size());
    const double c = coeff_at(0.0);
    double state[kMaxOuTerms] = {};
    double y[kMaxOuTerms + 1];
    v[0] = 0.0;
    size_t zi = 0;
    for (int i = 0; i < N; ++i) {
      for (int r = 0; r <= J; ++r) {
        double acc = 0.0;
        for (int q = 0; q <= r; ++q) acc += step_chol_(r, q) * z[zi + static_cast<size_t>(q)];
        y[r] = acc;
      }
      zi += static_cast<size_t>(J + 1);
      dbw[static_cast<size_t>(i)] = y[0];
      double vi = 0.0;
      for (int j = 0; j < J; ++j) {
        state[j] = decay_[static_cast<size_t>(j)] * state[j] + y[j + 1];
        vi += weights_[static_cast<size_t>(j)] * state[j];
      }
      v[static_cast<size_t>(i + 1)] = c * vi;
    }
  }

  // --- Cholesky of the joint covariance ------------------------------------
  // C_vw(i,j) = ∫_{t_j}^{t_{j+1}} c(s) g(t_i - s) ds          (j < i)
  // C_vv(i,j) = ∫_0^{t_j} c(s)^2 g(t_i - s) g(t_j - s) ds     (j <= i)
  void build_cholesky() {
    const int N = grid_.n_steps;
    const double dt = grid_.dt();
    const int m = opt_.build_ts_points;
    Eigen::MatrixXd Cvw = Eigen::MatrixXd::Zero(N, N);
    Eigen::MatrixXd Cvv = Eigen::MatrixXd::Zero(N, N);
    const bool singular = g_.singular_at_zero();

    // exponential-family kernels with constant coefficient integrate in
    // closed form; a fixed quadrature would miss rates far above 1/dt
    const bool exp_family = (g_.type() == Kernel::Type::exponential ||
                             g_.type() == Kernel::Type::exp_sum) &&
                            coeff_constant_;
    std::vector<std::pair<double, double>> terms;
    if (exp_family) {
      if (g_.type() == Kernel::Type::exponential)
        terms = {{g_.phi(), g_.b()}};
      else
        terms = g_.terms();
    }

    for (int i = 1; i <= N; ++i) {
      const double ti = grid_.time(i);
      for (int j = 0; j < i; ++j) {
        const double lo = grid_.time(j);
        double val;
        if (exp_family) {
          const double c = coeff_at(lo);
          const double a = ti - lo - dt;  // >= 0
          val = 0.0;
          for (const auto& [w, r] : terms)
            val += c * w * std::exp(-r * a) * (-std::expm1(-r * dt)) / r;
        } else if (j == i - 1 && singular) {
          val = quad::integrate_ts(
              [&](double x, double) { return coeff_at(ti - x) * g_(x); }, dt, m);
        } else {
          val = quad::integrate(
              [&](double s) { return coeff_at(s) * g_(ti - s); }, lo, lo + dt, 12);
        }
        Cvw(i - 1, j) = val;
      }
      for (int j = 1; j <= i; ++j) {
        const double tj = grid_.time(j);
        const double delta = ti - tj;
        double val;
        if (exp_family) {
          const double c = coeff_at(0.0);
          val = 0.0;
          for (const auto& [wa, ra] : terms)
            for (const auto& [wb, rb] : terms)
              val += c * c * wa * wb * std::exp(-ra * delta) *
                     (-std::expm1(-(ra + rb) * tj)) / (ra + rb);
        } else if (singular) {
          val = quad::integrate_ts(
              [&](double x, double) {
                const double cc = coeff_at(tj - x);
                return cc * cc * g_(delta + x) * g_(x);
              },
              tj, m);
        } else {
          val = quad::integrate(
              [&](double x) {
                const double cc = coeff_at(tj - x);
                return cc * cc * g_(delta + x) * g_(x);
              },
              0.0, tj, 48);
        }
        Cvv(i - 1, j - 1) = val;
        if (j <= i - 1) Cvv(j - 1, i - 1) = val;
      }
    }

    l21_ = Cvw / std::sqrt(dt);
    Eigen::MatrixXd S = Cvv - l21_ * l21_.transpose();
    const double scale = S.diagonal().maxCoeff();
    double jitter = 1e-13 * std::max(scale, 1e-300);
    for (int attempt = 0; attempt < 4; ++attempt) {
      Eigen::MatrixXd Sj = S;
      Sj.diagonal().array() += jitter;
      Eigen::LLT<Eigen::MatrixXd> llt(Sj);
      if (llt.info() == Eigen::Success) {
        l22_ = llt.matrixL();
        return;
      }
      jitter *= 100.0;
    }
    throw NumericalError(
        "Gaussian Volterra covariance factorization failed; increase n_steps "
        "or reduce the kernel roughness");
  }

  void sample_cholesky(std::span<const double> z, std::span<double> dbw,
                       std::span<double> v) const {
    const int N = grid_.n_steps;
    const double sdt = std::sqrt(grid_.dt());
    Eigen::Map<const Eigen::VectorXd> zw(z.data(), N);
    Eigen::Map<const Eigen::VectorXd> zv(z.data() + N, N);
    Eigen::VectorXd vv = l21_.triangularView<Eigen::Lower>() * zw;
    vv.noalias() += l22_.triangularView<Eigen::Lower>() * zv;
    v[0] = 0.0;
    for (int i = 0; i < N; ++i) {
      dbw[static_cast<size_t>(i)] = sdt * zw(i);
      v[static_cast<size_t>(i + 1)] = vv(i);
    }
  }

  // --- Euler fallback for very fine grids ----------------------------------
  void build_euler_tables() {
    const int N = grid_.n_steps;
    const double dt = grid_.dt();
    gk_.resize(static_cast<size_t>(N) + 1, 0.0);
    for (int k = 1; k <= N; ++k) gk_[static_cast<size_t>(k)] = g_(k * dt);
    ck_.resize(static_cast<size_t>(N), 1.0);
    for (int j = 0; j < N; ++j) ck_[static_cast<size_t>(j)] = coeff_at(grid_.time(j));
  }

  void sample_euler(std::span<const double> z, std::span<double> dbw,
                    std::span<double> v) const {
    const int N = grid_.n_steps;
    const double sdt = std::sqrt(grid_.dt());
    for (int i = 0; i < N; ++i) dbw[static_cast<size_t>(i)] = sdt * z[static_cast<size_t>(i)];
    v[0] = 0.0;
    for (int i = 1; i <= N; ++i) {
      double acc = 0.0;
      for (int j = 0; j < i; ++j)
        acc += ck_[static_cast<size_t>(j)] * gk_[static_cast<size_t>(i - j)] *
               dbw[static_cast<size_t>(j)];
      v[static_cast<size_t>(i)] = acc;
    }
  }

  Kernel g_;
  PathGrid grid_;
  std::function<double(double)> coeff_;
  bool coeff_constant_;
  Options opt_;
  Mode mode_ = Mode::cholesky;

  // OU state
  std::vector<double> rates_, weights_, decay_;
  Eigen::MatrixXd step_chol_;

  // Cholesky state
  Eigen::MatrixXd l21_, l22_;

  // Euler tables
  std::vector<double> gk_, ck_;
};

}  // namespace volexp

#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace volexp {

// Generalized Hermite polynomial H_n(x, sigma) with H_0 = 1, H_1 = x and
// H_n = (x H_{n-1} - sigma H_{n-2}) / n. Satisfies d/dx H_n = H_{n-1} and
// E[H_n(Z, s)^2] = s^n / n! for Z ~ N(0, s).
inline double hermite(int n, double x, double sigma) {
  if (n < 0) throw std::domain_error("hermite: n must be >= 0");
  if (!(sigma > 0.0)) throw std::domain_error("hermite: sigma must be > 0");
  if (n == 0) return 1.0;
  double hm2 = 1.0, hm1 = x;
  for (int m = 2; m <= n; ++m) {
    const double h = (x * hm1 - sigma * hm2) / m;
    hm2 = hm1;
    hm1 = h;
  }
  return hm1;
}

// H_0 .. H_n in one sweep.
inline void hermite_all(int n, double x, double sigma, std::span<double> out) {
  if (n < 0) throw std::domain_error("hermite_all: n must be >= 0");
  if (!(sigma > 0.0)) throw std::domain_error("hermite_all: sigma must be > 0");
  if (out.size() < static_cast<size_t>(n + 1))
    throw std::invalid_argument("hermite_all: output span too short");
  out[0] = 1.0;
  if (n >= 1) out[1] = x;
  for (int m = 2; m <= n; ++m)
    out[static_cast<size_t>(m)] =
        (x * out[static_cast<size_t>(m - 1)] - sigma * out[static_cast<size_t>(m - 2)]) / m;
}

// Index set T(n,k): tuples (j_1,...,j_{n-k+1}) of non-negative integers with
// sum j_i = k and sum i*j_i = n, enumerated lexicographically in (j_1, j_2, ...).
struct BellIndexSet {
  int n = 0;
  int k = 0;
  std::vector<std::vector<int>> tuples;
};

inline BellIndexSet enumerate_tnk(int n, int k) {
  if (n < 0 || k < 0) throw std::domain_error("enumerate_tnk: indices must be >= 0");
  if (k > n) throw std::domain_error("enumerate_tnk: k must be <= n");
  BellIndexSet set;
  set.n = n;
  set.k = k;
  if (n == 0) {  // T(0,0) = { () }
    set.tuples.emplace_back();
    return set;
  }
  if (k == 0) return set;  // empty: B_{n,0} = 0 for n >= 1
  const int len = n - k + 1;
  std::vector<int> j(static_cast<size_t>(len), 0);
  // depth-first over positions; remaining budget prunes hard
  auto rec = [&](auto&& self, int pos, int rem_k, int rem_n) -> void {
    if (pos == len) {
      if (rem_k == 0 && rem_n == 0) set.tuples.push_back(j);
      return;
    }
    const int weight = pos + 1;
    const int max_j = std::min(rem_k, rem_n / weight);
    for (int v = 0; v <= max_j; ++v) {
      j[static_cast<size_t>(pos)] = v;
      self(self, pos + 1, rem_k - v, rem_n - weight * v);
    }
    j[static_cast<size_t>(pos)] = 0;
  };
  rec(rec, 0, k, n);
  return set;
}

// Partial Bell polynomial
//   B_{n,k}(x_1,...,x_{n-k+1}) = sum over T(n,k) of n! / prod(j_i!) prod (x_i/i!)^{j_i}.
inline double bell(int n, int k, std::span<const double> xs) {
  if (n < 0 || k < 0) throw std::domain_error("bell: indices must be >= 0");
  if (k > n) throw std::domain_error("bell: k must be <= n");
  if (n == 0) return 1.0;
  if (k == 0) return 0.0;
  if (xs.size() < static_cast<size_t>(n - k + 1))
    throw std::domain_error("bell: xs must have at least n-k+1 entries");

  static constexpr double fact[13] = {1,     1,      2,       6,        24,
                                      120,   720,    5040,    40320,    362880,
                                      3628800, 39916800, 479001600};
  if (n > 12) throw std::domain_error("bell: n > 12 not supported");

  const BellIndexSet set = enumerate_tnk(n, k);
  double total = 0.0;
  for (const auto& j : set.tuples) {
    double term = fact[n];
    for (size_t i = 0; i < j.size(); ++i) {
      const int ji = j[i];
      if (ji == 0) continue;
      term /= fact[ji];
      const double base = xs[i] / fact[i + 1];
      for (int r = 0; r < ji; ++r) term *= base;
    }
    total += term;
  }
  return total;
}

// Precomputed B_{n,k} for repeated evaluation (Monte Carlo hot paths):
// stores one multiplier per tuple so evaluation is a few fused products.
class BellEvaluator {
 public:
  BellEvaluator(int n, int k) : n_(n), k_(k) {
    const BellIndexSet set = enumerate_tnk(n, k);
    static constexpr double fact[13] = {1,       1,        2,        6,     24,
                                        120,     720,      5040,     40320, 362880,
                                        3628800, 39916800, 479001600};
    for (const auto& j : set.tuples) {
      Term t;
      t.coef = (n_ >= 1) ? fact[n_] : 1.0;
      for (size_t i = 0; i < j.size(); ++i) {
        if (j[i] == 0) continue;
        t.coef /= fact[j[i]];
        for (int r = 0; r < j[i]; ++r) t.coef /= fact[i + 1];
        t.powers.emplace_back(static_cast<int>(i), j[i]);
      }
      terms_.push_back(std::move(t));
    }
  }

  double operator()(std::span<const double> xs) const {
    if (n_ == 0) return 1.0;
    if (k_ == 0) return 0.0;
    double total = 0.0;
    for (const auto& t : terms_) {
      double v = t.coef;
      for (const auto& [idx, p] : t.powers)
        for (int r = 0; r < p; ++r) v *= xs[static_cast<size_t>(idx)];
      total += v;
    }
    return total;
  }

 private:
  struct Term {
    double coef = 1.0;
    std::vector<std::pair<int, int>> powers;  // (argument index, exponent)
  };
  int n_, k_;
  std::vector<Term> terms_;
};

// Faa di Bruno: d^m/de^m f(z(e)) at e = 0 from outer derivatives
// f^(1..m)(z(0)) and inner derivatives z^(1..m)(0).
inline double faa_di_bruno(int m, std::span<const double> outer_derivs,
                           std::span<const double> inner_derivs) {
  if (m < 1) throw std::domain_error("faa_di_bruno: m must be >= 1");
  if (outer_derivs.size() < static_cast<size_t>(m) ||
      inner_derivs.size() < static_cast<size_t>(m))
    throw std::invalid_argument("faa_di_bruno: need m outer and inner derivatives");
  double s = 0.0;
  for (int k = 1; k <= m; ++k)
    s += outer_derivs[static_cast<size_t>(k - 1)] *
         bell(m, k, inner_derivs.subspan(0, static_cast<size_t>(m - k + 1)));
  return s;
}

// d^l/dy^l sqrt(y) for l = 1..max_order, y > 0.
inline void sqrt_derivatives(double y, int max_order, std::span<double> out) {
  if (!(y > 0.0)) throw std::domain_error("sqrt_derivatives: y must be > 0");
  if (out.size() < static_cast<size_t>(max_order))
    throw std::invalid_argument("sqrt_derivatives: output span too short");
  double c = 0.5;
  double p = std::pow(y, -0.5);  // y^{1/2 - l} for l = 1
  for (int l = 1; l <= max_order; ++l) {
    out[static_cast<size_t>(l - 1)] = c * p;
    c *= (0.5 - l);
    p /= y;
  }
}

// m-th derivative of sqrt(z(e)) at e = 0 given z(0) = y > 0 and z^(1..m)(0).
inline double sqrt_chain_derivative(int m, double y, std::span<const double> z) {
  double d[4];
  if (m < 1 || m > 4) throw std::domain_error("sqrt_chain_derivative: m in 1..4");
  sqrt_derivatives(y, m, d);
  return faa_di_bruno(m, std::span<const double>(d, static_cast<size_t>(m)), z);
}

}  // namespace volexp

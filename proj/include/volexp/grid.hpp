#pragma once

#include <stdexcept>

namespace volexp {

// Uniform time grid 0 = t_0 < ... < t_N = T.
struct PathGrid {
  double T = 1.0;
  int n_steps = 512;

  PathGrid() = default;
  PathGrid(double T_, int n_steps_) : T(T_), n_steps(n_steps_) {
    if (!(T > 0.0)) throw std::domain_error("PathGrid: T must be > 0");
    if (n_steps < 2) throw std::domain_error("PathGrid: n_steps must be >= 2");
  }

  double dt() const { return T / n_steps; }
  double time(int i) const { return T * i / n_steps; }
};

}  // namespace volexp

#pragma once

#include <span>

#include "stt/vec.hpp"

namespace stt {

enum class Integrator { rk4, euler };

// Scratch buffers reused across steps so the hot loop does not allocate.
struct RkWork {
  Vec k1, k2, k3, k4, tmp;
  void resize(std::size_t n) {
    k1.resize(n);
    k2.resize(n);
    k3.resize(n);
    k4.resize(n);
    tmp.resize(n);
  }
};

// RK4 step with the derivative at (t, x) already evaluated; the caller
// typically computed it once for recording and reuses it as the first stage.
// `rhs(t, x, dx)` must write the derivative of x at time t into dx without
// retaining the spans.
template <class Rhs>
void rk4_step_from(Rhs&& rhs, double t, double dt, std::span<double> x,
                   std::span<const double> k1, RkWork& w) {
  const std::size_t n = x.size();
  w.resize(n);
  const double h2 = 0.5 * dt;
  for (std::size_t i = 0; i < n; ++i) w.tmp[i] = x[i] + h2 * k1[i];
  rhs(t + h2, std::span<const double>(w.tmp), std::span<double>(w.k2));
  for (std::size_t i = 0; i < n; ++i) w.tmp[i] = x[i] + h2 * w.k2[i];
  rhs(t + h2, std::span<const double>(w.tmp), std::span<double>(w.k3));
  for (std::size_t i = 0; i < n; ++i) w.tmp[i] = x[i] + dt * w.k3[i];
  rhs(t + dt, std::span<const double>(w.tmp), std::span<double>(w.k4));
  const double c = dt / 6.0;
  for (std::size_t i = 0; i < n; ++i)
    x[i] += c * (k1[i] + 2.0 * w.k2[i] + 2.0 * w.k3[i] + w.k4[i]);
}

// Classic fixed-step fourth-order Runge-Kutta.
template <class Rhs>
void rk4_step(Rhs&& rhs, double t, double dt, std::span<double> x, RkWork& w) {
  w.resize(x.size());
  rhs(t, std::span<const double>(x), std::span<double>(w.k1));
  rk4_step_from(rhs, t, dt, x, std::span<const double>(w.k1), w);
}

inline void euler_step_from(double dt, std::span<double> x, std::span<const double> k1) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += dt * k1[i];
}

template <class Rhs>
void euler_step(Rhs&& rhs, double t, double dt, std::span<double> x, RkWork& w) {
  w.resize(x.size());
  rhs(t, std::span<const double>(x), std::span<double>(w.k1));
  euler_step_from(dt, x, std::span<const double>(w.k1));
}

}  // namespace stt

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "stt/types.hpp"
#include "stt/vec.hpp"

namespace stt {

// Resolved control law for one agent: cascade depth, per-stage gains, and the
// tracking corridors for stages 2..N.
struct ControllerConfig {
  int n = 0;       // workspace dimension
  int stages = 1;  // N
  Vec kappa;       // length N
  std::vector<StageFunnel> funnels;  // length N - 1, funnels[z - 2] for stage z
};

inline double funnel_bound(const StageFunnel& f, std::size_t i, double t) {
  return (f.p[i] - f.q[i]) * std::exp(-f.mu[i] * t) + f.q[i];
}

// First stage: drive the output into the tube. The normalized radial error
// e1 = |x1 - sigma| / rho lives in [0, 1) while contained; the log barrier
// eps1 blows up at the tube wall, so the virtual command r2 always points
// back toward the center. e1 is clamped just inside 1 to keep the barrier
// finite when a trace starts or strays outside.
struct Stage1Out {
  Vec r2;
  double e1 = 0.0, eps1 = 0.0;
  bool clamped = false;
};

inline Stage1Out stage1(std::span<const double> x1, std::span<const double> sigma, double rho,
                        double kappa1) {
  Stage1Out out;
  out.r2.assign(x1.size(), 0.0);
  out.e1 = dist(x1, sigma) / rho;
  if (out.e1 > 1.0 - k_e_clamp_margin) {
    out.e1 = 1.0 - k_e_clamp_margin;
    out.clamped = true;
  }
  out.eps1 = std::log((1.0 + out.e1) / (1.0 - out.e1));
  const double c = -kappa1 * out.eps1;
  for (std::size_t i = 0; i < x1.size(); ++i) out.r2[i] = c * (x1[i] - sigma[i]);
  return out;
}

// Later stages: track the previous stage's virtual command inside a
// shrinking componentwise corridor gamma(t). Same log barrier per component,
// scaled by the corridor derivative factor.
struct StageZOut {
  Vec next;  // virtual command for the following stage (or the input u)
  Vec e, eps;
  int clamps = 0;
};

inline StageZOut stage_z(std::span<const double> x_z, std::span<const double> r_z,
                         const StageFunnel& funnel, double t, double kappa_z) {
  const std::size_t n = x_z.size();
  StageZOut out;
  out.next.assign(n, 0.0);
  out.e.assign(n, 0.0);
  out.eps.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = funnel_bound(funnel, i, t);
    double e = (x_z[i] - r_z[i]) / g;
    const double lim = 1.0 - k_e_clamp_margin;
    if (e > lim) {
      e = lim;
      ++out.clamps;
    } else if (e < -lim) {
      e = -lim;
      ++out.clamps;
    }
    out.e[i] = e;
    out.eps[i] = std::log((1.0 + e) / (1.0 - e));
    out.next[i] = -kappa_z * 4.0 * out.eps[i] / (g * (1.0 - e * e));
  }
  return out;
}

// One full evaluation of the control cascade at time t.
struct ControlFrame {
  Vec u;
  double e1 = 0.0, eps1 = 0.0;
  std::uint64_t e1_clamps = 0, stage_clamps = 0;
};

inline ControlFrame control_step(const ControllerConfig& cc, std::span<const double> x_stack,
                                 double t, std::span<const double> sigma, double rho) {
  const std::size_t n = static_cast<std::size_t>(cc.n);
  ControlFrame out;

  Stage1Out s1 = stage1(x_stack.subspan(0, n), sigma, rho, cc.kappa[0]);
  out.e1 = s1.e1;
  out.eps1 = s1.eps1;
  if (s1.clamped) ++out.e1_clamps;

  Vec r = std::move(s1.r2);
  for (int z = 2; z <= cc.stages; ++z) {
    const std::size_t off = static_cast<std::size_t>(z - 1) * n;
    StageZOut sz = stage_z(x_stack.subspan(off, n), r,
                           cc.funnels[static_cast<std::size_t>(z - 2)], t,
                           cc.kappa[static_cast<std::size_t>(z - 1)]);
    out.stage_clamps += static_cast<std::uint64_t>(sz.clamps);
    r = std::move(sz.next);
  }
  out.u = std::move(r);
  return out;
}

}  // namespace stt

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

#include "stt/types.hpp"
#include "stt/vec.hpp"

namespace stt {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace detail {

// Lattice sample for the bounded-noise disturbance, uniform in [-bound, bound]
// and fully determined by (seed, stage, component, lattice index).
inline double noise_lattice(std::uint64_t seed, int stage, std::size_t component,
                            std::int64_t k, double bound) {
  std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stage)));
  h = splitmix64(h ^ splitmix64(static_cast<std::uint64_t>(component)));
  h = splitmix64(h ^ splitmix64(static_cast<std::uint64_t>(k)));
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;  // [0, 1)
  return bound * (2.0 * u - 1.0);
}

inline constexpr double k_noise_lattice_dt = 0.2;  // seconds between lattice knots

}  // namespace detail

// Disturbance entering stage `stage` (1-based), component `component`, at time
// t. The bounded-noise kind interpolates hashed lattice samples with a
// smoothstep, so it is C^1, stays within the bound, and replays identically
// for the same seed regardless of integration step size.
inline double disturbance_value(const DisturbanceSpec& d, int stage, std::size_t component,
                                double t) {
  switch (d.kind) {
    case DisturbanceKind::none:
      return 0.0;
    case DisturbanceKind::sinusoid:
      return d.bound * std::sin(2.0 * std::numbers::pi * d.frequency * t + d.phase);
    case DisturbanceKind::clipped_noise: {
      const double s = t / detail::k_noise_lattice_dt;
      const double kf = std::floor(s);
      const auto k = static_cast<std::int64_t>(kf);
      const double f = s - kf;
      const double a = detail::noise_lattice(d.seed, stage, component, k, d.bound);
      const double b = detail::noise_lattice(d.seed, stage, component, k + 1, d.bound);
      const double w = f * f * (3.0 - 2.0 * f);
      return a + w * (b - a);
    }
  }
  return 0.0;
}

// Plant right-hand side in strict-feedback form: stage z feeds stage z + 1,
// the input u enters at the last stage, and the per-stage disturbance is
// additive. x_stack and out are the flat [x_1 | ... | x_N] layout.
inline void plant_rhs(const PlantBinding& pb, std::span<const double> x_stack,
                      std::span<const double> u, double t, std::size_t n,
                      std::span<double> out) {
  const DisturbanceSpec& d = pb.disturbance;
  switch (pb.model) {
    case PlantModel::single_integrator:
      for (std::size_t i = 0; i < n; ++i) out[i] = u[i] + disturbance_value(d, 1, i, t);
      break;
    case PlantModel::double_integrator:
      for (std::size_t i = 0; i < n; ++i) {
        out[i] = x_stack[n + i] + disturbance_value(d, 1, i, t);
        out[n + i] = u[i] + disturbance_value(d, 2, i, t);
      }
      break;
    case PlantModel::nonlinear_test: {
      // Two stages with a sinusoidal drift and a state-dependent input gain
      // bounded in [1, 2], exercising the controller's model independence.
      const double g1 = 1.5 + 0.5 * std::sin(x_stack[0]);
      const double g2 = 1.5 + 0.5 * std::sin(x_stack[n]);
      for (std::size_t i = 0; i < n; ++i) {
        out[i] = 0.2 * std::sin(x_stack[i]) + g1 * x_stack[n + i] + disturbance_value(d, 1, i, t);
        out[n + i] = 0.2 * std::sin(x_stack[n + i]) + g2 * u[i] + disturbance_value(d, 2, i, t);
      }
      break;
    }
  }
}

}  // namespace stt

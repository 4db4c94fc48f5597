#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stt/vec.hpp"

namespace stt {

// Numeric guards shared across modules.
inline constexpr double k_den_floor = 1e-6;        // smallest admitted denominator
inline constexpr double k_time_factor_max = 1e6;   // cap on the goal-term time factor
inline constexpr double k_goal_snap_dist = 1e-4;   // snap-to-target radius at completion
inline constexpr double k_e_clamp_margin = 1e-9;   // normalized errors clamped to 1 - this
inline constexpr double k_default_nu = 10.0;
inline constexpr double k_default_sif_decay = 0.5;
inline constexpr double k_default_dt = 1e-3;
inline constexpr double k_max_dt = 1e-2;

enum class PlantModel { single_integrator, double_integrator, nonlinear_test };

inline int stage_count(PlantModel m) {
  return m == PlantModel::single_integrator ? 1 : 2;
}

enum class DisturbanceKind { none, sinusoid, clipped_noise };

struct DisturbanceSpec {
  DisturbanceKind kind = DisturbanceKind::none;
  double bound = 0.0;      // hard amplitude bound W
  double frequency = 1.0;  // Hz, sinusoid only
  double phase = 0.0;      // rad, sinusoid only
  std::uint64_t seed = 0;  // clipped_noise only
};

struct PlantBinding {
  PlantModel model = PlantModel::single_integrator;
  DisturbanceSpec disturbance;
};

// Per-stage tracking corridor (p - q) e^{-mu t} + q, componentwise.
struct StageFunnel {
  Vec p, q, mu;
};

// Funnels for stages 2..N; stages[z - 2] belongs to stage z. Empty means the
// simulator derives them from the initial tracking errors.
struct FunnelParams {
  std::vector<StageFunnel> stages;
  bool empty() const { return stages.empty(); }
};

struct ObstacleSpec {
  enum class Motion { fixed, linear, circular, waypoints };

  std::string id;
  Motion motion = Motion::fixed;

  Vec center;                 // fixed position, linear start, or circular pivot
  Vec velocity;               // linear
  double orbit_radius = 0.0;  // circular
  double omega = 0.0;         // circular, rad/s
  double phase = 0.0;         // circular, rad
  int plane_i = 0, plane_j = 1;

  std::vector<double> times;  // waypoints, strictly increasing
  std::vector<Vec> points;    // waypoints, one per time

  double radius = 0.0;                      // constant occupancy radius
  std::vector<double> radius_times;         // optional piecewise-linear radius
  std::vector<double> radius_values;

  // All motion laws are closed-form in t, so monitors can query positions at
  // arbitrary instants without interpolation error.
  void center_at(double t, std::span<double> out) const {
    copy_into(center, out);
    switch (motion) {
      case Motion::fixed:
        break;
      case Motion::linear:
        axpy(t, velocity, out);
        break;
      case Motion::circular: {
        const double a = omega * t + phase;
        out[static_cast<std::size_t>(plane_i)] += orbit_radius * std::cos(a);
        out[static_cast<std::size_t>(plane_j)] += orbit_radius * std::sin(a);
        break;
      }
      case Motion::waypoints: {
        if (t <= times.front()) {
          copy_into(points.front(), out);
          break;
        }
        if (t >= times.back()) {
          copy_into(points.back(), out);
          break;
        }
        const auto it = std::upper_bound(times.begin(), times.end(), t);
        const std::size_t hi = static_cast<std::size_t>(it - times.begin());
        const double f = (t - times[hi - 1]) / (times[hi] - times[hi - 1]);
        for (std::size_t i = 0; i < out.size(); ++i)
          out[i] = points[hi - 1][i] + f * (points[hi][i] - points[hi - 1][i]);
        break;
      }
    }
  }

  Vec center_at(double t) const {
    Vec out(motion == Motion::waypoints ? points.front().size() : center.size());
    center_at(t, out);
    return out;
  }

  double radius_at(double t) const {
    if (radius_times.empty()) return radius;
    if (t <= radius_times.front()) return radius_values.front();
    if (t >= radius_times.back()) return radius_values.back();
    const auto it = std::upper_bound(radius_times.begin(), radius_times.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - radius_times.begin());
    const double f = (t - radius_times[hi - 1]) / (radius_times[hi] - radius_times[hi - 1]);
    return radius_values[hi - 1] + f * (radius_values[hi] - radius_values[hi - 1]);
  }
};

struct AgentSpec {
  std::string id;
  double social_index = 0.5;  // in (0, 1); larger yields more

  Vec start_point;
  double start_radius = 0.0;  // start-set radius d_S
  Vec target_point;
  double target_radius = 0.0;  // target-set radius d_T
  double completion_time = 0.0;

  double rho_min = 0.0, rho_max = 0.0;
  double goal_gain = 0.0;  // h1

  Vec h2, h3;  // per-obstacle repulsion/detour gains (broadcast at parse)
  double h2_hat = 0.0, h3_hat = 0.0;  // default inter-agent gains
  std::map<std::string, double> h2_hat_pairs, h3_hat_pairs;  // per-partner override

  double sif_decay = k_default_sif_decay;  // Gaussian tail width b in [0, 1]

  PlantBinding plant;
  Vec kappa;             // controller gains per stage, length N
  FunnelParams funnels;  // optional; empty -> auto-derived

  Vec initial_output;               // optional; empty -> start_point
  std::vector<Vec> initial_stages;  // optional x_z(0) for z >= 2; empty -> zeros

  int stages() const { return stage_count(plant.model); }
};

struct Scenario {
  std::string name;
  int dimension = 0;
  double nu = k_default_nu;
  double horizon = 0.0;
  std::vector<AgentSpec> agents;
  std::vector<ObstacleSpec> obstacles;

  // Pair gain matrices resolved from the per-agent defaults and overrides,
  // row-major [k * n_agents + l].
  std::vector<double> h2_hat_mat, h3_hat_mat;

  double h2_hat(int k, int l) const {
    return h2_hat_mat[static_cast<std::size_t>(k) * agents.size() + static_cast<std::size_t>(l)];
  }
  double h3_hat(int k, int l) const {
    return h3_hat_mat[static_cast<std::size_t>(k) * agents.size() + static_cast<std::size_t>(l)];
  }

  void resolve_pair_gains() {
    const std::size_t n = agents.size();
    h2_hat_mat.assign(n * n, 0.0);
    h3_hat_mat.assign(n * n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t l = 0; l < n; ++l) {
        if (k == l) continue;
        const auto& ak = agents[k];
        const auto it2 = ak.h2_hat_pairs.find(agents[l].id);
        const auto it3 = ak.h3_hat_pairs.find(agents[l].id);
        h2_hat_mat[k * n + l] = it2 != ak.h2_hat_pairs.end() ? it2->second : ak.h2_hat;
        h3_hat_mat[k * n + l] = it3 != ak.h3_hat_pairs.end() ? it3->second : ak.h3_hat;
      }
    }
  }

  double max_completion_time() const {
    double m = 0.0;
    for (const auto& a : agents) m = std::max(m, a.completion_time);
    return m;
  }
};

}  // namespace stt

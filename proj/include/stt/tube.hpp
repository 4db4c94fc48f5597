#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "stt/numerics.hpp"
#include "stt/sif.hpp"
#include "stt/types.hpp"
#include "stt/vec.hpp"

namespace stt {

// Obstacle pose evaluated at a specific time.
struct ObstacleState {
  Vec center;
  double radius = 0.0;
};

// Frozen view of every agent's tube center plus the static per-agent data the
// center field needs about its neighbors. One snapshot is taken per time step
// and shared by all agents, so simultaneous updates see consistent positions.
struct NeighborSnapshot {
  struct Meta {
    double rho_min = 0.0, rho_max = 0.0;
    double s_a = 0.5;        // social index
    double t_c = 0.0;        // completion time
    double sif_decay = 0.0;  // Gaussian tail width b
  };

  int dim = 0;
  std::vector<Meta> meta;
  Vec centers;  // flat, n_agents * dim

  std::size_t size() const { return meta.size(); }

  std::span<const double> center_of(std::size_t i) const {
    return std::span<const double>(centers).subspan(i * static_cast<std::size_t>(dim),
                                                    static_cast<std::size_t>(dim));
  }

  std::span<double> center_slot(std::size_t i) {
    return std::span<double>(centers).subspan(i * static_cast<std::size_t>(dim),
                                              static_cast<std::size_t>(dim));
  }
};

// Vector orthogonal to m with |v| = |m|, oriented to not oppose the goal
// direction. In the plane this is the 90-degree rotation of m; in 3-D we take
// m x goal_dir (falling back to a canonical axis when they are parallel); in
// higher dimensions any unit vector orthogonal to m works, found by projecting
// canonical axes. Returns zero in 1-D where no orthogonal direction exists.
inline Vec orthogonal_detour(std::span<const double> m, std::span<const double> goal_dir) {
  const std::size_t n = m.size();
  Vec v(n, 0.0);
  const double mn = norm(m);
  if (n <= 1 || mn == 0.0) return v;

  if (n == 2) {
    v[0] = -m[1];
    v[1] = m[0];
  } else if (n == 3) {
    // Cross with the goal direction; if parallel, cross with the first
    // canonical axis that is not.
    v[0] = m[1] * goal_dir[2] - m[2] * goal_dir[1];
    v[1] = m[2] * goal_dir[0] - m[0] * goal_dir[2];
    v[2] = m[0] * goal_dir[1] - m[1] * goal_dir[0];
    double vn = norm(v);
    if (vn <= 1e-12 * mn * norm(goal_dir)) {
      for (std::size_t axis = 0; axis < 3 && vn <= 1e-12 * mn; ++axis) {
        Vec e(3, 0.0);
        e[axis] = 1.0;
        v[0] = m[1] * e[2] - m[2] * e[1];
        v[1] = m[2] * e[0] - m[0] * e[2];
        v[2] = m[0] * e[1] - m[1] * e[0];
        vn = norm(v);
      }
    }
    const double s = mn / norm(v);
    scale(s, v);
  } else {
    // Gram-Schmidt a canonical axis against m.
    for (std::size_t axis = 0; axis < n; ++axis) {
      fill(v, 0.0);
      v[axis] = 1.0;
      const double c = dot(v, m) / (mn * mn);
      axpy(-c, m, v);
      const double vn = norm(v);
      if (vn > 1e-6) {
        scale(mn / vn, v);
        break;
      }
    }
  }

  // Flip so the detour has a non-negative component along the goal direction;
  // an exactly perpendicular goal keeps the unflipped orientation.
  if (dot(v, goal_dir) < 0.0) scale(-1.0, v);
  return v;
}

// Distance from the tube center to the inflated obstacle boundary.
inline double d_prime_obstacle(std::span<const double> sigma, std::span<const double> o_center,
                               double o_radius) {
  return dist(sigma, o_center) - o_radius;
}

// Effective distance credited to agent k against agent l: the yielding share
// of the center gap, never below k's own minimum radius.
inline double d_prime_agent(double center_dist, double rho_min_k, double rho_min_l, double phi_kl) {
  return rho_min_k + (center_dist - (rho_min_k + rho_min_l)) * (1.0 - phi_kl);
}

// Attraction toward the target: h1 * (t_c / (t_c - t)) * (eta - sigma), off
// once the completion time is reached. The time factor blows up as t -> t_c,
// so it is capped; the cap only engages within ~t_c/F of completion, by which
// point the center is already pinned to the target.
inline void goal_attraction(double goal_gain, double t_c, double t,
                            std::span<const double> target, std::span<const double> sigma,
                            std::span<double> out) {
  fill(out, 0.0);
  if (t >= t_c) return;
  double factor = t_c / (t_c - t);
  if (factor > k_time_factor_max) factor = k_time_factor_max;
  const double c = goal_gain * factor;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * (target[i] - sigma[i]);
}

// Repulsion + detour pair for one obstacle. alpha is the proximity switch:
// zero until the center comes within rho_max of the inflated boundary, then
// growing without bound as the boundary is approached. m points away from the
// obstacle and stiffens as the clearance margin above rho_min shrinks; v is
// the sideways escape of equal magnitude.
struct ObstacleTerms {
  double alpha = 0.0;
  Vec m, v;
  bool floored = false;  // a denominator hit the safety floor
};

inline ObstacleTerms obstacle_terms(std::span<const double> sigma,
                                    std::span<const double> o_center, double o_radius,
                                    double rho_min, double rho_max,
                                    std::span<const double> goal_dir) {
  const std::size_t n = sigma.size();
  ObstacleTerms out;
  out.m.assign(n, 0.0);
  out.v.assign(n, 0.0);

  const double center_dist = dist(sigma, o_center);
  const double clearance = center_dist - o_radius;
  if (clearance > rho_max) return out;  // switch off, everything zero

  double den_alpha = clearance;
  if (den_alpha < k_den_floor) {
    den_alpha = k_den_floor;
    out.floored = true;
  }
  out.alpha = 1.0 / den_alpha - 1.0 / rho_max;

  double den_m = center_dist - (o_radius + rho_min);
  if (den_m < k_den_floor) {
    den_m = k_den_floor;
    out.floored = true;
  }
  const double c = 1.0 / (den_m * den_m * den_m);
  for (std::size_t i = 0; i < n; ++i) out.m[i] = c * (sigma[i] - o_center[i]);
  out.v = orthogonal_detour(out.m, goal_dir);
  return out;
}

// Same construction between two agents' centers, switched on the sum of
// their maximum radii and stiffened by the margin above the sum of minima.
struct AgentTerms {
  double beta = 0.0;
  Vec m_hat, v_hat;
  bool floored = false;
};

inline AgentTerms agent_terms(std::span<const double> sigma_k, std::span<const double> sigma_l,
                              double rho_min_k, double rho_min_l, double rho_max_k,
                              double rho_max_l, std::span<const double> goal_dir) {
  const std::size_t n = sigma_k.size();
  AgentTerms out;
  out.m_hat.assign(n, 0.0);
  out.v_hat.assign(n, 0.0);

  const double center_dist = dist(sigma_k, sigma_l);
  const double trigger = rho_max_k + rho_max_l;
  if (center_dist > trigger) return out;

  double den_beta = center_dist;
  if (den_beta < k_den_floor) {
    den_beta = k_den_floor;
    out.floored = true;
  }
  out.beta = 1.0 / den_beta - 1.0 / trigger;

  double den_m = center_dist - (rho_min_k + rho_min_l);
  if (den_m < k_den_floor) {
    den_m = k_den_floor;
    out.floored = true;
  }
  const double c = 1.0 / (den_m * den_m * den_m);
  for (std::size_t i = 0; i < n; ++i) out.m_hat[i] = c * (sigma_k[i] - sigma_l[i]);
  out.v_hat = orthogonal_detour(out.m_hat, goal_dir);
  return out;
}

// Optional inspection data from one center-field evaluation.
struct CenterDiag {
  double d1 = k_inf, d2 = k_inf;
  std::vector<double> alpha;  // per obstacle
  std::vector<double> beta;   // per agent, self slot zero
  std::vector<double> phi;    // per agent, self slot zero
};

// Time derivative of agent `self`'s tube center. With goal_only set, the
// avoidance sums are dropped (used to produce the undisturbed reference when
// scoring social deviation). floor_count, when given, accumulates how many
// denominators were floored.
inline void center_rhs(const Scenario& sc, std::size_t self, std::span<const double> sigma,
                       double t, const NeighborSnapshot& snap,
                       std::span<const ObstacleState> obstacles, bool goal_only,
                       std::span<double> out, CenterDiag* diag = nullptr,
                       std::uint64_t* floor_count = nullptr) {
  const AgentSpec& a = sc.agents[self];
  const std::size_t n = out.size();

  Vec goal_dir(n);
  for (std::size_t i = 0; i < n; ++i) goal_dir[i] = a.target_point[i] - sigma[i];

  goal_attraction(a.goal_gain, a.completion_time, t, a.target_point, sigma, out);

  if (diag != nullptr) {
    diag->alpha.assign(obstacles.size(), 0.0);
    diag->beta.assign(snap.size(), 0.0);
    diag->phi.assign(snap.size(), 0.0);
  }
  if (goal_only) return;

  for (std::size_t j = 0; j < obstacles.size(); ++j) {
    const ObstacleTerms ot = obstacle_terms(sigma, obstacles[j].center, obstacles[j].radius,
                                            a.rho_min, a.rho_max, goal_dir);
    if (ot.floored && floor_count != nullptr) ++*floor_count;
    if (diag != nullptr) diag->alpha[j] = ot.alpha;
    if (ot.alpha == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i)
      out[i] += (a.h2[j] * ot.m[i] + a.h3[j] * ot.v[i]) * ot.alpha;
  }

  for (std::size_t l = 0; l < snap.size(); ++l) {
    if (l == self) continue;
    const auto& ml = snap.meta[l];
    const AgentTerms at =
        agent_terms(sigma, snap.center_of(l), a.rho_min, ml.rho_min, a.rho_max, ml.rho_max,
                    goal_dir);
    if (at.floored && floor_count != nullptr) ++*floor_count;
    const double phi = sif(a.social_index, ml.s_a, t, a.completion_time, a.sif_decay);
    if (diag != nullptr) {
      diag->beta[l] = at.beta;
      diag->phi[l] = phi;
    }
    if (at.beta == 0.0) continue;
    const double w = at.beta * phi;
    const double h2 = sc.h2_hat(static_cast<int>(self), static_cast<int>(l));
    const double h3 = sc.h3_hat(static_cast<int>(self), static_cast<int>(l));
    for (std::size_t i = 0; i < n; ++i) out[i] += (h2 * at.m_hat[i] + h3 * at.v_hat[i]) * w;
  }
}

// Tube radius for agent `self` at time t: the smooth minimum of rho_max, the
// aggregated obstacle clearance d1, and the aggregated effective neighbor
// distance d2. Evaluated allocation-free in two passes (max-shift, then sum).
inline double tube_radius(const Scenario& sc, std::size_t self, std::span<const double> sigma,
                          double t, const NeighborSnapshot& snap,
                          std::span<const ObstacleState> obstacles, double* d1_out = nullptr,
                          double* d2_out = nullptr) {
  const AgentSpec& a = sc.agents[self];
  const double nu = sc.nu;

  double d1 = k_inf;
  if (!obstacles.empty()) {
    double best = k_inf;
    for (const auto& ob : obstacles)
      best = std::min(best, d_prime_obstacle(sigma, ob.center, ob.radius));
    double sum = 0.0;
    for (const auto& ob : obstacles)
      sum += std::exp(-nu * (d_prime_obstacle(sigma, ob.center, ob.radius) - best));
    d1 = best - std::log(sum) / nu;
  }

  double d2 = k_inf;
  if (snap.size() > 1) {
    double best = k_inf;
    for (std::size_t l = 0; l < snap.size(); ++l) {
      if (l == self) continue;
      const auto& ml = snap.meta[l];
      const double cd = dist(sigma, snap.center_of(l));
      const double phi = sif(a.social_index, ml.s_a, t, a.completion_time, a.sif_decay);
      best = std::min(best, d_prime_agent(cd, a.rho_min, ml.rho_min, phi));
    }
    double sum = 0.0;
    for (std::size_t l = 0; l < snap.size(); ++l) {
      if (l == self) continue;
      const auto& ml = snap.meta[l];
      const double cd = dist(sigma, snap.center_of(l));
      const double phi = sif(a.social_index, ml.s_a, t, a.completion_time, a.sif_decay);
      sum += std::exp(-nu * (d_prime_agent(cd, a.rho_min, ml.rho_min, phi) - best));
    }
    d2 = best - std::log(sum) / nu;
  }

  if (d1_out != nullptr) *d1_out = d1;
  if (d2_out != nullptr) *d2_out = d2;
  return radius_closed_form(d1, d2, a.rho_max, nu);
}

}  // namespace stt

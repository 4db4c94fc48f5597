#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stt/controller.hpp"
#include "stt/integrate.hpp"
#include "stt/plants.hpp"
#include "stt/tube.hpp"
#include "stt/types.hpp"
#include "stt/vec.hpp"

namespace stt {

// Raised for run settings that are malformed or would silently void the
// containment guarantees (too-coarse step, horizon shorter than a completion
// time). The safety checks can be bypassed with SimConfig::force.
struct SimConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SimConfig {
  double dt = k_default_dt;
  double t_end = -1.0;  // negative -> scenario horizon
  Integrator integrator = Integrator::rk4;
  int record_stride = 1;
  bool goal_only = false;  // drop avoidance terms (reference for deviation scoring)
  bool force = false;      // skip the guard-rail checks on dt / t_end / stride
  std::optional<std::uint64_t> seed;  // overrides every agent's disturbance seed
};

struct SimEvent {
  std::uint64_t step = 0;
  double t = 0.0;
  int agent = -1;
  std::string kind;
  double value = 0.0;
};

// Column-block of one agent's recorded rows.
struct AgentTraceBlock {
  int stages = 1;
  std::vector<double> sigma;          // rows * dim
  std::vector<double> rho;            // rows
  std::vector<double> x;              // rows * stages * dim
  std::vector<double> u;              // rows * dim
  std::vector<double> e1;             // rows
  std::vector<double> alpha;          // rows * n_obstacles
  std::vector<std::uint64_t> clamps;  // rows; barrier clamps during the step this row opens
};

struct SimTrace {
  int dim = 0;
  double dt = 0.0;
  int record_stride = 1;
  std::vector<double> t;
  std::vector<std::string> agent_ids;
  std::vector<int> agent_stages;
  std::vector<std::string> obstacle_ids;
  std::vector<AgentTraceBlock> agents;
  std::vector<double> phi;         // rows * n_a * n_a, entry (k, l), self slot zero
  std::vector<double> beta;        // rows * n_a * n_a
  std::vector<double> obs_center;  // rows * n_o * dim
  std::vector<double> obs_radius;  // rows * n_o
  std::vector<SimEvent> events;
  bool complete = true;
  std::uint64_t abort_step = 0;
  int abort_agent = -1;
  std::string abort_reason;

  std::size_t rows() const { return t.size(); }
};

namespace detail {

// Snapshot of one agent's full evaluation at a grid time: the combined
// derivative (reused as the first integrator stage) plus everything the trace
// records.
struct GridFrame {
  Vec k1;  // d/dt of [sigma | x]
  double rho = 0.0;
  ControlFrame cf;
  CenterDiag diag;
  std::uint64_t floors = 0;
};

}  // namespace detail

// Integrates every agent's tube center and plant over the horizon. Within a
// step all agents see the same frozen snapshot of neighbor centers, so the
// update order cannot break symmetry; the combined [sigma | x] state is
// stepped jointly so the controller feedback stays continuous through the
// integrator substages. A non-finite state aborts the run and returns the
// partial trace with `complete` cleared rather than throwing.
inline SimTrace run_simulation(const Scenario& sc, const SimConfig& cfg) {
  const std::size_t n = static_cast<std::size_t>(sc.dimension);
  const std::size_t n_a = sc.agents.size();
  const std::size_t n_o = sc.obstacles.size();

  const double dt = cfg.dt;
  const double t_end = cfg.t_end < 0.0 ? sc.horizon : cfg.t_end;
  if (!(dt > 0.0) || !std::isfinite(dt)) throw SimConfigError("dt must be positive");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw SimConfigError("t_end must be positive");
  if (cfg.record_stride < 1) throw SimConfigError("record_stride must be at least 1");

  const auto steps = static_cast<std::uint64_t>(std::llround(t_end / dt));
  if (steps == 0 || std::abs(static_cast<double>(steps) * dt - t_end) >
                        1e-9 * std::max(1.0, std::abs(t_end)))
    throw SimConfigError("t_end must be an integer multiple of dt");

  if (!cfg.force) {
    if (dt > k_max_dt * (1.0 + 1e-12))
      throw SimConfigError("dt above 0.01 degrades the tracking bounds (use force to override)");
    if (t_end < sc.max_completion_time() - 1e-9)
      throw SimConfigError(
          "t_end ends before the last completion time (use force to override)");
    if (steps % static_cast<std::uint64_t>(cfg.record_stride) != 0)
      throw SimConfigError(
          "record_stride must divide the step count (use force to override)");
  }

  // Working state: combined [sigma | x_1 .. x_N] per agent.
  std::vector<Vec> state(n_a);
  std::vector<PlantBinding> plant(n_a);
  for (std::size_t a = 0; a < n_a; ++a) {
    const AgentSpec& as = sc.agents[a];
    const auto stages = static_cast<std::size_t>(as.stages());
    state[a].assign(n + stages * n, 0.0);
    copy_into(as.start_point, std::span<double>(state[a]).subspan(0, n));
    copy_into(as.initial_output.empty() ? as.start_point : as.initial_output,
              std::span<double>(state[a]).subspan(n, n));
    for (std::size_t z = 2; z <= stages; ++z) {
      if (as.initial_stages.size() >= z - 1)
        copy_into(as.initial_stages[z - 2], std::span<double>(state[a]).subspan(z * n, n));
    }
    plant[a] = as.plant;
    if (cfg.seed.has_value())
      plant[a].disturbance.seed = splitmix64(*cfg.seed ^ splitmix64(a));
  }

  NeighborSnapshot snap;
  snap.dim = sc.dimension;
  snap.meta.resize(n_a);
  snap.centers.assign(n_a * n, 0.0);
  for (std::size_t a = 0; a < n_a; ++a) {
    const AgentSpec& as = sc.agents[a];
    snap.meta[a] = {as.rho_min, as.rho_max, as.social_index, as.completion_time, as.sif_decay};
  }
  const auto take_snapshot = [&] {
    for (std::size_t a = 0; a < n_a; ++a)
      copy_into(std::span<const double>(state[a]).subspan(0, n), snap.center_slot(a));
  };

  std::vector<ObstacleState> obs(n_o);
  for (auto& ob : obs) ob.center.assign(n, 0.0);
  const auto refresh_obstacles = [&](double t) {
    for (std::size_t j = 0; j < n_o; ++j) {
      sc.obstacles[j].center_at(t, obs[j].center);
      obs[j].radius = sc.obstacles[j].radius_at(t);
    }
  };

  // Resolve the controller for each agent. Missing funnels are derived from
  // the initial stage errors, stage by stage since stage z's reference
  // depends on the funnels below it.
  take_snapshot();
  refresh_obstacles(0.0);
  std::vector<ControllerConfig> ctrl(n_a);
  for (std::size_t a = 0; a < n_a; ++a) {
    const AgentSpec& as = sc.agents[a];
    ControllerConfig cc;
    cc.n = sc.dimension;
    cc.stages = as.stages();
    cc.kappa = as.kappa;
    const auto sigma0 = std::span<const double>(state[a]).subspan(0, n);
    const double rho0 = tube_radius(sc, a, sigma0, 0.0, snap, obs);
    Stage1Out s1 = stage1(std::span<const double>(state[a]).subspan(n, n), sigma0, rho0,
                          cc.kappa[0]);
    Vec r = std::move(s1.r2);
    for (int z = 2; z <= cc.stages; ++z) {
      const auto xz = std::span<const double>(state[a]).subspan(static_cast<std::size_t>(z) * n, n);
      StageFunnel f;
      if (!as.funnels.empty()) {
        f = as.funnels.stages[static_cast<std::size_t>(z - 2)];
      } else {
        f.p.resize(n);
        f.q.resize(n);
        f.mu.assign(n, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
          f.p[i] = 1.2 * std::abs(xz[i] - r[i]) + 0.1;
          f.q[i] = 0.1 * f.p[i];
        }
      }
      cc.funnels.push_back(f);
      if (z < cc.stages) {
        StageZOut sz = stage_z(xz, r, cc.funnels.back(), 0.0,
                               cc.kappa[static_cast<std::size_t>(z - 1)]);
        r = std::move(sz.next);
      }
    }
    ctrl[a] = std::move(cc);
  }

  SimTrace tr;
  tr.dim = sc.dimension;
  tr.dt = dt;
  tr.record_stride = cfg.record_stride;
  for (const auto& as : sc.agents) {
    tr.agent_ids.push_back(as.id);
    tr.agent_stages.push_back(as.stages());
  }
  for (const auto& ob : sc.obstacles) tr.obstacle_ids.push_back(ob.id);
  tr.agents.resize(n_a);
  const std::size_t rows_hint = static_cast<std::size_t>(
      steps / static_cast<std::uint64_t>(cfg.record_stride) + 2);
  for (std::size_t a = 0; a < n_a; ++a) {
    auto& blk = tr.agents[a];
    blk.stages = sc.agents[a].stages();
    blk.sigma.reserve(rows_hint * n);
    blk.rho.reserve(rows_hint);
    blk.x.reserve(rows_hint * static_cast<std::size_t>(blk.stages) * n);
    blk.u.reserve(rows_hint * n);
    blk.e1.reserve(rows_hint);
    blk.alpha.reserve(rows_hint * n_o);
    blk.clamps.reserve(rows_hint);
  }
  tr.t.reserve(rows_hint);

  std::vector<detail::GridFrame> frames(n_a);
  std::vector<bool> snap_tried(n_a, false);
  RkWork work;

  const auto eval_frame = [&](std::size_t a, double t, detail::GridFrame& fr) {
    const std::size_t total = state[a].size();
    fr.k1.assign(total, 0.0);
    fr.floors = 0;
    const auto sigma = std::span<const double>(state[a]).subspan(0, n);
    const auto x = std::span<const double>(state[a]).subspan(n);
    center_rhs(sc, a, sigma, t, snap, obs, cfg.goal_only, std::span<double>(fr.k1).subspan(0, n),
               &fr.diag, &fr.floors);
    fr.rho = tube_radius(sc, a, sigma, t, snap, obs);
    fr.cf = control_step(ctrl[a], x, t, sigma, fr.rho);
    plant_rhs(plant[a], x, fr.cf.u, t, n, std::span<double>(fr.k1).subspan(n));
  };

  for (std::uint64_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    take_snapshot();
    refresh_obstacles(t);
    for (std::size_t a = 0; a < n_a; ++a) eval_frame(a, t, frames[a]);

    const bool record =
        (k % static_cast<std::uint64_t>(cfg.record_stride) == 0) || k == steps;
    if (record) {
      tr.t.push_back(t);
      for (std::size_t a = 0; a < n_a; ++a) {
        auto& blk = tr.agents[a];
        const auto& fr = frames[a];
        const auto& st = state[a];
        blk.sigma.insert(blk.sigma.end(), st.begin(), st.begin() + static_cast<std::ptrdiff_t>(n));
        blk.rho.push_back(fr.rho);
        blk.x.insert(blk.x.end(), st.begin() + static_cast<std::ptrdiff_t>(n), st.end());
        blk.u.insert(blk.u.end(), fr.cf.u.begin(), fr.cf.u.end());
        blk.e1.push_back(fr.cf.e1);
        blk.alpha.insert(blk.alpha.end(), fr.diag.alpha.begin(), fr.diag.alpha.end());
        blk.clamps.push_back(fr.cf.e1_clamps + fr.cf.stage_clamps);  // refined post-step
      }
      for (std::size_t a = 0; a < n_a; ++a) {
        tr.phi.insert(tr.phi.end(), frames[a].diag.phi.begin(), frames[a].diag.phi.end());
        tr.beta.insert(tr.beta.end(), frames[a].diag.beta.begin(), frames[a].diag.beta.end());
      }
      for (std::size_t j = 0; j < n_o; ++j) {
        tr.obs_center.insert(tr.obs_center.end(), obs[j].center.begin(), obs[j].center.end());
        tr.obs_radius.push_back(obs[j].radius);
      }
    }
    if (k == steps) {
      for (std::size_t a = 0; a < n_a; ++a) {
        const auto& fr = frames[a];
        if (fr.cf.e1_clamps > 0)
          tr.events.push_back({k, t, static_cast<int>(a), "e1_clamp",
                               static_cast<double>(fr.cf.e1_clamps)});
        if (fr.cf.stage_clamps > 0)
          tr.events.push_back({k, t, static_cast<int>(a), "stage_clamp",
                               static_cast<double>(fr.cf.stage_clamps)});
        if (fr.floors > 0)
          tr.events.push_back(
              {k, t, static_cast<int>(a), "den_floor", static_cast<double>(fr.floors)});
      }
      break;
    }

    bool aborted = false;
    for (std::size_t a = 0; a < n_a; ++a) {
      std::uint64_t e1c = frames[a].cf.e1_clamps;
      std::uint64_t stc = frames[a].cf.stage_clamps;
      std::uint64_t flc = frames[a].floors;
      const auto rhs = [&](double tau, std::span<const double> y, std::span<double> dy) {
        const auto sigma = y.subspan(0, n);
        const auto x = y.subspan(n);
        refresh_obstacles(tau);
        center_rhs(sc, a, sigma, tau, snap, obs, cfg.goal_only, dy.subspan(0, n), nullptr, &flc);
        const double rho = tube_radius(sc, a, sigma, tau, snap, obs);
        ControlFrame cf = control_step(ctrl[a], x, tau, sigma, rho);
        e1c += cf.e1_clamps;
        stc += cf.stage_clamps;
        plant_rhs(plant[a], x, cf.u, tau, n, dy.subspan(n));
      };
      if (cfg.integrator == Integrator::rk4)
        rk4_step_from(rhs, t, dt, state[a], frames[a].k1, work);
      else
        euler_step_from(dt, state[a], frames[a].k1);

      const double t_next = static_cast<double>(k + 1) * dt;
      const AgentSpec& as = sc.agents[a];
      if (!snap_tried[a] && t_next >= as.completion_time - 1e-9) {
        snap_tried[a] = true;
        const auto sigma = std::span<double>(state[a]).subspan(0, n);
        const double gap = dist(sigma, as.target_point);
        if (gap < k_goal_snap_dist) {
          copy_into(as.target_point, sigma);
          tr.events.push_back({k, t, static_cast<int>(a), "goal_snap", gap});
        }
      }

      if (record) tr.agents[a].clamps.back() = e1c + stc;
      if (e1c > 0)
        tr.events.push_back({k, t, static_cast<int>(a), "e1_clamp", static_cast<double>(e1c)});
      if (stc > 0)
        tr.events.push_back({k, t, static_cast<int>(a), "stage_clamp", static_cast<double>(stc)});
      if (flc > 0)
        tr.events.push_back({k, t, static_cast<int>(a), "den_floor", static_cast<double>(flc)});

      if (!all_finite(state[a])) {
        tr.complete = false;
        tr.abort_step = k;
        tr.abort_agent = static_cast<int>(a);
        tr.abort_reason = "non-finite state after step";
        aborted = true;
        break;
      }
    }
    if (aborted) break;
  }
  return tr;
}

}  // namespace stt

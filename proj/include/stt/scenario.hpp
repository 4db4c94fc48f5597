#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "stt/tube.hpp"
#include "stt/types.hpp"
#include "stt/vec.hpp"

namespace stt {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

using nlohmann::json;

[[noreturn]] inline void fail(const std::string& ctx, const std::string& msg) {
  throw ParseError(ctx + ": " + msg);
}

// Unknown keys are rejected so typos surface as errors instead of silently
// falling back to defaults.
inline void check_keys(const json& j, const std::string& ctx,
                       std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) fail(ctx, "expected an object");
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
      fail(ctx, "unknown key \"" + item.key() + "\"");
  }
}

inline const json& need(const json& j, const std::string& ctx, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) fail(ctx, std::string("missing required key \"") + key + "\"");
  return *it;
}

inline double need_num(const json& j, const std::string& ctx, const char* key) {
  const json& v = need(j, ctx, key);
  if (!v.is_number()) fail(ctx, std::string("\"") + key + "\" must be a number");
  return v.get<double>();
}

inline double need_pos(const json& j, const std::string& ctx, const char* key) {
  const double v = need_num(j, ctx, key);
  if (!(v > 0.0) || !std::isfinite(v))
    fail(ctx, std::string("\"") + key + "\" must be positive and finite");
  return v;
}

inline double opt_num(const json& j, const std::string& ctx, const char* key, double dflt) {
  const auto it = j.find(key);
  if (it == j.end()) return dflt;
  if (!it->is_number()) fail(ctx, std::string("\"") + key + "\" must be a number");
  return it->get<double>();
}

inline std::string need_str(const json& j, const std::string& ctx, const char* key) {
  const json& v = need(j, ctx, key);
  if (!v.is_string() || v.get<std::string>().empty())
    fail(ctx, std::string("\"") + key + "\" must be a non-empty string");
  return v.get<std::string>();
}

inline Vec need_point(const json& j, const std::string& ctx, const char* key, std::size_t dim) {
  const json& v = need(j, ctx, key);
  if (!v.is_array() || v.size() != dim)
    fail(ctx, std::string("\"") + key + "\" must be an array of length " + std::to_string(dim));
  Vec out(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    if (!v[i].is_number()) fail(ctx, std::string("\"") + key + "\" entries must be numbers");
    out[i] = v[i].get<double>();
    if (!std::isfinite(out[i])) fail(ctx, std::string("\"") + key + "\" entries must be finite");
  }
  return out;
}

// Scalar broadcast: a lone number becomes a constant vector of length n.
inline Vec need_broadcast(const json& v, const std::string& ctx, const char* key, std::size_t n) {
  if (v.is_number()) return Vec(n, v.get<double>());
  if (!v.is_array() || v.size() != n)
    fail(ctx, std::string("\"") + key + "\" must be a number or an array of length " +
                  std::to_string(n));
  Vec out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!v[i].is_number()) fail(ctx, std::string("\"") + key + "\" entries must be numbers");
    out[i] = v[i].get<double>();
  }
  return out;
}

inline DisturbanceSpec parse_disturbance(const json& j, const std::string& ctx) {
  DisturbanceSpec d;
  const std::string kind = need_str(j, ctx, "kind");
  if (kind == "none") {
    check_keys(j, ctx, {"kind"});
    d.kind = DisturbanceKind::none;
  } else if (kind == "sinusoid") {
    check_keys(j, ctx, {"kind", "bound", "frequency", "phase"});
    d.kind = DisturbanceKind::sinusoid;
    d.bound = need_num(j, ctx, "bound");
    d.frequency = need_pos(j, ctx, "frequency");
    d.phase = opt_num(j, ctx, "phase", 0.0);
  } else if (kind == "clipped_noise") {
    check_keys(j, ctx, {"kind", "bound", "seed"});
    d.kind = DisturbanceKind::clipped_noise;
    d.bound = need_num(j, ctx, "bound");
    const json& s = need(j, ctx, "seed");
    if (!s.is_number_unsigned()) fail(ctx, "\"seed\" must be an unsigned integer");
    d.seed = s.get<std::uint64_t>();
  } else {
    fail(ctx, "unknown disturbance kind \"" + kind + "\"");
  }
  if (d.kind != DisturbanceKind::none && (d.bound < 0.0 || !std::isfinite(d.bound)))
    fail(ctx, "\"bound\" must be non-negative and finite");
  return d;
}

inline ObstacleSpec parse_obstacle(const json& j, std::size_t index, std::size_t dim) {
  ObstacleSpec ob;
  const std::string base = "obstacles[" + std::to_string(index) + "]";
  ob.id = j.contains("id") ? need_str(j, base, "id") : "obstacle_" + std::to_string(index);
  const std::string ctx = base + " (" + ob.id + ")";

  const std::string motion =
      j.contains("motion") ? need_str(j, ctx, "motion") : std::string("fixed");

  if (j.contains("radius") == j.contains("radius_profile"))
    fail(ctx, "exactly one of \"radius\" and \"radius_profile\" is required");
  if (j.contains("radius")) {
    ob.radius = need_num(j, ctx, "radius");
    if (ob.radius < 0.0 || !std::isfinite(ob.radius))
      fail(ctx, "\"radius\" must be non-negative and finite");
  } else {
    const json& rp = need(j, ctx, "radius_profile");
    check_keys(rp, ctx + ".radius_profile", {"times", "values"});
    const json& ts = need(rp, ctx + ".radius_profile", "times");
    const json& vs = need(rp, ctx + ".radius_profile", "values");
    if (!ts.is_array() || !vs.is_array() || ts.size() != vs.size() || ts.size() < 2)
      fail(ctx, "\"radius_profile\" needs matching times/values arrays of length >= 2");
    for (std::size_t i = 0; i < ts.size(); ++i) {
      ob.radius_times.push_back(ts[i].get<double>());
      ob.radius_values.push_back(vs[i].get<double>());
      if (ob.radius_values.back() < 0.0) fail(ctx, "\"radius_profile\" values must be >= 0");
      if (i > 0 && !(ob.radius_times[i] > ob.radius_times[i - 1]))
        fail(ctx, "\"radius_profile\" times must be strictly increasing");
    }
    ob.radius = ob.radius_values.front();
  }

  if (motion == "fixed") {
    check_keys(j, ctx, {"id", "motion", "center", "radius", "radius_profile"});
    ob.motion = ObstacleSpec::Motion::fixed;
    ob.center = need_point(j, ctx, "center", dim);
  } else if (motion == "linear") {
    check_keys(j, ctx, {"id", "motion", "center", "velocity", "radius", "radius_profile"});
    ob.motion = ObstacleSpec::Motion::linear;
    ob.center = need_point(j, ctx, "center", dim);
    ob.velocity = need_point(j, ctx, "velocity", dim);
  } else if (motion == "circular") {
    check_keys(j, ctx, {"id", "motion", "center", "orbit_radius", "omega", "phase", "plane",
                        "radius", "radius_profile"});
    ob.motion = ObstacleSpec::Motion::circular;
    ob.center = need_point(j, ctx, "center", dim);
    ob.orbit_radius = need_num(j, ctx, "orbit_radius");
    ob.omega = need_num(j, ctx, "omega");
    ob.phase = opt_num(j, ctx, "phase", 0.0);
    if (j.contains("plane")) {
      const json& p = j["plane"];
      if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() ||
          !p[1].is_number_integer())
        fail(ctx, "\"plane\" must be two axis indices");
      ob.plane_i = p[0].get<int>();
      ob.plane_j = p[1].get<int>();
      if (ob.plane_i < 0 || ob.plane_j < 0 || ob.plane_i >= static_cast<int>(dim) ||
          ob.plane_j >= static_cast<int>(dim) || ob.plane_i == ob.plane_j)
        fail(ctx, "\"plane\" axes must be distinct and inside the dimension");
    } else if (dim < 2) {
      fail(ctx, "circular motion needs dimension >= 2");
    }
  } else if (motion == "waypoints") {
    check_keys(j, ctx, {"id", "motion", "times", "points", "radius", "radius_profile"});
    ob.motion = ObstacleSpec::Motion::waypoints;
    const json& ts = need(j, ctx, "times");
    const json& ps = need(j, ctx, "points");
    if (!ts.is_array() || !ps.is_array() || ts.size() != ps.size() || ts.size() < 2)
      fail(ctx, "waypoints need matching times/points arrays of length >= 2");
    for (std::size_t i = 0; i < ts.size(); ++i) {
      if (!ts[i].is_number()) fail(ctx, "\"times\" entries must be numbers");
      ob.times.push_back(ts[i].get<double>());
      if (i > 0 && !(ob.times[i] > ob.times[i - 1]))
        fail(ctx, "\"times\" must be strictly increasing");
      if (!ps[i].is_array() || ps[i].size() != dim)
        fail(ctx, "\"points\" entries must be arrays of length " + std::to_string(dim));
      Vec p(dim);
      for (std::size_t c = 0; c < dim; ++c) p[c] = ps[i][c].get<double>();
      ob.points.push_back(std::move(p));
    }
    ob.center = ob.points.front();
  } else {
    fail(ctx, "unknown motion \"" + motion + "\"");
  }
  return ob;
}

inline AgentSpec parse_agent(const json& j, std::size_t index, std::size_t dim,
                             std::size_t n_obstacles, std::size_t n_agents) {
  const std::string base = "agents[" + std::to_string(index) + "]";
  AgentSpec a;
  a.id = need_str(j, base, "id");
  const std::string ctx = base + " (" + a.id + ")";
  check_keys(j, ctx,
             {"id", "social_index", "start", "target", "completion_time", "rho_min", "rho_max",
              "goal_gain", "obstacle_gains", "agent_gains", "sif_decay", "plant", "kappa",
              "funnels", "initial_output", "initial_stages"});

  a.social_index = need_num(j, ctx, "social_index");

  const json& start = need(j, ctx, "start");
  check_keys(start, ctx + ".start", {"point", "radius"});
  a.start_point = need_point(start, ctx + ".start", "point", dim);
  a.start_radius = need_pos(start, ctx + ".start", "radius");

  const json& target = need(j, ctx, "target");
  check_keys(target, ctx + ".target", {"point", "radius"});
  a.target_point = need_point(target, ctx + ".target", "point", dim);
  a.target_radius = need_pos(target, ctx + ".target", "radius");

  a.completion_time = need_pos(j, ctx, "completion_time");
  a.rho_min = need_pos(j, ctx, "rho_min");
  a.rho_max = need_pos(j, ctx, "rho_max");
  a.goal_gain = need_pos(j, ctx, "goal_gain");

  if (n_obstacles > 0) {
    const json& og = need(j, ctx, "obstacle_gains");
    check_keys(og, ctx + ".obstacle_gains", {"repulsion", "detour"});
    a.h2 = need_broadcast(need(og, ctx + ".obstacle_gains", "repulsion"),
                          ctx + ".obstacle_gains", "repulsion", n_obstacles);
    a.h3 = need_broadcast(need(og, ctx + ".obstacle_gains", "detour"),
                          ctx + ".obstacle_gains", "detour", n_obstacles);
  } else if (j.contains("obstacle_gains")) {
    const json& og = j["obstacle_gains"];
    check_keys(og, ctx + ".obstacle_gains", {"repulsion", "detour"});
  }

  if (n_agents > 1) {
    const json& ag = need(j, ctx, "agent_gains");
    check_keys(ag, ctx + ".agent_gains", {"repulsion", "detour", "pairs"});
    a.h2_hat = need_num(ag, ctx + ".agent_gains", "repulsion");
    a.h3_hat = need_num(ag, ctx + ".agent_gains", "detour");
    if (ag.contains("pairs")) {
      const json& pairs = ag["pairs"];
      if (!pairs.is_object()) fail(ctx, "\"agent_gains.pairs\" must be an object");
      for (const auto& item : pairs.items()) {
        const std::string pctx = ctx + ".agent_gains.pairs." + item.key();
        check_keys(item.value(), pctx, {"repulsion", "detour"});
        if (item.value().contains("repulsion"))
          a.h2_hat_pairs[item.key()] = need_num(item.value(), pctx, "repulsion");
        if (item.value().contains("detour"))
          a.h3_hat_pairs[item.key()] = need_num(item.value(), pctx, "detour");
      }
    }
  }

  a.sif_decay = opt_num(j, ctx, "sif_decay", k_default_sif_decay);
  if (a.sif_decay < 0.0 || a.sif_decay > 1.0)
    fail(ctx, "\"sif_decay\" must lie in [0, 1]");

  const json& plant = need(j, ctx, "plant");
  check_keys(plant, ctx + ".plant", {"model", "disturbance"});
  const std::string model = need_str(plant, ctx + ".plant", "model");
  if (model == "single_integrator")
    a.plant.model = PlantModel::single_integrator;
  else if (model == "double_integrator")
    a.plant.model = PlantModel::double_integrator;
  else if (model == "nonlinear_test")
    a.plant.model = PlantModel::nonlinear_test;
  else
    fail(ctx, "unknown plant model \"" + model + "\"");
  if (plant.contains("disturbance"))
    a.plant.disturbance = parse_disturbance(plant["disturbance"], ctx + ".plant.disturbance");

  const std::size_t stages = static_cast<std::size_t>(a.stages());
  a.kappa = need_broadcast(need(j, ctx, "kappa"), ctx, "kappa", stages);
  for (const double k : a.kappa)
    if (!(k > 0.0)) fail(ctx, "\"kappa\" entries must be positive");

  if (j.contains("funnels")) {
    const json& fs = j["funnels"];
    if (!fs.is_array()) fail(ctx, "\"funnels\" must be an array");
    if (!fs.empty() && fs.size() != stages - 1)
      fail(ctx, "\"funnels\" must have one entry per stage beyond the first (" +
                    std::to_string(stages - 1) + ")");
    for (std::size_t z = 0; z < fs.size(); ++z) {
      const std::string fctx = ctx + ".funnels[" + std::to_string(z) + "]";
      check_keys(fs[z], fctx, {"p", "q", "mu"});
      StageFunnel f;
      f.p = need_broadcast(need(fs[z], fctx, "p"), fctx, "p", dim);
      f.q = need_broadcast(need(fs[z], fctx, "q"), fctx, "q", dim);
      f.mu = need_broadcast(need(fs[z], fctx, "mu"), fctx, "mu", dim);
      for (std::size_t i = 0; i < dim; ++i) {
        if (!(f.q[i] > 0.0) || !(f.p[i] > f.q[i]))
          fail(fctx, "requires p > q > 0 componentwise");
        if (f.mu[i] < 0.0) fail(fctx, "requires mu >= 0");
      }
      a.funnels.stages.push_back(std::move(f));
    }
  }

  if (j.contains("initial_output"))
    a.initial_output = need_point(j, ctx, "initial_output", dim);
  if (j.contains("initial_stages")) {
    const json& is = j["initial_stages"];
    if (!is.is_array() || is.size() > stages - 1)
      fail(ctx, "\"initial_stages\" must be an array with at most " +
                    std::to_string(stages - 1) + " entries");
    for (std::size_t z = 0; z < is.size(); ++z) {
      if (!is[z].is_array() || is[z].size() != dim)
        fail(ctx, "\"initial_stages\" entries must be arrays of length " + std::to_string(dim));
      Vec v(dim);
      for (std::size_t c = 0; c < dim; ++c) v[c] = is[z][c].get<double>();
      a.initial_stages.push_back(std::move(v));
    }
  }
  return a;
}

}  // namespace detail

inline Scenario parse_scenario(const nlohmann::json& j) {
  using detail::fail;
  const std::string ctx = "scenario";
  detail::check_keys(j, ctx, {"name", "dimension", "nu", "horizon", "agents", "obstacles"});

  Scenario sc;
  if (j.contains("name")) sc.name = detail::need_str(j, ctx, "name");

  const nlohmann::json& dim = detail::need(j, ctx, "dimension");
  if (!dim.is_number_integer() || dim.get<int>() < 1)
    fail(ctx, "\"dimension\" must be a positive integer");
  sc.dimension = dim.get<int>();
  const auto d = static_cast<std::size_t>(sc.dimension);

  sc.nu = detail::opt_num(j, ctx, "nu", k_default_nu);
  if (!(sc.nu > 0.0)) fail(ctx, "\"nu\" must be positive");
  sc.horizon = detail::need_pos(j, ctx, "horizon");

  const nlohmann::json& obstacles =
      j.contains("obstacles") ? j["obstacles"] : nlohmann::json::array();
  if (!obstacles.is_array()) fail(ctx, "\"obstacles\" must be an array");
  for (std::size_t i = 0; i < obstacles.size(); ++i)
    sc.obstacles.push_back(detail::parse_obstacle(obstacles[i], i, d));

  const nlohmann::json& agents = detail::need(j, ctx, "agents");
  if (!agents.is_array() || agents.empty()) fail(ctx, "\"agents\" must be a non-empty array");
  for (std::size_t i = 0; i < agents.size(); ++i)
    sc.agents.push_back(
        detail::parse_agent(agents[i], i, d, sc.obstacles.size(), agents.size()));

  std::set<std::string> ids;
  for (const auto& a : sc.agents)
    if (!ids.insert(a.id).second) fail(ctx, "duplicate agent id \"" + a.id + "\"");
  std::set<std::string> oids;
  for (const auto& ob : sc.obstacles)
    if (!oids.insert(ob.id).second) fail(ctx, "duplicate obstacle id \"" + ob.id + "\"");

  for (const auto& a : sc.agents) {
    for (const auto& [pid, gain] : a.h2_hat_pairs) {
      (void)gain;
      if (pid == a.id || ids.count(pid) == 0)
        fail("agents (" + a.id + ")", "pair gain names unknown partner \"" + pid + "\"");
    }
    for (const auto& [pid, gain] : a.h3_hat_pairs) {
      (void)gain;
      if (pid == a.id || ids.count(pid) == 0)
        fail("agents (" + a.id + ")", "pair gain names unknown partner \"" + pid + "\"");
    }
  }

  sc.resolve_pair_gains();
  return sc;
}

inline Scenario parse_scenario_text(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  return parse_scenario(j);
}

// ---------------------------------------------------------------------------
// Pre-run feasibility checks.

struct ValidationEntry {
  std::string name;
  std::string subject;
  bool hard = true;
  bool pass = false;
  double margin = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationEntry> entries;
  bool hard_pass = true;

  std::string render_text() const {
    std::string out;
    char buf[160];
    for (const auto& e : entries) {
      std::snprintf(buf, sizeof(buf), "[%s] %-28s %-24s margin=% .6g%s%s\n",
                    e.pass ? "PASS" : (e.hard ? "FAIL" : "WARN"), e.name.c_str(),
                    e.subject.c_str(), e.margin, e.detail.empty() ? "" : "  ",
                    e.detail.c_str());
      out += buf;
    }
    out += hard_pass ? "validation: PASS\n" : "validation: FAIL\n";
    return out;
  }
};

// Checks that the theory's standing assumptions hold before a run: feasible
// radii, initially separated tubes, start/target sets clear of obstacles, a
// horizon long enough to judge completion, and the initial output inside its
// tube. The goal-gain lower bound is advisory only — a gain below 1/t_c still
// contracts toward the target, it just may not close the full distance.
inline ValidationReport validate_scenario(const Scenario& sc) {
  ValidationReport rep;
  const std::size_t n_a = sc.agents.size();
  const std::size_t dim = static_cast<std::size_t>(sc.dimension);

  const auto add = [&rep](std::string name, std::string subject, bool hard, bool pass,
                          double margin, std::string detail = "") {
    rep.entries.push_back(
        {std::move(name), std::move(subject), hard, pass, margin, std::move(detail)});
    if (hard && !pass) rep.hard_pass = false;
  };

  bool social_ok = true;
  for (const auto& a : sc.agents) {
    const double m = std::min(a.social_index, 1.0 - a.social_index);
    const bool ok = a.social_index > 0.0 && a.social_index < 1.0;
    social_ok = social_ok && ok;
    add("social-index-domain", a.id, true, ok, m);
  }

  for (const auto& a : sc.agents) {
    const double m = a.goal_gain - 1.0 / a.completion_time;
    add("goal-gain-strength", a.id, false, m > 0.0, m,
        m > 0.0 ? "" : "center may stop short of the target point");
  }

  for (const auto& a : sc.agents) {
    const double span = std::min(a.start_radius, a.target_radius) - a.rho_max;
    const double order = a.rho_max - a.rho_min;
    const double m = std::min(order, span);
    add("radius-ordering", a.id, true, order > 0.0 && span >= 0.0, m,
        order > 0.0 ? (span >= 0.0 ? "" : "rho_max exceeds a start/target set radius")
                    : "rho_min must be below rho_max");
  }

  for (std::size_t k = 0; k < n_a; ++k) {
    for (std::size_t l = k + 1; l < n_a; ++l) {
      const auto& ak = sc.agents[k];
      const auto& al = sc.agents[l];
      const double lim = ak.rho_max + al.rho_max;
      const double ms = dist(ak.start_point, al.start_point) - lim;
      add("start-separation", ak.id + "/" + al.id, true, ms > 0.0, ms);
      const double mt = dist(ak.target_point, al.target_point) - lim;
      add("target-separation", ak.id + "/" + al.id, true, mt > 0.0, mt);
    }
  }

  Vec oc(dim);
  for (const auto& a : sc.agents) {
    for (const auto& ob : sc.obstacles) {
      ob.center_at(0.0, oc);
      const double ms = dist(a.start_point, oc) - ob.radius_at(0.0) - a.rho_max;
      add("start-clear-of-obstacles", a.id + "/" + ob.id, true, ms > 0.0, ms);

      // The target must stay clear for the whole dwell phase; sample the
      // obstacle's closed-form motion densely over [t_c, horizon].
      double mt = k_inf;
      const int samples = 1000;
      for (int s = 0; s <= samples; ++s) {
        const double t = a.completion_time +
                         (sc.horizon - a.completion_time) * static_cast<double>(s) / samples;
        ob.center_at(t, oc);
        mt = std::min(mt, dist(a.target_point, oc) - ob.radius_at(t) - a.rho_max);
      }
      add("target-clear-of-obstacles", a.id + "/" + ob.id, true, mt > 0.0, mt);
    }
  }

  for (const auto& a : sc.agents)
    add("horizon-covers-completion", a.id, true, sc.horizon >= a.completion_time,
        sc.horizon - a.completion_time);

  if (social_ok) {
    NeighborSnapshot snap;
    snap.dim = sc.dimension;
    snap.meta.resize(n_a);
    snap.centers.assign(n_a * dim, 0.0);
    for (std::size_t a = 0; a < n_a; ++a) {
      const AgentSpec& as = sc.agents[a];
      snap.meta[a] = {as.rho_min, as.rho_max, as.social_index, as.completion_time, as.sif_decay};
      copy_into(as.start_point, snap.center_slot(a));
    }
    std::vector<ObstacleState> obs(sc.obstacles.size());
    for (std::size_t j = 0; j < obs.size(); ++j) {
      obs[j].center = sc.obstacles[j].center_at(0.0);
      obs[j].radius = sc.obstacles[j].radius_at(0.0);
    }
    for (std::size_t a = 0; a < n_a; ++a) {
      const AgentSpec& as = sc.agents[a];
      const double rho0 = tube_radius(sc, a, as.start_point, 0.0, snap, obs);
      const std::span<const double> x0 =
          as.initial_output.empty() ? std::span<const double>(as.start_point)
                                    : std::span<const double>(as.initial_output);
      const double m = rho0 - dist(x0, as.start_point);
      add("initial-output-in-tube", as.id, true, m > 0.0, m);
    }
  } else {
    add("initial-output-in-tube", "*", true, false, 0.0,
        "skipped: social indices out of domain");
  }

  return rep;
}

}  // namespace stt

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stt/numerics.hpp"
#include "stt/sim.hpp"
#include "stt/types.hpp"
#include "stt/vec.hpp"

namespace stt {

struct MonitorOptions {
  double strict_margin = 1e-9;  // strict inequalities must clear this
  double sigma_rate_cap = 100.0;
  double rho_rate_cap = 50.0;
  int refine_factor = 10;  // obstacle-clearance refinement between rows
};

enum class CheckStatus { pass, fail, skipped };

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::pass;
  double margin = k_inf;
  double worst_t = 0.0;
  int worst_agent = -1;
  int worst_other = -1;  // obstacle or partner index, where it applies
  std::vector<CheckStatus> agent_status;
  std::vector<double> agent_margin;
  std::string note;
};

struct MonitorReport {
  std::vector<CheckResult> checks;
  std::vector<bool> task_satisfied;  // per agent: reach-stay-avoid verdict
  std::vector<std::string> agent_ids;
  bool all_pass = true;

  const CheckResult* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

namespace detail {

// Row-access helpers over the flat trace columns.
struct TraceView {
  const SimTrace& tr;
  std::size_t dim, n_a, n_o;

  explicit TraceView(const SimTrace& t)
      : tr(t),
        dim(static_cast<std::size_t>(t.dim)),
        n_a(t.agents.size()),
        n_o(t.obstacle_ids.size()) {}

  std::span<const double> sigma(std::size_t a, std::size_t r) const {
    return std::span<const double>(tr.agents[a].sigma).subspan(r * dim, dim);
  }
  double rho(std::size_t a, std::size_t r) const { return tr.agents[a].rho[r]; }
  std::span<const double> x1(std::size_t a, std::size_t r) const {
    return std::span<const double>(tr.agents[a].x)
        .subspan(r * static_cast<std::size_t>(tr.agents[a].stages) * dim, dim);
  }
  std::span<const double> obs_center(std::size_t j, std::size_t r) const {
    return std::span<const double>(tr.obs_center).subspan((r * n_o + j) * dim, dim);
  }
  double obs_radius(std::size_t j, std::size_t r) const { return tr.obs_radius[r * n_o + j]; }
};

}  // namespace detail

// Verifies the recorded run against the guarantees the synthesis promises:
// the output stays inside its tube, tubes stay pairwise disjoint and clear of
// every obstacle, each tube ends inside its target set and stays there, the
// radius never collapses below its analytic floor, and all signals stay
// finite with bounded rates. Strict inequalities must clear
// MonitorOptions::strict_margin; set-membership checks allow touching.
inline MonitorReport run_monitors(const SimTrace& tr, const Scenario& sc,
                                  const MonitorOptions& opts = {}) {
  detail::TraceView v(tr);
  const std::size_t rows = tr.rows();
  const std::size_t n_a = v.n_a;

  MonitorReport rep;
  rep.agent_ids = tr.agent_ids;

  const auto finish = [&](CheckResult& c) {
    c.status = CheckStatus::pass;
    c.margin = k_inf;
    for (std::size_t a = 0; a < n_a; ++a) {
      if (c.agent_status[a] == CheckStatus::fail) c.status = CheckStatus::fail;
      if (c.agent_margin[a] < c.margin) c.margin = c.agent_margin[a];
    }
    if (c.status != CheckStatus::fail) {
      bool any_skip = false;
      for (const auto s : c.agent_status) any_skip = any_skip || s == CheckStatus::skipped;
      if (any_skip) c.status = CheckStatus::skipped;
    }
    if (c.status == CheckStatus::fail) rep.all_pass = false;
    rep.checks.push_back(c);
  };

  const auto blank = [&](const char* name) {
    CheckResult c;
    c.name = name;
    c.agent_status.assign(n_a, CheckStatus::pass);
    c.agent_margin.assign(n_a, k_inf);
    return c;
  };

  // Output containment: ||x1 - sigma|| <= rho, touching allowed.
  {
    CheckResult c = blank("containment");
    for (std::size_t a = 0; a < n_a; ++a) {
      for (std::size_t r = 0; r < rows; ++r) {
        const double m = v.rho(a, r) - dist(v.x1(a, r), v.sigma(a, r));
        if (m < c.agent_margin[a]) {
          c.agent_margin[a] = m;
          if (m < c.margin) {
            c.worst_t = tr.t[r];
            c.worst_agent = static_cast<int>(a);
            c.margin = m;
          }
        }
      }
      c.agent_status[a] = c.agent_margin[a] >= 0.0 ? CheckStatus::pass : CheckStatus::fail;
    }
    finish(c);
  }

  // Target reach-and-stay: from the completion time on, the whole tube must
  // sit inside the target set. Agents whose completion time lies beyond the
  // recorded horizon cannot be judged and are marked skipped.
  {
    CheckResult c = blank("target-stay");
    for (std::size_t a = 0; a < n_a; ++a) {
      const AgentSpec& as = sc.agents[a];
      bool judged = false;
      for (std::size_t r = 0; r < rows; ++r) {
        if (tr.t[r] < as.completion_time - 1e-9) continue;
        judged = true;
        const double m =
            as.target_radius - (dist(v.sigma(a, r), as.target_point) + v.rho(a, r));
        if (m < c.agent_margin[a]) {
          c.agent_margin[a] = m;
          if (m < c.margin) {
            c.worst_t = tr.t[r];
            c.worst_agent = static_cast<int>(a);
            c.margin = m;
          }
        }
      }
      if (!judged) {
        c.agent_status[a] = CheckStatus::skipped;
        c.agent_margin[a] = 0.0;
      } else {
        c.agent_status[a] = c.agent_margin[a] >= 0.0 ? CheckStatus::pass : CheckStatus::fail;
      }
    }
    if (std::any_of(c.agent_status.begin(), c.agent_status.end(),
                    [](CheckStatus s) { return s == CheckStatus::skipped; }))
      c.note = "some completion times lie beyond the recorded horizon";
    finish(c);
  }

  // Obstacle clearance: tube boundary strictly clear of every inflated
  // obstacle. Obstacles move between recorded rows, so the worst row per
  // agent/obstacle pair is re-examined on a finer time grid with the tube
  // interpolated and the obstacle evaluated exactly.
  {
    CheckResult c = blank("obstacle-avoidance");
    if (v.n_o == 0) {
      c.note = "no obstacles";
    } else {
      for (std::size_t a = 0; a < n_a; ++a) {
        for (std::size_t j = 0; j < v.n_o; ++j) {
          double worst = k_inf;
          std::size_t worst_r = 0;
          for (std::size_t r = 0; r < rows; ++r) {
            const double m =
                dist(v.sigma(a, r), v.obs_center(j, r)) - v.rho(a, r) - v.obs_radius(j, r);
            if (m < worst) {
              worst = m;
              worst_r = r;
            }
          }
          // Refine around the worst row with exact obstacle motion.
          const std::size_t r0 = worst_r > 0 ? worst_r - 1 : 0;
          const std::size_t r1 = std::min(worst_r + 1, rows - 1);
          Vec oc(v.dim), sig(v.dim);
          for (std::size_t seg = r0; seg < r1; ++seg) {
            for (int s = 0; s <= opts.refine_factor; ++s) {
              const double f = static_cast<double>(s) / opts.refine_factor;
              const double t = tr.t[seg] + f * (tr.t[seg + 1] - tr.t[seg]);
              for (std::size_t i = 0; i < v.dim; ++i)
                sig[i] = v.sigma(a, seg)[i] + f * (v.sigma(a, seg + 1)[i] - v.sigma(a, seg)[i]);
              const double rho =
                  v.rho(a, seg) + f * (v.rho(a, seg + 1) - v.rho(a, seg));
              sc.obstacles[j].center_at(t, oc);
              const double m = dist(sig, oc) - rho - sc.obstacles[j].radius_at(t);
              if (m < worst) {
                worst = m;
                worst_r = seg;
              }
            }
          }
          if (worst < c.agent_margin[a]) {
            c.agent_margin[a] = worst;
            if (worst < c.margin) {
              c.margin = worst;
              c.worst_t = tr.t[worst_r];
              c.worst_agent = static_cast<int>(a);
              c.worst_other = static_cast<int>(j);
            }
          }
        }
        c.agent_status[a] =
            c.agent_margin[a] > opts.strict_margin ? CheckStatus::pass : CheckStatus::fail;
      }
    }
    finish(c);
  }

  // Pairwise tube disjointness, strict.
  {
    CheckResult c = blank("disjointness");
    if (n_a < 2) {
      c.note = "single agent";
    } else {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = 0; k < n_a; ++k) {
          for (std::size_t l = k + 1; l < n_a; ++l) {
            const double m =
                dist(v.sigma(k, r), v.sigma(l, r)) - v.rho(k, r) - v.rho(l, r);
            if (m < c.agent_margin[k]) c.agent_margin[k] = m;
            if (m < c.agent_margin[l]) c.agent_margin[l] = m;
            if (m < c.margin) {
              c.margin = m;
              c.worst_t = tr.t[r];
              c.worst_agent = static_cast<int>(k);
              c.worst_other = static_cast<int>(l);
            }
          }
        }
      }
      for (std::size_t a = 0; a < n_a; ++a)
        c.agent_status[a] =
            c.agent_margin[a] > opts.strict_margin ? CheckStatus::pass : CheckStatus::fail;
    }
    finish(c);
  }

  // Radius floor: the closed-form radius never drops to its lower bound.
  {
    CheckResult c = blank("radius-floor");
    for (std::size_t a = 0; a < n_a; ++a) {
      const double floor = radius_lower_bound(sc.agents[a].rho_min, sc.agents[a].rho_max, sc.nu);
      for (std::size_t r = 0; r < rows; ++r) {
        const double m = v.rho(a, r) - floor;
        if (m < c.agent_margin[a]) {
          c.agent_margin[a] = m;
          if (m < c.margin) {
            c.margin = m;
            c.worst_t = tr.t[r];
            c.worst_agent = static_cast<int>(a);
          }
        }
      }
      c.agent_status[a] =
          c.agent_margin[a] > opts.strict_margin ? CheckStatus::pass : CheckStatus::fail;
    }
    finish(c);
  }

  // Boundedness: every recorded value finite, center and radius rates under
  // their caps, and the run must have completed without aborting.
  {
    CheckResult c = blank("boundedness");
    bool finite = tr.complete;
    if (!tr.complete) c.note = "run aborted: " + tr.abort_reason;
    for (std::size_t a = 0; a < n_a && finite; ++a) {
      const auto& blk = tr.agents[a];
      finite = all_finite(blk.sigma) && all_finite(blk.rho) && all_finite(blk.x) &&
               all_finite(blk.u) && all_finite(blk.e1);
    }
    finite = finite && all_finite(tr.phi) && all_finite(tr.beta) && all_finite(tr.obs_center) &&
             all_finite(tr.obs_radius);
    if (!finite && c.note.empty()) c.note = "non-finite values in trace";

    for (std::size_t a = 0; a < n_a; ++a) {
      for (std::size_t r = 0; r + 1 < rows; ++r) {
        const double h = tr.t[r + 1] - tr.t[r];
        if (!(h > 0.0)) continue;
        const double sig_rate = dist(v.sigma(a, r + 1), v.sigma(a, r)) / h;
        const double rho_rate = std::abs(v.rho(a, r + 1) - v.rho(a, r)) / h;
        const double m =
            std::min(opts.sigma_rate_cap - sig_rate, opts.rho_rate_cap - rho_rate);
        if (m < c.agent_margin[a]) {
          c.agent_margin[a] = m;
          if (m < c.margin) {
            c.margin = m;
            c.worst_t = tr.t[r];
            c.worst_agent = static_cast<int>(a);
          }
        }
      }
      c.agent_status[a] = (finite && c.agent_margin[a] >= 0.0 && std::isfinite(c.agent_margin[a]))
                              ? CheckStatus::pass
                              : CheckStatus::fail;
      if (!finite) c.agent_margin[a] = -k_inf;
    }
    finish(c);
  }

  // Per-agent verdict for the full reach-stay-avoid task.
  const CheckResult* stay = rep.find("target-stay");
  const CheckResult* avoid = rep.find("obstacle-avoidance");
  const CheckResult* disj = rep.find("disjointness");
  const CheckResult* cont = rep.find("containment");
  rep.task_satisfied.resize(n_a);
  for (std::size_t a = 0; a < n_a; ++a) {
    rep.task_satisfied[a] = stay->agent_status[a] == CheckStatus::pass &&
                            avoid->agent_status[a] == CheckStatus::pass &&
                            disj->agent_status[a] == CheckStatus::pass &&
                            cont->agent_status[a] == CheckStatus::pass;
    if (!rep.task_satisfied[a]) rep.all_pass = false;
  }
  return rep;
}

// Accumulated deviation between a run and its goal-only reference:
// trapezoidal integral of the center displacement over time, per agent.
// Requires both traces on the same time grid.
inline std::vector<double> social_deviation_metrics(const SimTrace& actual,
                                                    const SimTrace& nominal) {
  if (actual.rows() != nominal.rows() || actual.agents.size() != nominal.agents.size())
    throw std::invalid_argument("deviation metric needs traces on the same grid");
  detail::TraceView va(actual), vn(nominal);
  std::vector<double> out(actual.agents.size(), 0.0);
  for (std::size_t a = 0; a < actual.agents.size(); ++a) {
    double prev = dist(va.sigma(a, 0), vn.sigma(a, 0));
    for (std::size_t r = 1; r < actual.rows(); ++r) {
      const double cur = dist(va.sigma(a, r), vn.sigma(a, r));
      out[a] += 0.5 * (prev + cur) * (actual.t[r] - actual.t[r - 1]);
      prev = cur;
    }
  }
  return out;
}

inline const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass:
      return "pass";
    case CheckStatus::fail:
      return "fail";
    case CheckStatus::skipped:
      return "skipped";
  }
  return "?";
}

inline std::string render_text(const MonitorReport& rep) {
  std::string out;
  char buf[256];
  for (const auto& c : rep.checks) {
    std::snprintf(buf, sizeof(buf), "[%s] %-20s margin=% .6g",
                  c.status == CheckStatus::pass ? "PASS"
                  : c.status == CheckStatus::fail ? "FAIL"
                                                  : "SKIP",
                  c.name.c_str(), c.margin);
    out += buf;
    if (c.worst_agent >= 0) {
      std::snprintf(buf, sizeof(buf), "  worst: agent %s",
                    rep.agent_ids[static_cast<std::size_t>(c.worst_agent)].c_str());
      out += buf;
      if (c.worst_other >= 0) {
        std::snprintf(buf, sizeof(buf), " vs #%d", c.worst_other);
        out += buf;
      }
      std::snprintf(buf, sizeof(buf), " @ t=%.4g", c.worst_t);
      out += buf;
    }
    if (!c.note.empty()) out += "  (" + c.note + ")";
    out += "\n";
  }
  for (std::size_t a = 0; a < rep.task_satisfied.size(); ++a) {
    std::snprintf(buf, sizeof(buf), "[%s] task: %s\n", rep.task_satisfied[a] ? "PASS" : "FAIL",
                  rep.agent_ids[a].c_str());
    out += buf;
  }
  out += rep.all_pass ? "monitors: PASS\n" : "monitors: FAIL\n";
  return out;
}

inline nlohmann::json to_json(const MonitorReport& rep) {
  nlohmann::json j;
  j["all_pass"] = rep.all_pass;
  j["checks"] = nlohmann::json::array();
  for (const auto& c : rep.checks) {
    nlohmann::json cj;
    cj["name"] = c.name;
    cj["status"] = to_string(c.status);
    cj["margin"] = c.margin;
    cj["worst_t"] = c.worst_t;
    cj["worst_agent"] = c.worst_agent;
    cj["worst_other"] = c.worst_other;
    cj["agents"] = nlohmann::json::array();
    for (std::size_t a = 0; a < c.agent_status.size(); ++a) {
      cj["agents"].push_back({{"id", rep.agent_ids[a]},
                              {"status", to_string(c.agent_status[a])},
                              {"margin", c.agent_margin[a]}});
    }
    if (!c.note.empty()) cj["note"] = c.note;
    j["checks"].push_back(std::move(cj));
  }
  j["task_satisfied"] = nlohmann::json::array();
  for (std::size_t a = 0; a < rep.task_satisfied.size(); ++a)
    j["task_satisfied"].push_back(
        {{"id", rep.agent_ids[a]}, {"pass", static_cast<bool>(rep.task_satisfied[a])}});
  return j;
}

}  // namespace stt

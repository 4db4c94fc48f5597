#pragma once

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stt/scenario.hpp"
#include "stt/sim.hpp"
#include "stt/version.hpp"

namespace stt {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_or_throw(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path);
  return f;
}

inline std::string read_file(const std::string& path) {
  FilePtr f = open_or_throw(path, "rb");
  std::string out;
  char buf[1 << 16];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof(buf), f.get())) > 0) out.append(buf, got);
  return out;
}

inline void write_file(const std::string& path, const std::string& content) {
  FilePtr f = open_or_throw(path, "wb");
  if (std::fwrite(content.data(), 1, content.size(), f.get()) != content.size())
    throw IoError("short write to " + path);
}

// Column order is fixed by this header; readers verify it verbatim so a
// reordered or truncated file fails loudly instead of mis-assigning columns.
inline std::string trace_header(const SimTrace& tr) {
  std::string h = "t";
  char buf[64];
  const std::size_t n_a = tr.agents.size();
  const auto dim = static_cast<std::size_t>(tr.dim);
  for (std::size_t a = 0; a < n_a; ++a) {
    const std::size_t k = a + 1;
    for (std::size_t i = 0; i < dim; ++i) {
      std::snprintf(buf, sizeof(buf), ",a%zu_sigma_%zu", k, i);
      h += buf;
    }
    std::snprintf(buf, sizeof(buf), ",a%zu_rho", k);
    h += buf;
    for (int z = 1; z <= tr.agents[a].stages; ++z) {
      for (std::size_t i = 0; i < dim; ++i) {
        std::snprintf(buf, sizeof(buf), ",a%zu_x%d_%zu", k, z, i);
        h += buf;
      }
    }
    for (std::size_t i = 0; i < dim; ++i) {
      std::snprintf(buf, sizeof(buf), ",a%zu_u_%zu", k, i);
      h += buf;
    }
    std::snprintf(buf, sizeof(buf), ",a%zu_e1,a%zu_clamps", k, k);
    h += buf;
    for (std::size_t j = 0; j < tr.obstacle_ids.size(); ++j) {
      std::snprintf(buf, sizeof(buf), ",a%zu_alpha_%zu", k, j + 1);
      h += buf;
    }
  }
  for (std::size_t k = 0; k < n_a; ++k)
    for (std::size_t l = 0; l < n_a; ++l) {
      if (k == l) continue;
      std::snprintf(buf, sizeof(buf), ",phi_%zu_%zu", k + 1, l + 1);
      h += buf;
    }
  for (std::size_t k = 0; k < n_a; ++k)
    for (std::size_t l = 0; l < n_a; ++l) {
      if (k == l) continue;
      std::snprintf(buf, sizeof(buf), ",beta_%zu_%zu", k + 1, l + 1);
      h += buf;
    }
  for (std::size_t j = 0; j < tr.obstacle_ids.size(); ++j) {
    for (std::size_t i = 0; i < dim; ++i) {
      std::snprintf(buf, sizeof(buf), ",o%zu_c_%zu", j + 1, i);
      h += buf;
    }
    std::snprintf(buf, sizeof(buf), ",o%zu_rho", j + 1);
    h += buf;
  }
  return h;
}

}  // namespace detail

// Writes the trace as CSV with full double precision (%.17g round-trips
// exactly, and the engine is deterministic, so identical runs produce
// byte-identical files).
inline void write_trace_csv(const std::string& path, const SimTrace& tr) {
  detail::FilePtr f = detail::open_or_throw(path, "wb");
  const std::string header = detail::trace_header(tr);
  std::fprintf(f.get(), "%s\n", header.c_str());

  const std::size_t n_a = tr.agents.size();
  const std::size_t n_o = tr.obstacle_ids.size();
  const auto dim = static_cast<std::size_t>(tr.dim);
  const std::size_t pairs = n_a * n_a;

  for (std::size_t r = 0; r < tr.rows(); ++r) {
    std::fprintf(f.get(), "%.17g", tr.t[r]);
    for (std::size_t a = 0; a < n_a; ++a) {
      const auto& blk = tr.agents[a];
      const auto stages = static_cast<std::size_t>(blk.stages);
      for (std::size_t i = 0; i < dim; ++i)
        std::fprintf(f.get(), ",%.17g", blk.sigma[r * dim + i]);
      std::fprintf(f.get(), ",%.17g", blk.rho[r]);
      for (std::size_t i = 0; i < stages * dim; ++i)
        std::fprintf(f.get(), ",%.17g", blk.x[r * stages * dim + i]);
      for (std::size_t i = 0; i < dim; ++i)
        std::fprintf(f.get(), ",%.17g", blk.u[r * dim + i]);
      std::fprintf(f.get(), ",%.17g,%" PRIu64, blk.e1[r], blk.clamps[r]);
      for (std::size_t j = 0; j < n_o; ++j)
        std::fprintf(f.get(), ",%.17g", blk.alpha[r * n_o + j]);
    }
    for (std::size_t k = 0; k < n_a; ++k)
      for (std::size_t l = 0; l < n_a; ++l)
        if (k != l) std::fprintf(f.get(), ",%.17g", tr.phi[r * pairs + k * n_a + l]);
    for (std::size_t k = 0; k < n_a; ++k)
      for (std::size_t l = 0; l < n_a; ++l)
        if (k != l) std::fprintf(f.get(), ",%.17g", tr.beta[r * pairs + k * n_a + l]);
    for (std::size_t j = 0; j < n_o; ++j) {
      for (std::size_t i = 0; i < dim; ++i)
        std::fprintf(f.get(), ",%.17g", tr.obs_center[(r * n_o + j) * dim + i]);
      std::fprintf(f.get(), ",%.17g", tr.obs_radius[r * n_o + j]);
    }
    std::fputc('\n', f.get());
  }
}

// Rebuilds a trace from CSV written by write_trace_csv. The scenario supplies
// the expected shape; any header or field-count mismatch raises IoError.
inline SimTrace read_trace_csv(const std::string& path, const Scenario& sc) {
  const std::string text = detail::read_file(path);

  SimTrace tr;
  tr.dim = sc.dimension;
  for (const auto& a : sc.agents) {
    tr.agent_ids.push_back(a.id);
    tr.agent_stages.push_back(a.stages());
    AgentTraceBlock blk;
    blk.stages = a.stages();
    tr.agents.push_back(std::move(blk));
  }
  for (const auto& ob : sc.obstacles) tr.obstacle_ids.push_back(ob.id);

  const std::size_t n_a = tr.agents.size();
  const std::size_t n_o = tr.obstacle_ids.size();
  const auto dim = static_cast<std::size_t>(tr.dim);

  std::size_t pos = text.find('\n');
  if (pos == std::string::npos) throw IoError(path + ": missing header row");
  if (text.substr(0, pos) != detail::trace_header(tr))
    throw IoError(path + ": header does not match the scenario shape");

  std::size_t fields_per_row = 1;  // t
  for (std::size_t a = 0; a < n_a; ++a)
    fields_per_row += dim + 1 + static_cast<std::size_t>(tr.agents[a].stages) * dim + dim + 2 + n_o;
  fields_per_row += 2 * n_a * (n_a - 1);
  fields_per_row += n_o * (dim + 1);

  std::vector<double> row(fields_per_row);
  const char* p = text.c_str() + pos + 1;
  const char* end = text.c_str() + text.size();
  while (p < end) {
    if (*p == '\n') {
      ++p;
      continue;
    }
    for (std::size_t fidx = 0; fidx < fields_per_row; ++fidx) {
      char* after = nullptr;
      row[fidx] = std::strtod(p, &after);
      if (after == p) throw IoError(path + ": malformed numeric field");
      p = after;
      const char expect = fidx + 1 == fields_per_row ? '\n' : ',';
      if (p < end && *p == expect)
        ++p;
      else if (!(fidx + 1 == fields_per_row && p == end))
        throw IoError(path + ": wrong field count in a data row");
    }

    std::size_t fidx = 0;
    tr.t.push_back(row[fidx++]);
    for (std::size_t a = 0; a < n_a; ++a) {
      auto& blk = tr.agents[a];
      const auto stages = static_cast<std::size_t>(blk.stages);
      for (std::size_t i = 0; i < dim; ++i) blk.sigma.push_back(row[fidx++]);
      blk.rho.push_back(row[fidx++]);
      for (std::size_t i = 0; i < stages * dim; ++i) blk.x.push_back(row[fidx++]);
      for (std::size_t i = 0; i < dim; ++i) blk.u.push_back(row[fidx++]);
      blk.e1.push_back(row[fidx++]);
      blk.clamps.push_back(static_cast<std::uint64_t>(row[fidx++]));
      for (std::size_t j = 0; j < n_o; ++j) blk.alpha.push_back(row[fidx++]);
    }
    const std::size_t base_phi = tr.phi.size();
    tr.phi.resize(base_phi + n_a * n_a, 0.0);
    for (std::size_t k = 0; k < n_a; ++k)
      for (std::size_t l = 0; l < n_a; ++l)
        if (k != l) tr.phi[base_phi + k * n_a + l] = row[fidx++];
    const std::size_t base_beta = tr.beta.size();
    tr.beta.resize(base_beta + n_a * n_a, 0.0);
    for (std::size_t k = 0; k < n_a; ++k)
      for (std::size_t l = 0; l < n_a; ++l)
        if (k != l) tr.beta[base_beta + k * n_a + l] = row[fidx++];
    for (std::size_t j = 0; j < n_o; ++j) {
      for (std::size_t i = 0; i < dim; ++i) tr.obs_center.push_back(row[fidx++]);
      tr.obs_radius.push_back(row[fidx++]);
    }
  }
  if (tr.rows() >= 2) tr.dt = tr.t[1] - tr.t[0];
  return tr;
}

inline void write_events_jsonl(const std::string& path, const SimTrace& tr) {
  detail::FilePtr f = detail::open_or_throw(path, "wb");
  for (const auto& e : tr.events)
    std::fprintf(f.get(), "{\"step\":%" PRIu64 ",\"t\":%.17g,\"agent\":%d,\"kind\":\"%s\",\"value\":%.17g}\n",
                 e.step, e.t, e.agent, e.kind.c_str(), e.value);
}

// The manifest makes a run directory self-contained: it embeds the full
// scenario document alongside the settings, so `check` needs nothing else.
inline void write_manifest(const std::string& path, const nlohmann::json& scenario_doc,
                           const SimConfig& cfg, const SimTrace& tr) {
  nlohmann::json j;
  j["version"] = std::string(k_version);
  j["scenario"] = scenario_doc;
  nlohmann::json ov;
  ov["dt"] = tr.dt;
  ov["t_end"] = tr.rows() > 0 ? tr.t.back() : 0.0;
  ov["integrator"] = cfg.integrator == Integrator::rk4 ? "rk4" : "euler";
  ov["record_stride"] = cfg.record_stride;
  ov["goal_only"] = cfg.goal_only;
  ov["force"] = cfg.force;
  if (cfg.seed.has_value())
    ov["seed"] = *cfg.seed;
  else
    ov["seed"] = nullptr;
  j["overrides"] = std::move(ov);
  j["complete"] = tr.complete;
  j["rows"] = tr.rows();
  j["events"] = tr.events.size();
  if (!tr.complete) {
    j["abort"] = {{"step", tr.abort_step},
                  {"agent", tr.abort_agent},
                  {"reason", tr.abort_reason}};
  }
  detail::write_file(path, j.dump(2) + "\n");
}

struct LoadedRun {
  Scenario scenario;
  nlohmann::json scenario_doc;
  SimTrace trace;
};

// Loads a run directory written by the run command: manifest first (for the
// embedded scenario), then the trace against that shape.
inline LoadedRun load_run(const std::string& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(detail::read_file(dir + "/manifest.json"));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(dir + "/manifest.json: invalid JSON: " + e.what());
  }
  if (!manifest.contains("scenario"))
    throw IoError(dir + "/manifest.json: missing scenario document");

  LoadedRun run;
  run.scenario_doc = manifest["scenario"];
  run.scenario = parse_scenario(run.scenario_doc);
  run.trace = read_trace_csv(dir + "/trace.csv", run.scenario);

  if (manifest.contains("rows") &&
      manifest["rows"].get<std::size_t>() != run.trace.rows())
    throw IoError(dir + ": trace row count disagrees with the manifest");
  if (manifest.contains("complete")) run.trace.complete = manifest["complete"].get<bool>();
  if (manifest.contains("abort")) {
    run.trace.abort_step = manifest["abort"].value("step", std::uint64_t{0});
    run.trace.abort_agent = manifest["abort"].value("agent", -1);
    run.trace.abort_reason = manifest["abort"].value("reason", std::string());
  }
  if (manifest.contains("overrides") && manifest["overrides"].contains("dt"))
    run.trace.dt = manifest["overrides"]["dt"].get<double>();
  return run;
}

}  // namespace stt

// Command-line front end: validate scenario files, run simulations into a
// run directory (trace + events + manifest), re-check recorded runs against
// the tube guarantees, and render quick-look SVG plots. `demo` does all of
// the above for the scenarios embedded at build time.
//
// Exit codes: 0 on success, 1 when a validation, run, or check fails on the
// merits, 2 for malformed input (bad JSON, bad trace, bad settings, bad
// usage).

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "stt/stt.hpp"
#include "stt/embedded_scenarios.hpp"

namespace fs = std::filesystem;

namespace {

struct RunSettings {
  std::string scenario_path;
  std::string out_dir;
  double dt = stt::k_default_dt;
  bool dt_set = false;
  double t_end = -1.0;
  bool t_end_set = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int stride = 1;
  bool use_euler = false;
  bool goal_only = false;
  bool force = false;
};

struct ScenarioDoc {
  nlohmann::json doc;
  stt::Scenario scenario;
};

ScenarioDoc load_scenario_file(const std::string& path) {
  ScenarioDoc out;
  const std::string text = stt::detail::read_file(path);
  try {
    out.doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw stt::ParseError(std::string("invalid JSON: ") + e.what());
  }
  out.scenario = stt::parse_scenario(out.doc);
  return out;
}

int cmd_validate(const std::string& path) {
  ScenarioDoc sd = load_scenario_file(path);
  stt::ValidationReport rep = stt::validate_scenario(sd.scenario);
  std::fputs(rep.render_text().c_str(), stdout);
  return rep.hard_pass ? 0 : 1;
}

// Runs one scenario into a run directory. Returns the exit code; fills
// *trace_out when the caller wants to chain checks without reloading.
int run_into_dir(const ScenarioDoc& sd, const RunSettings& rs,
                 stt::SimTrace* trace_out = nullptr) {
  stt::ValidationReport vrep = stt::validate_scenario(sd.scenario);
  std::fputs(vrep.render_text().c_str(), stdout);
  if (!vrep.hard_pass && !rs.force) {
    std::fprintf(stderr, "error: scenario failed validation; use --force to run it anyway\n");
    return 1;
  }

  stt::SimConfig cfg;
  if (rs.dt_set) cfg.dt = rs.dt;
  if (rs.t_end_set) cfg.t_end = rs.t_end;
  if (rs.seed_set) cfg.seed = rs.seed;
  cfg.record_stride = rs.stride;
  cfg.integrator = rs.use_euler ? stt::Integrator::euler : stt::Integrator::rk4;
  cfg.goal_only = rs.goal_only;
  cfg.force = rs.force;

  stt::SimTrace tr = stt::run_simulation(sd.scenario, cfg);

  fs::create_directories(rs.out_dir);
  const fs::path dir(rs.out_dir);
  stt::write_trace_csv((dir / "trace.csv").string(), tr);
  stt::write_events_jsonl((dir / "events.jsonl").string(), tr);
  stt::write_manifest((dir / "manifest.json").string(), sd.doc, cfg, tr);

  std::printf("wrote %s: %zu rows, %zu events\n", rs.out_dir.c_str(), tr.rows(),
              tr.events.size());
  if (!tr.complete) {
    std::fprintf(stderr, "error: run aborted at step %llu (agent %s): %s\n",
                 static_cast<unsigned long long>(tr.abort_step),
                 tr.abort_agent >= 0 ? tr.agent_ids[static_cast<std::size_t>(tr.abort_agent)].c_str()
                                     : "?",
                 tr.abort_reason.c_str());
    return 1;
  }
  if (trace_out != nullptr) *trace_out = std::move(tr);
  return 0;
}

int cmd_run(const RunSettings& rs) {
  ScenarioDoc sd = load_scenario_file(rs.scenario_path);
  return run_into_dir(sd, rs);
}

int cmd_check(const std::string& dir, bool as_json) {
  stt::LoadedRun run = stt::load_run(dir);
  stt::MonitorReport rep = stt::run_monitors(run.trace, run.scenario);
  if (as_json)
    std::fputs((stt::to_json(rep).dump(2) + "\n").c_str(), stdout);
  else
    std::fputs(stt::render_text(rep).c_str(), stdout);
  return rep.all_pass ? 0 : 1;
}

int cmd_plot(const std::string& dir, const std::string& out_file,
             const std::vector<double>& stamps) {
  stt::LoadedRun run = stt::load_run(dir);
  const std::string path =
      out_file.empty() ? (fs::path(dir) / "plot.svg").string() : out_file;
  stt::write_plot_svg(path, run.trace, run.scenario, stamps);
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

// Record strides tuned per scenario so every demo trace lands in the low
// thousands of rows regardless of its horizon.
int demo_stride(std::string_view name) {
  if (name == "two_agent_swap") return 25;
  if (name == "eight_agent_planar") return 5;
  if (name == "eight_agent_uav") return 10;
  if (name == "consistency_pair") return 4;
  return 10;
}

int cmd_demo(const std::string& out_dir) {
  bool all_ok = true;
  for (const auto& entry : stt::embedded::k_scenarios) {
    const fs::path dir = fs::path(out_dir) / std::string(entry.name);
    fs::create_directories(dir);
    stt::detail::write_file((dir / "scenario.json").string(), std::string(entry.text));

    std::printf("--- %.*s ---\n", static_cast<int>(entry.name.size()), entry.name.data());
    ScenarioDoc sd;
    sd.doc = nlohmann::json::parse(entry.text);
    sd.scenario = stt::parse_scenario(sd.doc);

    RunSettings rs;
    rs.out_dir = dir.string();
    rs.stride = demo_stride(entry.name);
    stt::SimTrace tr;
    if (run_into_dir(sd, rs, &tr) != 0) {
      all_ok = false;
      continue;
    }

    stt::MonitorReport rep = stt::run_monitors(tr, sd.scenario);
    std::fputs(stt::render_text(rep).c_str(), stdout);
    stt::write_plot_svg((dir / "plot.svg").string(), tr, sd.scenario);
    if (!rep.all_pass) all_ok = false;
  }
  std::printf("demo: %s\n", all_ok ? "PASS" : "FAIL");
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatiotemporal tube synthesis and verification toolkit"};
  app.set_version_flag("--version", std::string(stt::k_version));
  app.require_subcommand(1);

  std::string scenario_path;
  std::string run_dir;
  std::string out_file;
  std::vector<double> stamps;
  bool as_json = false;
  RunSettings rs;

  CLI::App* validate = app.add_subcommand("validate", "check a scenario file for well-posedness");
  validate->add_option("scenario", scenario_path, "scenario JSON file")
      ->required()
      ->check(CLI::ExistingFile);

  CLI::App* run = app.add_subcommand("run", "simulate a scenario into a run directory");
  run->add_option("scenario", rs.scenario_path, "scenario JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out", rs.out_dir, "run directory to write")->required();
  CLI::Option* dt_opt = run->add_option("--dt", rs.dt, "integrator step");
  CLI::Option* t_end_opt = run->add_option("--t-end", rs.t_end, "simulated end time");
  CLI::Option* seed_opt =
      run->add_option("--seed", rs.seed, "override every disturbance seed");
  run->add_option("--stride", rs.stride, "record every Nth grid point")
      ->check(CLI::PositiveNumber);
  run->add_flag("--euler", rs.use_euler, "integrate with explicit Euler instead of RK4");
  run->add_flag("--goal-only", rs.goal_only,
                "drop avoidance terms (reference run for deviation scoring)");
  run->add_flag("--force", rs.force, "run despite failed validation or guard rails");

  CLI::App* check = app.add_subcommand("check", "verify a recorded run against the guarantees");
  check->add_option("dir", run_dir, "run directory")->required()->check(CLI::ExistingDirectory);
  check->add_flag("--json", as_json, "emit the report as JSON");

  CLI::App* plot = app.add_subcommand("plot", "render a run directory to SVG");
  plot->add_option("dir", run_dir, "run directory")->required()->check(CLI::ExistingDirectory);
  plot->add_option("--out", out_file, "output file (default: <dir>/plot.svg)");
  plot->add_option("--stamps", stamps, "tube snapshot times, comma separated")
      ->delimiter(',');

  CLI::App* demo = app.add_subcommand("demo", "run every built-in scenario end to end");
  demo->add_option("--out", run_dir, "directory for the demo runs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  rs.dt_set = dt_opt->count() > 0;
  rs.t_end_set = t_end_opt->count() > 0;
  rs.seed_set = seed_opt->count() > 0;

  try {
    if (validate->parsed()) return cmd_validate(scenario_path);
    if (run->parsed()) return cmd_run(rs);
    if (check->parsed()) return cmd_check(run_dir, as_json);
    if (plot->parsed()) return cmd_plot(run_dir, out_file, stamps);
    if (demo->parsed()) return cmd_demo(run_dir);
  } catch (const stt::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const stt::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const stt::SimConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}

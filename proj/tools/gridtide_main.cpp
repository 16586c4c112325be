// gridtide command-line front end.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gridtide/analysis.hpp"
#include "gridtide/error.hpp"
#include "gridtide/report.hpp"

#ifndef GRIDTIDE_DEFAULT_CASE
#define GRIDTIDE_DEFAULT_CASE "data/ne39.json"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace gridtide;

namespace {

struct RunConfig {
  std::string case_path = GRIDTIDE_DEFAULT_CASE;
  std::string scenario_path;
  // shortcuts
  int fault_bus = 0;
  double fault_start = 1.0;
  double fault_duration = 0.0;
  std::string trip_branch;
  double trip_start = 1.0;
  double trip_duration = 0.0;
  int step_bus = 0;
  double step_fraction = 0.0;
  double step_start = 1.0;
  double step_hold = 0.0;
  // run
  double dt = 1e-3;
  double horizon = 10.0;
  double output_interval = 0.01;
  long long n_pev = 0;
  double per_vehicle_kw = 10.0;
  double saturation_mhz = 100.0;
  std::string output_dir = ".";
  // ccl / sweep
  std::vector<int> buses{1, 4, 11, 16, 20, 24, 32, 37};
  std::vector<double> penetrations{0, 1, 2, 4, 5.5, 7, 10};
  double resolution = 1e-3;
  double upper = 1.0;
};

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(std::string("cli: cannot read ") + what + " '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Loaded {
  NetworkCase grid;
  std::string checksum;
};

Loaded load(const RunConfig& cfg) {
  const std::string text = read_file(cfg.case_path, "case file");
  return {prepare_case(load_case(text)), fnv1a64_hex(text)};
}

int resolve_branch(const NetworkCase& c, const std::string& spec) {
  const auto dash = spec.find('-');
  try {
    if (dash == std::string::npos) {
      const int id = std::stoi(spec);
      c.branch(id);
      return id;
    }
    const int a = std::stoi(spec.substr(0, dash)), b = std::stoi(spec.substr(dash + 1));
    if (auto id = c.find_branch(a, b)) return *id;
    throw ValidationError("cli: no in-service branch between buses " + std::to_string(a) + " and " +
                          std::to_string(b));
  } catch (const std::invalid_argument&) {
    throw ValidationError("cli: bad branch '" + spec + "' (expected an id or FROM-TO)");
  } catch (const std::out_of_range&) {
    throw ValidationError("cli: bad branch '" + spec + "'");
  }
}

// A --scenario file wins over the shortcut flags.
std::vector<DisturbanceEvent> build_events(const RunConfig& cfg, const NetworkCase& c) {
  if (!cfg.scenario_path.empty()) return parse_scenario(read_file(cfg.scenario_path, "scenario file"));
  std::vector<DisturbanceEvent> ev;
  auto add = [&](std::vector<DisturbanceEvent> more) { ev.insert(ev.end(), more.begin(), more.end()); };
  if (cfg.fault_bus) add(fault_at(cfg.fault_bus, cfg.fault_start, cfg.fault_duration));
  if (!cfg.trip_branch.empty()) add(branch_outage(resolve_branch(c, cfg.trip_branch), cfg.trip_start, cfg.trip_duration));
  if (cfg.step_bus) add(load_step(cfg.step_bus, cfg.step_start, cfg.step_fraction, cfg.step_hold));
  return ev;
}

SimulationOptions sim_options(const RunConfig& cfg) {
  SimulationOptions o;
  o.dt = cfg.dt;
  o.horizon = cfg.horizon;
  o.output_interval = cfg.output_interval;
  return o;
}

json config_json(const std::string& cmd, const RunConfig& cfg, const std::string& checksum,
                 const std::vector<DisturbanceEvent>* events) {
  json j;
  j["command"] = cmd;
  j["case"] = cfg.case_path;
  j["case_checksum_fnv1a64"] = checksum;
  j["dt"] = cfg.dt;
  j["horizon"] = cfg.horizon;
  j["output_interval"] = cfg.output_interval;
  j["n_pev"] = cfg.n_pev;
  j["per_vehicle_kw"] = cfg.per_vehicle_kw;
  j["saturation_mhz"] = cfg.saturation_mhz;
  if (events) j["events"] = json::parse(scenario_to_json(*events));
  if (cmd == "ccl" || cmd == "sweep") {
    j["buses"] = cfg.buses;
    j["fault_start"] = cfg.fault_start;
    j["resolution"] = cfg.resolution;
    j["upper"] = cfg.upper;
  }
  if (cmd == "sweep") j["penetrations"] = cfg.penetrations;
  return j;
}

std::vector<std::string> header_lines(const json& config) {
  return {"gridtide " + config["command"].get<std::string>(),
          "case_checksum_fnv1a64=" + config["case_checksum_fnv1a64"].get<std::string>(),
          "config=" + config.dump()};
}

std::ofstream open_out(const RunConfig& cfg, const std::string& name) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  const fs::path p = fs::path(cfg.output_dir) / name;
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ValidationError("cli: cannot write '" + p.string() + "'");
  return out;
}

void write_json(const RunConfig& cfg, const std::string& name, const json& j) {
  auto out = open_out(cfg, name);
  out << j.dump(2) << '\n';
}

void write_csv(const RunConfig& cfg, const std::string& name, const json& config,
               const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  auto out = open_out(cfg, name);
  for (const auto& l : header_lines(config)) out << "# " << l << '\n';
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << '\n';
  }
}

json calibration_record(const NetworkCase& c) {
  if (c.calibration_json.empty()) return nullptr;
  return json::parse(c.calibration_json);
}

std::optional<AcvgFleet> fleet_for(const RunConfig& cfg, const NetworkCase& c) {
  if (cfg.n_pev < 0) throw ValidationError("cli: --n-pev must be >= 0");
  if (cfg.n_pev == 0) return std::nullopt;
  return build_fleet(c, cfg.n_pev, cfg.per_vehicle_kw, cfg.saturation_mhz);
}

std::string fmt(double x) { return format_number(x); }

// ---------------------------------------------------------------------------

int cmd_simulate(const RunConfig& cfg) {
  auto [grid, checksum] = load(cfg);
  const auto events = build_events(cfg, grid);
  const auto fleet = fleet_for(cfg, grid);
  Experiment exp(grid, sim_options(cfg));
  const auto config = config_json("simulate", cfg, checksum, &events);
  const auto res = exp.run(events, fleet ? &*fleet : nullptr);
  const bool stable = is_stable(res.series, exp.stability());

  {
    auto out = open_out(cfg, "timeseries.csv");
    write_timeseries_csv(out, res.series, header_lines(config));
  }
  json s;
  s["config"] = config;
  s["verdict"] = stable ? "stable" : "unstable";
  json fin;
  fin["t"] = res.final_state.t;
  fin["generator_buses"] = res.series.generator_buses;
  fin["phi_rad"] = res.final_state.phi;
  std::vector<double> f;
  for (double w : res.final_state.omega) f.push_back(grid.base.frequency_hz * (1.0 + w));
  fin["frequency_hz"] = f;
  fin["acvg_buses"] = res.series.acvg_buses;
  std::vector<double> v;
  for (const auto& x : res.final_state.acvg_voltage) v.push_back(std::abs(x));
  fin["acvg_voltage_pu"] = v;
  s["final_state"] = fin;
  s["solver"] = {{"steps", res.stats.steps},
                 {"newton_iterations", res.stats.newton_iterations},
                 {"flat_restarts", res.stats.flat_restarts},
                 {"max_algebraic_residual_pu", res.stats.max_algebraic_residual},
                 {"dropped_acvgs", res.stats.dropped_acvgs}};
  write_json(cfg, "summary.json", s);
  std::printf("%s\n", stable ? "stable" : "unstable");
  return 0;
}

int cmd_metrics(const RunConfig& cfg) {
  auto [grid, checksum] = load(cfg);
  const auto events = build_events(cfg, grid);
  if (events.empty()) throw ValidationError("cli: metrics needs a disturbance");
  const auto fleet = fleet_for(cfg, grid);
  Experiment exp(grid, sim_options(cfg));
  const auto nominal = exp.nominal_acvg_voltages();
  const auto without = fluctuation_metrics(exp.run(events, nullptr).series, nominal);
  const auto with = fluctuation_metrics(exp.run(events, fleet ? &*fleet : nullptr).series, nominal);
  const double ds = reduction_pct(without.speed_msd, with.speed_msd);
  const double dv = reduction_pct(without.voltage_msd, with.voltage_msd);

  const auto config = config_json("metrics", cfg, checksum, &events);
  write_csv(cfg, "metrics.csv", config,
            {"speed_msd_without_hz2", "speed_msd_with_hz2", "speed_reduction_pct", "voltage_msd_without_pu2",
             "voltage_msd_with_pu2", "voltage_reduction_pct"},
            {{fmt(without.speed_msd), fmt(with.speed_msd), fmt(ds), fmt(without.voltage_msd), fmt(with.voltage_msd),
              fmt(dv)}});
  json s;
  s["config"] = config;
  s["speed"] = {{"without", without.speed_msd}, {"with", with.speed_msd}, {"reduction_pct", ds}};
  s["voltage"] = {{"without", without.voltage_msd}, {"with", with.voltage_msd}, {"reduction_pct", dv}};
  s["calibration"] = calibration_record(grid);
  write_json(cfg, "metrics.json", s);
  std::printf("speed reduction %.1f%%, voltage reduction %.1f%%\n", ds, dv);
  return 0;
}

CclOptions ccl_options(const RunConfig& cfg) {
  CclOptions o;
  o.fault_start = cfg.fault_start;
  o.resolution = cfg.resolution;
  o.upper = cfg.upper;
  return o;
}

json ccl_json(const CclResult& r) {
  return {{"bus", r.bus},
          {"bracketed", r.bracketed},
          {"t_ccl", r.t_ccl},
          {"stable_at", r.stable_at},
          {"unstable_at", r.unstable_at},
          {"resolution", r.resolution},
          {"simulations", r.simulations}};
}

int cmd_ccl(const RunConfig& cfg) {
  auto [grid, checksum] = load(cfg);
  for (int b : cfg.buses) grid.index_of(b);
  const auto fleet = fleet_for(cfg, grid);
  Experiment exp(grid, sim_options(cfg));
  const auto opts = ccl_options(cfg);
  const std::size_t nb = cfg.buses.size();
  const std::size_t runs = fleet ? 2 : 1;
  std::vector<CclResult> res(nb * runs);
  parallel_for(res.size(), default_thread_count(), [&](std::size_t job) {
    const std::size_t b = job % nb;
    res[job] = find_ccl(exp, job >= nb ? &*fleet : nullptr, cfg.buses[b], opts);
  });

  // ">" marks a value that is only a lower bound (no instability found up to the upper bound).
  auto cell = [](const CclResult& r) { return (r.bracketed ? "" : ">") + fmt(r.t_ccl); };
  std::vector<std::vector<std::string>> rows;
  json table = json::array();
  for (std::size_t b = 0; b < nb; ++b) {
    const auto& a = res[b];
    json row{{"bus", a.bus}, {"without", ccl_json(a)}};
    std::vector<std::string> r{std::to_string(a.bus), cell(a), "", ""};
    if (fleet) {
      const auto& w = res[nb + b];
      row["with"] = ccl_json(w);
      r[2] = cell(w);
      if (a.bracketed && w.bracketed) {
        row["increase_pct"] = ccl_increase_pct(a, w);
        r[3] = fmt(ccl_increase_pct(a, w));
      }
    }
    rows.push_back(r);
    table.push_back(row);
    std::printf("bus %d: %s%s%s\n", a.bus, r[1].c_str(), fleet ? (" -> " + r[2]).c_str() : "",
                r[3].empty() ? "" : (" (" + r[3] + " %)").c_str());
  }
  const auto config = config_json("ccl", cfg, checksum, nullptr);
  write_csv(cfg, "ccl.csv", config, {"bus", "t_ccl_s", "t_ccl_acvg_s", "increase_pct"}, rows);
  json s;
  s["config"] = config;
  s["results"] = table;
  s["calibration"] = calibration_record(grid);
  write_json(cfg, "ccl.json", s);
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  auto [grid, checksum] = load(cfg);
  Experiment exp(grid, sim_options(cfg));
  SweepOptions o;
  o.ccl = ccl_options(cfg);
  o.per_vehicle_kw = cfg.per_vehicle_kw;
  o.saturation_mhz = cfg.saturation_mhz;
  o.threads = default_thread_count();
  const auto points = penetration_sweep(exp, cfg.penetrations, cfg.buses, o);
  const double peak = peak_penetration(points);

  std::vector<std::vector<std::string>> rows;
  json pts = json::array();
  for (const auto& p : points) {
    std::string gaps;
    for (int b : p.gap_buses) gaps += (gaps.empty() ? "" : " ") + std::to_string(b);
    rows.push_back({fmt(p.penetration_pct), std::to_string(p.n_pev), fmt(p.avg_ccl_increase_pct), gaps});
    json ccl = json::array();
    for (const auto& r : p.ccl) ccl.push_back(ccl_json(r));
    pts.push_back({{"penetration_pct", p.penetration_pct},
                   {"n_pev", p.n_pev},
                   {"avg_ccl_increase_pct", p.avg_ccl_increase_pct},
                   {"gap_buses", p.gap_buses},
                   {"ccl", ccl}});
    std::printf("%6s %% (%lld PEVs): %+.2f %%\n", fmt(p.penetration_pct).c_str(), static_cast<long long>(p.n_pev),
                p.avg_ccl_increase_pct);
  }
  std::printf("peak at %s %%\n", fmt(peak).c_str());
  const auto config = config_json("sweep", cfg, checksum, nullptr);
  write_csv(cfg, "sweep.csv", config, {"penetration_pct", "n_pev", "avg_ccl_increase_pct", "gap_buses"}, rows);
  json s;
  s["config"] = config;
  s["points"] = pts;
  s["peak_penetration_pct"] = peak;
  s["calibration"] = calibration_record(grid);
  write_json(cfg, "sweep.json", s);
  return 0;
}

int cmd_validate(const RunConfig& cfg) {
  const std::string text = read_file(cfg.case_path, "case file");
  auto c = load_case(text);
  const auto pf = solve_power_flow(c);
  if (!pf.converged)
    throw NumericalError("validate: power flow did not converge (mismatch " + fmt(pf.max_mismatch) + " pu)");
  c = initialize_machine_constants(std::move(c), pf);
  reduce_case(c);
  std::printf("case %s ok: %zu buses, %zu branches, %zu generators, %zu ACVG buses; power flow %d iterations, "
              "mismatch %.3g pu; checksum %s\n",
              cfg.case_path.c_str(), c.bus_count(), c.branches.size(), c.generators.size(), c.acvg_buses.size(),
              pf.iterations, pf.max_mismatch, fnv1a64_hex(text).c_str());
  return 0;
}

void add_case(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--case", cfg.case_path, "Case file (JSON)")->capture_default_str();
}

void add_run(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--dt", cfg.dt, "Integration step, s")->capture_default_str();
  sub->add_option("--horizon", cfg.horizon, "Simulated time, s")->capture_default_str();
  sub->add_option("--output-interval", cfg.output_interval, "Sample interval, s")->capture_default_str();
  sub->add_option("--per-vehicle-kw", cfg.per_vehicle_kw, "Per-vehicle power cap, kW")->capture_default_str();
  sub->add_option("--saturation-mhz", cfg.saturation_mhz, "Saturation deviation, mHz")->capture_default_str();
  sub->add_option("--output-dir", cfg.output_dir, "Directory for output files")->capture_default_str();
}

void add_shortcuts(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--scenario", cfg.scenario_path, "Scenario file (JSON event array); overrides shortcuts");
  sub->add_option("--fault-bus", cfg.fault_bus, "Bolted fault at this bus");
  sub->add_option("--fault-start", cfg.fault_start, "Fault start, s")->capture_default_str();
  sub->add_option("--fault-duration", cfg.fault_duration, "Fault duration, s");
  sub->add_option("--trip-branch", cfg.trip_branch, "Branch to trip: id or FROM-TO");
  sub->add_option("--trip-start", cfg.trip_start, "Trip time, s")->capture_default_str();
  sub->add_option("--trip-duration", cfg.trip_duration, "Restore after this long, s (0: stays out)");
  sub->add_option("--step-bus", cfg.step_bus, "Load step at this bus");
  sub->add_option("--step-fraction", cfg.step_fraction, "Fractional load change (-0.1 = 10% decrease)");
  sub->add_option("--step-start", cfg.step_start, "Load step time, s")->capture_default_str();
  sub->add_option("--step-hold", cfg.step_hold, "Revert after this long, s (0: permanent)");
}

void add_bisection(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--buses", cfg.buses, "Fault buses")->delimiter(',')->capture_default_str();
  sub->add_option("--fault-start", cfg.fault_start, "Fault start, s")->capture_default_str();
  sub->add_option("--resolution", cfg.resolution, "Bisection resolution, s")->capture_default_str();
  sub->add_option("--upper", cfg.upper, "Longest fault duration tried, s")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gridtide: transient stability with frequency-controlled PEV fleets"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto* sim = app.add_subcommand("simulate", "Run one scenario; writes timeseries.csv and summary.json");
  add_case(sim, cfg);
  add_run(sim, cfg);
  add_shortcuts(sim, cfg);
  sim->add_option("--n-pev", cfg.n_pev, "Vehicles in the fleet (0: no control)")->capture_default_str();

  auto* met = app.add_subcommand("metrics", "Fluctuation reductions with vs without control; writes metrics.csv");
  add_case(met, cfg);
  add_run(met, cfg);
  add_shortcuts(met, cfg);
  met->add_option("--n-pev", cfg.n_pev, "Vehicles in the controlled run")->capture_default_str();

  auto* ccl = app.add_subcommand("ccl", "Critical clearing times with and without control; writes ccl.csv");
  add_case(ccl, cfg);
  add_run(ccl, cfg);
  add_bisection(ccl, cfg);
  ccl->add_option("--n-pev", cfg.n_pev, "Vehicles in the controlled runs (0: baseline only)")->capture_default_str();

  auto* swp = app.add_subcommand("sweep", "Average CCL increase against PEV penetration; writes sweep.csv");
  add_case(swp, cfg);
  add_run(swp, cfg);
  add_bisection(swp, cfg);
  swp->add_option("--penetrations", cfg.penetrations, "Penetration levels, percent (must include 0)")
      ->delimiter(',')
      ->capture_default_str();

  auto* val = app.add_subcommand("validate", "Lint a case file and solve its power flow");
  add_case(val, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(cfg);
    if (*met) return cmd_metrics(cfg);
    if (*ccl) return cmd_ccl(cfg);
    if (*swp) return cmd_sweep(cfg);
    if (*val) return cmd_validate(cfg);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

#include "gridtide/analysis.hpp"

namespace gridtide {

FluctuationReport fluctuation_metrics(const TimeSeries& ts, std::span<const double> nominal_voltages) {
  if (ts.empty()) throw ValidationError("metrics: empty time series");
  if (nominal_voltages.size() != ts.acvg_buses.size())
    throw ValidationError("metrics: nominal voltage count does not match monitored buses");
  FluctuationReport r;
  double speed = 0.0, volt = 0.0;
  std::size_t ns = 0, nv = 0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    for (double w : ts.omega_hz[k]) {
      speed += w * w;
      ++ns;
    }
    for (std::size_t j = 0; j < ts.v_pu[k].size(); ++j) {
      const double d = ts.v_pu[k][j] - nominal_voltages[j];
      volt += d * d;
      ++nv;
    }
  }
  r.speed_msd = ns ? speed / static_cast<double>(ns) : 0.0;
  r.voltage_msd = nv ? volt / static_cast<double>(nv) : 0.0;
  return r;
}

double reduction_pct(double without, double with) {
  if (!(without > 0.0)) return 0.0;
  return 100.0 * (1.0 - with / without);
}

bool is_stable(const TimeSeries& ts, const StabilityCriteria& criteria) {
  if (ts.empty()) throw ValidationError("stability: empty time series");
  const double t_end = ts.times.back();
  if (t_end - ts.times.front() < criteria.final_window_s)
    throw ValidationError("stability: time series shorter than the final frequency window");
  const double spread_limit = criteria.max_angle_spread_deg * std::numbers::pi / 180.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const auto& phi = ts.phi_rad[k];
    if (phi.empty()) continue;
    const auto [lo, hi] = std::minmax_element(phi.begin(), phi.end());
    if (*hi - *lo >= spread_limit) return false;
    if (t_end - ts.times[k] <= criteria.final_window_s + 1e-12)
      for (double w : ts.omega_hz[k])
        if (!(std::abs(w) < criteria.frequency_band_hz)) return false;
  }
  return true;
}

Experiment::Experiment(NetworkCase initialized, SimulationOptions sim, ScenarioOptions scenario,
                       StabilityCriteria stability)
    : grid_(std::move(initialized)),
      machines_(MachineSet::from_case(grid_)),
      equilibrium_(initial_state(grid_)),
      sim_(sim),
      scenario_(scenario),
      stability_(stability) {}

std::vector<double> Experiment::nominal_acvg_voltages() const {
  std::vector<double> v;
  for (const auto& x : equilibrium_.acvg_voltage) v.push_back(std::abs(x));
  return v;
}

SimulationResult Experiment::run(const std::vector<DisturbanceEvent>& events, const AcvgFleet* fleet) const {
  const auto scenario = compile_scenario(grid_, events, scenario_);
  std::optional<FleetController> ctl;
  if (fleet) ctl.emplace(*fleet, grid_.base.mva_base);
  return simulate(equilibrium_, scenario, machines_, ctl ? &*ctl : nullptr, grid_.base.frequency_hz, sim_);
}

bool Experiment::stable_after(const std::vector<DisturbanceEvent>& events, const AcvgFleet* fleet) const {
  const auto scenario = compile_scenario(grid_, events, scenario_);
  std::optional<FleetController> ctl;
  if (fleet) ctl.emplace(*fleet, grid_.base.mva_base);
  SimulationOptions opts = sim_;
  opts.abort_angle_spread = stability_.max_angle_spread_deg * std::numbers::pi / 180.0;
  try {
    const auto res =
        simulate(equilibrium_, scenario, machines_, ctl ? &*ctl : nullptr, grid_.base.frequency_hz, opts);
    if (res.aborted) return false;
    return is_stable(res.series, stability_);
  } catch (const StepFailure&) {
    return false;
  }
}

CclResult find_ccl(const Experiment& exp, const AcvgFleet* fleet, int bus, const CclOptions& opts) {
  if (!(opts.resolution > 0.0)) throw ValidationError("ccl: resolution must be > 0");
  if (!(opts.upper > opts.resolution)) throw ValidationError("ccl: upper bound must exceed the resolution");
  exp.grid().index_of(bus);
  const double dt = exp.sim().dt;
  steps_for(opts.resolution, dt, "ccl resolution");
  steps_for(opts.fault_start, dt, "fault start");
  const long top = steps_for(opts.upper, opts.resolution, "ccl upper bound");
  if (opts.fault_start + opts.upper > exp.sim().horizon - exp.stability().final_window_s)
    throw ValidationError("ccl: horizon too short for the upper fault duration");

  CclResult r;
  r.bus = bus;
  r.resolution = opts.resolution;
  auto stable_for = [&](long k) {
    ++r.simulations;
    if (k == 0) return exp.stable_after({}, fleet);
    return exp.stable_after(fault_at(bus, opts.fault_start, static_cast<double>(k) * opts.resolution), fleet);
  };

  long lo = 0, hi = top;
  if (!stable_for(lo)) throw NumericalError("ccl: undisturbed system is not stable");
  if (stable_for(hi)) {
    r.bracketed = false;
    r.t_ccl = r.stable_at = r.unstable_at = static_cast<double>(hi) * opts.resolution;
    return r;
  }
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    (stable_for(mid) ? lo : hi) = mid;
  }
  r.bracketed = true;
  r.stable_at = static_cast<double>(lo) * opts.resolution;
  r.unstable_at = static_cast<double>(hi) * opts.resolution;
  r.t_ccl = r.stable_at;
  return r;
}

double ccl_increase_pct(const CclResult& without, const CclResult& with) {
  if (!(without.t_ccl > 0.0)) return 0.0;
  return 100.0 * (with.t_ccl / without.t_ccl - 1.0);
}

std::int64_t vehicles_at(double penetration_pct, double total_vehicles) {
  if (!(penetration_pct >= 0.0)) throw ValidationError("sweep: penetration must be >= 0");
  return static_cast<std::int64_t>(std::llround(penetration_pct / 100.0 * total_vehicles));
}

std::vector<SweepPoint> penetration_sweep(const Experiment& exp, std::span<const double> penetrations_pct,
                                          std::span<const int> fault_buses, const SweepOptions& opts) {
  if (std::find(penetrations_pct.begin(), penetrations_pct.end(), 0.0) == penetrations_pct.end())
    throw ValidationError("sweep: penetrations must include 0 (baseline)");
  if (fault_buses.empty()) throw ValidationError("sweep: no fault buses");
  for (int b : fault_buses) exp.grid().index_of(b);

  std::vector<SweepPoint> points(penetrations_pct.size());
  std::vector<AcvgFleet> fleets;
  for (std::size_t p = 0; p < points.size(); ++p) {
    points[p].penetration_pct = penetrations_pct[p];
    points[p].n_pev = vehicles_at(penetrations_pct[p], opts.total_vehicles);
    points[p].ccl.resize(fault_buses.size());
    fleets.push_back(build_fleet(exp.grid(), points[p].n_pev, opts.per_vehicle_kw, opts.saturation_mhz));
  }

  const std::size_t nb = fault_buses.size();
  std::vector<char> failed(points.size() * nb, 0);
  parallel_for(points.size() * nb, opts.threads, [&](std::size_t job) {
    const std::size_t p = job / nb, b = job % nb;
    try {
      points[p].ccl[b] = find_ccl(exp, points[p].n_pev > 0 ? &fleets[p] : nullptr, fault_buses[b], opts.ccl);
    } catch (const std::exception&) {
      failed[job] = 1;
      points[p].ccl[b].bus = fault_buses[b];
    }
  });

  const std::size_t base =
      static_cast<std::size_t>(std::find(penetrations_pct.begin(), penetrations_pct.end(), 0.0) - penetrations_pct.begin());
  for (std::size_t p = 0; p < points.size(); ++p) {
    double sum = 0.0;
    int count = 0;
    for (std::size_t b = 0; b < nb; ++b) {
      const auto& ref = points[base].ccl[b];
      const auto& cur = points[p].ccl[b];
      if (failed[p * nb + b] || failed[base * nb + b] || !ref.bracketed || !cur.bracketed) {
        points[p].gap_buses.push_back(fault_buses[b]);
        continue;
      }
      sum += ccl_increase_pct(ref, cur);
      ++count;
    }
    points[p].avg_ccl_increase_pct = (p == base || count == 0) ? 0.0 : sum / count;
  }
  return points;
}

double peak_penetration(std::span<const SweepPoint> sweep) {
  if (sweep.empty()) throw ValidationError("sweep: empty");
  const auto it = std::max_element(sweep.begin(), sweep.end(), [](const SweepPoint& a, const SweepPoint& b) {
    return a.avg_ccl_increase_pct < b.avg_ccl_increase_pct;
  });
  return it->penetration_pct;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::jthread> workers;
  for (unsigned t = 0; t < threads; ++t)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  workers.clear();
  if (first_error) std::rethrow_exception(first_error);
}

unsigned default_thread_count() {
  if (const char* env = std::getenv("GRIDTIDE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace gridtide

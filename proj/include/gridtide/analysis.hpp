#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridtide/control.hpp"
#include "gridtide/dynamics.hpp"
#include "gridtide/scenarios.hpp"

namespace gridtide {

struct FluctuationReport {
  double speed_msd = 0.0;    // Hz^2
  double voltage_msd = 0.0;  // pu^2
};

/// Mean squared deviations over every recorded sample: generator speeds
/// from nominal frequency, ACVG voltages from `nominal_voltages`.
FluctuationReport fluctuation_metrics(const TimeSeries& ts, std::span<const double> nominal_voltages);

/// 100 (1 - with / without); zero when `without` is zero.
double reduction_pct(double without, double with);

struct StabilityCriteria {
  double max_angle_spread_deg = 180.0;
  double frequency_band_hz = 1.0;
  double final_window_s = 2.0;
};

/// Rotor-angle spread stays below the limit for the whole run and every
/// generator frequency sits inside the band over the final window.
bool is_stable(const TimeSeries& ts, const StabilityCriteria& criteria = {});

/// An initialized case plus the settings shared by every run on it.
class Experiment {
 public:
  explicit Experiment(NetworkCase initialized, SimulationOptions sim = {}, ScenarioOptions scenario = {},
                      StabilityCriteria stability = {});

  const NetworkCase& grid() const { return grid_; }
  const MachineSet& machines() const { return machines_; }
  const SystemState& equilibrium() const { return equilibrium_; }
  const SimulationOptions& sim() const { return sim_; }
  const StabilityCriteria& stability() const { return stability_; }
  std::vector<double> nominal_acvg_voltages() const;

  /// Full-horizon run. A null fleet leaves the ACVGs idle.
  SimulationResult run(const std::vector<DisturbanceEvent>& events, const AcvgFleet* fleet) const;

  /// Stability verdict, stopping early once synchronism is lost. A network
  /// solve failure counts as unstable.
  bool stable_after(const std::vector<DisturbanceEvent>& events, const AcvgFleet* fleet) const;

 private:
  NetworkCase grid_;
  MachineSet machines_;
  SystemState equilibrium_;
  SimulationOptions sim_;
  ScenarioOptions scenario_;
  StabilityCriteria stability_;
};

struct CclOptions {
  double fault_start = 1.0;
  double resolution = 1e-3;
  double upper = 1.0;
};

struct CclResult {
  int bus = 0;
  bool bracketed = false;  // false: still stable at the upper bound
  double t_ccl = 0.0;      // longest verified-stable fault duration
  double resolution = 0.0;
  double stable_at = 0.0;
  double unstable_at = 0.0;
  int simulations = 0;
};

/// Bisection on the fault duration over the resolution grid.
CclResult find_ccl(const Experiment& exp, const AcvgFleet* fleet, int bus, const CclOptions& opts = {});

/// Percent increase of t_ccl with control relative to without.
double ccl_increase_pct(const CclResult& without, const CclResult& with);

struct SweepOptions {
  CclOptions ccl;
  double total_vehicles = 5'000'000.0;
  double per_vehicle_kw = 10.0;
  double saturation_mhz = 100.0;
  unsigned threads = 1;
};

struct SweepPoint {
  double penetration_pct = 0.0;
  std::int64_t n_pev = 0;
  double avg_ccl_increase_pct = 0.0;
  std::vector<CclResult> ccl;   // one per fault bus, same order
  std::vector<int> gap_buses;   // excluded from the average
};

std::int64_t vehicles_at(double penetration_pct, double total_vehicles);

std::vector<SweepPoint> penetration_sweep(const Experiment& exp, std::span<const double> penetrations_pct,
                                          std::span<const int> fault_buses, const SweepOptions& opts = {});

/// Penetration of the sweep point with the largest average increase.
double peak_penetration(std::span<const SweepPoint> sweep);

/// Runs fn(0..count-1) on up to `threads` workers. Each index writes only
/// its own output slot, so results are ordered regardless of scheduling.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

/// GRIDTIDE_THREADS if set, else hardware concurrency (at least 1).
unsigned default_thread_count();

}  // namespace gridtide

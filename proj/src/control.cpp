#include <cmath>
#include <numeric>

#include "gridtide/control.hpp"
#include "gridtide/error.hpp"

namespace gridtide {

double AcvgFleet::p_max_total_kw() const {
  return std::accumulate(p_max_bus_kw.begin(), p_max_bus_kw.end(), 0.0);
}

AcvgFleet build_fleet(const NetworkCase& c, std::int64_t n_pev, double per_vehicle_kw,
                      double saturation_mhz) {
  if (n_pev < 0) throw ValidationError("fleet: n_pev must be >= 0");
  if (!(per_vehicle_kw >= 0.0)) throw ValidationError("fleet: per-vehicle power must be >= 0");
  if (!(saturation_mhz > 0.0)) throw ValidationError("fleet: saturation deviation must be > 0");
  if (c.acvg_buses.empty()) throw ValidationError("fleet: case has no ACVG buses");

  AcvgFleet fleet;
  fleet.n_pev_total = n_pev;
  fleet.per_vehicle_kw = per_vehicle_kw;
  fleet.saturation_hz = saturation_mhz / 1000.0;
  fleet.bus_ids = c.acvg_buses;

  std::vector<double> load(c.m(), 0.0);
  for (const auto& l : c.loads)
    for (std::size_t j = 0; j < c.m(); ++j)
      if (c.acvg_buses[j] == l.bus) load[j] += l.p_mw;
  const double total = std::accumulate(load.begin(), load.end(), 0.0);
  if (!(total > 0.0)) throw ValidationError("fleet: ACVG buses carry no real-power load; shares undefined");

  const double p_max = per_vehicle_kw * static_cast<double>(n_pev);
  for (double p : load) {
    const double share = p / total;
    fleet.bus_share.push_back(share);
    fleet.p_max_bus_kw.push_back(p_max * share);
    fleet.h_kw_per_hz.push_back(p_max * share / fleet.saturation_hz);
  }
  return fleet;
}

ControlOutput control_power(double delta_omega_hz, const AcvgFleet& fleet) {
  ControlOutput out;
  out.p_acvg_mw.resize(fleet.size());
  out.saturated.resize(fleet.size());
  const double sat = fleet.saturation_hz;
  // Written as p_max * (dw / sat) so the linear branch never exceeds the cap.
  const double ratio = delta_omega_hz <= -sat ? -1.0 : delta_omega_hz <= sat ? delta_omega_hz / sat : 1.0;
  const bool clamped = delta_omega_hz <= -sat || delta_omega_hz > sat;
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    out.p_acvg_mw[i] = fleet.p_max_bus_kw[i] * ratio / 1000.0;
    out.saturated[i] = clamped;
  }
  return out;
}

double average_frequency_deviation(std::span<const double> omega_pu, double f_base_hz) {
  if (omega_pu.empty()) throw ValidationError("average frequency deviation needs at least one generator");
  const double sum = std::accumulate(omega_pu.begin(), omega_pu.end(), 0.0);
  return f_base_hz * sum / static_cast<double>(omega_pu.size());
}

FleetController::FleetController(AcvgFleet fleet, double mva_base)
    : fleet_(std::move(fleet)), mva_base_(mva_base) {}

void FleetController::power_pu(double delta_omega_hz, std::span<double> out) const {
  if (out.size() != fleet_.size()) throw ValidationError("controller: ACVG count mismatch");
  const auto p = control_power(delta_omega_hz, fleet_);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = p.p_acvg_mw[i] / mva_base_;
}

}  // namespace gridtide

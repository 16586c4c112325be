#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gridtide/netmodel.hpp"

namespace gridtide {

/// Aggregated PEV fleet, one group per ACVG bus. Fleet quantities are in
/// kW and kW/Hz.
struct AcvgFleet {
  std::int64_t n_pev_total = 0;
  double per_vehicle_kw = 10.0;
  double saturation_hz = 0.1;
  std::vector<int> bus_ids;         // ascending, matches NetworkCase::acvg_buses
  std::vector<double> bus_share;    // load-proportional, sums to 1
  std::vector<double> h_kw_per_hz;  // control coefficient
  std::vector<double> p_max_bus_kw;

  std::size_t size() const { return bus_ids.size(); }
  double p_max_total_kw() const;
};

/// Per-bus vehicle shares follow the real-power load at each ACVG bus.
AcvgFleet build_fleet(const NetworkCase& c, std::int64_t n_pev, double per_vehicle_kw = 10.0,
                      double saturation_mhz = 100.0);

struct ControlOutput {
  std::vector<double> p_acvg_mw;  // positive = consuming
  std::vector<bool> saturated;
};

/// Linear response to the average frequency deviation, held at the bus cap
/// once |dw| reaches the saturation deviation.
ControlOutput control_power(double delta_omega_hz, const AcvgFleet& fleet);

/// Mean of per-unit speed deviations, in Hz.
double average_frequency_deviation(std::span<const double> omega_pu, double f_base_hz);

/// Maps an average frequency deviation to ACVG powers in system per-unit.
class AcvgDispatch {
 public:
  virtual ~AcvgDispatch() = default;
  virtual void power_pu(double delta_omega_hz, std::span<double> out) const = 0;
};

/// The fleet control law as a dispatch source for the simulator.
class FleetController final : public AcvgDispatch {
 public:
  FleetController(AcvgFleet fleet, double mva_base);
  void power_pu(double delta_omega_hz, std::span<double> out) const override;
  const AcvgFleet& fleet() const { return fleet_; }

 private:
  AcvgFleet fleet_;
  double mva_base_;
};

}  // namespace gridtide

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "gridtide/netmodel.hpp"

namespace gridtide {

enum class EventKind { bus_fault, bus_fault_clear, branch_trip, branch_restore, load_step, generator_trip };

std::string_view to_string(EventKind kind);
EventKind event_kind_from_string(std::string_view s);

/// A timed network mutation. `bus` targets faults, load steps and generator
/// trips; `branch` targets trips and restores. For load steps `magnitude` is
/// the fractional change relative to the original load (-0.1 = 10 % less).
struct DisturbanceEvent {
  EventKind kind = EventKind::bus_fault;
  double t = 0.0;
  int bus = 0;
  int branch = 0;
  double magnitude = 0.0;
};

/// Network in force from t_start until the next epoch begins.
struct Epoch {
  double t_start = 0.0;
  ReducedNetwork net;
  /// Rows (0-based within the ACVG block) of ACVG buses under a bolted fault.
  std::vector<std::size_t> faulted_acvg;
  /// Any bolted fault present in this epoch.
  bool fault_active = false;
};

struct DisturbanceScenario {
  std::vector<DisturbanceEvent> events;  // sorted by time, stable
  std::vector<Epoch> epochs;             // epochs[0].t_start == 0
};

struct ScenarioOptions {
  /// Bolted three-phase fault shunt, per-unit.
  Complex fault_admittance{0.0, -1e6};
};

std::vector<DisturbanceEvent> fault_at(int bus, double t_on, double duration);
std::vector<DisturbanceEvent> branch_outage(int branch, double t_on, double duration);
/// Load step at t_on; a positive `hold` restores the original load after it.
std::vector<DisturbanceEvent> load_step(int bus, double t_on, double fraction, double hold = 0.0);

/// Apply one event to a case (mutates topology, shunts, load scale).
void apply_event(NetworkCase& c, const DisturbanceEvent& e, const ScenarioOptions& opts = {});

/// Build one Kron-reduced network per epoch. The case must be initialized.
DisturbanceScenario compile_scenario(const NetworkCase& c, std::vector<DisturbanceEvent> events,
                                     const ScenarioOptions& opts = {});

/// Events from a JSON array document.
std::vector<DisturbanceEvent> parse_scenario(std::string_view json_text);
std::string scenario_to_json(const std::vector<DisturbanceEvent>& events);

}  // namespace gridtide

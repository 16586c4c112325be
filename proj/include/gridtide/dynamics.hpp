#pragma once

#include <optional>
#include <span>
#include <vector>

#include "gridtide/control.hpp"
#include "gridtide/error.hpp"
#include "gridtide/netmodel.hpp"
#include "gridtide/scenarios.hpp"

namespace gridtide {

/// Per-generator constants of the swing equations, system per-unit.
struct MachineSet {
  std::vector<double> inertia;     // M_i = 2H_i, s
  std::vector<double> damping;     // D_i, pu power / pu speed
  std::vector<double> mech_power;  // P_mi, pu
  std::vector<double> emf;         // |E_i|, pu
  double omega_base = 0.0;         // rad/s at nominal frequency
  double mva_base = 100.0;

  static MachineSet from_case(const NetworkCase& c);
  std::size_t size() const { return inertia.size(); }
};

/// Rotor angles (rad), speed deviations (pu) and ACVG bus voltage phasors.
struct SystemState {
  double t = 0.0;
  std::vector<double> phi;
  std::vector<double> omega;
  std::vector<Complex> acvg_voltage;
};

/// Pre-disturbance equilibrium of an initialized case.
SystemState initial_state(const NetworkCase& c);

struct AlgebraicSolveReport {
  bool converged = false;
  bool singular = false;
  int iterations = 0;
  double final_residual = 0.0;
};

struct NetworkSolveOptions {
  double tolerance = 1e-8;
  int max_iterations = 20;
};

/// Real power delivered by each generator through the reduced network.
std::vector<double> electrical_power(std::span<const double> phi, std::span<const Complex> acvg_voltage,
                                     const ReducedNetwork& net, std::span<const double> emf);

/// Max-norm of the ACVG real/reactive power balance residuals.
double algebraic_residual(std::span<const double> phi, std::span<const Complex> acvg_voltage,
                          std::span<const double> acvg_power_pu, const ReducedNetwork& net,
                          std::span<const double> emf);

struct NetworkSolution {
  std::vector<Complex> voltage;
  AlgebraicSolveReport report;
};

/// Newton-Raphson on the ACVG power balance in polar unknowns, starting
/// from `guess`. Positive acvg_power_pu is consumption.
NetworkSolution solve_network(std::span<const double> phi, std::span<const double> acvg_power_pu,
                              const ReducedNetwork& net, std::span<const double> emf,
                              std::span<const Complex> guess, const NetworkSolveOptions& opts = {});

struct Derivatives {
  std::vector<double> dphi;
  std::vector<double> domega;
};

/// Swing equations. Angle rates are omega_base * omega; tripped machines are
/// frozen.
Derivatives swing_rhs(const SystemState& s, const ReducedNetwork& net, const MachineSet& machines);

/// Thrown when the network algebra cannot be solved inside a step.
class StepFailure : public NumericalError {
 public:
  StepFailure(const std::string& what, double t, AlgebraicSolveReport report)
      : NumericalError(what), t_(t), report_(report) {}
  double time() const { return t_; }
  const AlgebraicSolveReport& report() const { return report_; }

 private:
  double t_;
  AlgebraicSolveReport report_;
};

struct StepStats {
  long newton_iterations = 0;
  long flat_restarts = 0;
  double max_residual = 0.0;
};

/// Everything a step needs besides the state.
///
/// While a bolted fault is active, a network solve that fails even from a
/// flat start triggers the fault fallback: ACVGs at faulted buses drop to
/// zero power, then the remaining ACVG with the lowest voltage, one at a
/// time, until the network solves. Dropped ACVGs stay at zero for the rest
/// of the epoch.
struct StepContext {
  const ReducedNetwork* net = nullptr;
  const MachineSet* machines = nullptr;
  const AcvgDispatch* dispatch = nullptr;  // null: ACVGs idle
  double f_base_hz = 60.0;
  NetworkSolveOptions newton;
  bool fault_active = false;
  std::span<const std::size_t> faulted_acvg;
  std::vector<char> dropped;  // per ACVG row, latched within an epoch
  /// Control input held over the whole step instead of per-stage values.
  std::optional<double> held_delta_omega_hz;
  StepStats stats;
};

/// ACVG powers (pu) the dispatch requests for the given speeds.
std::vector<double> dispatch_power(const StepContext& ctx, std::span<const double> omega);

/// Re-solve the algebraic variables of `s` in place (used at event
/// boundaries and at start-up). Throws StepFailure.
void settle_network(SystemState& s, StepContext& ctx);

/// One classical RK4 step on the differential variables with the network
/// re-solved at every stage. Throws StepFailure.
SystemState step(const SystemState& s, double dt, StepContext& ctx);

/// Sampled trajectory. Per-sample rows, columns in ascending bus order.
struct TimeSeries {
  std::vector<int> generator_buses;
  std::vector<int> acvg_buses;
  std::vector<double> times;
  std::vector<std::vector<double>> omega_hz;  // speed deviation, Hz
  std::vector<std::vector<double>> phi_rad;
  std::vector<std::vector<double>> v_pu;
  std::vector<std::vector<double>> p_acvg_mw;
  std::vector<double> delta_omega_hz;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
};

struct SimulationOptions {
  double dt = 1e-3;
  double horizon = 10.0;
  double output_interval = 0.01;
  NetworkSolveOptions newton;
  double control_delay_s = 0.0;
  /// Stop as soon as the rotor-angle spread exceeds this (rad).
  std::optional<double> abort_angle_spread;
};

struct SimulationStats {
  long steps = 0;
  long newton_iterations = 0;
  long flat_restarts = 0;
  double max_algebraic_residual = 0.0;
  /// ACVGs dropped by the fault fallback, summed over epochs.
  int dropped_acvgs = 0;
};

struct SimulationResult {
  TimeSeries series;
  SystemState final_state;
  SimulationStats stats;
  bool aborted = false;
};

/// Integrate over [0, horizon], swapping in each epoch's network at its
/// start time. Event times must sit on step boundaries.
SimulationResult simulate(const SystemState& initial, const DisturbanceScenario& scenario,
                          const MachineSet& machines, const AcvgDispatch* dispatch, double f_base_hz,
                          const SimulationOptions& opts = {});

/// Throws ValidationError unless t is an integer multiple of dt.
long steps_for(double t, double dt, const char* what);

}  // namespace gridtide

#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace gridtide {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

enum class BusKind { generator, acvg, stub };

std::string_view to_string(BusKind kind);

struct SystemBase {
  double mva_base = 100.0;
  double frequency_hz = 60.0;
};

struct Bus {
  int id = 0;
  BusKind kind = BusKind::stub;
  double base_voltage_kv = 0.0;
  /// True for ACVG buses and for generator buses that also host an ACVG.
  bool hosts_acvg = false;
};

/// Pi-equivalent branch. Admittances are per-unit on the system base. An
/// off-nominal tap (from side) keeps the nodal matrix symmetric.
struct Branch {
  int id = 0;
  int from_bus = 0;
  int to_bus = 0;
  Complex series_admittance;
  Complex shunt_admittance_half;
  double tap = 1.0;
  bool in_service = true;
};

/// Classical machine: constant EMF behind transient reactance.
/// All quantities per-unit on the system base; inertia_m = 2H in seconds.
struct Generator {
  int bus = 0;
  double transient_reactance_x = 0.0;
  double inertia_m = 0.0;
  double damping_d = 0.0;
  double p_setpoint = 0.0;
  double v_setpoint = 1.0;
  bool is_swing = false;
  bool in_service = true;
  // Set by initialize_machine_constants.
  double emf_magnitude = 0.0;
  double emf_angle = 0.0;
  double mech_power_pm = 0.0;
};

struct ClassicalLoad {
  int bus = 0;
  double p_mw = 0.0;
  double q_mvar = 0.0;
  /// (P - jQ)/|V|^2 in per-unit, populated after power-flow initialization.
  std::optional<Complex> equivalent_admittance;
  /// Multiplier applied to the admittance (load steps).
  double scale = 1.0;
};

/// Extra shunt admittance at a bus (used for bolted faults).
struct BusShunt {
  int bus = 0;
  Complex admittance;
};

/// Full grid description. Buses are kept in internal order: generator
/// buses first (ascending id), then ACVG-only buses, then stub buses.
struct NetworkCase {
  SystemBase base;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;  // same order as the generator buses
  std::vector<ClassicalLoad> loads;
  std::vector<int> acvg_buses;        // ascending bus id
  std::vector<BusShunt> shunts;

  /// Solved pre-disturbance voltages in internal bus order; empty until
  /// initialize_machine_constants has run.
  std::vector<Complex> solved_voltage;

  /// Free-form metadata carried through from the case file (provenance,
  /// calibration record).
  std::string provenance;
  std::string calibration_json;

  std::size_t n() const { return generators.size(); }
  std::size_t m() const { return acvg_buses.size(); }
  std::size_t bus_count() const { return buses.size(); }
  bool initialized() const { return !solved_voltage.empty(); }

  /// Internal index of a bus id; throws ValidationError if absent.
  std::size_t index_of(int bus_id) const;
  bool has_bus(int bus_id) const;
  /// Branch with the given id; throws ValidationError if absent.
  const Branch& branch(int branch_id) const;
  Branch& branch(int branch_id);
  /// First branch joining the two buses (either orientation).
  std::optional<int> find_branch(int bus_a, int bus_b) const;

  std::map<int, std::size_t> bus_index;
};

/// Parse and validate a JSON case document. Electrical quantities are in
/// physical units (MW, MVAr) or per-unit on machine base; everything is
/// converted to system per-unit here.
NetworkCase load_case(std::string_view case_text);
NetworkCase load_case_file(const std::filesystem::path& path);

/// Re-run structural validation and internal renumbering on a case that was
/// built or mutated in code.
void finalize_case(NetworkCase& c);

struct PowerFlowOptions {
  double tolerance = 1e-8;
  int max_iterations = 50;
};

struct PowerFlowSolution {
  std::vector<Complex> voltages;    // internal bus order, per-unit
  std::vector<Complex> injections;  // net complex power injected, per-unit
  bool converged = false;
  int iterations = 0;
  double max_mismatch = 0.0;
};

/// Newton-Raphson AC power flow on the full network. Loads are constant
/// P/Q, generator buses are PV, the swing generator bus is the slack.
/// Returns converged=false after max_iterations; throws NumericalError on a
/// singular Jacobian.
PowerFlowSolution solve_power_flow(const NetworkCase& c,
                                   const PowerFlowOptions& opts = {});

/// Fix EMFs, mechanical powers and load admittances from a converged power
/// flow.
NetworkCase initialize_machine_constants(NetworkCase c,
                                         const PowerFlowSolution& pf);

/// load_case + solve_power_flow + initialize_machine_constants.
NetworkCase prepare_case(const std::filesystem::path& path);
NetworkCase prepare_case(NetworkCase c);

struct AdmittanceMatrix {
  ComplexMatrix entries;
  std::vector<int> bus_ids;  // row -> bus id (internal order)
  std::size_t order() const { return bus_ids.size(); }
};

enum class LoadHandling { exclude, include };

AdmittanceMatrix assemble_admittance(const NetworkCase& c, LoadHandling loads);

/// Reduced network over [generator internal buses, ACVG buses].
struct ReducedNetwork {
  ComplexMatrix y_red;
  std::vector<int> generator_buses;  // row i < n: internal bus of generator i
  std::vector<int> acvg_buses;       // row n + j: ACVG bus j
  std::vector<bool> generator_online;
  std::size_t n() const { return generator_buses.size(); }
  std::size_t m() const { return acvg_buses.size(); }
};

/// Schur complement Y_kk - Y_ke Y_ee^-1 Y_ek of a nodal matrix. Throws
/// NumericalError if the eliminated block is singular.
ComplexMatrix kron_reduce(const ComplexMatrix& y, std::span<const std::size_t> keep,
                          std::span<const std::size_t> eliminate);

/// Add fictitious generator internal buses and reduce to the retained set.
ReducedNetwork augment_and_reduce(const AdmittanceMatrix& y_bus, const NetworkCase& c);

/// assemble_admittance(include) + augment_and_reduce.
ReducedNetwork reduce_case(const NetworkCase& c);

}  // namespace gridtide

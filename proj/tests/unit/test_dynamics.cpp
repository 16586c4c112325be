#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "gridtide/analysis.hpp"
#include "gridtide/dynamics.hpp"

using namespace gridtide;

namespace {

NetworkCase three_machine() { return prepare_case(load_case(fixtures::three_machine_json())); }

// Gauss-Seidel sweep on the ACVG rows: V_j = (conj(S_j / V_j) - sum_{k != j} Y_jk V_k) / Y_jj,
// with the injection S_j = -p_j (positive p consumes).
std::vector<Complex> gauss_seidel(const ReducedNetwork& net, std::span<const double> phi, std::span<const double> emf,
                                  std::span<const double> p, std::vector<Complex> v) {
  const std::size_t n = net.n(), m = net.m();
  for (int sweep = 0; sweep < 20000; ++sweep) {
    double change = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const auto r = static_cast<Eigen::Index>(n + j);
      Complex acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += net.y_red(r, static_cast<Eigen::Index>(i)) * std::polar(emf[i], phi[i]);
      for (std::size_t k = 0; k < m; ++k)
        if (k != j) acc += net.y_red(r, static_cast<Eigen::Index>(n + k)) * v[k];
      const Complex next = (std::conj(Complex(-p[j], 0.0) / v[j]) - acc) / net.y_red(r, r);
      change = std::max(change, std::abs(next - v[j]));
      v[j] = next;
    }
    if (change < 1e-13) break;
  }
  return v;
}

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("equilibrium: zero derivatives and zero residual") {
  const auto c = three_machine();
  const auto net = reduce_case(c);
  const auto ms = MachineSet::from_case(c);
  const auto s = initial_state(c);
  const std::vector<double> zero(net.m(), 0.0);
  CHECK(algebraic_residual(s.phi, s.acvg_voltage, zero, net, ms.emf) < 1e-9);
  const auto d = swing_rhs(s, net, ms);
  for (std::size_t i = 0; i < net.n(); ++i) {
    CHECK(std::abs(d.dphi[i]) < 1e-12);
    CHECK(std::abs(d.domega[i]) < 1e-9);
  }
}

TEST_CASE("swing right-hand side, worked example") {
  const auto c = three_machine();
  const auto net = reduce_case(c);
  const auto ms = MachineSet::from_case(c);
  auto s = initial_state(c);
  s.omega = {0.01, -0.02};
  const auto pe = electrical_power(s.phi, s.acvg_voltage, net, ms.emf);
  const auto d = swing_rhs(s, net, ms);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(d.dphi[i] == doctest::Approx(2.0 * std::numbers::pi * 60.0 * s.omega[i]));
    CHECK(d.domega[i] == doctest::Approx((ms.mech_power[i] - ms.damping[i] * s.omega[i] - pe[i]) / ms.inertia[i]));
  }
  // machine constants in system per-unit: M = 2H S/Sb, D scaled the same way
  CHECK(ms.inertia[0] == doctest::Approx(2.0 * 4.0 * 2.0));
  CHECK(ms.damping[0] == doctest::Approx(2.0 * 2.0));
}

TEST_CASE("angle reference invariance") {
  const auto c = three_machine();
  const auto net = reduce_case(c);
  const auto ms = MachineSet::from_case(c);
  auto s = initial_state(c);
  s.phi[1] += 0.2;
  auto shifted = s;
  const double shift = 0.7;
  for (auto& p : shifted.phi) p += shift;
  for (auto& v : shifted.acvg_voltage) v *= std::polar(1.0, shift);
  const auto a = swing_rhs(s, net, ms), b = swing_rhs(shifted, net, ms);
  for (std::size_t i = 0; i < 2; ++i) CHECK(a.domega[i] == doctest::Approx(b.domega[i]).epsilon(1e-12));
}

TEST_CASE("lossless network conserves momentum") {
  // r = 0, no charging, no loads: generator powers sum to zero for any angles
  auto c = load_case(R"({
    "buses": [{"id": 1}, {"id": 2}, {"id": 3}],
    "branches": [{"id": 1, "from": 1, "to": 3, "x": 0.1}, {"id": 2, "from": 2, "to": 3, "x": 0.2}],
    "generators": [
      {"bus": 1, "xd_prime_pu": 0.3, "h_s": 4, "damping_pu": 1.5, "swing": true},
      {"bus": 2, "xd_prime_pu": 0.2, "h_s": 6, "damping_pu": 0.5, "p_mw": 0}],
    "acvgs": [{"bus": 3}]
  })");
  c = prepare_case(std::move(c));
  const auto net = reduce_case(c);
  const auto ms = MachineSet::from_case(c);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    SystemState s = initial_state(c);
    s.phi = {u(rng), u(rng)};
    s.omega = {0.01 * u(rng), 0.01 * u(rng)};
    const std::vector<double> p{0.0};
    const auto sol = solve_network(s.phi, p, net, ms.emf, s.acvg_voltage);
    REQUIRE(sol.report.converged);
    s.acvg_voltage = sol.voltage;
    const auto d = swing_rhs(s, net, ms);
    double momentum = 0.0, expect = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      momentum += ms.inertia[i] * d.domega[i];
      expect += ms.mech_power[i] - ms.damping[i] * s.omega[i];
    }
    // exact up to the algebraic solve tolerance
    CHECK(std::abs(momentum - expect) < 1e-7);
  }
}

TEST_CASE("network solve agrees with a Gauss-Seidel oracle") {
  const auto c = prepare_case(load_case_file(fixtures::bundled_case_path()));
  const auto net = reduce_case(c);
  const auto ms = MachineSet::from_case(c);
  auto s = initial_state(c);
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 5; ++k) {
    std::vector<double> phi = s.phi, p(net.m());
    for (auto& x : phi) x += 0.05 * u(rng);
    for (auto& x : p) x = 0.3 * u(rng);
    const auto sol = solve_network(phi, p, net, ms.emf, s.acvg_voltage);
    REQUIRE(sol.report.converged);
    const auto oracle = gauss_seidel(net, phi, ms.emf, p, s.acvg_voltage);
    for (std::size_t j = 0; j < net.m(); ++j) CHECK(std::abs(sol.voltage[j] - oracle[j]) < 1e-7);
  }
}

TEST_CASE("network solve reports non-convergence for an infeasible demand") {
  const auto c = three_machine();
  const auto net = reduce_case(c);
  const auto ms = MachineSet::from_case(c);
  const auto s = initial_state(c);
  const std::vector<double> p{500.0};
  const auto sol = solve_network(s.phi, p, net, ms.emf, s.acvg_voltage);
  CHECK_FALSE(sol.report.converged);
  const std::vector<Complex> zero{Complex(0.0)};
  CHECK_THROWS_AS(solve_network(s.phi, p, net, ms.emf, zero), ValidationError);
}

TEST_CASE("RK4 step: fourth-order self-convergence") {
  const auto c = three_machine();
  auto run = [&](double dt) {
    SimulationOptions o;
    o.dt = dt;
    o.horizon = 2.0;
    o.output_interval = 0.5;
    // tight algebraic tolerance so truncation error dominates
    o.newton.tolerance = 1e-13;
    o.newton.max_iterations = 50;
    Experiment exp(c, o);
    return exp.run(load_step(3, 0.5, -0.2), nullptr).final_state;
  };
  const auto a = run(2e-2), b = run(1e-2), r = run(5e-3);
  double e1 = 0.0, e2 = 0.0;
  for (std::size_t i = 0; i < a.phi.size(); ++i) {
    e1 = std::max(e1, std::abs(a.phi[i] - b.phi[i]));
    e2 = std::max(e2, std::abs(b.phi[i] - r.phi[i]));
  }
  REQUIRE(e2 > 0.0);
  CHECK(std::log2(e1 / e2) > 3.5);
}

TEST_CASE("simulate: undisturbed run stays put and samples on the grid") {
  const auto c = three_machine();
  SimulationOptions o;
  o.horizon = 1.0;
  Experiment exp(c, o);
  const auto res = exp.run({}, nullptr);
  CHECK(res.series.size() == 101);
  CHECK(res.series.times.back() == doctest::Approx(1.0));
  for (std::size_t k = 0; k < res.series.size(); ++k)
    for (double w : res.series.omega_hz[k]) CHECK(std::abs(w) < 1e-9);
}

TEST_CASE("simulate: option validation") {
  const auto c = three_machine();
  SimulationOptions o;
  o.output_interval = 0.0105;
  Experiment bad_interval(c, o);
  CHECK_THROWS_AS(bad_interval.run({}, nullptr), ValidationError);
  SimulationOptions late;
  late.horizon = 1.0;
  Experiment short_run(c, late);
  CHECK_THROWS_AS(short_run.run(fault_at(3, 2.0, 0.1), nullptr), ValidationError);
  CHECK_THROWS_AS(steps_for(0.0015, 1e-3, "event time"), ValidationError);
  CHECK(steps_for(1.23, 1e-3, "event time") == 1230);
}

TEST_CASE("fault fallback drops the faulted ACVG and keeps integrating") {
  const auto c = prepare_case(load_case_file(fixtures::bundled_case_path()));
  SimulationOptions o;
  o.horizon = 2.0;
  Experiment exp(c, o);
  const auto fleet = build_fleet(c, 50000);
  const auto res = exp.run(fault_at(16, 1.0, 0.05), &fleet);
  CHECK(res.stats.dropped_acvgs >= 1);
  CHECK(res.final_state.t == doctest::Approx(2.0));
}

}  // TEST_SUITE

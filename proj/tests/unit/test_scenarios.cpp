#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "gridtide/dynamics.hpp"
#include "gridtide/error.hpp"
#include "gridtide/scenarios.hpp"

using namespace gridtide;

namespace {

const NetworkCase& bundled() {
  static const NetworkCase c = prepare_case(load_case_file(fixtures::bundled_case_path()));
  return c;
}

double max_diff(const ComplexMatrix& a, const ComplexMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("scenarios") {

TEST_CASE("event builders") {
  const auto f = fault_at(12, 1.0, 0.23);
  REQUIRE(f.size() == 2);
  CHECK(f[0].kind == EventKind::bus_fault);
  CHECK(f[1].kind == EventKind::bus_fault_clear);
  CHECK(f[1].t == doctest::Approx(1.23));
  CHECK(fault_at(6, 1.0, 0.07)[1].t - 1.0 == doctest::Approx(0.07));
  CHECK_THROWS_AS(fault_at(12, 1.0, 0.0), ValidationError);
  CHECK(branch_outage(5, 1.0, 0.0).size() == 1);
  CHECK(branch_outage(5, 1.0, 0.1).size() == 2);
  CHECK(load_step(20, 1.0, -0.1).size() == 1);
  CHECK_THROWS_AS(load_step(20, 1.0, -1.0), ValidationError);
}

TEST_CASE("epoch counts") {
  const auto& c = bundled();
  CHECK(compile_scenario(c, {}).epochs.size() == 1);
  const auto trip = branch_outage(*c.find_branch(23, 24), 1.0, 0.1);
  const auto sc = compile_scenario(c, trip);
  REQUIRE(sc.epochs.size() == 3);
  CHECK(sc.epochs[1].t_start == 1.0);
  CHECK(compile_scenario(c, load_step(20, 1.0, -0.1)).epochs.size() == 2);
  // t = 0 events fold into the first epoch
  CHECK(compile_scenario(c, load_step(20, 0.0, -0.1)).epochs.size() == 1);
}

TEST_CASE("load step scales the load admittance") {
  const auto& c = bundled();
  auto stepped = c;
  apply_event(stepped, load_step(20, 1.0, -0.1)[0]);
  const auto y0 = assemble_admittance(c, LoadHandling::include).entries;
  const auto y1 = assemble_admittance(stepped, LoadHandling::include).entries;
  const auto k = c.index_of(20);
  const auto load = std::find_if(c.loads.begin(), c.loads.end(), [](const ClassicalLoad& l) { return l.bus == 20; });
  CHECK(std::abs((y0(k, k) - y1(k, k)) - 0.1 * *load->equivalent_admittance) < 1e-12);
}

TEST_CASE("revert exactness") {
  const auto& c = bundled();
  const auto check = [&](const std::vector<DisturbanceEvent>& ev) {
    const auto sc = compile_scenario(c, ev);
    REQUIRE(sc.epochs.size() == 3);
    CHECK(max_diff(sc.epochs[0].net.y_red, sc.epochs[2].net.y_red) < 1e-12);
    CHECK(max_diff(sc.epochs[0].net.y_red, sc.epochs[1].net.y_red) > 1e-6);
  };
  check(fault_at(12, 1.0, 0.2));
  check(fault_at(32, 1.0, 0.2));
  check(branch_outage(*c.find_branch(16, 21), 1.0, 0.15));
  check(load_step(29, 1.0, 0.2, 5.0));
}

TEST_CASE("trip consistency: tripped epoch equals a case without the branch") {
  const auto& c = bundled();
  const int id = *c.find_branch(3, 18);
  const auto sc = compile_scenario(c, branch_outage(id, 1.0, 0.0));
  auto removed = c;
  std::erase_if(removed.branches, [&](const Branch& b) { return b.id == id; });
  CHECK(max_diff(sc.epochs[1].net.y_red, reduce_case(removed).y_red) < 1e-12);
}

TEST_CASE("fault severity: the default shunt is effectively bolted") {
  const auto& c = bundled();
  const auto ms = MachineSet::from_case(c);
  const auto s = initial_state(c);
  // ACVGs idle: the network equations are linear, so solve them directly
  auto pe_during = [&](Complex y) {
    ScenarioOptions o;
    o.fault_admittance = y;
    const auto sc = compile_scenario(c, fault_at(16, 1.0, 0.1), o);
    const auto& net = sc.epochs[1].net;
    const auto n = static_cast<Eigen::Index>(net.n()), m = static_cast<Eigen::Index>(net.m());
    Eigen::VectorXcd e(n);
    for (Eigen::Index i = 0; i < n; ++i) e[i] = std::polar(ms.emf[i], s.phi[i]);
    const Eigen::VectorXcd v = net.y_red.bottomRightCorner(m, m).fullPivLu().solve(-(net.y_red.bottomLeftCorner(m, n) * e));
    const std::vector<Complex> va(v.begin(), v.end());
    return electrical_power(s.phi, va, net, ms.emf);
  };
  const auto a = pe_during(Complex(0, -1e6)), b = pe_during(Complex(0, -1e8));
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-3 * std::max(std::abs(a[i]), 1e-3));
}

TEST_CASE("faulted ACVG rows are flagged") {
  const auto& c = bundled();
  const auto sc = compile_scenario(c, fault_at(16, 1.0, 0.1));
  CHECK_FALSE(sc.epochs[0].fault_active);
  CHECK(sc.epochs[1].fault_active);
  REQUIRE(sc.epochs[1].faulted_acvg.size() == 1);
  CHECK(c.acvg_buses[sc.epochs[1].faulted_acvg[0]] == 16);
  CHECK(compile_scenario(c, fault_at(1, 1.0, 0.1)).epochs[1].faulted_acvg.empty());
}

TEST_CASE("event validation") {
  const auto& c = bundled();
  CHECK_THROWS_AS(compile_scenario(c, {{EventKind::bus_fault_clear, 1.0, 12, 0, 0.0}}), ValidationError);
  const int id = *c.find_branch(23, 24);
  CHECK_THROWS_AS(compile_scenario(c, {{EventKind::branch_restore, 1.0, 0, id, 0.0}}), ValidationError);
  CHECK_THROWS_AS(compile_scenario(c, load_step(2, 1.0, 0.1)), ValidationError);  // no load at bus 2
  CHECK_THROWS_AS(compile_scenario(c, fault_at(99, 1.0, 0.1)), ValidationError);
  CHECK_THROWS_AS(compile_scenario(load_case_file(fixtures::bundled_case_path()), {}), ValidationError);
}

TEST_CASE("generator trip removes the machine") {
  const auto& c = bundled();
  const auto sc = compile_scenario(c, {{EventKind::generator_trip, 1.0, 35, 0, 0.0}});
  REQUIRE(sc.epochs.size() == 2);
  const auto& net = sc.epochs[1].net;
  const auto i = static_cast<std::size_t>(std::find(net.generator_buses.begin(), net.generator_buses.end(), 35) -
                                          net.generator_buses.begin());
  CHECK_FALSE(net.generator_online[i]);
}

TEST_CASE("scenario JSON round trip") {
  const auto& c = bundled();
  auto ev = fault_at(12, 1.0, 0.23);
  const auto trip = branch_outage(*c.find_branch(23, 24), 2.0, 0.1);
  ev.insert(ev.end(), trip.begin(), trip.end());
  ev.push_back(load_step(20, 3.0, -0.1)[0]);
  const auto back = parse_scenario(scenario_to_json(ev));
  REQUIRE(back.size() == ev.size());
  for (std::size_t k = 0; k < ev.size(); ++k) {
    CHECK(back[k].kind == ev[k].kind);
    CHECK(back[k].t == ev[k].t);
    CHECK(back[k].bus == ev[k].bus);
    CHECK(back[k].branch == ev[k].branch);
    CHECK(back[k].magnitude == ev[k].magnitude);
  }
  CHECK_THROWS_AS(parse_scenario("{}"), ValidationError);
  CHECK_THROWS_AS(parse_scenario(R"([{"kind": "meteor", "t": 1, "bus": 3}])"), ValidationError);
  CHECK_THROWS_AS(parse_scenario(R"([{"kind": "load_step", "t": 1, "bus": 3}])"), ValidationError);
}

}  // TEST_SUITE

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "gridtide/analysis.hpp"
#include "gridtide/report.hpp"

using namespace gridtide;

namespace {

TimeSeries synthetic(std::size_t samples, double dt) {
  TimeSeries ts;
  ts.generator_buses = {1, 2};
  ts.acvg_buses = {3};
  for (std::size_t k = 0; k < samples; ++k) {
    ts.times.push_back(static_cast<double>(k) * dt);
    ts.omega_hz.push_back({0.0, 0.0});
    ts.phi_rad.push_back({0.0, 0.5});
    ts.v_pu.push_back({1.0});
    ts.p_acvg_mw.push_back({0.0});
    ts.delta_omega_hz.push_back(0.0);
  }
  return ts;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("fluctuation metrics: hand-computed means") {
  auto ts = synthetic(4, 0.01);
  ts.omega_hz[1] = {0.2, -0.2};
  ts.omega_hz[3] = {0.4, 0.0};
  ts.v_pu[2] = {0.9};
  const std::vector<double> nominal{1.0};
  const auto r = fluctuation_metrics(ts, nominal);
  CHECK(r.speed_msd == doctest::Approx((0.04 + 0.04 + 0.16) / 8.0));
  CHECK(r.voltage_msd == doctest::Approx(0.01 / 4.0));
  CHECK(fluctuation_metrics(synthetic(3, 0.01), nominal).speed_msd == 0.0);
}

TEST_CASE("fluctuation metrics ignore timestamps") {
  auto ts = synthetic(5, 0.01);
  ts.omega_hz[2] = {0.3, 0.1};
  auto shifted = ts;
  for (auto& t : shifted.times) t += 7.5;
  const std::vector<double> nominal{0.98};
  CHECK(fluctuation_metrics(ts, nominal).speed_msd == fluctuation_metrics(shifted, nominal).speed_msd);
  CHECK(fluctuation_metrics(ts, nominal).voltage_msd == fluctuation_metrics(shifted, nominal).voltage_msd);
  CHECK_THROWS_AS(fluctuation_metrics(ts, std::vector<double>{}), ValidationError);
}

TEST_CASE("reduction percentage") {
  CHECK(reduction_pct(2.0, 0.5) == doctest::Approx(75.0));
  CHECK(reduction_pct(1.0, 1.0) == 0.0);
  CHECK(reduction_pct(0.0, 1.0) == 0.0);
}

TEST_CASE("stability verdict") {
  auto ts = synthetic(301, 0.01);
  CHECK(is_stable(ts));
  auto split = ts;
  split.phi_rad[50] = {0.0, std::numbers::pi + 0.01};
  CHECK_FALSE(is_stable(split));
  auto drifting = ts;
  drifting.omega_hz[300] = {1.2, 0.0};
  CHECK_FALSE(is_stable(drifting));
  auto early = ts;
  early.omega_hz[10] = {1.5, 0.0};  // outside the final window
  CHECK(is_stable(early));
  CHECK_THROWS_AS(is_stable(synthetic(100, 0.01)), ValidationError);
}

TEST_CASE("number formatting and checksum") {
  CHECK(format_number(0.0) == "0");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.333333333333");
  CHECK(fnv1a64_hex("") == "cbf29ce484222325");
  CHECK(fnv1a64_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("penetration bookkeeping") {
  CHECK(vehicles_at(1.0, 5e6) == 50000);
  CHECK(vehicles_at(5.5, 5e6) == 275000);
  CHECK(vehicles_at(0.0, 5e6) == 0);
  CHECK_THROWS_AS(vehicles_at(-1.0, 5e6), ValidationError);
  SweepPoint a, b;
  a.penetration_pct = 1;
  a.avg_ccl_increase_pct = 3;
  b.penetration_pct = 2;
  b.avg_ccl_increase_pct = 5;
  const std::vector<SweepPoint> pts{a, b};
  CHECK(peak_penetration(pts) == 2.0);
}

TEST_CASE("parallel_for covers every index once, in any thread count") {
  for (unsigned threads : {1u, 2u, 5u}) {
    std::vector<int> hits(37, 0);
    parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
  }
  CHECK_THROWS_AS(parallel_for(4, 2, [](std::size_t i) {
                    if (i == 2) throw ValidationError("boom");
                  }),
                  ValidationError);
}

TEST_CASE("ccl bracket integrity on the three-machine case") {
  const auto c = prepare_case(load_case(fixtures::three_machine_json()));
  SimulationOptions o;
  o.horizon = 5.0;
  Experiment exp(c, o);
  CclOptions opts;
  opts.resolution = 0.005;
  opts.upper = 1.0;
  const auto r = find_ccl(exp, nullptr, 3, opts);
  if (r.bracketed) {
    CHECK(r.unstable_at - r.stable_at == doctest::Approx(opts.resolution));
    CHECK(exp.stable_after(fault_at(3, 1.0, r.stable_at), nullptr));
    CHECK_FALSE(exp.stable_after(fault_at(3, 1.0, r.unstable_at), nullptr));
  } else {
    CHECK(exp.stable_after(fault_at(3, 1.0, opts.upper), nullptr));
  }
  CHECK(r.simulations > 2);
  CclOptions bad = opts;
  bad.resolution = 0.0;
  CHECK_THROWS_AS(find_ccl(exp, nullptr, 3, bad), ValidationError);
  CHECK_THROWS_AS(find_ccl(exp, nullptr, 99, opts), ValidationError);
}

TEST_CASE("sweep requires a baseline") {
  const auto c = prepare_case(load_case(fixtures::three_machine_json()));
  Experiment exp(c);
  const std::vector<double> no_zero{1.0, 2.0};
  const std::vector<int> buses{3};
  CHECK_THROWS_AS(penetration_sweep(exp, no_zero, buses), ValidationError);
}

}  // TEST_SUITE

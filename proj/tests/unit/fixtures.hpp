#pragma once

#include <string>

#include "gridtide/netmodel.hpp"

namespace fixtures {

inline std::string bundled_case_path() { return GRIDTIDE_DATA_DIR "/ne39.json"; }

// One generator (swing) feeding one load bus through a reactance.
//   bus 1 (gen) --- x=0.1 --- bus 2 (load 50 MW / 10 MVAr, ACVG)
inline std::string two_bus_json(double x = 0.1, double p_mw = 50.0, double q_mvar = 10.0) {
  return R"({
    "system": {"mva_base": 100, "frequency_hz": 60},
    "buses": [{"id": 1, "base_kv": 345}, {"id": 2, "base_kv": 345}],
    "branches": [{"id": 1, "from": 1, "to": 2, "r": 0.0, "x": )" +
         std::to_string(x) + R"(, "b": 0.0}],
    "generators": [{"bus": 1, "p_mw": 0, "v_setpoint_pu": 1.0, "mva_rating": 100,
                    "xd_prime_pu": 0.2, "h_s": 5.0, "damping_pu": 1.0, "swing": true}],
    "loads": [{"bus": 2, "p_mw": )" +
         std::to_string(p_mw) + R"(, "q_mvar": )" + std::to_string(q_mvar) + R"(}],
    "acvgs": [{"bus": 2}]
  })";
}

// Two machines, one ACVG load bus and one stub:
//   1 (swing) -- 3 (load, ACVG) -- 2 (gen)      3 -- 4 (stub, tapped)
inline std::string three_machine_json() {
  return R"({
    "system": {"mva_base": 100, "frequency_hz": 60},
    "buses": [{"id": 1, "base_kv": 345}, {"id": 2, "base_kv": 345},
              {"id": 3, "base_kv": 345}, {"id": 4, "base_kv": 138}],
    "branches": [
      {"id": 1, "from": 1, "to": 3, "r": 0.01, "x": 0.08, "b": 0.04},
      {"id": 2, "from": 2, "to": 3, "r": 0.02, "x": 0.10, "b": 0.02},
      {"id": 3, "from": 3, "to": 4, "r": 0.00, "x": 0.05, "b": 0.00, "tap": 1.05}
    ],
    "generators": [
      {"bus": 1, "p_mw": 0, "v_setpoint_pu": 1.02, "mva_rating": 200,
       "xd_prime_pu": 0.3, "h_s": 4.0, "damping_pu": 2.0, "swing": true},
      {"bus": 2, "p_mw": 80, "v_setpoint_pu": 1.01, "mva_rating": 100,
       "xd_prime_pu": 0.25, "h_s": 3.0, "damping_pu": 1.0}
    ],
    "loads": [{"bus": 3, "p_mw": 120, "q_mvar": 30}, {"bus": 4, "p_mw": 20, "q_mvar": 5}],
    "acvgs": [{"bus": 3}]
  })";
}

}  // namespace fixtures

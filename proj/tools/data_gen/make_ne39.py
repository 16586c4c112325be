#!/usr/bin/env python3
"""Writes data/ne39.json, the bundled New England 10-machine 39-bus case.

Network (branches, transformer taps, generator dispatch and voltage
setpoints) follows the MATPOWER case39 data. Loads are the original
Athay/Pai set (17 non-generator load buses). Machine constants (H, x'd on a
100 MVA base) are the classical-model values from Pai (1989).
"""
import json
import sys

# Uniform damping, tuned once so the no-control critical clearing time of a
# bolted fault at bus 12 (fault at t = 1 s, 10 s horizon) lands on 0.2276 s.
DAMPING_PU = float(sys.argv[1]) if len(sys.argv) > 1 else 0.5

branches = [
    (1, 2, 0.0035, 0.0411, 0.6987, 0), (1, 39, 0.0010, 0.0250, 0.7500, 0),
    (2, 3, 0.0013, 0.0151, 0.2572, 0), (2, 25, 0.0070, 0.0086, 0.1460, 0),
    (2, 30, 0.0000, 0.0181, 0.0000, 1.025), (3, 4, 0.0013, 0.0213, 0.2214, 0),
    (3, 18, 0.0011, 0.0133, 0.2138, 0), (4, 5, 0.0008, 0.0128, 0.1342, 0),
    (4, 14, 0.0008, 0.0129, 0.1382, 0), (5, 6, 0.0002, 0.0026, 0.0434, 0),
    (5, 8, 0.0008, 0.0112, 0.1476, 0), (6, 7, 0.0006, 0.0092, 0.1130, 0),
    (6, 11, 0.0007, 0.0082, 0.1389, 0), (6, 31, 0.0000, 0.0250, 0.0000, 1.070),
    (7, 8, 0.0004, 0.0046, 0.0780, 0), (8, 9, 0.0023, 0.0363, 0.3804, 0),
    (9, 39, 0.0010, 0.0250, 1.2000, 0), (10, 11, 0.0004, 0.0043, 0.0729, 0),
    (10, 13, 0.0004, 0.0043, 0.0729, 0), (10, 32, 0.0000, 0.0200, 0.0000, 1.070),
    (12, 11, 0.0016, 0.0435, 0.0000, 1.006), (12, 13, 0.0016, 0.0435, 0.0000, 1.006),
    (13, 14, 0.0009, 0.0101, 0.1723, 0), (14, 15, 0.0018, 0.0217, 0.3660, 0),
    (15, 16, 0.0009, 0.0094, 0.1710, 0), (16, 17, 0.0007, 0.0089, 0.1342, 0),
    (16, 19, 0.0016, 0.0195, 0.3040, 0), (16, 21, 0.0008, 0.0135, 0.2548, 0),
    (16, 24, 0.0003, 0.0059, 0.0680, 0), (17, 18, 0.0007, 0.0082, 0.1319, 0),
    (17, 27, 0.0013, 0.0173, 0.3216, 0), (19, 20, 0.0007, 0.0138, 0.0000, 1.060),
    (19, 33, 0.0007, 0.0142, 0.0000, 1.070), (20, 34, 0.0009, 0.0180, 0.0000, 1.009),
    (21, 22, 0.0008, 0.0140, 0.2565, 0), (22, 23, 0.0006, 0.0096, 0.1846, 0),
    (22, 35, 0.0000, 0.0143, 0.0000, 1.025), (23, 24, 0.0022, 0.0350, 0.3610, 0),
    (23, 36, 0.0005, 0.0272, 0.0000, 1.000), (25, 26, 0.0032, 0.0323, 0.5130, 0),
    (25, 37, 0.0006, 0.0232, 0.0000, 1.025), (26, 27, 0.0014, 0.0147, 0.2396, 0),
    (26, 28, 0.0043, 0.0474, 0.7802, 0), (26, 29, 0.0057, 0.0625, 1.0290, 0),
    (28, 29, 0.0014, 0.0151, 0.2490, 0), (29, 38, 0.0008, 0.0156, 0.0000, 1.025),
]

# bus, P (MW), V setpoint (pu), H (s), x'd (pu), all on 100 MVA
generators = [
    (30, 250.0, 1.0499, 42.0, 0.0310), (31, 0.0, 0.9820, 30.3, 0.0697),
    (32, 650.0, 0.9841, 35.8, 0.0531), (33, 632.0, 0.9972, 28.6, 0.0436),
    (34, 508.0, 1.0123, 26.0, 0.1320), (35, 650.0, 1.0494, 34.8, 0.0500),
    (36, 560.0, 1.0636, 26.4, 0.0490), (37, 540.0, 1.0275, 24.3, 0.0570),
    (38, 830.0, 1.0265, 34.5, 0.0570), (39, 1000.0, 1.0300, 500.0, 0.0060),
]

loads = [
    (3, 322.0, 2.4), (4, 500.0, 184.0), (7, 233.8, 84.0), (8, 522.0, 176.0),
    (12, 7.5, 88.0), (15, 320.0, 153.0), (16, 329.0, 32.3), (18, 158.0, 30.0),
    (20, 628.0, 103.0), (21, 274.0, 115.0), (23, 247.5, 84.6), (24, 308.6, -92.2),
    (25, 224.0, 47.2), (26, 139.0, 17.0), (27, 281.0, 75.5), (28, 206.0, 27.6),
    (29, 283.5, 26.9), (31, 9.2, 4.6), (39, 1104.0, 250.0),
]

gen_buses = {g[0] for g in generators}
doc = {
    "provenance": (
        "New England 10-machine 39-bus system. Branch data, transformer taps, "
        "generator dispatch and voltage setpoints from MATPOWER case39; loads "
        "from the original Athay/Pai data set; classical machine constants "
        "(H, x'd on 100 MVA) from Pai (1989). ACVGs sit at every non-generator "
        "bus with a load. Generated by tools/data_gen/make_ne39.py."
    ),
    "system": {"mva_base": 100.0, "frequency_hz": 60.0},
    "calibration": {
        "tuned": {"damping_pu": DAMPING_PU},
        "procedure": "uniform D scanned over 0..16 pu; no-control t_ccl at bus 12, "
                     "fault at 1.0 s, 10 s horizon, 1 ms dt and resolution",
        "target": {"fault_bus": 12, "t_ccl_s": 0.2276, "tolerance_s": 0.005},
        "achieved": {"t_ccl_s": 0.228},
    },
    "buses": [{"id": b, "base_kv": 345.0} for b in range(1, 40)],
    "branches": [
        {"id": k + 1, "from": f, "to": t, "r": r, "x": x, "b": b, **({"tap": tap} if tap else {})}
        for k, (f, t, r, x, b, tap) in enumerate(branches)
    ],
    "generators": [
        {"bus": bus, "p_mw": p, "v_setpoint_pu": v, "mva_rating": 100.0, "h_s": h,
         "xd_prime_pu": xd, "damping_pu": DAMPING_PU, "swing": bus == 31}
        for bus, p, v, h, xd in generators
    ],
    "loads": [{"bus": b, "p_mw": p, "q_mvar": q} for b, p, q in loads],
    "acvgs": [{"bus": b} for b, _, _ in loads if b not in gen_buses],
}
json.dump(doc, sys.stdout, indent=1)
sys.stdout.write("\n")
